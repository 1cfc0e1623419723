#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "glv/common.hpp"
#include "glv/grid2d.hpp"
#include "glv/profile.hpp"

namespace glv {

// Pointwise analytic evaluation of the vortex V_1 = rho_1(r) e^{i theta} and
// its first and second derivatives from the profile.
Complex vortex_value(const VortexProfile& p, double x, double y);
std::array<Complex, 2> vortex_grad(const VortexProfile& p, double x, double y);
// Returns {d_xx, d_xy, d_yy} of V_1.
std::array<Complex, 3> vortex_hess(const VortexProfile& p, double x, double y);

// Per-grid cache of V_1 samples and derived radial quantities, all evaluated
// from the profile rather than by grid differences.
struct VortexTable {
    Grid2D grid;
    ProfilePtr profile;
    std::vector<Complex> v1, dxv1, dyv1;
    std::vector<double> mod2;      // rho^2
    std::vector<double> one_m2;    // 1 - rho^2 (dedicated tail past match radius)
    std::vector<double> grad_sq;   // |grad V1|^2
    std::vector<double> egl;       // e_GL(V1)

    static std::shared_ptr<const VortexTable> make(ProfilePtr profile, const Grid2D& g);
};

using VortexTablePtr = std::shared_ptr<const VortexTable>;

// Complex field Psi = e^{i phase} (V_1 + w) with w supported away from the
// boundary (zero on the outermost two grid layers).
struct Field2D {
    VortexTablePtr vortex;
    double phase = 0.0;
    std::vector<Complex> w;
    // When the deviation comes from a closed-form recipe, the closure is kept
    // (taper included) so that shifted evaluations need no grid interpolation.
    std::function<Complex(double, double)> dev_analytic;

    const Grid2D& grid() const { return vortex->grid; }
    Complex gauge() const { return {std::cos(phase), std::sin(phase)}; }
    Complex psi(std::size_t k) const { return gauge() * (vortex->v1[k] + w[k]); }
    double psi_mod2(std::size_t k) const { return std::norm(vortex->v1[k] + w[k]); }

    static Field2D vacuum(VortexTablePtr table);

    // w(x) = taper(|x|) * dev(x), where dev samples Psi_target - V_1 and the
    // taper descends from 1 at taper_on*L to 0 at taper_off*L.  The taper
    // region sits beyond every energy sweep radius.
    static Field2D from_deviation(VortexTablePtr table,
                                  const std::function<Complex(double, double)>& dev,
                                  double phase = 0.0, double taper_on = 0.92,
                                  double taper_off = 0.985);

    // e^{i alpha} (V_1 + extra)(x + a), represented as gauge alpha plus the
    // tapered deviation V_1(x+a) + extra(x+a) - V_1(x).
    static Field2D orbit(VortexTablePtr table, double ax, double ay, double alpha,
                         const std::function<Complex(double, double)>* extra = nullptr);

    void zero_boundary_rings();
    bool boundary_rings_zero() const;
    bool finite() const;
};

// Bilinear interpolation of a complex grid array at (x, y); outside the grid
// the array is treated as zero.
Complex bilerp(const Grid2D& g, std::span<const Complex> v, double x, double y);

}  // namespace glv
