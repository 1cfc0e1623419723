#pragma once

#include <memory>
#include <vector>

#include "glv/common.hpp"

namespace glv {

// Radial quadrature grid 0 < r_0 < ... < r_M with trapezoid weights against
// the measure r dr.  First differences live on the staggered midpoint grid so
// assembled stiffness matrices are exactly symmetric.
struct RadialGrid {
    std::vector<double> r;
    std::vector<double> w;    // node weights, including the [0, r_0] half cell
    std::vector<double> mid;  // edge midpoints, size M
    std::vector<double> dr;   // edge lengths, size M

    std::size_t size() const { return r.size(); }

    // Graded grid of the sector analysis: step 0.005 on (0, 5], 0.02 on
    // (5, 20], 0.1 on (20, r_max].
    static std::shared_ptr<const RadialGrid> graded(double r_max = 60.0);
    // Same bands with every step halved.
    static std::shared_ptr<const RadialGrid> graded_refined(double r_max = 60.0);
    // Long-tail variant for quadratures of slowly decaying functions:
    // extra bands 0.1 on (20, 100], 0.5 on (100, r_max].
    static std::shared_ptr<const RadialGrid> graded_long(double r_max = 600.0);
    static std::shared_ptr<const RadialGrid> uniform(double step, double r_max);
    static std::shared_ptr<const RadialGrid> from_radii(std::vector<double> radii);
};

using RadialGridPtr = std::shared_ptr<const RadialGrid>;

// Real radial function with its Fourier-sector index (the e^{i(j+1)theta}
// component it multiplies).
struct RadialFunction {
    RadialGridPtr grid;
    std::vector<double> v;
    int sector_j = 0;
};

// int f(r_i) with the grid weights, pairwise.
double radial_integral(const RadialGrid& g, std::span<const double> f);

// int |e'|^2 r dr via midpoint differences; zero_at_origin adds the [0, r_0]
// segment with e(0) = 0.
double radial_grad_sq(const RadialGrid& g, std::span<const double> e, bool zero_at_origin);

}  // namespace glv
