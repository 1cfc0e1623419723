#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "glv/common.hpp"

namespace glv {

// Degree-one vortex profile rho_1 on a uniform storage grid, with asymptotic
// tails used beyond match_radius.  Immutable once built; safe to share across
// threads.
class VortexProfile {
  public:
    double r_max = 0.0;
    double step = 1e-3;
    std::vector<double> rho;   // rho_1(i*step)
    std::vector<double> drho;  // rho_1'(i*step)
    double slope_at_origin = 0.0;  // A_1, the shooting parameter
    double match_radius = 30.0;
    double tol = 0.0;              // bisection bracket tolerance on A_1
    double residual_sup = 0.0;     // sup ODE residual over interior nodes of [0.01, 30]
    double stitch_error = 0.0;     // |rho(match_radius) - tail(match_radius)|
    std::vector<std::string> warnings;

    // order 0 -> rho_1, 1 -> rho_1', 2 -> rho_1''.  Cubic Hermite interpolation
    // on the table for r <= match_radius, asymptotic series beyond.
    double eval(double r, int order) const;

    // 1 - rho_1(r)^2 with the dedicated 1/r^2 + 2/r^4 tail past match_radius.
    double one_minus_rho_sq(double r) const;

    // Recomputes the ODE residual sup-norm over nodes of [lo, hi] from the
    // stored (rho, drho) pair.
    double ode_residual_sup(double lo, double hi) const;

    // Asymptotic tails of Lemma-grade order.
    static double tail_rho(double r);
    static double tail_drho(double r);
    static double tail_d2rho(double r);
    static double tail_one_minus_rho_sq(double r);

    // Versioned text serialization: one JSON header line, then "r rho drho" rows.
    void save(std::ostream& os) const;
    void save_file(const std::string& path) const;
    static VortexProfile load(std::istream& is);
    static VortexProfile load_file(const std::string& path);
};

struct ProfileOptions {
    double bracket_lo = 0.3;
    double bracket_hi = 1.0;
    double shoot_r0 = 1e-3;       // series start radius
    double ode_rtol = 1e-12;      // adaptive RK tolerance for the shots
    double match_radius = 30.0;
    double stitch_tol = 2e-8;     // declared stitching tolerance at match_radius
    int max_bisect = 200;
    int max_newton = 25;
};

// Bisection shooting for A_1 plus a fourth-order collocation polish that makes
// the stored table satisfy the node residuals.  Throws NumericalFailure with
// the last bracket when bisection cannot converge.
VortexProfile solve_profile(double r_max, double tol, const ProfileOptions& opts = {});

using ProfilePtr = std::shared_ptr<const VortexProfile>;

}  // namespace glv
