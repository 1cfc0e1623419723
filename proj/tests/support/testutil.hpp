#pragma once

// Shared helpers for the test suites: an independent relaxation oracle for
// the profile ODE, radial reference quadratures, and random field recipes.

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "glv/field.hpp"
#include "glv/profile.hpp"
#include "glv/radial.hpp"

namespace glv::test {

// Solves the profile boundary-value problem by damped Newton on the plain
// second-order finite-difference discretization with rho(0) = 0 and
// rho(r_max) pinned to the far-field tail.  Fully independent of the
// shooting/collocation path in the library (tridiagonal, own code).
struct RelaxationOracle {
    double h;
    std::vector<double> rho;  // values at r_i = i h, i = 0..M

    double slope_at_origin() const {
        // Fit A against (r - r^3/8, r^5) over the first fraction of the core.
        double s11 = 0, s12 = 0, s22 = 0, b1 = 0, b2 = 0;
        for (std::size_t i = 1; i * h <= 0.06; ++i) {
            const double r = i * h;
            const double f1 = r - r * r * r / 8.0;
            const double f2 = r * r * r * r * r;
            s11 += f1 * f1;
            s12 += f1 * f2;
            s22 += f2 * f2;
            b1 += f1 * rho[i];
            b2 += f2 * rho[i];
        }
        const double det = s11 * s22 - s12 * s12;
        return (s22 * b1 - s12 * b2) / det;
    }
};

inline RelaxationOracle relaxation_oracle(double r_max = 40.0, double h = 1e-3) {
    RelaxationOracle out;
    out.h = h;
    const std::size_t m = static_cast<std::size_t>(std::llround(r_max / h));
    std::vector<double>& u = out.rho;
    u.resize(m + 1);
    for (std::size_t i = 0; i <= m; ++i) {
        const double r = i * h;
        u[i] = r / std::sqrt(r * r + 1.0);
    }
    u[0] = 0.0;
    u[m] = VortexProfile::tail_rho(r_max);

    std::vector<double> f(m - 1), du(m - 1);
    std::vector<double> a(m - 1), b(m - 1), c(m - 1);
    const double ih2 = 1.0 / (h * h);
    auto resid = [&](const std::vector<double>& v) {
        double fn = 0.0;
        for (std::size_t i = 1; i < m; ++i) {
            const double r = i * h;
            f[i - 1] = (v[i + 1] - 2.0 * v[i] + v[i - 1]) * ih2 +
                       (v[i + 1] - v[i - 1]) / (2.0 * h * r) - v[i] / (r * r) +
                       v[i] * (1.0 - v[i] * v[i]);
            fn = std::max(fn, std::abs(f[i - 1]));
        }
        return fn;
    };
    double fn = resid(u);
    for (int it = 0; it < 60 && fn > 1e-12; ++it) {
        for (std::size_t i = 1; i < m; ++i) {
            const double r = i * h;
            a[i - 1] = ih2 - 1.0 / (2.0 * h * r);
            b[i - 1] = -2.0 * ih2 - 1.0 / (r * r) + 1.0 - 3.0 * u[i] * u[i];
            c[i - 1] = ih2 + 1.0 / (2.0 * h * r);
        }
        // Thomas solve of J du = -f.
        std::vector<double> cp(m - 1), dp(m - 1);
        cp[0] = c[0] / b[0];
        dp[0] = -f[0] / b[0];
        for (std::size_t i = 1; i < m - 1; ++i) {
            const double den = b[i] - a[i] * cp[i - 1];
            cp[i] = c[i] / den;
            dp[i] = (-f[i] - a[i] * dp[i - 1]) / den;
        }
        du[m - 2] = dp[m - 2];
        for (std::size_t i = m - 2; i-- > 0;) du[i] = dp[i] - cp[i] * du[i + 1];
        std::vector<double> try_u(u);
        double lambda = 1.0;
        for (int att = 0; att < 8; ++att) {
            for (std::size_t i = 1; i < m; ++i) try_u[i] = u[i] + lambda * du[i - 1];
            if (resid(try_u) < fn || lambda < 1e-3) break;
            lambda *= 0.5;
        }
        u = try_u;
        fn = resid(u);
    }
    return out;
}

// I_1 = ||V1||_H^2 by radial quadrature: 2 pi int (4 rho^2 rho'^2 +
// (1-rho^2)(rho'^2 + rho^2/r^2)) r dr.
inline double i1_radial(const VortexProfile& p, double r_max = 2000.0) {
    const double h = 1e-3;
    const std::size_t m = static_cast<std::size_t>(r_max / h);
    double acc = 0.0;
    for (std::size_t i = 1; i <= m; ++i) {
        const double r = i * h;
        const double rho = p.eval(r, 0);
        const double dr = p.eval(r, 1);
        const double om2 = p.one_minus_rho_sq(r);
        const double f = 4.0 * rho * rho * dr * dr + om2 * (dr * dr + rho * rho / (r * r));
        acc += f * r * ((i == m) ? 0.5 : 1.0) * h;
    }
    return 2.0 * M_PI * acc;
}

inline std::shared_ptr<const VortexProfile> cached_profile() {
    static auto p = std::make_shared<const VortexProfile>(solve_profile(40.0, 1e-10));
    return p;
}

// Random smooth compactly supported complex bump combination.
inline std::function<Complex(double, double)> random_bumps(unsigned seed, double amp,
                                                           double max_center = 6.0,
                                                           double wmin = 1.5,
                                                           double wmax = 4.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    struct Blob {
        double cx, cy, w2;
        Complex c;
    };
    auto blobs = std::make_shared<std::vector<Blob>>();
    for (int k = 0; k < 3; ++k) {
        const double ang = 2 * M_PI * uni(rng);
        const double rad = max_center * std::sqrt(uni(rng));
        const double wd = wmin + (wmax - wmin) * uni(rng);
        blobs->push_back({rad * std::cos(ang), rad * std::sin(ang), wd * wd,
                          std::polar(amp / std::sqrt(3.0), 2 * M_PI * uni(rng))});
    }
    return [blobs](double x, double y) {
        Complex v{};
        for (const auto& b : *blobs)
            v += b.c * std::exp(-((x - b.cx) * (x - b.cx) + (y - b.cy) * (y - b.cy)) / b.w2);
        return v;
    };
}

// Long radial grid with a fine core, for kernel-direction quadratures.
inline RadialGridPtr fine_long_grid() {
    std::vector<double> radii;
    auto band = [&](double from, double to, double step) {
        const int k = static_cast<int>(std::llround((to - from) / step));
        for (int i = 1; i <= k; ++i) radii.push_back(from + i * step);
    };
    band(0.0, 5.0, 0.0025);
    band(5.0, 20.0, 0.01);
    band(20.0, 100.0, 0.05);
    band(100.0, 600.0, 0.25);
    return RadialGrid::from_radii(std::move(radii));
}

// Translation-mode pair (u, v) with u + sign v = rho', u - sign v = -rho/r,
// tapered to compact support for Q_loc quadratures.
inline std::pair<std::vector<double>, std::vector<double>> qloc_kernel_pair(
    const RadialGrid& g, const VortexProfile& p, int sign, double taper_from = 400.0,
    double taper_to = 470.0) {
    std::vector<double> u(g.size()), v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double r = g.r[i];
        double taper = 1.0;
        if (r >= taper_to) taper = 0.0;
        else if (r > taper_from) taper = 1.0 - smoothstep5((r - taper_from) / (taper_to - taper_from));
        const double drho = p.eval(r, 1);
        const double rr = p.eval(r, 0) / r;
        u[i] = 0.5 * (drho - rr) * taper;
        v[i] = sign * 0.5 * (drho + rr) * taper;
    }
    return {u, v};
}

}  // namespace glv::test
