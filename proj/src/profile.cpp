#include "glv/profile.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace glv {

namespace {

using State = std::array<double, 2>;  // (rho, rho')

// rho'' = rho/r^2 - rho'/r - rho (1 - rho^2)
inline State rhs(double r, const State& y) {
    return {y[1], y[0] / (r * r) - y[1] / r - y[0] * (1.0 - y[0] * y[0])};
}

enum class ShotKind { TooSmall, TooBig, Inconclusive };

struct ShotRecord {
    ShotKind kind = ShotKind::Inconclusive;
    double event_r = 0.0;
    // Accepted-step samples (r, rho, drho, d2rho) for Hermite seeding.
    std::vector<std::array<double, 4>> trace;
};

// Dormand-Prince 5(4) with a PI-style step controller.  The shooting problem
// is tiny, so the integrator is kept local to this translation unit.
ShotRecord shoot(double a, double r0, double r_max, double rtol, bool keep_trace) {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                            a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    ShotRecord rec;
    double r = r0;
    State y = {a * (r0 - r0 * r0 * r0 / 8.0), a * (1.0 - 3.0 * r0 * r0 / 8.0)};
    State k1 = rhs(r, y);
    if (keep_trace) rec.trace.push_back({r, y[0], y[1], k1[1]});
    double h = 1e-4;
    const double atol = rtol;

    while (r < r_max) {
        h = std::min(h, r_max - r);
        State k2, k3, k4, k5, k6, k7, ynew;
        auto stage = [&](double cr, const State& yy) { return rhs(r + cr * h, yy); };
        k2 = stage(c2, {y[0] + h * a21 * k1[0], y[1] + h * a21 * k1[1]});
        k3 = stage(c3, {y[0] + h * (a31 * k1[0] + a32 * k2[0]),
                        y[1] + h * (a31 * k1[1] + a32 * k2[1])});
        k4 = stage(c4, {y[0] + h * (a41 * k1[0] + a42 * k2[0] + a43 * k3[0]),
                        y[1] + h * (a41 * k1[1] + a42 * k2[1] + a43 * k3[1])});
        k5 = stage(c5,
                   {y[0] + h * (a51 * k1[0] + a52 * k2[0] + a53 * k3[0] + a54 * k4[0]),
                    y[1] + h * (a51 * k1[1] + a52 * k2[1] + a53 * k3[1] + a54 * k4[1])});
        k6 = stage(1.0, {y[0] + h * (a61 * k1[0] + a62 * k2[0] + a63 * k3[0] +
                                     a64 * k4[0] + a65 * k5[0]),
                         y[1] + h * (a61 * k1[1] + a62 * k2[1] + a63 * k3[1] +
                                     a64 * k4[1] + a65 * k5[1])});
        for (int c = 0; c < 2; ++c)
            ynew[c] = y[c] + h * (b1 * k1[c] + b3 * k3[c] + b4 * k4[c] +
                                  b5 * k5[c] + b6 * k6[c]);
        k7 = rhs(r + h, ynew);
        double err = 0.0;
        for (int c = 0; c < 2; ++c) {
            const double ec = h * (e1 * k1[c] + e3 * k3[c] + e4 * k4[c] +
                                   e5 * k5[c] + e6 * k6[c] + e7 * k7[c]);
            const double sc = atol + rtol * std::max(std::abs(y[c]), std::abs(ynew[c]));
            err = std::max(err, std::abs(ec) / sc);
        }
        if (err <= 1.0) {
            r += h;
            y = ynew;
            k1 = k7;  // FSAL
            if (keep_trace) rec.trace.push_back({r, y[0], y[1], k1[1]});
            if (y[0] > 1.0 + 1e-13) {
                rec.kind = ShotKind::TooBig;
                rec.event_r = r;
                return rec;
            }
            if (y[1] < 0.0 && y[0] < 1.0 - 1.0 / (r * r)) {
                rec.kind = ShotKind::TooSmall;
                rec.event_r = r;
                return rec;
            }
        }
        const double fac = std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 0.2, 5.0);
        h = std::max(h * fac, 1e-12);
    }
    rec.event_r = r_max;
    return rec;
}

// Monotone cubic Hermite evaluation of a shot trace at radius r.
double trace_eval(const std::vector<std::array<double, 4>>& tr, double r) {
    auto it = std::lower_bound(tr.begin(), tr.end(), r,
                               [](const auto& s, double v) { return s[0] < v; });
    if (it == tr.begin()) return tr.front()[1];
    if (it == tr.end()) return tr.back()[1];
    const auto& b = *it;
    const auto& a = *(it - 1);
    const double h = b[0] - a[0];
    const double t = (r - a[0]) / h;
    const double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
    const double h10 = t * (1 - t) * (1 - t);
    const double h01 = t * t * (3 - 2 * t);
    const double h11 = t * t * (t - 1);
    return h00 * a[1] + h10 * h * a[2] + h01 * b[1] + h11 * h * b[2];
}

}  // namespace

double VortexProfile::tail_rho(double r) {
    const double u = 1.0 / (r * r);
    return 1.0 - 0.5 * u - 1.125 * u * u;
}
double VortexProfile::tail_drho(double r) {
    const double u = 1.0 / (r * r);
    return (1.0 + 4.5 * u) * u / r;
}
double VortexProfile::tail_d2rho(double r) {
    const double u = 1.0 / (r * r);
    return (-3.0 - 22.5 * u) * u * u;
}
double VortexProfile::tail_one_minus_rho_sq(double r) {
    const double u = 1.0 / (r * r);
    return u + 2.0 * u * u;
}

double VortexProfile::eval(double r, int order) const {
    if (order < 0 || order > 2)
        throw std::invalid_argument("eval_profile: order must be 0, 1 or 2");
    if (r < 0.0) throw std::invalid_argument("eval_profile: negative radius");
    if (r > match_radius) {
        switch (order) {
            case 0: return tail_rho(r);
            case 1: return tail_drho(r);
            default: return tail_d2rho(r);
        }
    }
    const std::size_t m = rho.size() - 1;
    std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(r / step), m - 1);
    const double h = step;
    const double t = (r - i * h) / h;
    const double ya = rho[i], yb = rho[i + 1], da = drho[i], db = drho[i + 1];
    switch (order) {
        case 0: {
            const double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
            const double h10 = t * (1 - t) * (1 - t);
            const double h01 = t * t * (3 - 2 * t);
            const double h11 = t * t * (t - 1);
            return h00 * ya + h10 * h * da + h01 * yb + h11 * h * db;
        }
        case 1: {
            const double g00 = 6 * t * (t - 1);
            const double g10 = (1 - t) * (1 - 3 * t);
            const double g01 = -6 * t * (t - 1);
            const double g11 = t * (3 * t - 2);
            return (g00 * ya + g01 * yb) / h + g10 * da + g11 * db;
        }
        default: {
            const double q00 = 12 * t - 6;
            const double q10 = 6 * t - 4;
            const double q01 = 6 - 12 * t;
            const double q11 = 6 * t - 2;
            return (q00 * ya + q01 * yb) / (h * h) + (q10 * da + q11 * db) / h;
        }
    }
}

double VortexProfile::one_minus_rho_sq(double r) const {
    if (r < 0.0) throw std::invalid_argument("one_minus_rho_sq: negative radius");
    if (r > match_radius) return tail_one_minus_rho_sq(r);
    const double v = eval(r, 0);
    return 1.0 - v * v;
}

double VortexProfile::ode_residual_sup(double lo, double hi) const {
    const std::size_t m = rho.size() - 1;
    const double h = step;
    double sup = 0.0;
    const std::size_t i_lo = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(lo / h)));
    const std::size_t i_hi = std::min<std::size_t>(m - 2, static_cast<std::size_t>(hi / h));
    for (std::size_t i = i_lo; i <= i_hi; ++i) {
        const double r = i * h;
        const double d2 = (drho[i - 2] - 8 * drho[i - 1] + 8 * drho[i + 1] - drho[i + 2]) / (12 * h);
        const double res = d2 + drho[i] / r - rho[i] / (r * r) + rho[i] * (1.0 - rho[i] * rho[i]);
        sup = std::max(sup, std::abs(res));
    }
    return sup;
}

VortexProfile solve_profile(double r_max, double tol, const ProfileOptions& opts) {
    if (r_max <= 2.0) throw std::invalid_argument("solve_profile: r_max too small");
    if (!(tol > 0.0) || tol > 1e-6)
        throw std::invalid_argument("solve_profile: tol must lie in (0, 1e-6]");

    VortexProfile p;
    p.r_max = r_max;
    p.tol = tol;
    p.match_radius = std::min(opts.match_radius, r_max);
    if (r_max < 20.0)
        p.warnings.push_back("r_max below recommended minimum of 20; tail accuracy degraded");
    if (opts.match_radius > r_max)
        p.warnings.push_back("tail-match radius below recommended; clamped to r_max");

    // --- Bisection on the shooting slope ------------------------------------
    double lo = opts.bracket_lo, hi = opts.bracket_hi;
    auto classify = [&](double a) { return shoot(a, opts.shoot_r0, r_max, opts.ode_rtol, false).kind; };
    if (classify(lo) != ShotKind::TooSmall || classify(hi) != ShotKind::TooBig) {
        std::ostringstream os;
        os << "solve_profile: shooting bracket [" << lo << ", " << hi
           << "] does not straddle the slope";
        throw NumericalFailure(os.str());
    }
    int iters = 0;
    bool inconclusive = false;
    while (hi - lo > tol) {
        if (++iters > opts.max_bisect) {
            std::ostringstream os;
            os << "solve_profile: bisection exceeded " << opts.max_bisect
               << " iterations, last bracket [" << fmt17(lo) << ", " << fmt17(hi) << "]";
            throw NumericalFailure(os.str());
        }
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;  // bracket at rounding resolution
        const ShotKind k = classify(mid);
        if (k == ShotKind::TooSmall) {
            lo = mid;
        } else if (k == ShotKind::TooBig) {
            hi = mid;
        } else {
            inconclusive = true;
            std::ostringstream os;
            os << "bisection stopped at bracket width " << fmt17(hi - lo)
               << ": no overshoot/undershoot event within r_max";
            p.warnings.push_back(os.str());
            break;
        }
    }
    p.slope_at_origin = 0.5 * (lo + hi);
    (void)inconclusive;

    // --- Collocation polish of the stored table -----------------------------
    // A single forward shot loses pointwise accuracy past r ~ 15 through the
    // exp(sqrt(2) r) mode, so the table is the solution of the fourth-order
    // collocation equations, seeded from the final shot and the far-field tail.
    const double h = p.step;
    const std::size_t m = static_cast<std::size_t>(std::llround(r_max / h));
    p.rho.assign(m + 1, 0.0);
    p.drho.assign(m + 1, 0.0);

    ShotRecord fin = shoot(p.slope_at_origin, opts.shoot_r0, r_max, opts.ode_rtol, true);
    const double seam = std::clamp(fin.event_r - 2.0, 4.0, 10.0);
    std::vector<double> u(m + 1);
    u[0] = 0.0;
    for (std::size_t i = 1; i <= m; ++i) {
        const double r = i * h;
        if (r <= seam - 1.0) {
            u[i] = trace_eval(fin.trace, r);
        } else if (r >= seam) {
            u[i] = VortexProfile::tail_rho(r);
        } else {
            const double s = smoothstep5(r - (seam - 1.0));
            u[i] = (1.0 - s) * trace_eval(fin.trace, r) + s * VortexProfile::tail_rho(r);
        }
    }
    u[m] = VortexProfile::tail_rho(r_max);
    u[m - 1] = VortexProfile::tail_rho(r_max - h);

    const std::size_t ndof = m - 2;  // unknowns at i = 1 .. m-2
    const double ih2 = 1.0 / (12.0 * h * h);
    const double ih1 = 1.0 / (12.0 * h);
    auto residual = [&](const std::vector<double>& v, std::vector<double>& f) {
        for (std::size_t i = 1; i + 2 <= m; ++i) {
            const double r = i * h;
            const double vm2 = (i >= 2) ? v[i - 2] : -v[1];  // odd extension across 0
            const double d2 = (-vm2 + 16 * v[i - 1] - 30 * v[i] + 16 * v[i + 1] - v[i + 2]) * ih2;
            const double d1 = (vm2 - 8 * v[i - 1] + 8 * v[i + 1] - v[i + 2]) * ih1;
            f[i - 1] = d2 + d1 / r - v[i] / (r * r) + v[i] * (1.0 - v[i] * v[i]);
        }
    };

    Eigen::SparseMatrix<double> jac(ndof, ndof);
    {
        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(5 * ndof);
        for (std::size_t i = 1; i + 2 <= m; ++i) {
            for (int k = -2; k <= 2; ++k) {
                long col = static_cast<long>(i) + k;
                if (col == static_cast<long>(i) - 2 && i == 1) col = 1;  // fold of u_{-1}
                if (col < 1 || col > static_cast<long>(m) - 2) continue;
                trips.emplace_back(static_cast<int>(i - 1), static_cast<int>(col - 1), 1.0);
            }
        }
        jac.setFromTriplets(trips.begin(), trips.end());
    }
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.analyzePattern(jac);

    std::vector<double> f(ndof), ftmp(ndof);
    residual(u, f);
    auto norm_inf = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s = std::max(s, std::abs(x));
        return s;
    };
    double fn = norm_inf(f);
    static constexpr double kD2[5] = {-1, 16, -30, 16, -1};
    static constexpr double kD1[5] = {1, -8, 0, 8, -1};
    for (int it = 0; it < opts.max_newton && fn > 3e-9; ++it) {
        // Assemble the pentadiagonal Jacobian in-place.
        for (int k = 0; k < jac.outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator c(jac, k); c; ++c)
                c.valueRef() = 0.0;
        for (std::size_t i = 1; i + 2 <= m; ++i) {
            const double r = i * h;
            for (int k = -2; k <= 2; ++k) {
                double w = kD2[k + 2] * ih2 + kD1[k + 2] * ih1 / r;
                if (k == 0) w += -1.0 / (r * r) + 1.0 - 3.0 * u[i] * u[i];
                long col = static_cast<long>(i) + k;
                if (col == static_cast<long>(i) - 2 && i == 1) {
                    col = 1;
                    w = -w;  // u_{-1} = -u_1
                }
                if (col < 1 || col > static_cast<long>(m) - 2) continue;
                jac.coeffRef(static_cast<long>(i - 1), col - 1) += w;
            }
        }
        lu.factorize(jac);
        if (lu.info() != Eigen::Success)
            throw NumericalFailure("solve_profile: collocation Jacobian factorization failed");
        Eigen::VectorXd rhsv(ndof);
        for (std::size_t i = 0; i < ndof; ++i) rhsv[static_cast<long>(i)] = -f[i];
        Eigen::VectorXd delta = lu.solve(rhsv);
        double lambda = 1.0;
        std::vector<double> utry(u);
        for (int att = 0; att < 8; ++att) {
            for (std::size_t i = 0; i < ndof; ++i)
                utry[i + 1] = u[i + 1] + lambda * delta[static_cast<long>(i)];
            residual(utry, ftmp);
            if (norm_inf(ftmp) < fn || lambda < 1e-3) break;
            lambda *= 0.5;
        }
        u = utry;
        f = ftmp;
        fn = norm_inf(f);
    }
    if (fn > 1e-7)
        throw NumericalFailure("solve_profile: collocation Newton stalled, |F| = " + fmt17(fn));

    p.rho = u;
    // rho' by fourth-order differences; odd extension across the origin,
    // one-sided stencils at the outer edge.
    for (std::size_t i = 0; i <= m; ++i) {
        double d;
        if (i >= 2 && i + 2 <= m) {
            d = (u[i - 2] - 8 * u[i - 1] + 8 * u[i + 1] - u[i + 2]) * ih1;
        } else if (i < 2) {
            const double vm2 = (i == 0) ? -u[2] : -u[1];
            const double vm1 = (i == 0) ? -u[1] : u[0];
            d = (vm2 - 8 * vm1 + 8 * u[i + 1] - u[i + 2]) * ih1;
        } else {
            d = (25 * u[i] - 48 * u[i - 1] + 36 * u[i - 2] - 16 * u[i - 3] + 3 * u[i - 4]) * ih1;
        }
        p.drho[i] = d;
    }

    p.residual_sup = p.ode_residual_sup(0.01, std::min(30.0, r_max - 2 * h));
    const std::size_t im = static_cast<std::size_t>(std::llround(p.match_radius / h));
    p.stitch_error = std::abs(p.rho[std::min(im, m)] - VortexProfile::tail_rho(p.match_radius));
    if (p.stitch_error > opts.stitch_tol)
        p.warnings.push_back("tail stitch mismatch " + fmt17(p.stitch_error) +
                             " exceeds tolerance " + fmt17(opts.stitch_tol));
    return p;
}

void VortexProfile::save(std::ostream& os) const {
    nlohmann::json hdr{{"format", "glv-profile"},
                       {"version", 1},
                       {"a1", slope_at_origin},
                       {"r_max", r_max},
                       {"step", step},
                       {"match_radius", match_radius},
                       {"tol", tol},
                       {"residual_sup", residual_sup},
                       {"stitch_error", stitch_error}};
    os << "# " << hdr.dump() << "\n";
    for (std::size_t i = 0; i < rho.size(); ++i)
        os << fmt17(i * step) << ' ' << fmt17(rho[i]) << ' ' << fmt17(drho[i]) << "\n";
}

void VortexProfile::save_file(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    save(os);
}

VortexProfile VortexProfile::load(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.size() < 3 || line[0] != '#')
        throw std::runtime_error("profile load: missing header line");
    const auto hdr = nlohmann::json::parse(line.substr(1));
    if (hdr.at("format") != "glv-profile" || hdr.at("version") != 1)
        throw std::runtime_error("profile load: unsupported format/version");
    VortexProfile p;
    p.slope_at_origin = hdr.at("a1");
    p.r_max = hdr.at("r_max");
    p.step = hdr.at("step");
    p.match_radius = hdr.at("match_radius");
    p.tol = hdr.at("tol");
    p.residual_sup = hdr.at("residual_sup");
    p.stitch_error = hdr.at("stitch_error");
    double r, v, d;
    while (is >> r >> v >> d) {
        p.rho.push_back(v);
        p.drho.push_back(d);
    }
    if (p.rho.size() < 10) throw std::runtime_error("profile load: truncated table");
    return p;
}

VortexProfile VortexProfile::load_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    return load(is);
}

}  // namespace glv
