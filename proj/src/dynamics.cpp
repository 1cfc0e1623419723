#include "glv/dynamics.hpp"

#include <fftw3.h>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cmath>
#include <random>

#include "glv/cutoff.hpp"

namespace glv {

// ---------------------------------------------------------------------------
// Discrete vortex background
// ---------------------------------------------------------------------------

std::shared_ptr<const DiscreteVortex> make_discrete_vortex(VortexTablePtr table) {
    const Grid2D& g = table->grid;
    const int n = g.n;
    const int m = n - 4;  // unknowns per axis, two Dirichlet rings
    auto dv = std::make_shared<DiscreteVortex>();
    dv->table = table;
    dv->v1h = table->v1;
    dv->s.assign(g.size(), Complex{0.0, 0.0});

    auto interior_index = [&](int ix, int iy) { return (iy - 2) * m + (ix - 2); };
    const double ih2 = 1.0 / (g.h * g.h);

    auto residual = [&](const std::vector<Complex>& v, std::vector<Complex>& f) {
        for (int iy = 2; iy < n - 2; ++iy)
            for (int ix = 2; ix < n - 2; ++ix) {
                const std::size_t k = g.idx(ix, iy);
                const Complex lap = (v[k + 1] + v[k - 1] + v[k + n] + v[k - n] -
                                     4.0 * v[k]) * ih2;
                f[interior_index(ix, iy)] = lap + (1.0 - std::norm(v[k])) * v[k];
            }
    };

    const int nun = m * m;
    std::vector<Complex> f(nun);
    residual(dv->v1h, f);
    double fn = 0.0;
    for (const Complex& c : f) fn = std::max(fn, std::abs(c));

    // Newton on the real form of the discrete GL equation.
    Eigen::SparseMatrix<double> jac(2 * nun, 2 * nun);
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    bool analyzed = false;
    for (int it = 0; it < 12 && fn > 1e-13; ++it) {
        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(static_cast<std::size_t>(nun) * 12);
        for (int iy = 2; iy < n - 2; ++iy)
            for (int ix = 2; ix < n - 2; ++ix) {
                const std::size_t k = g.idx(ix, iy);
                const int row = interior_index(ix, iy);
                const double vr = dv->v1h[k].real(), vi = dv->v1h[k].imag();
                const double m2 = vr * vr + vi * vi;
                // d/dv [ (1-|v|^2) v ] as a real 2x2 block.
                const double d_rr = 1.0 - m2 - 2.0 * vr * vr - 4.0 * ih2;
                const double d_ii = 1.0 - m2 - 2.0 * vi * vi - 4.0 * ih2;
                const double d_ri = -2.0 * vr * vi;
                trips.emplace_back(2 * row, 2 * row, d_rr);
                trips.emplace_back(2 * row + 1, 2 * row + 1, d_ii);
                trips.emplace_back(2 * row, 2 * row + 1, d_ri);
                trips.emplace_back(2 * row + 1, 2 * row, d_ri);
                const int nb[4][2] = {{ix + 1, iy}, {ix - 1, iy}, {ix, iy + 1}, {ix, iy - 1}};
                for (auto& b : nb)
                    if (b[0] >= 2 && b[0] < n - 2 && b[1] >= 2 && b[1] < n - 2) {
                        const int col = interior_index(b[0], b[1]);
                        trips.emplace_back(2 * row, 2 * col, ih2);
                        trips.emplace_back(2 * row + 1, 2 * col + 1, ih2);
                    }
            }
        jac.setFromTriplets(trips.begin(), trips.end());
        if (!analyzed) {
            lu.analyzePattern(jac);
            analyzed = true;
        }
        lu.factorize(jac);
        if (lu.info() != Eigen::Success)
            throw NumericalFailure("make_discrete_vortex: Jacobian factorization failed");
        Eigen::VectorXd rhs(2 * nun);
        for (int i = 0; i < nun; ++i) {
            rhs[2 * i] = -f[i].real();
            rhs[2 * i + 1] = -f[i].imag();
        }
        const Eigen::VectorXd delta = lu.solve(rhs);
        for (int iy = 2; iy < n - 2; ++iy)
            for (int ix = 2; ix < n - 2; ++ix) {
                const int row = interior_index(ix, iy);
                dv->v1h[g.idx(ix, iy)] += Complex{delta[2 * row], delta[2 * row + 1]};
            }
        residual(dv->v1h, f);
        fn = 0.0;
        for (const Complex& c : f) fn = std::max(fn, std::abs(c));
    }
    if (fn > 1e-11)
        throw NumericalFailure("make_discrete_vortex: Newton stalled at residual " + fmt17(fn));
    dv->residual = fn;
    for (std::size_t k = 0; k < g.size(); ++k) dv->s[k] = dv->v1h[k] - table->v1[k];
    return dv;
}

// ---------------------------------------------------------------------------
// Stepper
// ---------------------------------------------------------------------------

namespace {
struct Plans {
    fftw_plan fwd = nullptr;
    ~Plans() {
        if (fwd) fftw_destroy_plan(fwd);
    }
};
}  // namespace

GpStepper::GpStepper(std::shared_ptr<const DiscreteVortex> bg, StepperOptions opt)
    : bg_(std::move(bg)), opt_(opt) {
    const Grid2D& g = bg_->table->grid;
    m_ = g.n - 4;
    dt_ = opt_.dt > 0.0 ? opt_.dt : g.h * g.h;
    if (opt_.rk4 && dt_ > 0.353 * g.h * g.h)
        throw std::invalid_argument("GpStepper: explicit step exceeds the rk4 stability budget");
    eig_.resize(static_cast<std::size_t>(m_) * m_);
    const double pref = 2.0 / (g.h * g.h);
    for (int ky = 1; ky <= m_; ++ky)
        for (int kx = 1; kx <= m_; ++kx)
            eig_[static_cast<std::size_t>(ky - 1) * m_ + (kx - 1)] =
                pref * (std::cos(kx * M_PI / (m_ + 1)) - 1.0 +
                        std::cos(ky * M_PI / (m_ + 1)) - 1.0);
    re_.resize(eig_.size());
    im_.resize(eig_.size());
    auto* plans = new Plans;
    plans->fwd = fftw_plan_r2r_2d(m_, m_, re_.data(), re_.data(), FFTW_RODFT00,
                                  FFTW_RODFT00, FFTW_ESTIMATE);
    plan_fwd_ = plans;
}

GpStepper::~GpStepper() { delete static_cast<Plans*>(plan_fwd_); }

// Solves (i/dt + Delta_h/2) out = rhs on the interior block, Dirichlet rings.
void GpStepper::solve_helmholtz(std::vector<Complex>& rhs) {
    const Grid2D& g = bg_->table->grid;
    auto* plans = static_cast<Plans*>(plan_fwd_);
    for (int iy = 0; iy < m_; ++iy)
        for (int ix = 0; ix < m_; ++ix) {
            const Complex v = rhs[g.idx(ix + 2, iy + 2)];
            re_[static_cast<std::size_t>(iy) * m_ + ix] = v.real();
            im_[static_cast<std::size_t>(iy) * m_ + ix] = v.imag();
        }
    fftw_execute_r2r(plans->fwd, re_.data(), re_.data());
    fftw_execute_r2r(plans->fwd, im_.data(), im_.data());
    const double scale = 1.0 / (4.0 * (m_ + 1.0) * (m_ + 1.0));
    const double idt = 1.0 / dt_;
    for (std::size_t k = 0; k < eig_.size(); ++k) {
        const double lam = 0.5 * eig_[k];
        const double den = idt * idt + lam * lam;
        // (i/dt + lam)^{-1} = (lam - i/dt)/den
        const double r = re_[k], i = im_[k];
        re_[k] = (lam * r + idt * i) / den * scale;
        im_[k] = (lam * i - idt * r) / den * scale;
    }
    fftw_execute_r2r(plans->fwd, re_.data(), re_.data());
    fftw_execute_r2r(plans->fwd, im_.data(), im_.data());
    for (int iy = 0; iy < m_; ++iy)
        for (int ix = 0; ix < m_; ++ix)
            rhs[g.idx(ix + 2, iy + 2)] =
                Complex{re_[static_cast<std::size_t>(iy) * m_ + ix],
                        im_[static_cast<std::size_t>(iy) * m_ + ix]};
}

void GpStepper::step(std::vector<Complex>& w) {
    const Grid2D& g = bg_->table->grid;
    const int n = g.n;
    const double ih2 = 1.0 / (g.h * g.h);
    const auto& B = bg_->v1h;

    if (opt_.rk4) {
        // Explicit fallback: w' = i (Delta_h w + N(w)).
        auto deriv = [&](const std::vector<Complex>& v, std::vector<Complex>& out) {
            out.assign(g.size(), Complex{});
            for (int iy = 2; iy < n - 2; ++iy)
                for (int ix = 2; ix < n - 2; ++ix) {
                    const std::size_t k = g.idx(ix, iy);
                    const Complex psi = B[k] + v[k];
                    const Complex lap =
                        (v[k + 1] + v[k - 1] + v[k + n] + v[k - n] - 4.0 * v[k]) * ih2;
                    const Complex nl =
                        (1.0 - std::norm(psi)) * psi - (1.0 - std::norm(B[k])) * B[k];
                    out[k] = Complex{0.0, 1.0} * (lap + nl);
                }
        };
        std::vector<Complex> k1, k2, k3, k4, tmp(g.size());
        deriv(w, k1);
        for (std::size_t k = 0; k < g.size(); ++k) tmp[k] = w[k] + 0.5 * dt_ * k1[k];
        deriv(tmp, k2);
        for (std::size_t k = 0; k < g.size(); ++k) tmp[k] = w[k] + 0.5 * dt_ * k2[k];
        deriv(tmp, k3);
        for (std::size_t k = 0; k < g.size(); ++k) tmp[k] = w[k] + dt_ * k3[k];
        deriv(tmp, k4);
        for (std::size_t k = 0; k < g.size(); ++k)
            w[k] += dt_ / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
        last_iters_ = 4;
        return;
    }

    // rhs0 = (i/dt - Delta_h/2) w^n, fixed over the inner iteration.
    std::vector<Complex> rhs0(g.size(), Complex{});
    const Complex idt{0.0, 1.0 / dt_};
    for (int iy = 2; iy < n - 2; ++iy)
        for (int ix = 2; ix < n - 2; ++ix) {
            const std::size_t k = g.idx(ix, iy);
            const Complex lap = (w[k + 1] + w[k - 1] + w[k + n] + w[k - n] - 4.0 * w[k]) * ih2;
            rhs0[k] = idt * w[k] - 0.5 * lap;
        }

    std::vector<Complex> wn1(g.size(), Complex{});
    if (have_prev_) {
        for (std::size_t k = 0; k < g.size(); ++k) wn1[k] = 2.0 * w[k] - prev_[k];
    } else {
        wn1 = w;
    }

    std::vector<Complex> rhs(g.size());
    last_converged_ = false;
    for (int it = 0; it < opt_.fp_max; ++it) {
        for (int iy = 2; iy < n - 2; ++iy)
            for (int ix = 2; ix < n - 2; ++ix) {
                const std::size_t k = g.idx(ix, iy);
                const Complex psi_n = B[k] + w[k];
                const Complex psi_m = B[k] + wn1[k];
                const Complex psi_mid = 0.5 * (psi_n + psi_m);
                const double dens = 0.5 * (std::norm(psi_n) + std::norm(psi_m));
                const Complex nl =
                    (1.0 - dens) * psi_mid - (1.0 - std::norm(B[k])) * B[k];
                rhs[k] = rhs0[k] - nl;
            }
        solve_helmholtz(rhs);
        double diff = 0.0, scale = 1.0;
        for (int iy = 2; iy < n - 2; ++iy)
            for (int ix = 2; ix < n - 2; ++ix) {
                const std::size_t k = g.idx(ix, iy);
                diff = std::max(diff, std::abs(rhs[k] - wn1[k]));
                scale = std::max(scale, std::abs(rhs[k]));
            }
        wn1.swap(rhs);
        last_iters_ = it + 1;
        if (diff <= opt_.fp_tol * scale) {
            last_converged_ = true;
            break;
        }
    }
    if (!last_converged_)
        throw NumericalFailure("GpStepper: inner fixed point failed to converge");
    prev_ = w;
    have_prev_ = true;
    std::copy(wn1.begin(), wn1.end(), w.begin());  // keep w's buffer address stable
}

double GpStepper::energy(std::span<const Complex> w) const {
    const Grid2D& g = bg_->table->grid;
    const int n = g.n;
    const auto& B = bg_->v1h;
    std::vector<double> cells;
    cells.reserve(3 * g.size());
    // (1/2) sum_edges |dw|^2  (grad energy times h^2 cancels the 1/h^2)
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix + 1 < n; ++ix) {
            const std::size_t k = g.idx(ix, iy);
            cells.push_back(0.5 * std::norm(w[k + 1] - w[k]));
        }
    for (int iy = 0; iy + 1 < n; ++iy)
        for (int ix = 0; ix < n; ++ix) {
            const std::size_t k = g.idx(ix, iy);
            cells.push_back(0.5 * std::norm(w[k + n] - w[k]));
        }
    const double grad = pairwise_sum(cells);
    cells.clear();
    // Potential difference plus the linear counterterm of the conserved
    // functional; the parts linear in w cancel pointwise, leaving
    // (1/4) eta^2 - (1/2)(1-|B|^2)|w|^2.
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double et = -2.0 * cdot(w[k], B[k]) - std::norm(w[k]);
        cells.push_back(0.25 * et * et -
                        0.5 * (1.0 - std::norm(B[k])) * std::norm(w[k]));
    }
    return grad + g.cell_area() * pairwise_sum(cells);
}

// ---------------------------------------------------------------------------
// Modulation
// ---------------------------------------------------------------------------

FieldView view_of(const Field2D& f) {
    FieldView v{f.vortex.get(), {}, f.w, f.phase, nullptr};
    if (f.dev_analytic) v.dev_analytic = &f.dev_analytic;
    return v;
}

namespace {

struct LocalPatch {
    // eps and its centered differences on nodes with |x| <= 2 + 2h.
    const VortexTable* table;
    std::vector<std::size_t> nodes;          // grid indices with |x| <= 2 + h
    std::vector<Complex> eps, epsx, epsy;    // parallel to nodes
};

// Builds eps = e^{-i phi} Psi(. + b) - Vref near the cutoff support.  The
// vortex part of the shift is evaluated analytically; only the small fields
// s and w are bilinearly interpolated.
LocalPatch local_eps(const FieldView& f, Vec2 b, double phi) {
    const VortexTable& t = *f.table;
    const Grid2D& g = t.grid;
    const VortexProfile& p = *t.profile;
    if (std::max(std::abs(b[0]), std::abs(b[1])) > g.half_width - 3.0 - 2.0 * g.h)
        throw std::invalid_argument("xi/modulate: translation pushes the stencil off the grid");

    const Complex rot = std::polar(1.0, f.phase - phi);
    const int n = g.n;
    const int i_lo = std::max(1, static_cast<int>((g.half_width - 2.0 - 3.0 * g.h) / g.h));
    const int i_hi = n - 1 - i_lo;

    // eps on the padded patch, stored densely in a map from grid index.
    const int pw = i_hi - i_lo + 1;
    std::vector<Complex> pe(static_cast<std::size_t>(pw) * pw);
    auto pidx = [&](int ix, int iy) {
        return static_cast<std::size_t>(iy - i_lo) * pw + (ix - i_lo);
    };
    for (int iy = i_lo; iy <= i_hi; ++iy) {
        const double y = g.coord(iy);
        for (int ix = i_lo; ix <= i_hi; ++ix) {
            const double x = g.coord(ix);
            Complex shifted = vortex_value(p, x + b[0], y + b[1]);
            if (f.dev_analytic) {
                shifted += (*f.dev_analytic)(x + b[0], y + b[1]);
            } else {
                if (!f.s.empty()) shifted += bilerp(g, f.s, x + b[0], y + b[1]);
                shifted += bilerp(g, f.w, x + b[0], y + b[1]);
            }
            Complex ref = t.v1[g.idx(ix, iy)];
            if (!f.s.empty()) ref += f.s[g.idx(ix, iy)];
            pe[pidx(ix, iy)] = rot * shifted - ref;
        }
    }

    LocalPatch out;
    out.table = &t;
    const double inv2h = 0.5 / g.h;
    for (int iy = i_lo + 1; iy < i_hi; ++iy) {
        const double y = g.coord(iy);
        for (int ix = i_lo + 1; ix < i_hi; ++ix) {
            const double x = g.coord(ix);
            if (x * x + y * y > (2.0 + g.h) * (2.0 + g.h)) continue;
            out.nodes.push_back(g.idx(ix, iy));
            out.eps.push_back(pe[pidx(ix, iy)]);
            out.epsx.push_back((pe[pidx(ix + 1, iy)] - pe[pidx(ix - 1, iy)]) * inv2h);
            out.epsy.push_back((pe[pidx(ix, iy + 1)] - pe[pidx(ix, iy - 1)]) * inv2h);
        }
    }
    return out;
}

Vec3 xi_from_patch(const LocalPatch& pc) {
    const VortexTable& t = *pc.table;
    const Grid2D& g = t.grid;
    const Cutoff cut{1.0};
    std::vector<double> c0, c1, c2;
    c0.reserve(pc.nodes.size());
    c1.reserve(pc.nodes.size());
    c2.reserve(pc.nodes.size());
    for (std::size_t i = 0; i < pc.nodes.size(); ++i) {
        const std::size_t k = pc.nodes[i];
        const double r = std::hypot(g.coord(static_cast<int>(k % g.n)),
                                    g.coord(static_cast<int>(k / g.n)));
        const double chi = cut.chi(r);
        if (chi == 0.0) {
            c0.push_back(0.0);
            c1.push_back(0.0);
            c2.push_back(0.0);
            continue;
        }
        const Complex iv{-t.v1[k].imag(), t.v1[k].real()};
        c0.push_back(chi * cdot(pc.eps[i], t.dxv1[k]));
        c1.push_back(chi * cdot(pc.eps[i], t.dyv1[k]));
        c2.push_back(chi * cdot(pc.eps[i], iv));
    }
    const double a = g.cell_area();
    return {a * pairwise_sum(c0), a * pairwise_sum(c1), a * pairwise_sum(c2)};
}

}  // namespace

Vec3 xi(const FieldView& f, Vec2 b, double phi) {
    return xi_from_patch(local_eps(f, b, phi));
}

namespace {

// Jacobian of xi in (b1, b2, phi) at the current point; uses the analytic
// shift derivative d_i Psi(.+b) = d_i V1(.+b) + interpolated small fields.
Mat3 xi_jacobian(const FieldView& f, Vec2 b, double phi) {
    const VortexTable& t = *f.table;
    const Grid2D& g = t.grid;
    const VortexProfile& p = *t.profile;
    const Complex rot = std::polar(1.0, f.phase - phi);
    const Cutoff cut{1.0};
    const double inv2h = 0.5 / g.h;

    // Centered differences of the grid fields, interpolated at x + b.
    auto grid_deriv = [&](std::span<const Complex> v, double x, double y, int axis) {
        if (v.empty()) return Complex{0.0, 0.0};
        const double d = g.h;
        if (axis == 0)
            return (bilerp(g, v, x + d, y) - bilerp(g, v, x - d, y)) * inv2h;
        return (bilerp(g, v, x, y + d) - bilerp(g, v, x, y - d)) * inv2h;
    };
    auto dev_deriv = [&](double x, double y, int axis) {
        const double d = g.h;
        if (axis == 0)
            return ((*f.dev_analytic)(x + d, y) - (*f.dev_analytic)(x - d, y)) * inv2h;
        return ((*f.dev_analytic)(x, y + d) - (*f.dev_analytic)(x, y - d)) * inv2h;
    };

    Mat3 j{};
    std::vector<std::array<double, 9>> cells;
    const int n = g.n;
    for (int iy = 1; iy < n - 1; ++iy) {
        const double y = g.coord(iy);
        if (std::abs(y) > 2.0 + g.h) continue;
        for (int ix = 1; ix < n - 1; ++ix) {
            const double x = g.coord(ix);
            const double r = std::hypot(x, y);
            if (r > 2.0) continue;
            const double chi = cut.chi(r);
            const std::size_t k = g.idx(ix, iy);
            const auto dv = vortex_grad(p, x + b[0], y + b[1]);
            Complex dpsi_x = dv[0], dpsi_y = dv[1];
            Complex psi = vortex_value(p, x + b[0], y + b[1]);
            if (f.dev_analytic) {
                dpsi_x += dev_deriv(x + b[0], y + b[1], 0);
                dpsi_y += dev_deriv(x + b[0], y + b[1], 1);
                psi += (*f.dev_analytic)(x + b[0], y + b[1]);
            } else {
                dpsi_x += grid_deriv(f.s, x + b[0], y + b[1], 0) +
                          grid_deriv(f.w, x + b[0], y + b[1], 0);
                dpsi_y += grid_deriv(f.s, x + b[0], y + b[1], 1) +
                          grid_deriv(f.w, x + b[0], y + b[1], 1);
                if (!f.s.empty()) psi += bilerp(g, f.s, x + b[0], y + b[1]);
                psi += bilerp(g, f.w, x + b[0], y + b[1]);
            }
            dpsi_x *= rot;
            dpsi_y *= rot;
            psi *= rot;
            const Complex dphi{psi.imag(), -psi.real()};  // -i psi
            const Complex kx = t.dxv1[k], ky = t.dyv1[k];
            const Complex iv{-t.v1[k].imag(), t.v1[k].real()};
            cells.push_back({chi * cdot(dpsi_x, kx), chi * cdot(dpsi_y, kx),
                             chi * cdot(dphi, kx), chi * cdot(dpsi_x, ky),
                             chi * cdot(dpsi_y, ky), chi * cdot(dphi, ky),
                             chi * cdot(dpsi_x, iv), chi * cdot(dpsi_y, iv),
                             chi * cdot(dphi, iv)});
        }
    }
    const double a = g.cell_area();
    for (int rr = 0; rr < 3; ++rr)
        for (int cc = 0; cc < 3; ++cc)
            j[rr][cc] = a * pairwise_sum(cells.size(), [&](std::size_t i) {
                            return cells[i][3 * rr + cc];
                        });
    return j;
}

}  // namespace

ModulationState modulate(const FieldView& f, Vec2 guess_b, double guess_phi,
                         const ModulationOptions& opts) {
    ModulationState st;
    st.a = guess_b;
    st.phi = guess_phi;
    std::vector<double> history;
    Vec3 v = xi(f, st.a, st.phi);
    double res = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    history.push_back(res);
    if (res <= 1e-12) {  // already orthogonal (e.g. an exact vortex state)
        st.xi_residual = res;
        modulation_rhs(f, st, opts.cond_cap);
        return st;
    }
    for (int it = 0; it < opts.max_newton; ++it) {
        const Mat3 jm = xi_jacobian(f, st.a, st.phi);
        Eigen::Matrix3d J;
        Eigen::Vector3d rhs;
        for (int r = 0; r < 3; ++r) {
            rhs(r) = -v[r];
            for (int c = 0; c < 3; ++c) J(r, c) = jm[r][c];
        }
        const Eigen::Vector3d delta = J.partialPivLu().solve(rhs);
        double lambda = 1.0;
        for (int att = 0;; ++att) {
            const Vec2 a_try{st.a[0] + lambda * delta(0), st.a[1] + lambda * delta(1)};
            const double phi_try = st.phi + lambda * delta(2);
            const Vec3 v_try = xi(f, a_try, phi_try);
            const double res_try =
                std::sqrt(v_try[0] * v_try[0] + v_try[1] * v_try[1] + v_try[2] * v_try[2]);
            if (res_try < res || att >= 6) {
                st.a = a_try;
                st.phi = phi_try;
                v = v_try;
                res = res_try;
                break;
            }
            lambda *= 0.5;
        }
        history.push_back(res);
        st.newton_iterations = it + 1;
        if (res <= opts.xi_tol) {
            st.xi_residual = res;
            modulation_rhs(f, st, opts.cond_cap);
            return st;
        }
    }
    throw ModulationFailure(
        "modulate: Newton failed to reach |xi| <= " + fmt17(opts.xi_tol) +
            " (left the modulation neighbourhood); final residual " + fmt17(res),
        std::move(history));
}

Vec3 modulation_rhs(const FieldView& f, ModulationState& st, double cond_cap) {
    const VortexTable& t = *f.table;
    const Grid2D& g = t.grid;
    const VortexProfile& p = *t.profile;
    const Cutoff cut{1.0};
    const LocalPatch pc = local_eps(f, st.a, st.phi);

    // M_0 entries and the eps-corrections assembled in one pass.
    std::vector<std::array<double, 12>> cells;
    cells.reserve(pc.nodes.size());
    for (std::size_t i = 0; i < pc.nodes.size(); ++i) {
        const std::size_t k = pc.nodes[i];
        const int ix = static_cast<int>(k % g.n);
        const int iy = static_cast<int>(k / g.n);
        const double x = g.coord(ix), y = g.coord(iy);
        const double r = std::hypot(x, y);
        if (r > 2.0) continue;
        const double chi = cut.chi(r);
        const double dchi = cut.dchi(r);
        const Complex e = pc.eps[i], ex = pc.epsx[i], ey = pc.epsy[i];
        const Complex v1 = t.v1[k];
        const Complex iv{-v1.imag(), v1.real()};
        const Complex kx = t.dxv1[k], ky = t.dyv1[k];
        const Complex ikx{-kx.imag(), kx.real()};
        const Complex iky{-ky.imag(), ky.real()};
        const double om2 = t.one_m2[k];
        const double eta = -2.0 * cdot(e, v1) - std::norm(e);
        const Complex psi_loc = v1 + e;

        // grad(chi K) = chi' (x/r, y/r) K + chi grad K, with analytic Hessian.
        const auto hess = vortex_hess(p, x, y);
        const double cx = (r > 1e-12) ? dchi * x / r : 0.0;
        const double cy = (r > 1e-12) ? dchi * y / r : 0.0;
        const Complex gkx_x = cx * kx + chi * hess[0];
        const Complex gkx_y = cy * kx + chi * hess[1];
        const Complex gky_x = cx * ky + chi * hess[1];
        const Complex gky_y = cy * ky + chi * hess[2];
        const Complex gv_x = cx * v1 + chi * kx;
        const Complex gv_y = cy * v1 + chi * ky;
        auto ic = [](Complex z) { return Complex{-z.imag(), z.real()}; };

        cells.push_back({
            // M_eps corrections, rows (x, y, phase)
            chi * cdot(kx, ex), chi * cdot(kx, ey), chi * cdot(ikx, e),
            chi * cdot(ky, ex), chi * cdot(ky, ey), chi * cdot(iky, e),
            chi * cdot(v1, ic(ex)), chi * cdot(v1, ic(ey)), chi * cdot(v1, e),
            // F_eps rows
            chi * (om2 * cdot(ikx, e) + eta * cdot(ikx, psi_loc)) -
                (cdot(ic(gkx_x), ex) + cdot(ic(gkx_y), ey)),
            chi * (om2 * cdot(iky, e) + eta * cdot(iky, psi_loc)) -
                (cdot(ic(gky_x), ex) + cdot(ic(gky_y), ey)),
            chi * (om2 * cdot(v1, e) + eta * cdot(v1, psi_loc)) -
                (cdot(gv_x, ex) + cdot(gv_y, ey)),
        });
    }
    const double a = g.cell_area();
    auto col = [&](int c) {
        return a * pairwise_sum(cells.size(), [&](std::size_t i) { return cells[i][c]; });
    };

    // Diagonal M_0 from the table.
    double m0x = 0.0, m0y = 0.0, m0p = 0.0;
    {
        std::vector<double> bx, by, bp;
        for (int iy = 0; iy < g.n; ++iy) {
            const double y = g.coord(iy);
            if (std::abs(y) > 2.0) continue;
            for (int ix = 0; ix < g.n; ++ix) {
                const double x = g.coord(ix);
                const double r = std::hypot(x, y);
                if (r > 2.0) continue;
                const double chi = cut.chi(r);
                const std::size_t k = g.idx(ix, iy);
                bx.push_back(chi * std::norm(t.dxv1[k]));
                by.push_back(chi * std::norm(t.dyv1[k]));
                bp.push_back(chi * t.mod2[k]);
            }
        }
        m0x = a * pairwise_sum(bx);
        m0y = a * pairwise_sum(by);
        m0p = a * pairwise_sum(bp);
    }

    Eigen::Matrix3d M;
    M << m0x + col(0), col(1), col(2), col(3), m0y + col(4), col(5), col(6), col(7),
        m0p + col(8);
    Eigen::Vector3d F{col(9), col(10), col(11)};
    for (int r = 0; r < 3; ++r) {
        st.f_eps[r] = F(r);
        for (int c = 0; c < 3; ++c) st.m_eps[r][c] = M(r, c);
    }
    const Eigen::JacobiSVD<Eigen::Matrix3d> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    st.cond = svd.singularValues()(0) / svd.singularValues()(2);
    if (st.cond > cond_cap)
        throw NumericalFailure(
            "modulation_rhs: M_eps condition number " + fmt17(st.cond) +
            " exceeds the cap; perturbation too large for modulation theory");
    const Eigen::Vector3d sol = svd.solve(F);
    return {sol(0), sol(1), sol(2)};
}

double linearized_residual(const VortexTable& t, std::span<const Complex> eps) {
    const Grid2D& g = t.grid;
    const int n = g.n;
    const double ih2 = 1.0 / (g.h * g.h);
    std::vector<double> cells;
    cells.reserve(static_cast<std::size_t>(n - 4) * (n - 4));
    for (int iy = 2; iy < n - 2; ++iy) {
        const double y = g.coord(iy);
        for (int ix = 2; ix < n - 2; ++ix) {
            const double x = g.coord(ix);
            const std::size_t k = g.idx(ix, iy);
            auto lap1d = [&](int stride) {
                return (-eps[k - 2 * stride] + 16.0 * eps[k - stride] - 30.0 * eps[k] +
                        16.0 * eps[k + stride] - eps[k + 2 * stride]) *
                       (ih2 / 12.0);
            };
            const Complex lap = lap1d(1) + lap1d(n);
            const Complex res =
                lap + t.one_m2[k] * eps[k] - 2.0 * cdot(t.v1[k], eps[k]) * t.v1[k];
            const double wgt = std::pow(1.0 + x * x + y * y, -3.0);
            cells.push_back(wgt * std::norm(res));
        }
    }
    return std::sqrt(g.cell_area() * pairwise_sum(cells));
}

// ---------------------------------------------------------------------------
// Initial data and the orbital-stability experiment
// ---------------------------------------------------------------------------

std::vector<Complex> make_perturbation(const Grid2D& g, const PerturbationRecipe& r) {
    std::vector<Complex> w(g.size(), Complex{});
    if (r.family == "none") return w;

    struct Blob {
        double cx, cy, width;
        Complex coef;
    };
    std::vector<Blob> blobs;
    std::vector<Blob> rings;  // radial envelopes for the winding family
    int winding = 0;
    if (r.family == "bump") {
        blobs.push_back({r.cx, r.cy, r.width, Complex{r.amplitude, 0.0}});
    } else if (r.family == "random") {
        std::mt19937_64 rng(r.seed);
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        for (int k = 0; k < 3; ++k) {
            const double ang = 2.0 * M_PI * uni(rng);
            const double rad = 5.0 * std::sqrt(uni(rng));
            const double wd = r.width * (0.7 + 0.8 * uni(rng));
            const double ph = 2.0 * M_PI * uni(rng);
            blobs.push_back({rad * std::cos(ang), rad * std::sin(ang), wd,
                             std::polar(r.amplitude / std::sqrt(3.0), ph)});
        }
    } else if (r.family == "broad") {
        // Slowly decaying envelope ~ r^{-1/2} with gentle random log-radial
        // modulation, times an e^{2 i theta} winding: the relative field
        // w conj(V1) then carries a definite angular momentum whose mass is
        // close to log-uniform across annuli, the regime probed by the P_R
        // decay bound.
        std::mt19937_64 rng(r.seed);
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        winding = 2;
        for (int k = 0; k < 3; ++k) {
            rings.push_back({2.0 * M_PI * uni(rng), 0.3 + 0.7 * uni(rng), 0.0,
                             std::polar(0.35 * r.amplitude, 2.0 * M_PI * uni(rng))});
        }
    } else {
        throw std::invalid_argument("make_perturbation: unknown family '" + r.family + "'");
    }

    const double r_on = 0.6 * g.half_width;
    const double r_off = 0.8 * g.half_width;
    for (int iy = 0; iy < g.n; ++iy) {
        const double y = g.coord(iy);
        for (int ix = 0; ix < g.n; ++ix) {
            const double x = g.coord(ix);
            const double rr = std::hypot(x, y);
            Complex v{};
            for (const auto& b : blobs) {
                const double q = ((x - b.cx) * (x - b.cx) + (y - b.cy) * (y - b.cy)) /
                                 (b.width * b.width);
                v += b.coef * std::exp(-q);
            }
            if (winding != 0) {
                // envelope (1 + r^2)^{-1/4} with log-radial cosine modulation
                double mod = 1.0;
                const double srad = std::log1p(rr);
                for (const auto& b : rings)
                    mod += std::abs(b.coef) / r.amplitude * std::cos(b.cy * srad + b.cx);
                v += r.amplitude * mod * std::pow(1.0 + rr * rr, -0.25);
            }
            if (winding != 0 && rr > 1e-12) {
                const Complex phase{x / rr, y / rr};
                Complex wfac = phase;
                for (int m = 1; m < winding; ++m) wfac *= phase;
                v *= wfac;
            }
            const double taper =
                rr <= r_on ? 1.0 : 1.0 - smoothstep5((rr - r_on) / (r_off - r_on));
            w[g.idx(ix, iy)] = taper * v;
        }
    }
    // outermost two layers hard zero
    for (int ring = 0; ring < 2; ++ring) {
        const int a = ring, b = g.n - 1 - ring;
        for (int i = 0; i < g.n; ++i)
            w[g.idx(i, a)] = w[g.idx(i, b)] = w[g.idx(a, i)] = w[g.idx(b, i)] = Complex{};
    }
    return w;
}

namespace {

// d_E(Vref, e^{-i phi} Psi(.+a)) computed from the local representation.
double modulated_distance(const FieldView& f, Vec2 a, double phi) {
    const VortexTable& t = *f.table;
    const Grid2D& g = t.grid;
    const VortexProfile& p = *t.profile;
    const Complex rot = std::polar(1.0, f.phase - phi);
    std::vector<Complex> eps(g.size(), Complex{});
    std::vector<double> etac(g.size(), 0.0);
    for (int iy = 0; iy < g.n; ++iy) {
        const double y = g.coord(iy);
        for (int ix = 0; ix < g.n; ++ix) {
            const double x = g.coord(ix);
            const std::size_t k = g.idx(ix, iy);
            Complex shifted = vortex_value(p, x + a[0], y + a[1]);
            if (f.dev_analytic) {
                shifted += (*f.dev_analytic)(x + a[0], y + a[1]);
            } else {
                if (!f.s.empty()) shifted += bilerp(g, f.s, x + a[0], y + a[1]);
                shifted += bilerp(g, f.w, x + a[0], y + a[1]);
            }
            Complex ref = t.v1[k];
            if (!f.s.empty()) ref += f.s[k];
            eps[k] = rot * shifted - ref;
            etac[k] = -2.0 * cdot(eps[k], ref) - std::norm(eps[k]);
        }
    }
    const double hn = std::sqrt(h_norm_sq(t, eps));
    const double l2 = std::sqrt(
        g.cell_area() *
        pairwise_sum(etac.size(), [&](std::size_t k) { return etac[k] * etac[k]; }));
    return hn + l2;
}

}  // namespace

RunResult orbital_stability_experiment(std::shared_ptr<const DiscreteVortex> bg,
                                       const EvolveConfig& cfg) {
    const Grid2D& g = bg->table->grid;
    RunResult out;

    std::vector<Complex> w = make_perturbation(g, cfg.recipe);
    StepperOptions sopt;
    sopt.dt = cfg.dt;
    sopt.rk4 = cfg.rk4;
    sopt.fp_tol = cfg.fp_tol;
    GpStepper stepper(bg, sopt);
    const double dt = stepper.dt();
    const int nsteps = static_cast<int>(std::ceil(cfg.t_end / dt - 1e-12));
    const int cadence = cfg.snapshot_every > 0
                            ? cfg.snapshot_every
                            : std::max(1, static_cast<int>(std::llround(0.5 / dt)));

    FieldView view{bg->table.get(), bg->s, w, 0.0};
    out.d0 = modulated_distance(view, {0.0, 0.0}, 0.0);
    const bool zero_input = out.d0 == 0.0;
    if (!zero_input) {
        // The recipe amplitude prescribes the initial distance d_E(V1, Psi_0).
        const double scale = cfg.recipe.amplitude / out.d0;
        for (auto& c : w) c *= scale;
        out.d0 = modulated_distance(view, {0.0, 0.0}, 0.0);
    }
    if (!zero_input && out.d0 > cfg.delta_threshold)
        throw std::invalid_argument("orbital_stability_experiment: d_E(V1, Psi_0) = " +
                                    fmt17(out.d0) + " exceeds the smallness threshold");
    out.energy0 = stepper.energy(w);

    ModulationOptions mopts;
    mopts.cond_cap = cfg.cond_cap;
    ModulationState st;
    Vec2 a_ode{0.0, 0.0};
    double phi_ode = 0.0;
    bool have_ode = false;

    auto snapshot = [&](double t) {
        st = modulate(view, st.a, st.phi, mopts);
        st.t = t;
        const Vec3 rate = modulation_rhs(view, st, cfg.cond_cap);
        DiagRow row;
        row.t = t;
        row.energy = stepper.energy(w);
        row.d_e = modulated_distance(view, st.a, st.phi);
        if (row.d_e > cfg.alpha_threshold)
            throw ModulationFailure(
                "orbital_stability_experiment: modulated distance " + fmt17(row.d_e) +
                    " left the modulation neighbourhood at t = " + fmt17(t),
                {row.d_e});
        row.a1 = st.a[0];
        row.a2 = st.a[1];
        row.phi = st.phi;
        row.rate = std::hypot(rate[0], rate[1]) + std::abs(rate[2]);
        row.ratio = zero_input ? 0.0 : row.d_e / out.d0;
        out.rows.push_back(row);
        if (cfg.dual_track && have_ode) {
            const double diff = std::hypot(a_ode[0] - st.a[0], a_ode[1] - st.a[1]) +
                                std::abs(phi_ode - st.phi);
            out.dual_track_max_diff = std::max(out.dual_track_max_diff, diff);
        }
    };

    try {
        snapshot(0.0);
        if (cfg.dual_track) {
            a_ode = st.a;
            phi_ode = st.phi;
            have_ode = true;
        }
        for (int step = 1; step <= nsteps; ++step) {
            Vec3 r1{};
            if (cfg.dual_track) {
                ModulationState ode_st;
                ode_st.a = a_ode;
                ode_st.phi = phi_ode;
                r1 = modulation_rhs(view, ode_st, cfg.cond_cap);
            }
            stepper.step(w);
            if (cfg.dual_track) {
                // Heun update of the parameter ODE across the step.
                ModulationState pred;
                pred.a = {a_ode[0] + dt * r1[0], a_ode[1] + dt * r1[1]};
                pred.phi = phi_ode + dt * r1[2];
                const Vec3 r2 = modulation_rhs(view, pred, cfg.cond_cap);
                a_ode[0] += 0.5 * dt * (r1[0] + r2[0]);
                a_ode[1] += 0.5 * dt * (r1[1] + r2[1]);
                phi_ode += 0.5 * dt * (r1[2] + r2[2]);
            }
            if (step % cadence == 0 || step == nsteps) snapshot(step * dt);
        }
    } catch (const ModulationFailure& mf) {
        out.truncated = true;
        out.truncation_reason = mf.what();
    } catch (const NumericalFailure& nf) {
        out.truncated = true;
        out.truncation_reason = nf.what();
    }

    out.final_w.resize(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) out.final_w[k] = bg->s[k] + w[k];
    for (const auto& row : out.rows) {
        out.max_ratio = std::max(out.max_ratio, row.ratio);
        out.energy_drift = std::max(out.energy_drift, std::abs(row.energy - out.energy0));
        if (!zero_input) out.c_witness = std::max(out.c_witness, row.rate / out.d0);
    }
    // Linear trend of the ratio over the final quartile of the run.
    if (out.rows.size() >= 8) {
        std::vector<double> ts, ys;
        const double t_q = 0.75 * out.rows.back().t;
        for (const auto& row : out.rows)
            if (row.t >= t_q) {
                ts.push_back(row.t);
                ys.push_back(row.ratio);
            }
        if (ts.size() >= 3) out.final_quartile_slope = linear_fit(ts, ys).second;
    }
    return out;
}

}  // namespace glv
