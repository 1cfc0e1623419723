#include "glv/sector.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace glv {

namespace {

double dot_w(std::span<const double> a, std::span<const double> b) {
    return pairwise_sum(a.size(), [&](std::size_t i) { return a[i] * b[i]; });
}

}  // namespace

double SectorOperatorBundle::q_value(std::span<const double> e) const {
    const double grad = radial_grad_sq(*grid, e, j != -1);
    const double pot = pairwise_sum(e.size(), [&](std::size_t i) { return q_pot[i] * e[i] * e[i]; });
    return grad + pot;
}

double SectorOperatorBundle::gram_value(std::span<const double> e) const {
    const double grad = radial_grad_sq(*grid, e, j != -1);
    const double pot =
        pairwise_sum(e.size(), [&](std::size_t i) { return gram_pot[i] * e[i] * e[i]; });
    return grad + pot;
}

double SectorOperatorBundle::ir_value(std::span<const double> e) const {
    return pairwise_sum(e.size(), [&](std::size_t i) { return ir_diag[i] * e[i] * e[i]; });
}

SectorOperatorBundle assemble_sector(int j, double R, RadialGridPtr grid, ProfilePtr profile) {
    SectorOperatorBundle b;
    b.j = j;
    b.R = R;
    b.grid = std::move(grid);
    b.profile = std::move(profile);
    const RadialGrid& g = *b.grid;
    const VortexProfile& p = *b.profile;
    const std::size_t m = g.size();

    double core_step = 0.0;
    for (std::size_t i = 0; i + 1 < m && g.r[i] < 1.0; ++i) core_step = std::max(core_step, g.dr[i]);
    if (core_step > 0.011)
        b.warnings.push_back("radial grid coarse near the core (step " + fmt17(core_step) + ")");
    if (g.r.back() < 59.9)
        b.warnings.push_back("radial grid short (r_max " + fmt17(g.r.back()) + " < 60)");

    b.stiff_off.resize(m - 1);
    b.stiff_diag.assign(m, 0.0);
    for (std::size_t i = 0; i + 1 < m; ++i) {
        const double k = g.mid[i] / g.dr[i];
        b.stiff_off[i] = -k;
        b.stiff_diag[i] += k;
        b.stiff_diag[i + 1] += k;
    }
    if (j != -1) b.stiff_diag[0] += 0.5;  // [0, r_0] segment with e(0) = 0

    const Cutoff cut{R};
    b.q_pot.resize(m);
    b.gram_pot.resize(m);
    b.ir_diag.resize(m);
    const double jp1 = (j + 1.0) * (j + 1.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double r = g.r[i];
        const double r2 = r * r;
        const double om2 = p.one_minus_rho_sq(r);
        const double rho2 = 1.0 - om2;
        const double omc = 1.0 - cut.chi(r);
        const double qp = jp1 / r2 - 2.0 * j * omc * omc * rho2 / r2 - om2;
        b.q_pot[i] = qp * g.w[i];
        b.gram_pot[i] = (j * j / (1.0 + r2) + jp1 / (r2 * (1.0 + r2))) * g.w[i];
        const double chi = cut.chi(r);
        b.ir_diag[i] = rho2 * chi * chi * g.w[i];
    }
    return b;
}

std::vector<double> constraint_chi_rho(const RadialGrid& g, const VortexProfile& p) {
    const Cutoff cut{1.0};
    std::vector<double> c(g.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        c[i] = cut.chi(g.r[i]) * p.eval(g.r[i], 0) * g.w[i];
    return c;
}

std::vector<double> constraint_trans_minus(const RadialGrid& g, const VortexProfile& p) {
    const Cutoff cut{1.0};
    std::vector<double> c(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double r = g.r[i];
        c[i] = cut.chi(r) * (p.eval(r, 1) - p.eval(r, 0) / r) * g.w[i];
    }
    return c;
}

std::vector<double> constraint_trans_plus(const RadialGrid& g, const VortexProfile& p) {
    const Cutoff cut{1.0};
    std::vector<double> c(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double r = g.r[i];
        c[i] = cut.chi(r) * (p.eval(r, 1) + p.eval(r, 0) / r) * g.w[i];
    }
    return c;
}

Q0Identity q0_identity_check(std::span<const double> e, const SectorOperatorBundle& b) {
    if (b.j != 0) throw std::invalid_argument("q0_identity_check: bundle must have j = 0");
    const RadialGrid& g = *b.grid;
    const VortexProfile& p = *b.profile;
    const std::size_t m = g.size();

    Q0Identity out;
    double emax = 0.0, tail = 0.0;
    const double edge = 0.9 * g.r.back();
    for (std::size_t i = 0; i < m; ++i) {
        emax = std::max(emax, std::abs(e[i]));
        if (g.r[i] >= edge) tail = std::max(tail, std::abs(e[i]));
    }
    out.boundary_tail = emax > 0.0 ? tail / emax : 0.0;
    out.boundary_ok = out.boundary_tail <= 1e-8;

    out.form_value = b.q_value(e);

    std::vector<double> quot(m);
    for (std::size_t i = 0; i < m; ++i) quot[i] = e[i] / p.eval(g.r[i], 0);
    std::vector<double> cells;
    cells.reserve(m);
    {   // [0, r_0] segment with g(0) linearly extrapolated
        const double g0 = quot[0] - g.r[0] * (quot[1] - quot[0]) / (g.dr[0]);
        const double rho_mid = p.eval(0.5 * g.r[0], 0);
        const double d = (quot[0] - g0) / g.r[0];
        cells.push_back(rho_mid * rho_mid * d * d * 0.5 * g.r[0] * g.r[0]);
    }
    for (std::size_t i = 0; i + 1 < m; ++i) {
        const double rho_mid = p.eval(g.mid[i], 0);
        const double d = (quot[i + 1] - quot[i]) / g.dr[i];
        cells.push_back(rho_mid * rho_mid * d * d * g.mid[i] * g.dr[i]);
    }
    out.factorized = pairwise_sum(cells);
    return out;
}

BandedPencil single_pencil(const SectorOperatorBundle& bundle, bool q_plus_2ir,
                           bool gram_plus_ir, std::vector<std::vector<double>> constraints) {
    const std::size_t m = bundle.size();
    BandedPencil p;
    p.n = static_cast<int>(m);
    p.bw = 1;
    p.a.assign(2, {});
    p.b.assign(2, {});
    p.a[0].resize(m);
    p.b[0].resize(m);
    p.a[1].assign(m - 1, 0.0);
    p.b[1].assign(m - 1, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        p.a[0][i] = bundle.stiff_diag[i] + bundle.q_pot[i] +
                    (q_plus_2ir ? 2.0 * bundle.ir_diag[i] : 0.0);
        p.b[0][i] = bundle.stiff_diag[i] + bundle.gram_pot[i] +
                    (gram_plus_ir ? bundle.ir_diag[i] : 0.0);
    }
    for (std::size_t i = 0; i + 1 < m; ++i) p.a[1][i] = p.b[1][i] = bundle.stiff_off[i];
    p.constraints = std::move(constraints);
    return p;
}

BandedPencil pair_pencil(const SectorOperatorBundle& bj, const SectorOperatorBundle& bmj,
                         int sign, std::vector<std::vector<double>> constraints) {
    if (bj.grid != bmj.grid || bj.R != bmj.R)
        throw std::invalid_argument("pair_pencil: bundles must share grid and R");
    const std::size_t m = bj.size();
    BandedPencil p;
    p.n = static_cast<int>(2 * m);
    p.bw = 2;
    p.a.assign(3, {});
    p.b.assign(3, {});
    for (int d = 0; d <= 2; ++d) {
        p.a[d].assign(p.n - d, 0.0);
        p.b[d].assign(p.n - d, 0.0);
    }
    for (std::size_t i = 0; i < m; ++i) {
        const double ir = bj.ir_diag[i];
        p.a[0][2 * i] = bj.stiff_diag[i] + bj.q_pot[i] + ir;
        p.a[0][2 * i + 1] = bmj.stiff_diag[i] + bmj.q_pot[i] + ir;
        p.b[0][2 * i] = bj.stiff_diag[i] + bj.gram_pot[i] + ir;
        p.b[0][2 * i + 1] = bmj.stiff_diag[i] + bmj.gram_pot[i] + ir;
        p.a[1][2 * i] = p.b[1][2 * i] = sign * ir;
        if (i + 1 < m) {
            p.a[2][2 * i] = p.b[2][2 * i] = bj.stiff_off[i];
            p.a[2][2 * i + 1] = p.b[2][2 * i + 1] = bmj.stiff_off[i];
        }
    }
    p.constraints = std::move(constraints);
    return p;
}

std::vector<double> pair_constraint(std::span<const double> ce, std::span<const double> cf,
                                    int sign) {
    std::vector<double> c(2 * ce.size());
    for (std::size_t i = 0; i < ce.size(); ++i) {
        c[2 * i] = ce[i];
        c[2 * i + 1] = sign * cf[i];
    }
    return c;
}

namespace {

// Banded symmetric matrix-vector product.
void band_mv(const std::vector<std::vector<double>>& band, int n, int bw,
             std::span<const double> x, std::vector<double>& y) {
    y.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double s = band[0][i] * x[i];
        for (int d = 1; d <= bw; ++d) {
            if (i + d < n) s += band[d][i] * x[i + d];
            if (i - d >= 0) s += band[d][i - d] * x[i - d];
        }
        y[i] += s;
    }
}

double band_quad(const std::vector<std::vector<double>>& band, int n, int bw,
                 std::span<const double> x) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        s += band[0][i] * x[i] * x[i];
        for (int d = 1; d <= bw; ++d)
            if (i + d < n) s += 2.0 * band[d][i] * x[i] * x[i + d];
    }
    return s;
}

// In-place banded Cholesky K = L L^T; returns false on a nonpositive pivot.
bool band_cholesky(std::vector<std::vector<double>>& k, int n, int bw) {
    for (int i = 0; i < n; ++i) {
        double d = k[0][i];
        for (int p = 1; p <= bw && i - p >= 0; ++p) {
            const double l = k[p][i - p];
            d -= l * l;
        }
        if (d <= 0.0) return false;
        const double li = std::sqrt(d);
        k[0][i] = li;
        for (int d2 = 1; d2 <= bw && i + d2 < n; ++d2) {
            double v = k[d2][i];
            for (int p = 1; p <= bw; ++p) {
                const int row = i - p;
                const int other = d2 + p;
                if (row >= 0 && other <= bw) v -= k[p][row] * k[other][row];
            }
            k[d2][i] = v / li;
        }
    }
    return true;
}

void band_chol_solve(const std::vector<std::vector<double>>& l, int n, int bw,
                     std::vector<double>& x) {
    for (int i = 0; i < n; ++i) {
        double s = x[i];
        for (int p = 1; p <= bw && i - p >= 0; ++p) s -= l[p][i - p] * x[i - p];
        x[i] = s / l[0][i];
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = x[i];
        for (int p = 1; p <= bw && i + p < n; ++p) s -= l[p][i] * x[i + p];
        x[i] = s / l[0][i];
    }
}

MinEigResult min_eig_dense(const BandedPencil& p) {
    const int n = p.n;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n), B = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        A(i, i) = p.a[0][i];
        B(i, i) = p.b[0][i];
        for (int d = 1; d <= p.bw; ++d)
            if (i + d < n) {
                A(i, i + d) = A(i + d, i) = p.a[d][i];
                B(i, i + d) = B(i + d, i) = p.b[d][i];
            }
    }
    Eigen::MatrixXd Z;
    if (p.constraints.empty()) {
        Z = Eigen::MatrixXd::Identity(n, n);
    } else {
        const int k = static_cast<int>(p.constraints.size());
        Eigen::MatrixXd C(n, k);
        for (int c = 0; c < k; ++c)
            for (int i = 0; i < n; ++i) C(i, c) = p.constraints[c][i];
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(C);
        Eigen::MatrixXd Q = qr.householderQ();
        Z = Q.rightCols(n - k);
    }
    Eigen::MatrixXd Az = Z.transpose() * A * Z;
    Eigen::MatrixXd Bz = Z.transpose() * B * Z;
    Eigen::LLT<Eigen::MatrixXd> llt(Bz);
    if (llt.info() != Eigen::Success)
        throw NumericalFailure("min_eig: Gram matrix is not positive definite");
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Az, Bz);
    if (es.info() != Eigen::Success)
        throw NumericalFailure("min_eig: dense generalized eigensolver failed");
    MinEigResult res;
    res.lambda = es.eigenvalues()(0);
    Eigen::VectorXd v = Z * es.eigenvectors().col(0);
    res.witness.assign(v.data(), v.data() + n);
    res.method = "dense";
    return res;
}

MinEigResult min_eig_ii(const BandedPencil& p) {
    const int n = p.n;
    const int bw = p.bw;
    const int nc = static_cast<int>(p.constraints.size());

    // Gram must be positive definite for the pencil to make sense.
    {
        auto btest = p.b;
        if (!band_cholesky(btest, n, bw))
            throw NumericalFailure("min_eig: Gram matrix is not positive definite");
    }

    double mu = 0.0;
    for (int i = 0; i < n; ++i) mu = std::max(mu, std::abs(p.a[0][i]));
    mu = 1e10 * (1.0 + mu);

    std::vector<std::vector<double>> l;           // Cholesky factor of A - sigma B
    std::vector<std::vector<double>> kinvc;        // K^{-1} c_k
    Eigen::MatrixXd cap;                           // capacitance matrix
    Eigen::PartialPivLU<Eigen::MatrixXd> cap_lu;

    auto factorize = [&](double sigma) -> bool {
        l = p.a;
        for (int d = 0; d <= bw; ++d)
            for (std::size_t i = 0; i < l[d].size(); ++i) l[d][i] -= sigma * p.b[d][i];
        if (!band_cholesky(l, n, bw)) return false;
        kinvc.assign(nc, {});
        cap.resize(nc, nc);
        for (int c = 0; c < nc; ++c) {
            kinvc[c] = p.constraints[c];
            band_chol_solve(l, n, bw, kinvc[c]);
        }
        for (int c = 0; c < nc; ++c)
            for (int c2 = 0; c2 < nc; ++c2) {
                double s = (c == c2) ? 1.0 / mu : 0.0;
                for (int i = 0; i < n; ++i) s += p.constraints[c][i] * kinvc[c2][i];
                cap(c, c2) = s;
            }
        if (nc > 0) cap_lu.compute(cap);
        return true;
    };

    auto solve = [&](std::vector<double>& x) {
        band_chol_solve(l, n, bw, x);
        if (nc == 0) return;
        Eigen::VectorXd ctx(nc);
        for (int c = 0; c < nc; ++c) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += p.constraints[c][i] * x[i];
            ctx(c) = s;
        }
        const Eigen::VectorXd y = cap_lu.solve(ctx);
        for (int c = 0; c < nc; ++c)
            for (int i = 0; i < n; ++i) x[i] -= kinvc[c][i] * y(c);
    };

    double sigma = -2.0;
    for (int attempt = 0; attempt < 6 && !factorize(sigma); ++attempt) sigma = 2.0 * sigma - 1.0;

    std::vector<double> x(n, 1.0), bx;
    MinEigResult res;
    res.method = "inverse-iteration";
    double lambda = 0.0, lambda_prev = 1e300;
    int stall = 0;
    bool reshifted = false;
    for (int it = 0; it < 20000; ++it) {
        band_mv(p.b, n, bw, x, bx);
        solve(bx);
        x.swap(bx);
        const double bnorm = std::sqrt(band_quad(p.b, n, bw, x));
        for (auto& v : x) v /= bnorm;
        double pen = 0.0;
        for (int c = 0; c < nc; ++c) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += p.constraints[c][i] * x[i];
            pen += mu * s * s;
        }
        lambda = band_quad(p.a, n, bw, x) + pen;  // x is B-normalized
        res.iterations = it + 1;
        if (std::abs(lambda - lambda_prev) < 1e-12 * (1.0 + std::abs(lambda))) {
            if (++stall >= 3) {
                if (!reshifted) {
                    // Refine with a close shift for a sharp eigenvalue.
                    reshifted = true;
                    stall = 0;
                    const double close = lambda - 0.02 * (1.0 + std::abs(lambda));
                    if (factorize(close)) sigma = close;
                    else factorize(sigma);
                } else {
                    break;
                }
            }
        } else {
            stall = 0;
        }
        lambda_prev = lambda;
        if (it == 60 && !reshifted) {
            reshifted = true;
            const double close = lambda - 0.02 * (1.0 + std::abs(lambda));
            if (factorize(close)) sigma = close;
            else factorize(sigma);
        }
    }
    res.lambda = lambda;
    res.witness = std::move(x);
    return res;
}

}  // namespace

MinEigResult min_eig_constrained(const BandedPencil& p, EigMethod method) {
    if (method == EigMethod::Auto)
        method = (p.n <= 2600) ? EigMethod::Dense : EigMethod::InverseIteration;
    MinEigResult res =
        (method == EigMethod::Dense) ? min_eig_dense(p) : min_eig_ii(p);
    // Deterministic sign: largest-magnitude component positive.
    double best = 0.0;
    for (double v : res.witness)
        if (std::abs(v) > std::abs(best)) best = v;
    if (best < 0.0)
        for (auto& v : res.witness) v = -v;
    return res;
}

double qloc_pm(const RadialGrid& g, const VortexProfile& p, std::span<const double> u,
               std::span<const double> v, int sign) {
    if (sign != 1 && sign != -1) throw std::invalid_argument("qloc_pm: sign must be +1 or -1");
    const std::size_t m = g.size();
    if (u.size() != m || v.size() != m) throw std::invalid_argument("qloc_pm: size mismatch");
    double umax = 0.0, tail = 0.0;
    const double edge = 0.8 * g.r.back();
    for (std::size_t i = 0; i < m; ++i) {
        umax = std::max({umax, std::abs(u[i]), std::abs(v[i])});
        if (g.r[i] >= edge) tail = std::max({tail, std::abs(u[i]), std::abs(v[i])});
    }
    if (tail > 1e-12 * std::max(umax, 1e-300))
        throw std::invalid_argument("qloc_pm: inputs must be compactly supported below 0.8 r_max");

    const double grad = radial_grad_sq(g, u, true) + radial_grad_sq(g, v, false);
    const double pot = pairwise_sum(m, [&](std::size_t i) {
        const double r = g.r[i];
        const double om2 = p.one_minus_rho_sq(r);
        const double rho2 = 1.0 - om2;
        const double mix = u[i] + sign * v[i];
        return (4.0 / (r * r) * u[i] * u[i] - om2 * (u[i] * u[i] + v[i] * v[i]) +
                rho2 * mix * mix) *
               g.w[i];
    });
    return grad + pot;
}

void impose_orthogonality(SectorModes& m, const VortexProfile& p) {
    const RadialGrid& g = *m.grid;
    const auto c_rho = constraint_chi_rho(g, p);
    const auto c_minus = constraint_trans_minus(g, p);
    const auto c_plus = constraint_trans_plus(g, p);
    const Cutoff cut{1.0};
    std::vector<double> g_rho(g.size()), g_minus(g.size()), g_plus(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double r = g.r[i];
        g_rho[i] = cut.chi(r) * p.eval(r, 0);
        g_minus[i] = cut.chi(r) * (p.eval(r, 1) - p.eval(r, 0) / r);
        g_plus[i] = cut.chi(r) * (p.eval(r, 1) + p.eval(r, 0) / r);
    }

    auto get = [&](int j) -> std::pair<std::vector<double>, std::vector<double>>& {
        auto it = m.modes.find(j);
        if (it == m.modes.end()) {
            auto [jt, _] = m.modes.insert(
                {j, {std::vector<double>(g.size(), 0.0), std::vector<double>(g.size(), 0.0)}});
            it = jt;
        }
        return it->second;
    };

    // Phase condition on Im eps_0.
    {
        auto& [a0, b0] = get(0);
        (void)a0;
        const double val = dot_w(c_rho, b0) / dot_w(c_rho, std::span<const double>(g_rho));
        for (std::size_t i = 0; i < g.size(); ++i) b0[i] -= val * g_rho[i];
    }
    // x-translation condition on (a_1, a_-1), + coupling.
    {
        auto& [a1, b1] = get(1);
        auto& [am1, bm1] = get(-1);
        (void)b1;
        (void)bm1;
        const double val = dot_w(c_minus, a1) + dot_w(c_plus, am1);
        const double den = dot_w(c_minus, std::span<const double>(g_minus)) +
                           dot_w(c_plus, std::span<const double>(g_plus));
        for (std::size_t i = 0; i < g.size(); ++i) {
            a1[i] -= val / den * g_minus[i];
            am1[i] -= val / den * g_plus[i];
        }
    }
    // y-translation condition on (b_1, b_-1), - coupling.
    {
        auto& [a1, b1] = get(1);
        auto& [am1, bm1] = get(-1);
        (void)a1;
        (void)am1;
        const double val = dot_w(c_minus, b1) - dot_w(c_plus, bm1);
        const double den = dot_w(c_minus, std::span<const double>(g_minus)) +
                           dot_w(c_plus, std::span<const double>(g_plus));
        for (std::size_t i = 0; i < g.size(); ++i) {
            b1[i] -= val / den * g_minus[i];
            bm1[i] -= val / den * (-g_plus[i]);
        }
    }
}

std::pair<double, double> sector_q_and_denominator(double R, const SectorModes& m,
                                                   const VortexProfile& p) {
    const RadialGrid& g = *m.grid;
    auto pp = std::make_shared<VortexProfile>(p);
    double script_q = 0.0, gram = 0.0;
    for (const auto& [j, ab] : m.modes) {
        const auto bundle = assemble_sector(j, R, m.grid, pp);
        script_q += bundle.q_value(ab.first) + bundle.q_value(ab.second);
        gram += bundle.gram_value(ab.first) + bundle.gram_value(ab.second);
    }
    // I_R across paired sectors.
    const Cutoff cut{R};
    std::vector<double> ir_w(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double chi = cut.chi(g.r[i]);
        ir_w[i] = (1.0 - p.one_minus_rho_sq(g.r[i])) * chi * chi * g.w[i];
    }
    auto ir_of = [&](std::span<const double> e) {
        return pairwise_sum(e.size(), [&](std::size_t i) { return ir_w[i] * e[i] * e[i]; });
    };
    auto mode = [&](int j) -> const std::pair<std::vector<double>, std::vector<double>>* {
        auto it = m.modes.find(j);
        return it == m.modes.end() ? nullptr : &it->second;
    };
    double ir = 0.0;
    int jmax = 0;
    for (const auto& [j, ab] : m.modes) jmax = std::max(jmax, std::abs(j));
    if (const auto* m0 = mode(0)) ir += ir_of(m0->first);
    std::vector<double> tmp(g.size());
    for (int j = 1; j <= jmax; ++j) {
        const auto* mj = mode(j);
        const auto* mmj = mode(-j);
        if (!mj && !mmj) continue;
        for (std::size_t i = 0; i < g.size(); ++i)
            tmp[i] = (mj ? mj->first[i] : 0.0) + (mmj ? mmj->first[i] : 0.0);
        ir += 0.5 * ir_of(tmp);
        for (std::size_t i = 0; i < g.size(); ++i)
            tmp[i] = (mj ? mj->second[i] : 0.0) - (mmj ? mmj->second[i] : 0.0);
        ir += 0.5 * ir_of(tmp);
    }
    return {script_q + 2.0 * ir, gram + ir};
}

CoercivityScanResult coercivity_scan(double r0, int n0, const SectorModes& m,
                                     const VortexProfile& p) {
    if (r0 < 1.0 || n0 < 1) throw std::invalid_argument("coercivity_scan: need R0 >= 1, N0 >= 1");
    CoercivityScanResult out;
    const RadialGrid& g = *m.grid;

    double total = 0.0;
    for (const auto& [j, ab] : m.modes)
        for (std::size_t i = 0; i < g.size(); ++i)
            total += std::abs(ab.first[i]) + std::abs(ab.second[i]);
    if (total == 0.0) {
        out.zero_input = true;
        return out;
    }

    auto mode = [&](int j) -> const std::pair<std::vector<double>, std::vector<double>>* {
        auto it = m.modes.find(j);
        return it == m.modes.end() ? nullptr : &it->second;
    };
    std::vector<double> m1sq(g.size(), 0.0);
    for (int j : {1, -1})
        if (const auto* mj = mode(j))
            for (std::size_t i = 0; i < g.size(); ++i)
                m1sq[i] += mj->first[i] * mj->first[i] + mj->second[i] * mj->second[i];

    double best_mass = 0.0;
    for (int k = 0; k <= n0; ++k) {
        const double R = r0 * std::pow(2.0, k);
        const double mass = pairwise_sum(g.size(), [&](std::size_t i) {
            const double r = g.r[i];
            if (r < R || r > 2.0 * R) return 0.0;
            return m1sq[i] / (r * r) * g.w[i];
        });
        out.window_masses.push_back({R, mass});
        if (k == 0 || mass < best_mass) {
            best_mass = mass;
            out.r_selected = R;
        }
    }
    out.window_mass = best_mass;

    double h1 = 0.0;
    auto pp = std::make_shared<VortexProfile>(p);
    for (int j : {1, -1})
        if (const auto* mj = mode(j)) {
            const auto bundle = assemble_sector(j, 2.0, m.grid, pp);
            h1 += bundle.gram_value(mj->first) + bundle.gram_value(mj->second);
        }
    out.pigeonhole_bound = 2.0 / n0 * h1;

    const auto [q, den] = sector_q_and_denominator(out.r_selected, m, p);
    out.q_r = q;
    out.denominator = den;
    out.kappa = q / den;
    return out;
}

}  // namespace glv
