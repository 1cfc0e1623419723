#include "glv/field.hpp"

#include <cmath>

namespace glv {

Complex vortex_value(const VortexProfile& p, double x, double y) {
    const double r = std::hypot(x, y);
    if (r < 1e-300) return {0.0, 0.0};
    const double s = p.eval(r, 0) / r;
    return {s * x, s * y};
}

std::array<Complex, 2> vortex_grad(const VortexProfile& p, double x, double y) {
    const double r = std::hypot(x, y);
    const double a1 = p.slope_at_origin;
    if (r < 1e-9) return {Complex{a1, 0.0}, Complex{0.0, a1}};
    const double rho = p.eval(r, 0);
    const double drho = p.eval(r, 1);
    const Complex u{x / r, y / r};  // e^{i theta}
    // grad V1 = e^{i theta} (rho' x/|x| + i rho x_perp/|x|^2)
    const Complex dx = u * Complex{drho * x / r, -rho * y / (r * r)};
    const Complex dy = u * Complex{drho * y / r, rho * x / (r * r)};
    return {dx, dy};
}

std::array<Complex, 3> vortex_hess(const VortexProfile& p, double x, double y) {
    const double r = std::hypot(x, y);
    const double a1 = p.slope_at_origin;
    // P := (rho' - rho/r)/r^2 and its radial derivative; both stay bounded at
    // the core where rho = A1 (r - r^3/8 + c5 r^5 + ...).
    double P, dP_over_r;
    if (r < 0.05) {
        const double c5 = a1 * (1.0 / 192.0 + a1 * a1 / 24.0);
        P = -a1 / 4.0 + 4.0 * c5 * r * r;
        dP_over_r = 8.0 * c5;
    } else {
        const double rho = p.eval(r, 0);
        const double drho = p.eval(r, 1);
        const double d2rho = p.eval(r, 2);
        P = (drho - rho / r) / (r * r);
        const double dP = (d2rho - drho / r + rho / (r * r)) / (r * r) -
                          2.0 * (drho - rho / r) / (r * r * r);
        dP_over_r = dP / r;
    }
    const Complex u{x, y};  // V1 = rho/r * u, so dx V1 = x P u + rho/r etc.
    const Complex dxx = P * u + x * x * dP_over_r * u + Complex{2.0 * x * P, 0.0};
    const Complex dxy = x * y * dP_over_r * u + Complex{y * P, x * P};
    const Complex dyy = P * u + y * y * dP_over_r * u + Complex{0.0, 2.0 * y * P};
    return {dxx, dxy, dyy};
}

std::shared_ptr<const VortexTable> VortexTable::make(ProfilePtr profile, const Grid2D& g) {
    auto t = std::make_shared<VortexTable>();
    t->grid = g;
    t->profile = std::move(profile);
    const auto& p = *t->profile;
    const std::size_t sz = g.size();
    t->v1.resize(sz);
    t->dxv1.resize(sz);
    t->dyv1.resize(sz);
    t->mod2.resize(sz);
    t->one_m2.resize(sz);
    t->grad_sq.resize(sz);
    t->egl.resize(sz);
    const double a1 = p.slope_at_origin;
    for (int iy = 0; iy < g.n; ++iy) {
        const double y = g.coord(iy);
        for (int ix = 0; ix < g.n; ++ix) {
            const double x = g.coord(ix);
            const std::size_t k = g.idx(ix, iy);
            const double r = std::hypot(x, y);
            t->v1[k] = vortex_value(p, x, y);
            const auto dv = vortex_grad(p, x, y);
            t->dxv1[k] = dv[0];
            t->dyv1[k] = dv[1];
            const double om2 = p.one_minus_rho_sq(r);
            t->one_m2[k] = om2;
            t->mod2[k] = 1.0 - om2;
            double gs;
            if (r < 1e-9) {
                gs = 2.0 * a1 * a1;
            } else {
                const double rho = p.eval(r, 0);
                const double drho = p.eval(r, 1);
                gs = drho * drho + rho * rho / (r * r);
            }
            t->grad_sq[k] = gs;
            t->egl[k] = 0.5 * gs + 0.25 * om2 * om2;
        }
    }
    return t;
}

Field2D Field2D::vacuum(VortexTablePtr table) {
    Field2D f;
    f.vortex = std::move(table);
    f.w.assign(f.grid().size(), Complex{0.0, 0.0});
    return f;
}

Field2D Field2D::from_deviation(VortexTablePtr table,
                                const std::function<Complex(double, double)>& dev,
                                double phase, double taper_on, double taper_off) {
    Field2D f = vacuum(std::move(table));
    f.phase = phase;
    const Grid2D& g = f.grid();
    const double r_on = taper_on * g.half_width;
    const double r_off = std::min(taper_off * g.half_width, g.half_width - 2.5 * g.h);
    f.dev_analytic = [dev, r_on, r_off](double x, double y) -> Complex {
        const double r = std::hypot(x, y);
        if (r >= r_off) return {0.0, 0.0};
        const double taper = (r <= r_on) ? 1.0 : 1.0 - smoothstep5((r - r_on) / (r_off - r_on));
        return taper * dev(x, y);
    };
    for (int iy = 0; iy < g.n; ++iy) {
        const double y = g.coord(iy);
        for (int ix = 0; ix < g.n; ++ix) {
            const double x = g.coord(ix);
            const double r = std::hypot(x, y);
            if (r >= r_off) continue;
            const double taper = (r <= r_on) ? 1.0 : 1.0 - smoothstep5((r - r_on) / (r_off - r_on));
            f.w[g.idx(ix, iy)] = taper * dev(x, y);
        }
    }
    f.zero_boundary_rings();
    return f;
}

Field2D Field2D::orbit(VortexTablePtr table, double ax, double ay, double alpha,
                       const std::function<Complex(double, double)>* extra) {
    const VortexProfile& p = *table->profile;
    auto dev = [&p, ax, ay, extra](double x, double y) {
        Complex v = vortex_value(p, x + ax, y + ay) - vortex_value(p, x, y);
        if (extra) v += (*extra)(x + ax, y + ay);
        return v;
    };
    return from_deviation(std::move(table), dev, alpha);
}

void Field2D::zero_boundary_rings() {
    const Grid2D& g = grid();
    for (int ring = 0; ring < 2; ++ring) {
        const int a = ring, b = g.n - 1 - ring;
        for (int i = 0; i < g.n; ++i) {
            w[g.idx(i, a)] = w[g.idx(i, b)] = Complex{0.0, 0.0};
            w[g.idx(a, i)] = w[g.idx(b, i)] = Complex{0.0, 0.0};
        }
    }
}

bool Field2D::boundary_rings_zero() const {
    const Grid2D& g = grid();
    for (int ring = 0; ring < 2; ++ring) {
        const int a = ring, b = g.n - 1 - ring;
        for (int i = 0; i < g.n; ++i) {
            if (w[g.idx(i, a)] != Complex{} || w[g.idx(i, b)] != Complex{} ||
                w[g.idx(a, i)] != Complex{} || w[g.idx(b, i)] != Complex{})
                return false;
        }
    }
    return true;
}

bool Field2D::finite() const {
    for (const Complex& c : w)
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return false;
    return true;
}

Complex bilerp(const Grid2D& g, std::span<const Complex> v, double x, double y) {
    const double fx = (x + g.half_width) / g.h;
    const double fy = (y + g.half_width) / g.h;
    const int ix = static_cast<int>(std::floor(fx));
    const int iy = static_cast<int>(std::floor(fy));
    auto at = [&](int i, int j) -> Complex {
        if (i < 0 || j < 0 || i >= g.n || j >= g.n) return {0.0, 0.0};
        return v[g.idx(i, j)];
    };
    const double tx = fx - ix, ty = fy - iy;
    return (1 - tx) * (1 - ty) * at(ix, iy) + tx * (1 - ty) * at(ix + 1, iy) +
           (1 - tx) * ty * at(ix, iy + 1) + tx * ty * at(ix + 1, iy + 1);
}

}  // namespace glv
