#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "glv/dynamics.hpp"
#include "glv/energy.hpp"
#include "support/testutil.hpp"

using namespace glv;

namespace {

// Shared small-grid background to keep the suite snappy.
std::shared_ptr<const DiscreteVortex> bg192() {
    static auto bg = [] {
        auto t = VortexTable::make(test::cached_profile(), Grid2D(24.0, 192));
        return make_discrete_vortex(t);
    }();
    return bg;
}

}  // namespace

TEST_CASE("discrete vortex background") {
    auto bg = bg192();
    CHECK(bg->residual <= 1e-12);
    double smax = 0.0;
    for (const auto& c : bg->s) smax = std::max(smax, std::abs(c));
    CHECK(smax <= 5e-3);  // O(h^2) deviation from the sampled profile
    CHECK(smax > 0.0);
}

TEST_CASE("stepper fundamentals") {
    auto bg = bg192();
    const Grid2D& g = bg->table->grid;

    SUBCASE("the vortex is a machine-exact stationary state") {
        std::vector<Complex> w(g.size(), Complex{});
        GpStepper st(bg);
        for (int i = 0; i < 40; ++i) st.step(w);
        double wm = 0.0;
        for (const auto& c : w) wm = std::max(wm, std::abs(c));
        CHECK(wm <= 1e-8 * 40.0 * st.dt());
    }

    SUBCASE("gauge covariance is exact by representation") {
        PerturbationRecipe rec;
        rec.amplitude = 0.01;
        Field2D f = Field2D::vacuum(bg->table);
        f.w = make_perturbation(g, rec);
        Field2D frot = f;
        frot.phase = 1.3;
        GpStepper s1(bg), s2(bg);
        for (int i = 0; i < 10; ++i) {
            s1.step(f.w);
            s2.step(frot.w);
        }
        double diff = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k)
            diff = std::max(diff, std::abs(f.w[k] - frot.w[k]));
        CHECK(diff == 0.0);
        CHECK(frot.phase == 1.3);
    }

    SUBCASE("energy is conserved to the inner tolerance") {
        PerturbationRecipe rec;
        rec.amplitude = 0.015;
        auto w = make_perturbation(g, rec);
        GpStepper st(bg);
        const double e0 = st.energy(w);
        CHECK(e0 > 0.0);
        const int nsteps = static_cast<int>(5.0 / st.dt());
        for (int i = 0; i < nsteps; ++i) st.step(w);
        CHECK(std::abs(st.energy(w) - e0) <= 1e-6 * std::abs(e0) + 1e-12);
    }

    SUBCASE("explicit RK4 fallback cross-validates the implicit scheme") {
        PerturbationRecipe rec;
        rec.amplitude = 0.01;
        auto w1 = make_perturbation(g, rec);
        auto w2 = w1;
        StepperOptions cn, rk;
        cn.dt = 0.25 * g.h * g.h;
        rk.dt = cn.dt;
        rk.rk4 = true;
        GpStepper scn(bg, cn), srk(bg, rk);
        const int nsteps = static_cast<int>(std::llround(1.0 / cn.dt));
        for (int i = 0; i < nsteps; ++i) {
            scn.step(w1);
            srk.step(w2);
        }
        double diff = 0.0, scale = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k) {
            diff = std::max(diff, std::abs(w1[k] - w2[k]));
            scale = std::max(scale, std::abs(w1[k]));
        }
        CHECK(diff <= 5e-4 * scale);  // both second order in dt
        CHECK_THROWS_AS(GpStepper(bg, [] {
                            StepperOptions o;
                            o.rk4 = true;
                            o.dt = 1.0;
                            return o;
                        }()),
                        std::invalid_argument);
    }

    SUBCASE("translation covariance through the modulation frame") {
        // Shifting the perturbed vortex moves the recovered translation
        // parameter by exactly the shift, up to interpolation error.
        const double d = 2.0 * bg->table->grid.h;
        const VortexProfile& prof = *bg->table->profile;
        PerturbationRecipe rec;
        rec.amplitude = 0.02;
        Field2D f0 = Field2D::vacuum(bg->table);
        f0.w = make_perturbation(bg->table->grid, rec);
        const auto st0 = modulate(view_of(f0), {0.0, 0.0}, 0.0);
        auto shifted_dev = [&prof, &f0, d](double x, double y) {
            const Grid2D& gg = f0.grid();
            return vortex_value(prof, x + d, y) - vortex_value(prof, x, y) +
                   bilerp(gg, f0.w, x + d, y);
        };
        Field2D fs = Field2D::from_deviation(bg->table, shifted_dev);
        const auto st = modulate(view_of(fs), {0.0, 0.0}, 0.0);
        // Psi_s = Psi(. + d): the recovered translation shifts by -d.
        CHECK(std::abs(st.a[0] - (st0.a[0] - d)) <= 1e-3);
        CHECK(std::abs(st.a[1] - st0.a[1]) <= 1e-3);
        CHECK(std::abs(st.phi - st0.phi) <= 1e-3);
    }
}

TEST_CASE("xi and its Jacobian at the vortex") {
    auto bg = bg192();
    Field2D vac = Field2D::vacuum(bg->table);
    const auto v = view_of(vac);

    SUBCASE("zeros on orbit elements") {
        const Vec3 x0 = xi(v, {0.0, 0.0}, 0.0);
        CHECK(std::abs(x0[0]) <= 1e-14);
        CHECK(std::abs(x0[1]) <= 1e-14);
        CHECK(std::abs(x0[2]) <= 1e-14);
        // Psi = e^{0.9 i} V1(. - (0.4, -0.25)), so xi vanishes at b = (0.4, -0.25).
        Field2D rot = Field2D::orbit(bg->table, -0.4, 0.25, 0.9);
        const Vec3 xr = xi(view_of(rot), {0.4, -0.25}, 0.9);
        CHECK(std::abs(xr[0]) <= 1e-10);
        CHECK(std::abs(xr[1]) <= 1e-10);
        CHECK(std::abs(xr[2]) <= 1e-10);
    }

    SUBCASE("finite-difference Jacobian matches the diagonal M0") {
        ModulationState st;
        modulation_rhs(v, st);
        const double d = 1e-5;
        const double jxx = (xi(v, {d, 0}, 0)[0] - xi(v, {-d, 0}, 0)[0]) / (2 * d);
        const double jyy = (xi(v, {0, d}, 0)[1] - xi(v, {0, -d}, 0)[1]) / (2 * d);
        const double jpp = -(xi(v, {0, 0}, d)[2] - xi(v, {0, 0}, -d)[2]) / (2 * d);
        CHECK(jxx == doctest::Approx(st.m_eps[0][0]).epsilon(1e-4));
        CHECK(jyy == doctest::Approx(st.m_eps[1][1]).epsilon(1e-4));
        CHECK(jpp == doctest::Approx(st.m_eps[2][2]).epsilon(1e-4));
        // M0 is diagonal: the cross integrals vanish by parity.
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                if (r != c) CHECK(std::abs(st.m_eps[r][c]) <= 1e-10);
    }

    SUBCASE("out-of-grid translation is a usage error") {
        CHECK_THROWS_AS((void)xi(v, {30.0, 0.0}, 0.0), std::invalid_argument);
    }
}

TEST_CASE("modulation") {
    auto bg = bg192();
    auto t = bg->table;

    SUBCASE("recovers exact orbit elements") {
        Field2D f = Field2D::orbit(t, -0.3, 0.2, 0.0);  // V1(. - (0.3, -0.2))
        const auto st = modulate(view_of(f), {0.0, 0.0}, 0.0);
        CHECK(std::abs(st.a[0] - 0.3) <= 1e-6);
        CHECK(std::abs(st.a[1] + 0.2) <= 1e-6);
        CHECK(std::abs(st.phi) <= 1e-6);

        Field2D fp = Field2D::vacuum(t);
        fp.phase = 0.4;
        const auto st2 = modulate(view_of(fp), {0.0, 0.0}, 0.0);
        CHECK(std::abs(st2.phi - 0.4) <= 1e-6);
        CHECK(std::hypot(st2.a[0], st2.a[1]) <= 1e-6);
    }

    SUBCASE("mixed orbit element with a bump satisfies the stability estimate") {
        auto bump = test::random_bumps(3, 0.01, 3.0);
        Field2D f = Field2D::orbit(t, -0.2, 0.0, 0.1, &bump);
        const auto st = modulate(view_of(f), {0.0, 0.0}, 0.0);
        CHECK(st.xi_residual <= 1e-10);

        // est-modul: ||eps||_H + |a - b| + |e^{i phi} - e^{i theta}| <= A * rhs
        // with (b, theta) a nearby guess.
        const Vec2 bguess{0.18, 0.01};
        const double theta = 0.12;
        // eps for the converged parameters.
        const VortexProfile& prof = *t->profile;
        auto dev = f.dev_analytic;
        auto eps_field = [&](Vec2 a, double phi) {
            auto mod_dev = [&prof, dev, phi, a](double x, double y) {
                const Complex rot = std::polar(1.0, 0.1 - phi);
                return rot * (vortex_value(prof, x + a[0], y + a[1]) +
                              dev(x + a[0], y + a[1])) -
                       vortex_value(prof, x, y);
            };
            Field2D fm = Field2D::from_deviation(t, mod_dev);
            return std::sqrt(h_norm_sq(*t, fm.w));
        };
        const double lhs = eps_field(st.a, st.phi) +
                           std::hypot(st.a[0] - bguess[0], st.a[1] - bguess[1]) +
                           std::abs(std::polar(1.0, st.phi) - std::polar(1.0, theta));
        const double rhs = eps_field(bguess, theta);
        const double a_witness = lhs / rhs;
        CHECK(a_witness < 10.0);
        MESSAGE("est-modul witness A = ", a_witness);
    }

    SUBCASE("M_eps stays near M0 and the rhs vanishes at the vortex") {
        Field2D vac = Field2D::vacuum(t);
        ModulationState st;
        const Vec3 rate = modulation_rhs(view_of(vac), st);
        CHECK(std::abs(rate[0]) <= 1e-12);
        CHECK(std::abs(rate[1]) <= 1e-12);
        CHECK(std::abs(rate[2]) <= 1e-12);
        CHECK(st.cond < 2.0);

        auto bump = test::random_bumps(8, 0.02, 2.0);
        Field2D f = Field2D::from_deviation(t, bump);
        ModulationState st2;
        st2.a = {0.0, 0.0};
        st2.phi = 0.0;
        modulation_rhs(view_of(f), st2);
        double dm = 0.0;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                dm = std::max(dm, std::abs(st2.m_eps[r][c] - st.m_eps[r][c]));
        const double eps_h = h_norm(f);
        CHECK(dm <= 5.0 * eps_h);
    }

    SUBCASE("divergence reports a failure record with residual history") {
        auto bump = test::random_bumps(5, 0.05, 2.0);
        Field2D f = Field2D::from_deviation(t, bump);
        ModulationOptions opts;
        opts.max_newton = 1;  // a generic start cannot converge in one step
        bool threw = false;
        try {
            (void)modulate(view_of(f), {1.1, -0.9}, 0.7, opts);
        } catch (const ModulationFailure& mf) {
            threw = true;
            CHECK(mf.residual_history.size() >= 2);
        }
        CHECK(threw);
    }
}

TEST_CASE("linearized operator annihilates the symmetry generators") {
    auto t = bg192()->table;
    const Grid2D& g = t->grid;
    auto sample = [&](int which) {
        std::vector<Complex> eps(g.size());
        for (int iy = 0; iy < g.n; ++iy)
            for (int ix = 0; ix < g.n; ++ix) {
                const std::size_t k = g.idx(ix, iy);
                if (which < 2) {
                    eps[k] = vortex_grad(*t->profile, g.coord(ix), g.coord(iy))[which];
                } else {
                    eps[k] = Complex{-t->v1[k].imag(), t->v1[k].real()};
                }
            }
        return eps;
    };
    CHECK(linearized_residual(*t, sample(0)) <= 1e-3);
    CHECK(linearized_residual(*t, sample(1)) <= 1e-3);
    CHECK(linearized_residual(*t, sample(2)) <= 1e-3);
    Field2D f = Field2D::from_deviation(t, test::random_bumps(4, 0.5, 3.0));
    CHECK(linearized_residual(*t, f.w) > 1e-2);
}

TEST_CASE("orbital stability experiment") {
    auto bg = bg192();

    SUBCASE("vortex input gives the zero marker series") {
        EvolveConfig cfg;
        cfg.half_width = 24.0;
        cfg.n = 192;
        cfg.t_end = 1.0;
        cfg.recipe.family = "none";
        const auto rr = orbital_stability_experiment(bg, cfg);
        CHECK(rr.d0 == 0.0);
        for (const auto& row : rr.rows) {
            CHECK(row.ratio == 0.0);
            CHECK(row.d_e == 0.0);
        }
        CHECK(!rr.truncated);
    }

    SUBCASE("bounded modulated distance and consistent dual track") {
        EvolveConfig cfg;
        cfg.half_width = 24.0;
        cfg.n = 192;
        cfg.t_end = 6.0;
        cfg.recipe.amplitude = 0.02;
        cfg.dual_track = true;
        const auto rr = orbital_stability_experiment(bg, cfg);
        REQUIRE(!rr.truncated);
        CHECK(rr.d0 == doctest::Approx(0.02).epsilon(0.01));
        CHECK(rr.max_ratio < 10.0);
        CHECK(rr.energy_drift <= 1e-5 * std::abs(rr.energy0) + 1e-10);
        CHECK(rr.dual_track_max_diff <= 1e-3 + 2.0 * bg->table->grid.h *
                                                   bg->table->grid.h * 4.0);
        CHECK(rr.c_witness > 0.0);
    }

    SUBCASE("oversized initial data violates the precondition") {
        EvolveConfig cfg;
        cfg.half_width = 24.0;
        cfg.n = 192;
        cfg.recipe.amplitude = 0.2;
        CHECK_THROWS_AS((void)orbital_stability_experiment(bg, cfg),
                        std::invalid_argument);
    }
}
