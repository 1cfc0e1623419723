#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "glv/dynamics.hpp"
#include "glv/energy.hpp"
#include "support/testutil.hpp"

using namespace glv;

namespace {

VortexTablePtr table512() {
    static auto t = VortexTable::make(test::cached_profile(), Grid2D(30.0, 512));
    return t;
}

}  // namespace

TEST_CASE("renormalized energy of the vortex and its orbit") {
    auto t = table512();

    SUBCASE("E(V1) = 0") {
        const auto e = renormalized_energy_direct(Field2D::vacuum(t));
        CHECK(std::abs(e.value) <= 1e-6);
        CHECK(!e.flagged);
    }

    SUBCASE("translation and phase invariance") {
        auto bump = test::random_bumps(31, 0.01, 4.0);
        Field2D base = Field2D::orbit(t, 0.0, 0.0, 0.0, &bump);
        const double e0 = renormalized_energy_direct(base).value;
        for (auto [ax, ay, al] :
             {std::tuple{0.5, 0.0, 0.7}, {-1.2, 0.9, 2.1}, {2.0, 0.0, M_PI},
              {0.0, 2.0, 4.9}, {1.4, -1.4, 0.0}}) {
            Field2D f = Field2D::orbit(t, ax, ay, al, &bump);
            const auto e = renormalized_energy_direct(f);
            CHECK(std::abs(e.value - e0) <= 1e-4);
        }
        // Pure orbit elements carry zero renormalized energy.
        Field2D pure = Field2D::orbit(t, 1.0, -0.7, 1.3);
        CHECK(std::abs(renormalized_energy_direct(pure).value) <= 1e-4);
    }
}

TEST_CASE("direct and decomposed routes agree (second-order identity)") {
    auto t = table512();
    double worst = 0.0;
    for (unsigned seed = 1; seed <= 8; ++seed) {
        Field2D f = Field2D::from_deviation(t, test::random_bumps(seed, 0.01));
        const auto direct = renormalized_energy_direct(f);
        for (double R : {2.0, 5.0}) {
            const auto dec = renormalized_energy_decomposed(f, R);
            worst = std::max(worst, std::abs(direct.value - dec.total));
        }
        CHECK(!direct.flagged);
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("decomposed route edge cases") {
    auto t = table512();

    SUBCASE("zero perturbation zeroes every addend") {
        const auto dec = renormalized_energy_decomposed(Field2D::vacuum(t), 4.0);
        CHECK(dec.q_r_half == 0.0);
        CHECK(dec.n_r == 0.0);
        CHECK(dec.p_r_half == 0.0);
        CHECK(dec.total == 0.0);
    }

    SUBCASE("R range is enforced") {
        Field2D f = Field2D::vacuum(t);
        CHECK_THROWS_AS((void)renormalized_energy_decomposed(f, 0.5), std::invalid_argument);
        CHECK_THROWS_AS((void)renormalized_energy_decomposed(f, 10.0), std::invalid_argument);
    }

    SUBCASE("coercivity witness after modulation") {
        auto bump = test::random_bumps(41, 0.01);
        Field2D f0 = Field2D::orbit(t, 0.0, 0.0, 0.0, &bump);
        const auto st = modulate(view_of(f0), {0.0, 0.0}, 0.0);
        // Build the modulated representative as a fresh deviation recipe.
        const VortexProfile& prof = *t->profile;
        auto dev = f0.dev_analytic;
        const double phi = st.phi;
        const Vec2 a = st.a;
        auto mod_dev = [&prof, dev, phi, a](double x, double y) {
            const Complex rot = std::polar(1.0, -phi);
            return rot * (vortex_value(prof, x + a[0], y + a[1]) + dev(x + a[0], y + a[1])) -
                   vortex_value(prof, x, y);
        };
        Field2D fm = Field2D::from_deviation(t, mod_dev);
        const double total = renormalized_energy_direct(fm).value;
        const double denom = h_norm_sq(*t, fm.w) + eta_l2_sq(fm);
        const double kappa = total / denom;
        CHECK(kappa > 0.0);
        MESSAGE("coercivity witness kappa = ", kappa);
    }
}

TEST_CASE("nonnegativity of the renormalized energy on the sample suite") {
    auto t = table512();
    for (unsigned seed = 50; seed < 58; ++seed) {
        Field2D f = Field2D::from_deviation(t, test::random_bumps(seed, 0.02));
        CHECK(renormalized_energy_direct(f).value >= -1e-8);
    }
    for (auto [ax, ay, al] : {std::tuple{0.6, -0.3, 0.4}, {1.5, 0.0, 3.0}}) {
        Field2D f = Field2D::orbit(t, ax, ay, al);
        CHECK(renormalized_energy_direct(f).value >= -1e-4);
    }
}

TEST_CASE("P_R far-field flux") {
    auto t = table512();

    SUBCASE("vanishes identically on the vortex and its phase rotations") {
        Field2D vac = Field2D::vacuum(t);
        CHECK(p_r(vac, 4.0).value == 0.0);
        vac.phase = 1.1;
        CHECK(p_r(vac, 4.0).value == 0.0);
    }

    SUBCASE("decays at least like 1/R on broad perturbations") {
        Grid2D wide(64.0, 512);
        auto tw = VortexTable::make(test::cached_profile(), wide);
        for (unsigned seed : {3u, 7u}) {
            PerturbationRecipe rec;
            rec.family = "broad";
            rec.amplitude = 0.02;
            rec.seed = seed;
            Field2D f = Field2D::vacuum(tw);
            f.w = make_perturbation(wide, rec);
            std::vector<double> rs{4.0, 8.0, 16.0}, ps;
            for (double R : rs) ps.push_back(std::abs(p_r(f, R).value));
            CHECK(loglog_slope(rs, ps) <= -0.9);
        }
    }
}

TEST_CASE("B form") {
    auto t = table512();
    const Grid2D& g = t->grid;

    SUBCASE("zero and quadratic homogeneity") {
        std::vector<Complex> z(g.size(), Complex{});
        CHECK(b_form(*t, z) == 0.0);
        Field2D f = Field2D::from_deviation(t, test::random_bumps(2, 0.05));
        const double b1 = b_form(*t, f.w);
        std::vector<Complex> s(f.w);
        for (auto& c : s) c *= 2.0;
        CHECK(b_form(*t, s) == doctest::Approx(4.0 * b1).epsilon(1e-12));
    }

    SUBCASE("translation generators span the kernel") {
        for (int axis : {0, 1}) {
            std::vector<Complex> eps(g.size());
            for (int iy = 0; iy < g.n; ++iy)
                for (int ix = 0; ix < g.n; ++ix) {
                    const auto dv = vortex_grad(*t->profile, g.coord(ix), g.coord(iy));
                    eps[g.idx(ix, iy)] = dv[axis];
                }
            const double b = b_form(*t, eps);
            const double nrm = h_b_norm_sq(*t, eps);
            CHECK(std::abs(b) <= 1e-3 * nrm);
        }
    }

    SUBCASE("generic fields are strictly positive") {
        Field2D f = Field2D::from_deviation(t, test::random_bumps(77, 0.02));
        CHECK(b_form(*t, f.w) > 0.0);
    }
}

TEST_CASE("nonlinear lower bound for N_R") {
    auto t = table512();
    const double kappa = 0.5;
    for (unsigned seed = 60; seed < 66; ++seed) {
        Field2D f = Field2D::from_deviation(t, test::random_bumps(seed, 0.05));
        for (double R : {2.0, 4.0}) {
            const double lhs = n_r_term(f, R) + kappa * i_r_term(f, R);
            const double rhs =
                0.25 * kappa * eta_l2_sq(f) - l3_ball_cubed(f, 2.0 * R);
            CHECK(lhs >= rhs - 1e-10);
        }
    }
}
