#pragma once

#include <array>
#include <memory>
#include <string>

#include "glv/energy.hpp"
#include "glv/field.hpp"

namespace glv {

using Vec2 = std::array<double, 2>;
using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

// Grid vortex background: the solution of the discrete Ginzburg-Landau
// equation with analytic V_1 boundary data.  Evolving around it keeps the
// vortex exactly stationary under the discrete flow and makes the discrete
// renormalized energy an exact invariant of the scheme.
struct DiscreteVortex {
    VortexTablePtr table;
    std::vector<Complex> v1h;
    std::vector<Complex> s;  // v1h - v1 (smooth O(h^2) field)
    double residual = 0.0;   // final sup-norm of the discrete GL residual
};

std::shared_ptr<const DiscreteVortex> make_discrete_vortex(VortexTablePtr table);

struct StepperOptions {
    double dt = 0.0;      // 0 selects h^2
    double fp_tol = 1e-13;
    int fp_max = 40;
    bool rk4 = false;     // explicit fallback for cross-validation
};

// Semi-implicit Crank-Nicolson stepper for w with Psi = V1h + w, w Dirichlet
// on the outermost two grid layers.  The implicit Laplacian is inverted by
// discrete sine transforms; the nonlinearity uses the density-averaged
// midpoint form, so the discrete renormalized energy is conserved up to the
// inner fixed-point tolerance.
class GpStepper {
  public:
    GpStepper(std::shared_ptr<const DiscreteVortex> bg, StepperOptions opt = {});
    ~GpStepper();
    GpStepper(const GpStepper&) = delete;
    GpStepper& operator=(const GpStepper&) = delete;

    void step(std::vector<Complex>& w);
    double dt() const { return dt_; }
    int last_inner_iterations() const { return last_iters_; }
    bool last_step_converged() const { return last_converged_; }

    // (1/2)||grad_h w||^2 + (1/4) int ((1-|Psi|^2)^2 - (1-|V1h|^2)^2).
    double energy(std::span<const Complex> w) const;

  private:
    void solve_helmholtz(std::vector<Complex>& rhs);

    std::shared_ptr<const DiscreteVortex> bg_;
    StepperOptions opt_;
    double dt_ = 0.0;
    int m_ = 0;  // interior block size per axis (n - 4)
    std::vector<double> eig_;
    std::vector<double> re_, im_;
    std::vector<Complex> prev_;
    bool have_prev_ = false;
    int last_iters_ = 0;
    bool last_converged_ = true;
    void* plan_fwd_ = nullptr;  // fftw plans, type-erased
};

// View of a field for the modulation machinery: Psi(x) = e^{i phase}
// (V1(x) + s(x) + w(x)), with V1 analytic and s, w grid data.
struct FieldView {
    const VortexTable* table = nullptr;
    std::span<const Complex> s;  // may be empty
    std::span<const Complex> w;
    double phase = 0.0;
    // Optional closed-form deviation; replaces the interpolated s + w path.
    const std::function<Complex(double, double)>* dev_analytic = nullptr;
};

FieldView view_of(const Field2D& f);

// The three cutoff-weighted orthogonality integrals of eps =
// e^{-i phi} Psi(.+b) - Vref against (dx V1, dy V1, i V1).
Vec3 xi(const FieldView& f, Vec2 b, double phi);

struct ModulationFailure : NumericalFailure {
    explicit ModulationFailure(std::string msg, std::vector<double> hist)
        : NumericalFailure(std::move(msg)), residual_history(std::move(hist)) {}
    std::vector<double> residual_history;
};

struct ModulationState {
    double t = 0.0;
    Vec2 a{0.0, 0.0};
    double phi = 0.0;
    Mat3 m_eps{};
    Vec3 f_eps{};
    double cond = 0.0;
    double xi_residual = 0.0;
    int newton_iterations = 0;
};

struct ModulationOptions {
    double xi_tol = 1e-10;
    int max_newton = 60;
    double cond_cap = 200.0;
};

// Newton solve of xi = 0 with the analytic Jacobian blocks.
ModulationState modulate(const FieldView& f, Vec2 guess_b, double guess_phi,
                         const ModulationOptions& opts = {});

// Assembles M_eps, F_eps at the state's (a, phi) and solves the 3x3 system for
// (a', phi').  Throws NumericalFailure when M_eps is too ill-conditioned.
Vec3 modulation_rhs(const FieldView& f, ModulationState& state,
                    double cond_cap = 200.0);

// || Delta eps + (1-|V1|^2) eps - 2 <V1,eps> V1 || in the (1+|x|^2)^{-3}
// weighted norm over the interior (fourth-order Laplacian, 2-ring margin).
double linearized_residual(const VortexTable& t, std::span<const Complex> eps);

struct PerturbationRecipe {
    std::string family = "bump";  // none | bump | random | broad
    double amplitude = 0.02;
    double width = 1.5;
    double cx = 1.5, cy = 0.0;
    unsigned seed = 1;
};

// Tapered initial perturbation on the grid (boundary rings zero).
std::vector<Complex> make_perturbation(const Grid2D& g, const PerturbationRecipe& r);

struct EvolveConfig {
    double half_width = 30.0;
    int n = 256;
    double dt = 0.0;  // 0 -> h^2
    double t_end = 50.0;
    int snapshot_every = 0;  // steps; 0 -> about two snapshots per unit time
    PerturbationRecipe recipe;
    double delta_threshold = 0.05;
    double alpha_threshold = 0.2;
    double cond_cap = 200.0;
    bool rk4 = false;
    bool dual_track = false;
    double fp_tol = 1e-13;
};

struct DiagRow {
    double t = 0.0;
    double energy = 0.0;
    double d_e = 0.0;
    double a1 = 0.0, a2 = 0.0, phi = 0.0;
    double rate = 0.0;  // |a'| + |phi'|
    double ratio = 0.0;
};

struct RunResult {
    std::vector<DiagRow> rows;
    std::vector<Complex> final_w;  // perturbation against the analytic V1 table
    double d0 = 0.0;
    double energy0 = 0.0;
    double max_ratio = 0.0;
    double energy_drift = 0.0;      // max |E(t) - E(0)|
    double c_witness = 0.0;         // max rate / d0
    double final_quartile_slope = 0.0;
    bool truncated = false;
    std::string truncation_reason;
    double dual_track_max_diff = 0.0;
};

// Evolves, modulates each snapshot, and records the distance to the modulated
// vortex together with the parameter track.
RunResult orbital_stability_experiment(std::shared_ptr<const DiscreteVortex> bg,
                                       const EvolveConfig& cfg);

}  // namespace glv
