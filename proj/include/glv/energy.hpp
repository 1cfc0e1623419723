#pragma once

#include <optional>
#include <vector>

#include "glv/cutoff.hpp"
#include "glv/field.hpp"

namespace glv {

// Weighted first-order seminorm squared of an arbitrary complex grid array f:
//   int ( |grad(f conj(V1))|^2 + (1 - |V1|^2) |grad f|^2 ).
// Products are formed pointwise before centered differencing, so fields whose
// raw gradient is not square-integrable (e.g. multiples of V1) stay finite.
double h_norm_sq(const VortexTable& t, std::span<const Complex> f);
double h_norm(const VortexTable& t, std::span<const Complex> f);

// H-norm of the field's perturbation w.
double h_norm(const Field2D& f);

// d_E(f, g) = ||psi_f - psi_g||_H + || |psi_f|^2 - |psi_g|^2 ||_L2.
double d_e(const Field2D& f, const Field2D& g);

// eta_eps = (1 - |V1 + w|^2) - (1 - |V1|^2) = -2 <w, V1> - |w|^2, pointwise.
std::vector<double> eta(const Field2D& f);
double eta_l2_sq(const Field2D& f);

struct EnergySweepPoint {
    double radius;
    double value;
};

struct EnergyResult {
    std::vector<EnergySweepPoint> sweep;
    double value = 0.0;   // extrapolated limit
    double spread = 0.0;  // max deviation of the sweep from the fitted tail model
    bool flagged = false;
};

struct EnergyOptions {
    std::vector<double> sweep_fractions = {0.6, 0.7, 0.8, 0.9};
    double mask_width = 0.0;  // smooth disk-edge width; 0 -> 2h
    double tol = 1e-6;        // spread above this flags the result
};

// E(Psi) = lim_r int_{B_r} (e_GL(Psi) - e_GL(V1)), evaluated on a sweep of
// disk radii with a 1/r^2 + 1/r^4 tail fit.
EnergyResult renormalized_energy_direct(const Field2D& f, const EnergyOptions& opts = {});

struct PRResult {
    std::vector<EnergySweepPoint> sweep;
    double value = 0.0;
    double spread = 0.0;
};

// P_R(Psi): far-field circulation flux of the decomposition.
PRResult p_r(const Field2D& f, double R);

struct DecompResult {
    double q_r_half = 0.0;  // (1/2) Q_R = (1/2)(script-Q_R + 2 I_R)
    double n_r = 0.0;
    double p_r_half = 0.0;
    double i_r = 0.0;       // I_R(eps) = int chi_R^2 <eps, V1>^2
    double script_q = 0.0;  // script-Q_R(eps)
    double eps_h_sq = 0.0;  // ||eps||_H^2
    double total = 0.0;
    PRResult p_detail;
};

// Exact second-order decomposition E = (1/2) Q_R + N_R + (1/2) P_R with the
// perturbation eps = Psi - V1 taken pointwise.
DecompResult renormalized_energy_decomposed(const Field2D& f, double R);

// N_R and I_R alone (exposed for the nonlinear lower-bound checks).
double n_r_term(const Field2D& f, double R);
double i_r_term(const Field2D& f, double R);
// int_{B_rad} |eps|^3.
double l3_ball_cubed(const Field2D& f, double rad);

// B(eps) = int ( |grad eps|^2 - (1-|V1|^2)|eps|^2 + 2 <V1, eps>^2 ).
double b_form(const VortexTable& t, std::span<const Complex> eps);
// Norm of the space where B lives: same with + in the middle term.
double h_b_norm_sq(const VortexTable& t, std::span<const Complex> eps);

// int |eps|^2 / (1 + |x|^2)^3.
double weighted_l2_sq(const VortexTable& t, std::span<const Complex> eps);

}  // namespace glv
