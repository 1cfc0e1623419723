#pragma once

#include <map>
#include <optional>
#include <string>

#include "glv/cutoff.hpp"
#include "glv/profile.hpp"
#include "glv/radial.hpp"

namespace glv {

// Discretized quadratic forms of one Fourier sector: the stiffness is shared,
// the potentials differ.  All forms use natural truncation at r_M (the last
// node is a genuine degree of freedom) and, for j != -1, the e(0) = 0 segment
// at the origin.
struct SectorOperatorBundle {
    int j = 0;
    double R = 1.0;
    RadialGridPtr grid;
    ProfilePtr profile;
    std::vector<double> stiff_off;   // -(m_e / dr_e), size M-1
    std::vector<double> stiff_diag;  // row sums (+ origin segment), size M
    std::vector<double> q_pot;       // Q_{R,j} potential x weight
    std::vector<double> gram_pot;    // H_j potential x weight
    std::vector<double> ir_diag;     // rho^2 chi_R^2 x weight
    std::vector<std::string> warnings;

    std::size_t size() const { return grid->size(); }
    double q_value(std::span<const double> e) const;
    double gram_value(std::span<const double> e) const;
    double ir_value(std::span<const double> e) const;
};

SectorOperatorBundle assemble_sector(int j, double R, RadialGridPtr grid, ProfilePtr profile);

// Constraint functionals, discretized against the grid weights.
std::vector<double> constraint_chi_rho(const RadialGrid& g, const VortexProfile& p);
// chi (rho' -/+ rho/r) pieces of the +/- translation functionals.
std::vector<double> constraint_trans_minus(const RadialGrid& g, const VortexProfile& p);
std::vector<double> constraint_trans_plus(const RadialGrid& g, const VortexProfile& p);

struct Q0Identity {
    double form_value = 0.0;
    double factorized = 0.0;
    bool boundary_ok = true;
    double boundary_tail = 0.0;  // max |e| on [0.9 r_M, r_M] relative to max |e|
};

// Compares Q_{R,0}(e) with the factorized form int rho^2 |(e/rho)'|^2 r dr.
Q0Identity q0_identity_check(std::span<const double> e, const SectorOperatorBundle& b);

// Symmetric banded pencil A x = lambda B x with linear constraints c^T x = 0.
struct BandedPencil {
    int n = 0;
    int bw = 1;  // number of superdiagonals
    std::vector<std::vector<double>> a;  // a[d][i] = A(i, i+d), d = 0..bw
    std::vector<std::vector<double>> b;
    std::vector<std::vector<double>> constraints;
};

BandedPencil single_pencil(const SectorOperatorBundle& bundle, bool q_plus_2ir,
                           bool gram_plus_ir,
                           std::vector<std::vector<double>> constraints = {});

// Coupled (j, -j) block: A = diag(Q_j, Q_-j) + I_R(e + sign f),
// B = diag(G_j, G_-j) + I_R(e + sign f); DOFs interleaved (e_i, f_i).
BandedPencil pair_pencil(const SectorOperatorBundle& bj, const SectorOperatorBundle& bmj,
                         int sign, std::vector<std::vector<double>> constraints = {});
// Interleaves per-sector constraint pieces into a pair constraint.
std::vector<double> pair_constraint(std::span<const double> ce, std::span<const double> cf,
                                    int sign);

enum class EigMethod { Auto, Dense, InverseIteration };

struct MinEigResult {
    double lambda = 0.0;
    std::vector<double> witness;
    int iterations = 0;
    std::string method;
};

// Smallest generalized eigenvalue on the constrained subspace.  Dense path:
// QR basis of the constraint complement + Eigen's generalized solver.
// Inverse-iteration path: shifted banded Cholesky with penalty-augmented
// constraints resolved by the Woodbury identity.  Throws on indefinite B.
MinEigResult min_eig_constrained(const BandedPencil& p, EigMethod method = EigMethod::Auto);

// Q_loc^{+/-}(u, v); u and v must be compactly supported on their grid
// (usage error if the tails beyond 0.8 r_M exceed 1e-12 relative).
double qloc_pm(const RadialGrid& g, const VortexProfile& p, std::span<const double> u,
               std::span<const double> v, int sign);

// Per-sector mode data a_j + i b_j of a perturbation.
struct SectorModes {
    RadialGridPtr grid;
    std::map<int, std::pair<std::vector<double>, std::vector<double>>> modes;
};

// Projects the three orthogonality functionals out of the mode data.
void impose_orthogonality(SectorModes& m, const VortexProfile& p);

struct CoercivityScanResult {
    bool zero_input = false;
    double r_selected = 0.0;
    double kappa = 0.0;
    double q_r = 0.0;
    double denominator = 0.0;
    double window_mass = 0.0;
    double pigeonhole_bound = 0.0;
    std::vector<std::pair<double, double>> window_masses;  // (R, mass)
};

// Dyadic window scan of Prop-1.8 type: picks the R in [R0, 2^N0 R0] whose
// [R, 2R] boundary mass of the +/-1 modes is smallest, then evaluates
// Q_R / (sum_j ||eps_j||_{H_j}^2 + I_R).
CoercivityScanResult coercivity_scan(double r0, int n0, const SectorModes& m,
                                     const VortexProfile& p);

// Q_R and the sector-H denominator at a fixed R (used by the scan and tests).
std::pair<double, double> sector_q_and_denominator(double R, const SectorModes& m,
                                                   const VortexProfile& p);

}  // namespace glv
