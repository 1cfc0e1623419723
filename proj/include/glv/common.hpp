#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace glv {

using Complex = std::complex<double>;

// <z1, z2> = Re(z1 * conj(z2)), the real scalar product on C ~ R^2.
inline double cdot(Complex a, Complex b) {
    return a.real() * b.real() + a.imag() * b.imag();
}

// Deterministic pairwise (tree) summation. Reduction order depends only on n,
// so results are reproducible bit-for-bit across runs.
double pairwise_sum(std::span<const double> v);

// Sums f(i) for i in [0, n) through a scratch buffer, pairwise.
double pairwise_sum(std::size_t n, const std::function<double(std::size_t)>& f);

// Least-squares slope of log|y| vs log x. Points with |y| <= floor are skipped.
double loglog_slope(std::span<const double> x, std::span<const double> y,
                    double floor = 1e-300);

// Ordinary least-squares line a + b*t; returns {a, b}.
std::pair<double, double> linear_fit(std::span<const double> t,
                                     std::span<const double> y);

// FNV-1a 64-bit, hex-encoded. Used to stamp outputs with config/profile ids.
std::uint64_t fnv1a64(std::span<const unsigned char> bytes);
std::string fnv1a64_hex(std::string_view text);

// Floating-point formatting with 17 significant digits for text outputs.
std::string fmt17(double v);

// Quintic smoothstep: 0 for s <= 0, 1 for s >= 1, C^2 across both ends.
inline double smoothstep5(double s) {
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    return s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

struct NumericalFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace glv
