#include "glv/common.hpp"

#include <cmath>
#include <cstdio>

namespace glv {

namespace {

double pairwise_rec(const double* v, std::size_t n) {
    if (n <= 32) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_rec(v, half) + pairwise_rec(v + half, n - half);
}

}  // namespace

double pairwise_sum(std::span<const double> v) {
    return pairwise_rec(v.data(), v.size());
}

double pairwise_sum(std::size_t n, const std::function<double(std::size_t)>& f) {
    std::vector<double> buf(n);
    for (std::size_t i = 0; i < n; ++i) buf[i] = f(i);
    return pairwise_rec(buf.data(), n);
}

double loglog_slope(std::span<const double> x, std::span<const double> y,
                    double floor) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (std::abs(y[i]) > floor && x[i] > 0.0) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(std::abs(y[i])));
        }
    }
    if (lx.size() < 2) throw NumericalFailure("loglog_slope: not enough usable points");
    return linear_fit(lx, ly).second;
}

std::pair<double, double> linear_fit(std::span<const double> t,
                                     std::span<const double> y) {
    const std::size_t n = t.size();
    if (n < 2 || y.size() != n) throw std::invalid_argument("linear_fit: bad sizes");
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (std::size_t i = 0; i < n; ++i) {
        st += t[i];
        sy += y[i];
        stt += t[i] * t[i];
        sty += t[i] * y[i];
    }
    const double den = n * stt - st * st;
    if (den == 0.0) throw std::invalid_argument("linear_fit: degenerate abscissae");
    const double b = (n * sty - st * sy) / den;
    const double a = (sy - b * st) / n;
    return {a, b};
}

std::uint64_t fnv1a64(std::span<const unsigned char> bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string fnv1a64_hex(std::string_view text) {
    const auto h = fnv1a64(std::span<const unsigned char>(
        reinterpret_cast<const unsigned char*>(text.data()), text.size()));
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace glv
