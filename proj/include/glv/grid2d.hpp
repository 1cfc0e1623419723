#pragma once

#include <cmath>
#include <cstddef>

namespace glv {

// Uniform Cartesian grid on [-L, L]^2, spacing h = 2L/(n-1).  Values are
// stored row-major with y as the slow index.
struct Grid2D {
    double half_width = 0.0;
    int n = 0;
    double h = 0.0;

    Grid2D() = default;
    Grid2D(double half_width_, int n_)
        : half_width(half_width_), n(n_), h(2.0 * half_width_ / (n_ - 1)) {}

    double coord(int i) const { return -half_width + i * h; }
    std::size_t idx(int ix, int iy) const {
        return static_cast<std::size_t>(iy) * n + ix;
    }
    std::size_t size() const { return static_cast<std::size_t>(n) * n; }
    double cell_area() const { return h * h; }
    double radius(int ix, int iy) const { return std::hypot(coord(ix), coord(iy)); }

    bool operator==(const Grid2D& o) const {
        return n == o.n && half_width == o.half_width;
    }
};

}  // namespace glv
