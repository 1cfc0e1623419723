#include "glv/radial.hpp"

#include <cmath>

namespace glv {

namespace {

std::shared_ptr<const RadialGrid> build(std::vector<double> radii) {
    auto g = std::make_shared<RadialGrid>();
    g->r = std::move(radii);
    const std::size_t m = g->r.size();
    g->mid.resize(m - 1);
    g->dr.resize(m - 1);
    for (std::size_t i = 0; i + 1 < m; ++i) {
        g->dr[i] = g->r[i + 1] - g->r[i];
        g->mid[i] = 0.5 * (g->r[i] + g->r[i + 1]);
    }
    g->w.resize(m);
    g->w[0] = g->r[0] * 0.5 * (g->r[0] + g->dr[0]);
    for (std::size_t i = 1; i + 1 < m; ++i)
        g->w[i] = g->r[i] * 0.5 * (g->dr[i - 1] + g->dr[i]);
    g->w[m - 1] = g->r[m - 1] * 0.5 * g->dr[m - 2];
    return g;
}

void fill_band(std::vector<double>& radii, double from, double to, double step) {
    const int k = static_cast<int>(std::llround((to - from) / step));
    for (int i = 1; i <= k; ++i) radii.push_back(from + i * step);
}

}  // namespace

std::shared_ptr<const RadialGrid> RadialGrid::graded(double r_max) {
    std::vector<double> radii;
    fill_band(radii, 0.0, std::min(5.0, r_max), 0.005);
    if (r_max > 5.0) fill_band(radii, 5.0, std::min(20.0, r_max), 0.02);
    if (r_max > 20.0) fill_band(radii, 20.0, r_max, 0.1);
    return build(std::move(radii));
}

std::shared_ptr<const RadialGrid> RadialGrid::graded_refined(double r_max) {
    std::vector<double> radii;
    fill_band(radii, 0.0, std::min(5.0, r_max), 0.0025);
    if (r_max > 5.0) fill_band(radii, 5.0, std::min(20.0, r_max), 0.01);
    if (r_max > 20.0) fill_band(radii, 20.0, r_max, 0.05);
    return build(std::move(radii));
}

std::shared_ptr<const RadialGrid> RadialGrid::graded_long(double r_max) {
    std::vector<double> radii;
    fill_band(radii, 0.0, 5.0, 0.005);
    fill_band(radii, 5.0, 20.0, 0.02);
    fill_band(radii, 20.0, std::min(100.0, r_max), 0.1);
    if (r_max > 100.0) fill_band(radii, 100.0, r_max, 0.5);
    return build(std::move(radii));
}

std::shared_ptr<const RadialGrid> RadialGrid::uniform(double step, double r_max) {
    std::vector<double> radii;
    fill_band(radii, 0.0, r_max, step);
    return build(std::move(radii));
}

std::shared_ptr<const RadialGrid> RadialGrid::from_radii(std::vector<double> radii) {
    return build(std::move(radii));
}

double radial_integral(const RadialGrid& g, std::span<const double> f) {
    return pairwise_sum(f.size(), [&](std::size_t i) { return f[i] * g.w[i]; });
}

double radial_grad_sq(const RadialGrid& g, std::span<const double> e, bool zero_at_origin) {
    const std::size_t m = g.size();
    std::vector<double> cells;
    cells.reserve(m);
    if (zero_at_origin) cells.push_back(0.5 * e[0] * e[0]);  // segment [0, r_0]
    for (std::size_t i = 0; i + 1 < m; ++i) {
        const double d = (e[i + 1] - e[i]) / g.dr[i];
        cells.push_back(d * d * g.mid[i] * g.dr[i]);
    }
    return pairwise_sum(cells);
}

}  // namespace glv
