#pragma once

#include "glv/common.hpp"

namespace glv {

// Radial cutoff chi_R: identically 1 on [0, R], quintic-smoothstep descent to
// 0 at 2R, C^2 and radially non-increasing.
struct Cutoff {
    double scale = 1.0;  // R

    double chi(double r) const {
        const double s = r / scale - 1.0;
        if (s <= 0.0) return 1.0;
        if (s >= 1.0) return 0.0;
        return 1.0 - smoothstep5(s);
    }
    double dchi(double r) const {
        const double s = r / scale - 1.0;
        if (s <= 0.0 || s >= 1.0) return 0.0;
        const double sp = 30.0 * s * s * (s - 1.0) * (s - 1.0);
        return -sp / scale;
    }
    double d2chi(double r) const {
        const double s = r / scale - 1.0;
        if (s <= 0.0 || s >= 1.0) return 0.0;
        const double spp = 60.0 * s * (2.0 * s - 1.0) * (s - 1.0);
        return -spp / (scale * scale);
    }
};

}  // namespace glv
