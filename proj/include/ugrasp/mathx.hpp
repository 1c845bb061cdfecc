#pragma once

#include <algorithm>
#include <cmath>

namespace ugrasp {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// d sigmoid / dx expressed through the output value
inline double sigmoid_grad_from_value(double s) { return s * (1.0 - s); }

inline double softplus(double x) {
    if (x > 30.0) return x;
    return std::log1p(std::exp(x));
}

inline double softplus_grad(double x) { return sigmoid(x); }

}  // namespace ugrasp
