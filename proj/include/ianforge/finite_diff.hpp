#pragma once

#include <functional>
#include <stdexcept>

#include "ianforge/tensor.hpp"

namespace ianforge {

// Central-difference gradient (f(p+h) - f(p-h)) / 2h per coordinate.
// The independent oracle for every reverse-mode gradient in the library.
inline Tensor finite_diff_grad(const std::function<double(const Tensor&)>& lossfn, const Tensor& params,
                               double h) {
    if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: requires h > 0");
    Tensor g = Tensor::zeros(params.shape);
    Tensor probe = params;
    for (std::size_t i = 0; i < params.data.size(); ++i) {
        const double p0 = params.data[i];
        probe.data[i] = p0 + h;
        const double fp = lossfn(probe);
        probe.data[i] = p0 - h;
        const double fm = lossfn(probe);
        probe.data[i] = p0;
        g.data[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

// Relative error with the tolerance scale max(1, |reference|).
inline double rel_err(double got, double reference) {
    return std::abs(got - reference) / std::max(1.0, std::abs(reference));
}

}  // namespace ianforge
