#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "asterisk/tensor.hpp"

namespace asterisk {

// Numeric differentiation oracle. Ops are templated on the scalar type, so
// the checks re-run the same code in 64-bit; the dot-product trick against a
// fixed random upstream reduces any op to a scalar loss.
//
//   loss(inputs) = sum(upstream ⊙ f(inputs))
//
// max relative error = max over elements of
//   |analytic - numeric| / max(|analytic|, |numeric|, 1e-8)

using forward_fn = std::function<tensor<double>(const std::vector<tensor<double>>&)>;

inline double loss_against_upstream(const tensor<double>& out, const tensor<double>& upstream) {
    if (!out.same_shape(upstream)) {
        throw shape_error("grad_check: upstream shape " + upstream.shape_string() +
                          " vs output " + out.shape_string());
    }
    double loss = 0.0;
    for (std::size_t i = 0; i < out.numel(); ++i) loss += out[i] * upstream[i];
    return loss;
}

// `analytic[k]` must be dLoss/dInputs[k] for the loss above.
inline double max_relative_error(const forward_fn& f, std::vector<tensor<double>> inputs,
                                 const std::vector<tensor<double>>& analytic,
                                 const tensor<double>& upstream, double eps = 1e-5) {
    double worst = 0.0;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        for (std::size_t i = 0; i < inputs[k].numel(); ++i) {
            const double saved = inputs[k][i];
            inputs[k][i] = saved + eps;
            const double up = loss_against_upstream(f(inputs), upstream);
            inputs[k][i] = saved - eps;
            const double down = loss_against_upstream(f(inputs), upstream);
            inputs[k][i] = saved;
            const double numeric = (up - down) / (2.0 * eps);
            const double a = analytic[k][i];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
            worst = std::max(worst, std::abs(a - numeric) / denom);
        }
    }
    return worst;
}

struct grad_check_report {
    std::string name;
    double max_rel_err = 0.0;
    double threshold = 0.0;
    bool passed() const { return max_rel_err < threshold; }
};

}  // namespace asterisk
