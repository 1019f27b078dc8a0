#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "teggcn/tensor.hpp"

namespace teggcn {

// Central-difference verification of analytic gradients. f must re-evaluate
// the scalar objective from the current parameter values (and must be pure:
// identical values give identical results). analytic[i] holds the gradient to
// check for params[i]. Returns the maximum relative error, with relative
// error defined as |a - n| / max(|a|, |n|, 1e-8).
inline double finite_diff_check(const std::function<double()>& f,
                                const std::vector<Tensor<double>>& params,
                                const std::vector<std::vector<double>>& analytic,
                                double epsilon = 1e-5) {
    if (analytic.size() != params.size())
        throw std::invalid_argument("finite_diff_check: analytic gradient count mismatch");
    double worst = 0.0;
    for (size_t i = 0; i < params.size(); ++i) {
        auto& p = *params[i];
        if (analytic[i].size() != p.value.size())
            throw std::invalid_argument("finite_diff_check: gradient size mismatch for '" +
                                        p.name + "'");
        for (size_t j = 0; j < p.value.size(); ++j) {
            const double saved = p.value[j];
            p.value[j] = saved + epsilon;
            const double fp = f();
            p.value[j] = saved - epsilon;
            const double fm = f();
            p.value[j] = saved;
            const double numeric = (fp - fm) / (2.0 * epsilon);
            const double a = analytic[i][j];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
            worst = std::max(worst, std::abs(a - numeric) / denom);
        }
    }
    return worst;
}

}  // namespace teggcn
