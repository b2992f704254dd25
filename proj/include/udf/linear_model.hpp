#pragma once

#include <cstddef>
#include <vector>

namespace udf {

/// Logistic-regression model over features augmented with a constant bias
/// feature of value 1. bias_weight is that feature's coefficient.
struct LinearModel {
    std::vector<double> weights;
    double bias_weight = 0.0;
    double C = 1.0;

    struct TrainMeta {
        std::size_t iterations = 0;
        double final_objective = 0.0;
        double final_gradient_norm = 0.0;
        bool converged = false;
    } train_meta;

    std::size_t dim() const noexcept { return weights.size(); }
};

} // namespace udf
