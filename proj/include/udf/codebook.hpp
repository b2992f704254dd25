#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "udf/error.hpp"

namespace udf {

/// k centroids in the space of initial deep features.
struct Codebook {
    std::size_t k = 0;
    std::size_t dim = 0;
    std::vector<double> centroids; // k x dim, row-major
    double inertia = 0.0;
    std::size_t iterations_run = 0;
    std::uint64_t seed = 0;

    std::span<const double> centroid(std::size_t l) const {
        return std::span<const double>(centroids).subspan(l * dim, dim);
    }
    std::span<double> centroid(std::size_t l) {
        return std::span<double>(centroids).subspan(l * dim, dim);
    }

    void validate() const {
        if (k == 0 || dim == 0) throw DimensionError("codebook must have k > 0 and dim > 0");
        if (centroids.size() != k * dim) {
            throw DimensionError("codebook holds " + std::to_string(centroids.size()) +
                                 " values, expected k*dim = " + std::to_string(k * dim));
        }
    }
};

} // namespace udf
