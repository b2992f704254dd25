#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "udf/batch.hpp"
#include "udf/error.hpp"

namespace udf {

/// Row-wise concatenation [a | b]. Both batches must list the same ids in
/// the same order.
inline FeatureVectorBatch serial_fuse(const FeatureVectorBatch& a, const FeatureVectorBatch& b) {
    if (a.count() != b.count()) {
        throw DataError("fuse: sample counts differ (" + std::to_string(a.count()) + " vs " +
                        std::to_string(b.count()) + ")");
    }
    for (std::size_t i = 0; i < a.count(); ++i) {
        if (a.ids()[i] != b.ids()[i]) {
            throw DataError("fuse: sample id mismatch at index " + std::to_string(i) + " ('" +
                            a.ids()[i] + "' vs '" + b.ids()[i] + "')");
        }
    }
    const std::size_t dim = a.dim() + b.dim();
    std::vector<float> data(a.count() * dim);
    for (std::size_t i = 0; i < a.count(); ++i) {
        auto dst = data.begin() + static_cast<std::ptrdiff_t>(i * dim);
        dst = std::copy(a.row(i).begin(), a.row(i).end(), dst);
        std::copy(b.row(i).begin(), b.row(i).end(), dst);
    }
    return FeatureVectorBatch(a.count(), dim, std::move(data), a.ids());
}

} // namespace udf
