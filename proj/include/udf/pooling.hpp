#pragma once

// Initial deep features: global average pooling of each channel, then
// signed square root, then L2 normalisation. Arithmetic is done in double
// and results are stored as float.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "udf/batch.hpp"
#include "udf/parallel.hpp"

namespace udf {

/// Per-channel spatial mean. Identity on values when H = W = 1.
inline FeatureVectorBatch global_average_pool(const FeatureMapBatch& maps) {
    const std::size_t depth = maps.depth();
    const std::size_t positions = maps.height() * maps.width();
    FeatureVectorBatch out(depth, maps.ids());
    parallel_for(maps.count(), [&](std::size_t a) {
        const auto sample = maps.sample(a);
        std::vector<double> sums(depth, 0.0);
        for (std::size_t p = 0; p < positions; ++p) {
            const auto* px = sample.data() + p * depth;
            for (std::size_t j = 0; j < depth; ++j) sums[j] += px[j];
        }
        auto row = out.row(a);
        for (std::size_t j = 0; j < depth; ++j) {
            row[j] = static_cast<float>(sums[j] / static_cast<double>(positions));
        }
    });
    return out;
}

inline double signed_sqrt(double x) { return std::copysign(std::sqrt(std::fabs(x)), x); }

inline FeatureVectorBatch power_normalize(const FeatureVectorBatch& features) {
    FeatureVectorBatch out = features;
    for (float& v : out.data()) v = static_cast<float>(signed_sqrt(v));
    return out;
}

/// Scales v to unit Euclidean norm in place. Zero vectors are left alone.
template <typename T>
void l2_normalize_inplace(std::span<T> v) {
    double sq = 0.0;
    for (T x : v) sq += static_cast<double>(x) * static_cast<double>(x);
    if (sq == 0.0) return;
    const double norm = std::sqrt(sq);
    for (T& x : v) x = static_cast<T>(static_cast<double>(x) / norm);
}

inline FeatureVectorBatch l2_normalize(const FeatureVectorBatch& features) {
    FeatureVectorBatch out = features;
    parallel_for(out.count(), [&](std::size_t i) { l2_normalize_inplace(out.row(i)); });
    return out;
}

inline FeatureVectorBatch compute_initial_features(const FeatureMapBatch& maps) {
    return l2_normalize(power_normalize(global_average_pool(maps)));
}

} // namespace udf
