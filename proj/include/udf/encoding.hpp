#pragma once

// Triangle encoding of initial deep features against a codebook.
//
// For a sample x and centroids c_0..c_{k-1}:
//   z_l = ||x - c_l||,  mu = (1/k) sum_l z_l,  out_l = max(0, mu - z_l)
// mu is the sample's own mean distance over all centroids.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "udf/batch.hpp"
#include "udf/codebook.hpp"
#include "udf/error.hpp"
#include "udf/feature_io.hpp"
#include "udf/kmeans.hpp"
#include "udf/parallel.hpp"
#include "udf/pooling.hpp"

namespace udf {

template <typename A, typename B>
double euclidean_distance(std::span<const A> a, std::span<const B> b) {
    if (a.size() != b.size()) {
        throw DimensionError("euclidean_distance: dims " + std::to_string(a.size()) + " and " +
                             std::to_string(b.size()) + " differ");
    }
    return std::sqrt(squared_distance(a, b));
}

struct EncodedFeature {
    std::vector<double> values; // k components
    double mu = 0.0;
    std::size_t source_dim = 0;
};

/// Encodes one sample into `out` (size k) and returns its mean distance mu.
template <typename T>
double triangle_encode_into(std::span<const T> sample, const Codebook& codebook,
                            std::span<double> out) {
    const std::size_t k = codebook.k;
    double total = 0.0;
    for (std::size_t l = 0; l < k; ++l) {
        out[l] = euclidean_distance(sample, codebook.centroid(l));
        total += out[l];
    }
    const double mu = total / static_cast<double>(k);
    for (std::size_t l = 0; l < k; ++l) out[l] = std::max(0.0, mu - out[l]);
    return mu;
}

namespace detail {

inline void check_codebook_for(std::size_t feature_dim, const Codebook& codebook) {
    if (codebook.k == 0) throw DataError("triangle encoding: codebook is empty");
    codebook.validate();
    if (feature_dim != codebook.dim) {
        throw DimensionError("triangle encoding: feature dim " + std::to_string(feature_dim) +
                             " does not match codebook dim " + std::to_string(codebook.dim));
    }
}

} // namespace detail

template <typename T>
EncodedFeature triangle_encode_sample(std::span<const T> sample, const Codebook& codebook) {
    detail::check_codebook_for(sample.size(), codebook);
    EncodedFeature f;
    f.values.resize(codebook.k);
    f.source_dim = sample.size();
    f.mu = triangle_encode_into(sample, codebook, std::span<double>(f.values));
    return f;
}

inline FeatureVectorBatch triangle_encode(const FeatureVectorBatch& features, const Codebook& codebook) {
    detail::check_codebook_for(features.dim(), codebook);
    FeatureVectorBatch out(codebook.k, features.ids());
    parallel_for(features.count(), [&](std::size_t i) {
        std::vector<double> code(codebook.k);
        triangle_encode_into(features.row(i), codebook, std::span<double>(code));
        std::copy(code.begin(), code.end(), out.row(i).begin());
    });
    return out;
}

/// Pools, normalises and encodes a tensor file against a trained codebook.
inline void encode_dataset(const std::string& tensor_path, const std::string& codebook_path,
                           const std::string& out_path) {
    const auto maps = read_tensor_file(tensor_path);
    const auto codebook = read_codebook_file(codebook_path);
    write_vector_file(triangle_encode(compute_initial_features(maps), codebook), out_path);
}

} // namespace udf
