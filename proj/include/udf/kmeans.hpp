#pragma once

// Lloyd's k-means over rows of a FeatureVectorBatch, with k-means++ or
// random-point seeding. All distances are squared Euclidean in double.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "udf/batch.hpp"
#include "udf/codebook.hpp"
#include "udf/error.hpp"
#include "udf/parallel.hpp"

namespace udf {

enum class KMeansInit { kmeans_plus_plus, random_points };

struct KMeansConfig {
    std::size_t k = 250;
    std::size_t max_iterations = 300;
    double tolerance = 1e-4; // relative inertia change
    std::uint64_t seed = 0;
    KMeansInit init = KMeansInit::kmeans_plus_plus;
    std::size_t restarts = 1;
};

/// Per-fit diagnostics.
struct KMeansTrace {
    /// Inertia after each assignment step; entry 0 is for the initial centroids.
    std::vector<double> inertia_history;
    /// Nearest-centroid index of every sample under the final centroids.
    std::vector<std::size_t> assignment;
    /// Centroids that were re-seeded during the last update step.
    std::vector<bool> reseeded_last;
};

template <typename A, typename B>
double squared_distance(std::span<const A> a, std::span<const B> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        s += d * d;
    }
    return s;
}

namespace detail {

struct Assignment {
    std::vector<std::size_t> index;
    std::vector<double> sq_dist;
    double inertia = 0.0;
};

inline Assignment assign_nearest(const FeatureVectorBatch& x, const Codebook& cb) {
    Assignment a;
    a.index.resize(x.count());
    a.sq_dist.resize(x.count());
    parallel_for(x.count(), [&](std::size_t i) {
        const auto row = x.row(i);
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t l = 0; l < cb.k; ++l) {
            const double d = squared_distance(row, cb.centroid(l));
            if (d < best_d) {
                best_d = d;
                best = l;
            }
        }
        a.index[i] = best;
        a.sq_dist[i] = best_d;
    });
    for (double d : a.sq_dist) a.inertia += d;
    return a;
}

inline void copy_row(std::span<const float> src, std::span<double> dst) {
    std::copy(src.begin(), src.end(), dst.begin());
}

inline std::vector<std::size_t> init_random_points(std::size_t n, std::size_t k,
                                                   std::mt19937_64& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(k);
    return idx;
}

inline std::vector<std::size_t> init_kmeans_plus_plus(const FeatureVectorBatch& x, std::size_t k,
                                                      std::mt19937_64& rng) {
    const std::size_t n = x.count();
    std::vector<std::size_t> chosen;
    chosen.reserve(k);
    std::vector<bool> used(n, false);
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    chosen.push_back(first(rng));
    used[chosen.back()] = true;

    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(x.row(i), x.row(chosen[0]));

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    while (chosen.size() < k) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        std::size_t next = n;
        if (total > 0.0) {
            const double target = unit(rng) * total;
            double cum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                cum += d2[i];
                if (d2[i] > 0.0 && cum > target) {
                    next = i;
                    break;
                }
            }
            if (next == n) {
                // target landed on the rounding tail; take the last positive-mass point
                for (std::size_t i = n; i-- > 0;) {
                    if (d2[i] > 0.0) {
                        next = i;
                        break;
                    }
                }
            }
        } else {
            // every remaining point duplicates a chosen centroid
            next = static_cast<std::size_t>(std::find(used.begin(), used.end(), false) - used.begin());
        }
        chosen.push_back(next);
        used[next] = true;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], squared_distance(x.row(i), x.row(next)));
        }
    }
    return chosen;
}

inline void check_fit_input(const FeatureVectorBatch& x, std::size_t k) {
    if (k == 0) throw DataError("k-means: k must be positive");
    if (k > x.count()) {
        throw DataError("k-means: k = " + std::to_string(k) + " exceeds the " +
                        std::to_string(x.count()) + " training samples");
    }
    if (auto bad = first_non_finite(x.data(), x.dim())) {
        throw DataError("k-means: non-finite value in sample " + std::to_string(*bad));
    }
}

} // namespace detail

/// Index of the nearest centroid per row, ties broken toward the lowest index.
inline std::vector<std::size_t> assign(const FeatureVectorBatch& features, const Codebook& codebook) {
    codebook.validate();
    if (features.dim() != codebook.dim) {
        throw DimensionError("assign: feature dim " + std::to_string(features.dim()) +
                             " does not match codebook dim " + std::to_string(codebook.dim));
    }
    return detail::assign_nearest(features, codebook).index;
}

/// Sum of squared nearest-centroid distances.
inline double inertia(const FeatureVectorBatch& features, const Codebook& codebook) {
    return detail::assign_nearest(features, codebook).inertia;
}

/// Lloyd iterations starting from the given centroids (k x dim, row-major).
inline Codebook lloyd(const FeatureVectorBatch& x, std::vector<double> initial_centroids,
                      const KMeansConfig& config, KMeansTrace* trace = nullptr) {
    const std::size_t k = config.k;
    const std::size_t dim = x.dim();
    detail::check_fit_input(x, k);

    Codebook cb;
    cb.k = k;
    cb.dim = dim;
    cb.seed = config.seed;
    cb.centroids = std::move(initial_centroids);
    cb.validate();

    auto current = detail::assign_nearest(x, cb);
    std::vector<double> history{current.inertia};
    std::vector<bool> reseeded(k, false);

    for (std::size_t it = 1; it <= config.max_iterations; ++it) {
        // Update: per-centroid sums in ascending sample order.
        std::vector<double> sums(k * dim, 0.0);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < x.count(); ++i) {
            const auto row = x.row(i);
            double* acc = sums.data() + current.index[i] * dim;
            for (std::size_t j = 0; j < dim; ++j) acc[j] += row[j];
            ++counts[current.index[i]];
        }
        std::fill(reseeded.begin(), reseeded.end(), false);
        std::vector<double> far = current.sq_dist;
        for (std::size_t l = 0; l < k; ++l) {
            auto c = cb.centroid(l);
            if (counts[l] > 0) {
                const double inv = 1.0 / static_cast<double>(counts[l]);
                for (std::size_t j = 0; j < dim; ++j) c[j] = sums[l * dim + j] * inv;
                continue;
            }
            // Empty cluster: move it onto the point farthest from its centroid.
            const auto pick = static_cast<std::size_t>(
                std::max_element(far.begin(), far.end()) - far.begin());
            detail::copy_row(x.row(pick), c);
            far[pick] = -1.0;
            reseeded[l] = true;
        }

        const double previous = current.inertia;
        current = detail::assign_nearest(x, cb);
        history.push_back(current.inertia);
        cb.iterations_run = it;
        if (previous <= 0.0 || (previous - current.inertia) < config.tolerance * previous) break;
    }

    cb.inertia = current.inertia;
    if (trace != nullptr) {
        trace->inertia_history = std::move(history);
        trace->assignment = std::move(current.index);
        trace->reseeded_last = std::move(reseeded);
    }
    return cb;
}

/// Initial centroid row indices for one fit.
inline std::vector<std::size_t> initial_indices(const FeatureVectorBatch& x, const KMeansConfig& config,
                                                std::uint64_t seed) {
    detail::check_fit_input(x, config.k);
    std::mt19937_64 rng(seed);
    return config.init == KMeansInit::kmeans_plus_plus
               ? detail::init_kmeans_plus_plus(x, config.k, rng)
               : detail::init_random_points(x.count(), config.k, rng);
}

inline std::vector<double> gather_rows(const FeatureVectorBatch& x, std::span<const std::size_t> rows) {
    std::vector<double> out;
    out.reserve(rows.size() * x.dim());
    for (std::size_t r : rows) {
        const auto row = x.row(r);
        out.insert(out.end(), row.begin(), row.end());
    }
    return out;
}

/// Fits a k-centroid codebook. With restarts > 1, restart r uses seed + r
/// and the lowest-inertia codebook wins (earliest on ties).
inline Codebook fit_codebook(const FeatureVectorBatch& features, const KMeansConfig& config,
                             KMeansTrace* trace = nullptr) {
    detail::check_fit_input(features, config.k);
    const std::size_t restarts = std::max<std::size_t>(1, config.restarts);
    Codebook best;
    KMeansTrace best_trace;
    for (std::size_t r = 0; r < restarts; ++r) {
        const auto idx = initial_indices(features, config, config.seed + r);
        KMeansTrace t;
        Codebook cb = lloyd(features, gather_rows(features, idx), config, &t);
        if (r == 0 || cb.inertia < best.inertia) {
            best = std::move(cb);
            best_trace = std::move(t);
        }
    }
    best.seed = config.seed;
    if (trace != nullptr) *trace = std::move(best_trace);
    return best;
}

} // namespace udf
