#pragma once

// Naive reference implementations used only by tests. They deliberately
// avoid the library's helpers so that each check has an independent route.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "udf/batch.hpp"
#include "udf/synthetic.hpp"

namespace udf::oracle {

using Matrix = std::vector<std::vector<double>>;

inline Matrix rows_of(const FeatureVectorBatch& b) {
    Matrix m(b.count(), std::vector<double>(b.dim()));
    for (std::size_t i = 0; i < b.count(); ++i) {
        for (std::size_t j = 0; j < b.dim(); ++j) m[i][j] = b.data()[i * b.dim() + j];
    }
    return m;
}

/// Per-channel spatial mean by explicit (row, col, channel) loops.
inline Matrix pool(const FeatureMapBatch& maps) {
    Matrix out(maps.count(), std::vector<double>(maps.depth(), 0.0));
    for (std::size_t a = 0; a < maps.count(); ++a) {
        for (std::size_t d = 0; d < maps.depth(); ++d) {
            double s = 0.0;
            for (std::size_t h = 0; h < maps.height(); ++h) {
                for (std::size_t w = 0; w < maps.width(); ++w) s += maps.at(a, h, w, d);
            }
            out[a][d] = s / static_cast<double>(maps.height() * maps.width());
        }
    }
    return out;
}

inline double distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

/// Triangle encoding by a direct double loop.
inline Matrix triangle(const Matrix& x, const Matrix& centroids) {
    const std::size_t k = centroids.size();
    Matrix out(x.size(), std::vector<double>(k));
    for (std::size_t i = 0; i < x.size(); ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) sum += distance(x[i], centroids[j]);
        const double mu = sum / static_cast<double>(k);
        for (std::size_t l = 0; l < k; ++l) {
            const double z = distance(x[i], centroids[l]);
            out[i][l] = mu - z > 0.0 ? mu - z : 0.0;
        }
    }
    return out;
}

inline std::size_t argmin_centroid(const std::vector<double>& x, const Matrix& centroids) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < centroids.size(); ++l) {
        double s = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) s += (x[j] - centroids[l][j]) * (x[j] - centroids[l][j]);
        if (s < best_d) {
            best_d = s;
            best = l;
        }
    }
    return best;
}

inline double inertia(const Matrix& x, const Matrix& centroids) {
    double total = 0.0;
    for (const auto& p : x) {
        const auto& c = centroids[argmin_centroid(p, centroids)];
        for (std::size_t j = 0; j < p.size(); ++j) total += (p[j] - c[j]) * (p[j] - c[j]);
    }
    return total;
}

/// Plain Lloyd from k random distinct points; empty clusters keep their centroid.
inline double lloyd_inertia(const Matrix& x, std::size_t k, std::mt19937_64& rng, int iterations = 100) {
    std::vector<std::size_t> idx(x.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    Matrix c;
    for (std::size_t l = 0; l < k; ++l) c.push_back(x[idx[l]]);
    for (int it = 0; it < iterations; ++it) {
        Matrix sums(k, std::vector<double>(x.front().size(), 0.0));
        std::vector<std::size_t> counts(k, 0);
        for (const auto& p : x) {
            const auto l = argmin_centroid(p, c);
            for (std::size_t j = 0; j < p.size(); ++j) sums[l][j] += p[j];
            ++counts[l];
        }
        for (std::size_t l = 0; l < k; ++l) {
            if (counts[l] == 0) continue;
            for (auto& v : sums[l]) v /= static_cast<double>(counts[l]);
            c[l] = sums[l];
        }
    }
    return inertia(x, c);
}

/// Exact minimum inertia over every assignment of n points to k labels.
inline double exhaustive_min_inertia(const Matrix& x, std::size_t k) {
    const std::size_t n = x.size();
    const std::size_t d = x.front().size();
    std::vector<std::size_t> label(n, 0);
    double best = std::numeric_limits<double>::infinity();
    while (true) {
        std::vector<std::vector<double>> sum(k, std::vector<double>(d, 0.0));
        std::vector<double> cnt(k, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) sum[label[i]][j] += x[i][j];
            cnt[label[i]] += 1;
        }
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                const double diff = x[i][j] - sum[label[i]][j] / cnt[label[i]];
                total += diff * diff;
            }
        }
        best = std::min(best, total);
        std::size_t pos = 0;
        while (pos < n && ++label[pos] == k) label[pos++] = 0;
        if (pos == n) break;
    }
    return best;
}

/// 1/2 (||w||^2 + b^2) + C sum log(1 + exp(-y (w.x + b))), scalar loops.
inline double lr_objective(const Matrix& x, const std::vector<int>& y, const std::vector<double>& w, double b,
                           double C) {
    double f = 0.5 * b * b;
    for (double v : w) f += 0.5 * v * v;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double m = b;
        for (std::size_t j = 0; j < w.size(); ++j) m += w[j] * x[i][j];
        f += C * std::log(1.0 + std::exp(-y[i] * m));
    }
    return f;
}

/// Central finite differences of f at p.
inline std::vector<double> finite_difference(const std::function<double(const std::vector<double>&)>& f,
                                             std::vector<double> p, double h = 1e-6) {
    std::vector<double> g(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double orig = p[i];
        p[i] = orig + h;
        const double up = f(p);
        p[i] = orig - h;
        const double down = f(p);
        p[i] = orig;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

/// Nearest latent-cluster centroid on pooled features of the first layer.
/// Centroids are fitted on the training split using the true cluster ids;
/// each test sample gets the class of its nearest cluster.
inline double nearest_cluster_accuracy(const SyntheticSpec& spec, const SyntheticDataset& ds) {
    const auto train = pool(ds.train.layers.front());
    const auto test = pool(ds.test.layers.front());
    const std::size_t d = train.front().size();
    Matrix centroids(spec.n_latent_clusters, std::vector<double>(d, 0.0));
    std::vector<double> counts(spec.n_latent_clusters, 0.0);
    for (std::size_t i = 0; i < train.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) centroids[ds.train.clusters[i]][j] += train[i][j];
        counts[ds.train.clusters[i]] += 1;
    }
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        for (auto& v : centroids[c]) v /= counts[c];
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        correct += spec.label_of(argmin_centroid(test[i], centroids)) == ds.test.labels[i];
    }
    return static_cast<double>(correct) / static_cast<double>(test.size());
}

/// Expected size of a UDFT file from its header fields and ids.
inline std::size_t tensor_file_bytes(std::size_t n, std::size_t h, std::size_t w, std::size_t d,
                                     const std::vector<std::string>& ids) {
    std::size_t id_bytes = 0;
    for (const auto& id : ids) id_bytes += 2 + id.size();
    return 4 + 5 * 4 + id_bytes + n * h * w * d * 4;
}

inline std::size_t vector_file_bytes(std::size_t n, std::size_t dim, const std::vector<std::string>& ids) {
    std::size_t id_bytes = 0;
    for (const auto& id : ids) id_bytes += 2 + id.size();
    return 4 + 3 * 4 + id_bytes + n * dim * 4;
}

} // namespace udf::oracle
