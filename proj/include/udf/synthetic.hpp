#pragma once

// Deterministic synthetic activation-map datasets. Every sample belongs to a
// latent cluster; the cluster sets the per-channel means of each layer's
// maps, plus Gaussian noise on those means. Spatial variation inside a map
// is zero-mean per channel, so global average pooling recovers exactly the
// noisy channel means.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "udf/batch.hpp"
#include "udf/error.hpp"
#include "udf/feature_io.hpp"

namespace udf {

struct LayerShape {
    std::string name = "layer";
    std::size_t height = 3;
    std::size_t width = 3;
    std::size_t depth = 64;
};

struct SyntheticSpec {
    std::size_t n_train = 600;
    std::size_t n_test = 300;
    std::vector<LayerShape> layers{LayerShape{}};
    std::size_t n_latent_clusters = 8;
    /// Class (+1/-1) of each latent cluster. Empty: even clusters private,
    /// odd clusters public.
    std::vector<int> label_rule;
    double noise_sigma = 0.1;   // std-dev of per-channel mean noise
    double spatial_sigma = 0.2; // std-dev of zero-mean spatial variation
    std::uint64_t seed = 0;

    int label_of(std::size_t cluster) const {
        if (label_rule.empty()) return cluster % 2 == 0 ? 1 : -1;
        return label_rule.at(cluster);
    }

    void validate() const {
        if (n_train == 0 || n_test == 0) throw DataError("synthetic: sample counts must be positive");
        if (layers.empty()) throw DataError("synthetic: at least one layer is required");
        for (const auto& l : layers) {
            if (l.height == 0 || l.width == 0 || l.depth == 0) {
                throw DataError("synthetic: layer '" + l.name + "' has a zero dimension");
            }
        }
        if (n_latent_clusters == 0) throw DataError("synthetic: need at least one latent cluster");
        if (!label_rule.empty() && label_rule.size() != n_latent_clusters) {
            throw DataError("synthetic: label_rule must map every latent cluster");
        }
        for (int v : label_rule) {
            if (v != 1 && v != -1) throw DataError("synthetic: label_rule values must be +1 or -1");
        }
        if (noise_sigma < 0.0 || spatial_sigma < 0.0) throw DataError("synthetic: negative sigma");
    }
};

struct SyntheticSplit {
    std::vector<FeatureMapBatch> layers; // parallel to SyntheticSpec::layers
    std::vector<int> labels;
    std::vector<std::size_t> clusters;
};

struct SyntheticDataset {
    SyntheticSplit train;
    SyntheticSplit test;
    /// cluster_means[layer][cluster * depth + channel]
    std::vector<std::vector<double>> cluster_means;
};

namespace detail {

inline std::vector<std::size_t> balanced_clusters(std::size_t n, std::size_t n_clusters,
                                                  std::mt19937_64& rng) {
    std::vector<std::size_t> c(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = i % n_clusters;
    std::shuffle(c.begin(), c.end(), rng);
    return c;
}

inline SyntheticSplit generate_split(const SyntheticSpec& spec, const std::string& prefix, std::size_t n,
                                     const std::vector<std::vector<double>>& means, std::mt19937_64& rng) {
    SyntheticSplit split;
    split.clusters = balanced_clusters(n, spec.n_latent_clusters, rng);
    std::vector<std::string> ids(n);
    for (std::size_t i = 0; i < n; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%s_%06zu.jpg", prefix.c_str(), i);
        ids[i] = buf;
        split.labels.push_back(spec.label_of(split.clusters[i]));
    }

    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t li = 0; li < spec.layers.size(); ++li) {
        const auto& shape = spec.layers[li];
        const std::size_t positions = shape.height * shape.width;
        const std::size_t depth = shape.depth;
        std::vector<float> data(n * positions * depth);
        std::vector<double> spatial(positions);
        for (std::size_t a = 0; a < n; ++a) {
            const double* mu = means[li].data() + split.clusters[a] * depth;
            float* out = data.data() + a * positions * depth;
            for (std::size_t j = 0; j < depth; ++j) {
                const double channel_mean = mu[j] + spec.noise_sigma * gauss(rng);
                double avg = 0.0;
                for (auto& s : spatial) {
                    s = spec.spatial_sigma * gauss(rng);
                    avg += s;
                }
                avg /= static_cast<double>(positions);
                for (std::size_t p = 0; p < positions; ++p) {
                    out[p * depth + j] = static_cast<float>(channel_mean + spatial[p] - avg);
                }
            }
        }
        split.layers.emplace_back(n, shape.height, shape.width, depth, std::move(data), ids);
    }
    return split;
}

} // namespace detail

inline SyntheticDataset generate_dataset(const SyntheticSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    SyntheticDataset ds;
    for (const auto& shape : spec.layers) {
        std::vector<double> m(spec.n_latent_clusters * shape.depth);
        for (auto& v : m) v = unit(rng);
        ds.cluster_means.push_back(std::move(m));
    }
    ds.train = detail::generate_split(spec, "train", spec.n_train, ds.cluster_means, rng);
    ds.test = detail::generate_split(spec, "test", spec.n_test, ds.cluster_means, rng);
    return ds;
}

struct SyntheticFiles {
    std::vector<std::string> train_tensors; // parallel to SyntheticSpec::layers
    std::vector<std::string> test_tensors;
    std::string train_labels;
    std::string test_labels;
};

/// Writes train_<layer>.udft, test_<layer>.udft, train_labels.csv and
/// test_labels.csv into out_dir.
inline SyntheticFiles generate(const SyntheticSpec& spec, const std::string& out_dir) {
    const auto ds = generate_dataset(spec);
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    SyntheticFiles files;
    for (std::size_t li = 0; li < spec.layers.size(); ++li) {
        files.train_tensors.push_back((dir / ("train_" + spec.layers[li].name + ".udft")).string());
        files.test_tensors.push_back((dir / ("test_" + spec.layers[li].name + ".udft")).string());
        write_tensor_file(ds.train.layers[li], files.train_tensors.back());
        write_tensor_file(ds.test.layers[li], files.test_tensors.back());
    }
    files.train_labels = (dir / "train_labels.csv").string();
    files.test_labels = (dir / "test_labels.csv").string();
    write_labels(ds.train.layers.front().ids(), ds.train.labels, files.train_labels);
    write_labels(ds.test.layers.front().ids(), ds.test.labels, files.test_labels);
    return files;
}

} // namespace udf
