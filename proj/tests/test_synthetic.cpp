#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>

#include "oracles.hpp"
#include "test_support.hpp"
#include "udf/feature_io.hpp"
#include "udf/pooling.hpp"
#include "udf/synthetic.hpp"

using namespace udf;

TEST(Synthetic, ShapesIdsAndBalancedLabels) {
    SyntheticSpec spec;
    spec.n_train = 40;
    spec.n_test = 16;
    spec.layers = {{"a", 2, 3, 5}, {"b", 1, 1, 7}};
    spec.n_latent_clusters = 4;
    const auto ds = generate_dataset(spec);
    ASSERT_EQ(ds.train.layers.size(), 2u);
    EXPECT_EQ(ds.train.layers[0].count(), 40u);
    EXPECT_EQ(ds.train.layers[0].height(), 2u);
    EXPECT_EQ(ds.train.layers[0].width(), 3u);
    EXPECT_EQ(ds.train.layers[1].depth(), 7u);
    EXPECT_EQ(ds.test.layers[1].count(), 16u);
    EXPECT_EQ(ds.train.layers[0].ids(), ds.train.layers[1].ids());
    EXPECT_EQ(ds.train.layers[0].ids()[3], "train_000003.jpg");
    std::size_t priv = 0;
    for (std::size_t i = 0; i < 40; ++i) {
        EXPECT_EQ(ds.train.labels[i], spec.label_of(ds.train.clusters[i]));
        priv += ds.train.labels[i] == kPrivate;
    }
    EXPECT_EQ(priv, 20u);
}

TEST(Synthetic, SameSeedSameBytes) {
    SyntheticSpec spec;
    spec.n_train = 30;
    spec.n_test = 10;
    spec.seed = 9;
    const auto a = generate_dataset(spec);
    const auto b = generate_dataset(spec);
    EXPECT_EQ(a.train.layers[0], b.train.layers[0]);
    EXPECT_EQ(a.test.layers[0], b.test.layers[0]);
    spec.seed = 10;
    EXPECT_FALSE(generate_dataset(spec).train.layers[0] == a.train.layers[0]);
}

TEST(Synthetic, PooledFeaturesRecoverClusterMeans) {
    SyntheticSpec spec;
    spec.n_train = 64;
    spec.n_test = 8;
    spec.noise_sigma = 0.0;
    spec.layers = {{"l", 4, 4, 12}};
    const auto ds = generate_dataset(spec);
    const auto pooled = oracle::pool(ds.train.layers[0]);
    for (std::size_t i = 0; i < 64; ++i) {
        for (std::size_t j = 0; j < 12; ++j) {
            EXPECT_NEAR(pooled[i][j], ds.cluster_means[0][ds.train.clusters[i] * 12 + j], 1e-5);
        }
    }
}

TEST(Synthetic, CustomLabelRuleAndValidation) {
    SyntheticSpec spec;
    spec.n_train = 12;
    spec.n_test = 6;
    spec.n_latent_clusters = 3;
    spec.label_rule = {1, 1, -1};
    const auto ds = generate_dataset(spec);
    for (std::size_t i = 0; i < 12; ++i) EXPECT_EQ(ds.train.labels[i], ds.train.clusters[i] == 2 ? -1 : 1);
    spec.label_rule = {1, -1};
    EXPECT_THROW(generate_dataset(spec), DataError);
    spec.label_rule = {1, 0, -1};
    EXPECT_THROW(generate_dataset(spec), DataError);
    spec.label_rule.clear();
    spec.n_train = 0;
    EXPECT_THROW(generate_dataset(spec), DataError);
}

TEST(Synthetic, WritesReadableFiles) {
    udf::testing::TempDir dir("synth");
    SyntheticSpec spec;
    spec.n_train = 20;
    spec.n_test = 10;
    spec.layers = {{"x", 2, 2, 4}};
    const auto files = generate(spec, dir.path().string());
    const auto train = read_tensor_file(files.train_tensors[0]);
    EXPECT_EQ(train.count(), 20u);
    const auto labels = read_labels(files.train_labels);
    const auto y = labels_for(train.ids(), labels);
    EXPECT_EQ(y, generate_dataset(spec).train.labels);
    EXPECT_TRUE(std::filesystem::exists(dir.file("test_x.udft")));
}
