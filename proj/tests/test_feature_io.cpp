#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "oracles.hpp"
#include "test_support.hpp"
#include "udf/feature_io.hpp"

using namespace udf;
using udf::testing::TempDir;

namespace {

std::vector<char> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void expect_bitwise_equal(std::span<const float> a, std::span<const float> b) {
    ASSERT_EQ(a.size(), b.size());
    EXPECT_EQ(0, std::memcmp(a.data(), b.data(), a.size() * sizeof(float)));
}

} // namespace

TEST(FeatureIo, SmallestTensorRoundTrip) {
    TempDir dir("io");
    const FeatureMapBatch b(1, 1, 1, 1, {0.0f}, {"a"});
    write_tensor_file(b, dir.file("t.udft"));
    // 4 magic + 5 u32 header fields, one id entry, one float
    EXPECT_EQ(std::filesystem::file_size(dir.file("t.udft")), 24u + (2u + 1u) + 4u);
    const auto back = read_tensor_file(dir.file("t.udft"));
    EXPECT_EQ(back, b);
}

TEST(FeatureIo, TensorHeaderLayoutIsLittleEndian) {
    TempDir dir("io");
    const FeatureMapBatch b(1, 2, 3, 4, std::vector<float>(24, 1.5f), {"xy"});
    write_tensor_file(b, dir.file("t.udft"));
    const auto bytes = slurp(dir.file("t.udft"));
    ASSERT_GE(bytes.size(), 30u);
    EXPECT_EQ(std::string(bytes.data(), 4), "UDFT");
    const unsigned char expected[] = {1, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 3, 0, 0, 0, 4, 0, 0, 0, 2, 0, 'x', 'y'};
    EXPECT_EQ(0, std::memcmp(bytes.data() + 4, expected, sizeof expected));
    // 1.5f = 0x3FC00000
    const unsigned char first_float[] = {0x00, 0x00, 0xC0, 0x3F};
    EXPECT_EQ(0, std::memcmp(bytes.data() + 28, first_float, 4));
}

TEST(FeatureIo, TensorDataSectionSizeMatchesOracle) {
    TempDir dir("io");
    const auto b = udf::testing::random_maps(2, 7, 7, 512, 11);
    write_tensor_file(b, dir.file("t.udft"));
    const auto size = std::filesystem::file_size(dir.file("t.udft"));
    EXPECT_EQ(size, oracle::tensor_file_bytes(2, 7, 7, 512, b.ids()));
    const std::size_t header_and_ids = 24 + (2 + 2) * 2; // ids "s0", "s1"
    EXPECT_EQ(size - header_and_ids, 200704u);
}

TEST(FeatureIo, TensorRoundTripIsBitExact) {
    TempDir dir("io");
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto b = udf::testing::random_maps(3 + seed, 2, 3, 5, seed, -1e6, 1e6);
        write_tensor_file(b, dir.file("t.udft"));
        const auto back = read_tensor_file(dir.file("t.udft"));
        expect_bitwise_equal(back.data(), b.data());
        EXPECT_EQ(back.ids(), b.ids());
        EXPECT_EQ(back.height(), 2u);
        EXPECT_EQ(back.width(), 3u);
        EXPECT_EQ(back.depth(), 5u);
    }
}

TEST(FeatureIo, SubnormalsAndNegativeZeroSurvive) {
    TempDir dir("io");
    const std::vector<float> vals{-0.0f, std::numeric_limits<float>::denorm_min(),
                                  std::numeric_limits<float>::max(), -std::numeric_limits<float>::lowest()};
    const FeatureVectorBatch b(1, 4, vals, {"z"});
    write_vector_file(b, dir.file("v.udfv"));
    expect_bitwise_equal(read_vector_file(dir.file("v.udfv")).data(), b.data());
}

TEST(FeatureIo, WriteRejectsNanWithSampleIndex) {
    TempDir dir("io");
    std::vector<float> data(3 * 4, 1.0f);
    data[2 * 4 + 1] = std::numeric_limits<float>::quiet_NaN();
    const FeatureMapBatch b(3, 1, 2, 2, data, {"a", "b", "c"});
    try {
        write_tensor_file(b, dir.file("t.udft"));
        FAIL() << "expected rejection";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("sample 2"), std::string::npos) << e.what();
    }
}

TEST(FeatureIo, ReadRejectsBadMagic) {
    TempDir dir("io");
    const FeatureMapBatch b(1, 1, 1, 1, {1.0f}, {"a"});
    write_tensor_file(b, dir.file("t.udft"));
    auto bytes = slurp(dir.file("t.udft"));
    std::memcpy(bytes.data(), "XXXX", 4);
    std::ofstream(dir.file("bad.udft"), std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    try {
        read_tensor_file(dir.file("bad.udft"));
        FAIL() << "expected bad magic";
    } catch (const FormatError& e) {
        EXPECT_NE(std::string(e.what()).find("bad magic"), std::string::npos) << e.what();
    }
}

TEST(FeatureIo, ReadRejectsUnsupportedVersion) {
    TempDir dir("io");
    write_tensor_file(FeatureMapBatch(1, 1, 1, 1, {1.0f}, {"a"}), dir.file("t.udft"));
    auto bytes = slurp(dir.file("t.udft"));
    bytes[4] = 2;
    std::ofstream(dir.file("v2.udft"), std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    EXPECT_THROW(read_tensor_file(dir.file("v2.udft")), FormatError);
}

TEST(FeatureIo, ReadReportsTruncationWithByteCounts) {
    TempDir dir("io");
    const auto b = udf::testing::random_maps(2, 2, 2, 3, 5);
    write_tensor_file(b, dir.file("t.udft"));
    const auto full = std::filesystem::file_size(dir.file("t.udft"));
    std::filesystem::resize_file(dir.file("t.udft"), full - 10);
    try {
        read_tensor_file(dir.file("t.udft"));
        FAIL() << "expected truncation";
    } catch (const FormatError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("expected " + std::to_string(full)), std::string::npos) << msg;
        EXPECT_NE(msg.find("file has " + std::to_string(full - 10)), std::string::npos) << msg;
    }
}

TEST(FeatureIo, ReadRejectsTrailingBytes) {
    TempDir dir("io");
    write_vector_file(FeatureVectorBatch(1, 2, {1.0f, 2.0f}, {"a"}), dir.file("v.udfv"));
    std::ofstream(dir.file("v.udfv"), std::ios::binary | std::ios::app) << "junk";
    EXPECT_THROW(read_vector_file(dir.file("v.udfv")), FormatError);
}

TEST(FeatureIo, ReadRejectsNonFinitePayload) {
    TempDir dir("io");
    write_vector_file(FeatureVectorBatch(2, 1, {1.0f, 2.0f}, {"a", "b"}), dir.file("v.udfv"));
    auto bytes = slurp(dir.file("v.udfv"));
    const float inf = std::numeric_limits<float>::infinity();
    std::memcpy(bytes.data() + bytes.size() - 4, &inf, 4);
    std::ofstream(dir.file("inf.udfv"), std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    try {
        read_vector_file(dir.file("inf.udfv"));
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("sample 1"), std::string::npos);
    }
}

TEST(FeatureIo, MissingFileIsIoError) {
    EXPECT_THROW(read_tensor_file("/nonexistent/x.udft"), IoError);
}

TEST(FeatureIo, VectorFileSizes) {
    TempDir dir("io");
    const FeatureVectorBatch zeros(1, 250, std::vector<float>(250, 0.0f), {"only"});
    write_vector_file(zeros, dir.file("z.udfv"));
    EXPECT_EQ(read_vector_file(dir.file("z.udfv")), zeros);

    const auto b = udf::testing::random_vectors(3, 500, 1);
    write_vector_file(b, dir.file("v.udfv"));
    const auto size = std::filesystem::file_size(dir.file("v.udfv"));
    EXPECT_EQ(size, oracle::vector_file_bytes(3, 500, b.ids()));
    EXPECT_EQ(size - (16 + 3 * (2 + 2)), 6000u);
}

TEST(FeatureIo, ZeroDimensionRejectedAtConstruction) {
    EXPECT_THROW(FeatureVectorBatch(1, 0, {}, {"a"}), DimensionError);
    EXPECT_THROW(FeatureMapBatch(1, 1, 0, 1, {}, {"a"}), DimensionError);
    EXPECT_THROW(FeatureVectorBatch(2, 2, {1, 2, 3}, {"a", "b"}), DimensionError);
    EXPECT_THROW(FeatureVectorBatch(2, 1, {1, 2}, {"a", "a"}), DataError);
}

TEST(FeatureIo, UnicodeIdsRoundTrip) {
    TempDir dir("io");
    const FeatureVectorBatch b(2, 1, {1.0f, 2.0f}, {"caf\xc3\xa9.jpg", "\xe5\x9b\xbe.png"});
    write_vector_file(b, dir.file("u.udfv"));
    EXPECT_EQ(read_vector_file(dir.file("u.udfv")).ids(), b.ids());
}

TEST(FeatureIo, CodebookAndModelRoundTrip) {
    TempDir dir("io");
    Codebook cb;
    cb.k = 3;
    cb.dim = 2;
    cb.centroids = {0.1, -2.5, 1e-300, 3.0, 7.0, -0.0};
    cb.seed = 0xDEADBEEFCAFEULL;
    cb.inertia = 12.25;
    write_codebook_file(cb, dir.file("c.udfc"));
    EXPECT_EQ(std::filesystem::file_size(dir.file("c.udfc")), 4u + 12u + 8u + 8u + 6u * 8u);
    const auto cb2 = read_codebook_file(dir.file("c.udfc"));
    EXPECT_EQ(cb2.k, 3u);
    EXPECT_EQ(cb2.dim, 2u);
    EXPECT_EQ(cb2.seed, cb.seed);
    EXPECT_EQ(cb2.inertia, cb.inertia);
    EXPECT_EQ(0, std::memcmp(cb2.centroids.data(), cb.centroids.data(), 6 * sizeof(double)));

    LinearModel m;
    m.weights = {1.0, -2.0, 0.5};
    m.bias_weight = 0.25;
    m.C = 17.0;
    write_model_file(m, dir.file("m.udfm"));
    EXPECT_EQ(std::filesystem::file_size(dir.file("m.udfm")), 4u + 8u + 8u + 4u * 8u);
    const auto m2 = read_model_file(dir.file("m.udfm"));
    EXPECT_EQ(m2.weights, m.weights);
    EXPECT_EQ(m2.bias_weight, m.bias_weight);
    EXPECT_EQ(m2.C, m.C);
}

TEST(Labels, ParsesTwoLines) {
    std::istringstream in("a.jpg,private\nb.jpg,public");
    const auto l = parse_labels(in, "mem");
    EXPECT_EQ(l.entries.size(), 2u);
    EXPECT_EQ(l.at("a.jpg"), +1);
    EXPECT_EQ(l.at("b.jpg"), -1);
}

TEST(Labels, HeaderAndCrlfAccepted) {
    std::istringstream in("sample_id,label\r\na.jpg,public\r\n\r\nb,private\r\n");
    const auto l = parse_labels(in, "mem");
    EXPECT_EQ(l.entries.size(), 2u);
    EXPECT_EQ(l.at("a.jpg"), -1);
}

TEST(Labels, Errors) {
    std::istringstream unknown("a.jpg,secret");
    EXPECT_THROW(parse_labels(unknown, "mem"), DataError);
    std::istringstream dup("a.jpg,private\na.jpg,public\n");
    try {
        parse_labels(dup, "mem");
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("duplicate"), std::string::npos);
    }
    std::istringstream empty("");
    EXPECT_THROW(parse_labels(empty, "mem"), DataError);
    std::istringstream header_only("sample_id,label\n");
    EXPECT_THROW(parse_labels(header_only, "mem"), DataError);
}

TEST(Labels, AlignedWithBatchOrder) {
    TempDir dir("io");
    write_labels({"x", "y", "z"}, std::vector<int>{1, -1, 1}, dir.file("l.csv"));
    const auto l = read_labels(dir.file("l.csv"));
    EXPECT_EQ(labels_for({"z", "x", "y"}, l), (std::vector<int>{1, 1, -1}));
    EXPECT_THROW(labels_for({"missing"}, l), DataError);
}
