#pragma once

// On-disk formats. Every integer and float is little-endian.
//
// Tensor container (.udft):
//   "UDFT" | u32 version=1 | u32 N | u32 H | u32 W | u32 D
//   N x (u16 id byte-length | UTF-8 id bytes)
//   N*H*W*D f32, sample-major then row, column, channel
//
// Vector container (.udfv):
//   "UDFV" | u32 version=1 | u32 N | u32 dim
//   N x (u16 id byte-length | UTF-8 id bytes)
//   N*dim f32, row-major
//
// Codebook (.udfc):
//   "UDFC" | u32 version=1 | u32 k | u32 dim | u64 seed | f64 inertia
//   k*dim f64, row-major
//
// Model (.udfm):
//   "UDFM" | u32 version=1 | u32 dim | f64 C | dim f64 weights | f64 bias weight
//
// Labels (.csv): one `sample_id,label` record per line, label is `private`
// or `public`; an optional first line `sample_id,label` is a header.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "udf/batch.hpp"
#include "udf/codebook.hpp"
#include "udf/error.hpp"
#include "udf/linear_model.hpp"

namespace udf {

inline constexpr std::uint32_t kFormatVersion = 1;

/// Class labels. Private images are the positive class.
inline constexpr int kPrivate = +1;
inline constexpr int kPublic = -1;

namespace detail {

static_assert(std::numeric_limits<float>::is_iec559 && std::numeric_limits<double>::is_iec559);

class ByteWriter {
public:
    void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }

    template <typename UInt>
    void uint(UInt v) {
        for (std::size_t i = 0; i < sizeof(UInt); ++i) {
            buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
        }
    }

    void f32(float v) { uint(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(path, "cannot open for writing");
        out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
        if (!out) throw IoError(path, "write failed");
    }

    std::size_t size() const noexcept { return buf_.size(); }

private:
    std::vector<char> buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::string path) : path_(std::move(path)) {
        std::ifstream in(path_, std::ios::binary);
        if (!in) throw IoError(path_, "cannot open for reading");
        buf_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }

    const std::string& path() const noexcept { return path_; }
    std::size_t size() const noexcept { return buf_.size(); }
    std::size_t remaining() const noexcept { return buf_.size() - pos_; }

    void need(std::size_t n, std::string_view what) const {
        if (remaining() < n) {
            throw FormatError(path_ + ": truncated " + std::string(what) + ": expected " +
                              std::to_string(pos_ + n) + " bytes, file has " +
                              std::to_string(buf_.size()));
        }
    }

    void magic(std::string_view expected) {
        need(expected.size(), "header");
        if (std::string_view(buf_.data() + pos_, expected.size()) != expected) {
            throw FormatError(path_ + ": bad magic '" +
                              std::string(buf_.data() + pos_, expected.size()) + "', expected '" +
                              std::string(expected) + "'");
        }
        pos_ += expected.size();
    }

    template <typename UInt>
    UInt uint(std::string_view what = "header") {
        need(sizeof(UInt), what);
        UInt v = 0;
        for (std::size_t i = 0; i < sizeof(UInt); ++i) {
            v |= static_cast<UInt>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
        }
        pos_ += sizeof(UInt);
        return v;
    }

    float f32() { return std::bit_cast<float>(uint<std::uint32_t>("payload")); }
    double f64() { return std::bit_cast<double>(uint<std::uint64_t>("payload")); }

    std::string string(std::size_t n) {
        need(n, "id table");
        std::string s(buf_.data() + pos_, n);
        pos_ += n;
        return s;
    }

    void version() {
        const auto v = uint<std::uint32_t>();
        if (v != kFormatVersion) {
            throw FormatError(path_ + ": unsupported format version " + std::to_string(v));
        }
    }

    /// The rest of the file must be exactly `n` payload bytes.
    void expect_payload(std::size_t n) const {
        if (remaining() != n) {
            throw FormatError(path_ + ": truncated or oversized payload: expected " +
                              std::to_string(pos_ + n) + " bytes, file has " +
                              std::to_string(buf_.size()));
        }
    }

private:
    std::string path_;
    std::vector<char> buf_;
    std::size_t pos_ = 0;
};

inline std::uint32_t checked_u32(std::size_t v, std::string_view what) {
    if (v > std::numeric_limits<std::uint32_t>::max()) {
        throw DimensionError(std::string(what) + " does not fit in 32 bits");
    }
    return static_cast<std::uint32_t>(v);
}

inline void write_ids(ByteWriter& w, const std::vector<std::string>& ids) {
    for (const auto& id : ids) {
        if (id.size() > std::numeric_limits<std::uint16_t>::max()) {
            throw DataError("sample id longer than 65535 bytes");
        }
        w.uint(static_cast<std::uint16_t>(id.size()));
        w.bytes(id);
    }
}

inline std::vector<std::string> read_ids(ByteReader& r, std::size_t n) {
    std::vector<std::string> ids;
    ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto len = r.uint<std::uint16_t>("id table");
        ids.push_back(r.string(len));
    }
    return ids;
}

inline void reject_non_finite(std::span<const float> data, std::size_t per_sample,
                              const std::string& where) {
    if (auto bad = first_non_finite(data, per_sample)) {
        throw DataError(where + ": non-finite value in sample " + std::to_string(*bad));
    }
}

inline std::vector<float> read_floats(ByteReader& r, std::size_t n) {
    std::vector<float> data(n);
    for (auto& v : data) v = r.f32();
    return data;
}

} // namespace detail

inline void write_tensor_file(const FeatureMapBatch& batch, const std::string& path) {
    detail::reject_non_finite(batch.data(), batch.sample_size(), path);
    detail::ByteWriter w;
    w.bytes("UDFT");
    w.uint(kFormatVersion);
    w.uint(detail::checked_u32(batch.count(), "N"));
    w.uint(detail::checked_u32(batch.height(), "H"));
    w.uint(detail::checked_u32(batch.width(), "W"));
    w.uint(detail::checked_u32(batch.depth(), "D"));
    detail::write_ids(w, batch.ids());
    for (float v : batch.data()) w.f32(v);
    w.save(path);
}

inline FeatureMapBatch read_tensor_file(const std::string& path) {
    detail::ByteReader r(path);
    r.magic("UDFT");
    r.version();
    const std::size_t n = r.uint<std::uint32_t>();
    const std::size_t h = r.uint<std::uint32_t>();
    const std::size_t w = r.uint<std::uint32_t>();
    const std::size_t d = r.uint<std::uint32_t>();
    if (n == 0 || h == 0 || w == 0 || d == 0) {
        throw FormatError(path + ": header has a zero dimension");
    }
    auto ids = detail::read_ids(r, n);
    const std::size_t values = n * h * w * d;
    r.expect_payload(values * sizeof(float));
    auto data = detail::read_floats(r, values);
    detail::reject_non_finite(data, h * w * d, path);
    return FeatureMapBatch(n, h, w, d, std::move(data), std::move(ids));
}

inline void write_vector_file(const FeatureVectorBatch& batch, const std::string& path) {
    detail::reject_non_finite(batch.data(), batch.dim(), path);
    detail::ByteWriter w;
    w.bytes("UDFV");
    w.uint(kFormatVersion);
    w.uint(detail::checked_u32(batch.count(), "N"));
    w.uint(detail::checked_u32(batch.dim(), "dim"));
    detail::write_ids(w, batch.ids());
    for (float v : batch.data()) w.f32(v);
    w.save(path);
}

inline FeatureVectorBatch read_vector_file(const std::string& path) {
    detail::ByteReader r(path);
    r.magic("UDFV");
    r.version();
    const std::size_t n = r.uint<std::uint32_t>();
    const std::size_t dim = r.uint<std::uint32_t>();
    if (n == 0 || dim == 0) throw FormatError(path + ": header has a zero dimension");
    auto ids = detail::read_ids(r, n);
    r.expect_payload(n * dim * sizeof(float));
    auto data = detail::read_floats(r, n * dim);
    detail::reject_non_finite(data, dim, path);
    return FeatureVectorBatch(n, dim, std::move(data), std::move(ids));
}

inline void write_codebook_file(const Codebook& cb, const std::string& path) {
    cb.validate();
    detail::ByteWriter w;
    w.bytes("UDFC");
    w.uint(kFormatVersion);
    w.uint(detail::checked_u32(cb.k, "k"));
    w.uint(detail::checked_u32(cb.dim, "dim"));
    w.uint(static_cast<std::uint64_t>(cb.seed));
    w.f64(cb.inertia);
    for (double v : cb.centroids) w.f64(v);
    w.save(path);
}

inline Codebook read_codebook_file(const std::string& path) {
    detail::ByteReader r(path);
    r.magic("UDFC");
    r.version();
    Codebook cb;
    cb.k = r.uint<std::uint32_t>();
    cb.dim = r.uint<std::uint32_t>();
    cb.seed = r.uint<std::uint64_t>();
    cb.inertia = r.f64();
    if (cb.k == 0 || cb.dim == 0) throw FormatError(path + ": header has a zero dimension");
    r.expect_payload(cb.k * cb.dim * sizeof(double));
    cb.centroids.resize(cb.k * cb.dim);
    for (auto& v : cb.centroids) {
        v = r.f64();
        if (!std::isfinite(v)) throw DataError(path + ": non-finite centroid value");
    }
    return cb;
}

inline void write_model_file(const LinearModel& model, const std::string& path) {
    detail::ByteWriter w;
    w.bytes("UDFM");
    w.uint(kFormatVersion);
    w.uint(detail::checked_u32(model.dim(), "dim"));
    w.f64(model.C);
    for (double v : model.weights) w.f64(v);
    w.f64(model.bias_weight);
    w.save(path);
}

inline LinearModel read_model_file(const std::string& path) {
    detail::ByteReader r(path);
    r.magic("UDFM");
    r.version();
    const std::size_t dim = r.uint<std::uint32_t>();
    LinearModel model;
    model.C = r.f64();
    r.expect_payload((dim + 1) * sizeof(double));
    model.weights.resize(dim);
    for (auto& v : model.weights) v = r.f64();
    model.bias_weight = r.f64();
    return model;
}

/// sample id -> class label (+1 private, -1 public).
struct LabelSet {
    std::map<std::string, int> entries;

    int at(const std::string& id) const {
        auto it = entries.find(id);
        if (it == entries.end()) throw DataError("no label for sample '" + id + "'");
        return it->second;
    }
};

inline std::string_view label_name(int label) { return label > 0 ? "private" : "public"; }

inline LabelSet parse_labels(std::istream& in, const std::string& source) {
    LabelSet labels;
    std::string line;
    std::size_t line_no = 0;
    bool any_record = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!any_record && line == "sample_id,label") {
            any_record = true;
            continue;
        }
        any_record = true;
        const auto comma = line.rfind(',');
        if (comma == std::string::npos) {
            throw FormatError(source + ":" + std::to_string(line_no) + ": expected 'sample_id,label'");
        }
        std::string id = line.substr(0, comma);
        const std::string token = line.substr(comma + 1);
        int label = 0;
        if (token == "private") {
            label = kPrivate;
        } else if (token == "public") {
            label = kPublic;
        } else {
            throw DataError(source + ":" + std::to_string(line_no) + ": unknown label '" + token + "'");
        }
        if (!labels.entries.emplace(id, label).second) {
            throw DataError(source + ":" + std::to_string(line_no) + ": duplicate sample id '" + id + "'");
        }
    }
    if (labels.entries.empty()) throw DataError(source + ": label file is empty");
    return labels;
}

inline LabelSet read_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path, "cannot open label file");
    return parse_labels(in, path);
}

/// Writes labels in the given id order, with header.
inline void write_labels(const std::vector<std::string>& ids, std::span<const int> labels,
                         const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError(path, "cannot open for writing");
    out << "sample_id,label\n";
    for (std::size_t i = 0; i < ids.size(); ++i) out << ids[i] << ',' << label_name(labels[i]) << '\n';
    if (!out) throw IoError(path, "write failed");
}

/// Labels aligned with the batch rows. Every sample must be labelled.
inline std::vector<int> labels_for(const std::vector<std::string>& ids, const LabelSet& labels) {
    std::vector<int> y;
    y.reserve(ids.size());
    for (const auto& id : ids) y.push_back(labels.at(id));
    return y;
}

} // namespace udf
