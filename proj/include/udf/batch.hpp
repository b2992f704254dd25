#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "udf/error.hpp"

namespace udf {

namespace detail {

inline void check_unique_ids(const std::vector<std::string>& ids) {
    std::unordered_set<std::string> seen;
    seen.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (!seen.insert(ids[i]).second) {
            throw DataError("duplicate sample id '" + ids[i] + "' at index " + std::to_string(i));
        }
    }
}

/// Index of the first sample containing a NaN/Inf, if any.
inline std::optional<std::size_t> first_non_finite(std::span<const float> data,
                                                   std::size_t per_sample) {
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!std::isfinite(data[i])) return i / per_sample;
    }
    return std::nullopt;
}

} // namespace detail

/// N activation maps of shape H x W x D, stored sample-major then row,
/// column, channel.
class FeatureMapBatch {
public:
    FeatureMapBatch(std::size_t count, std::size_t height, std::size_t width, std::size_t depth,
                    std::vector<float> data, std::vector<std::string> ids)
        : count_(count), height_(height), width_(width), depth_(depth),
          data_(std::move(data)), ids_(std::move(ids)) {
        if (count_ == 0 || height_ == 0 || width_ == 0 || depth_ == 0) {
            throw DimensionError("feature map batch dimensions must be positive (N=" +
                                 std::to_string(count_) + " H=" + std::to_string(height_) +
                                 " W=" + std::to_string(width_) + " D=" + std::to_string(depth_) + ")");
        }
        if (data_.size() != count_ * sample_size()) {
            throw DimensionError("feature map data holds " + std::to_string(data_.size()) +
                                 " values, expected " + std::to_string(count_ * sample_size()));
        }
        if (ids_.size() != count_) {
            throw DimensionError("feature map batch has " + std::to_string(ids_.size()) +
                                 " ids for " + std::to_string(count_) + " samples");
        }
        detail::check_unique_ids(ids_);
    }

    std::size_t count() const noexcept { return count_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t depth() const noexcept { return depth_; }
    std::size_t sample_size() const noexcept { return height_ * width_ * depth_; }

    std::span<const float> data() const noexcept { return data_; }
    std::span<float> data() noexcept { return data_; }
    const std::vector<std::string>& ids() const noexcept { return ids_; }

    std::span<const float> sample(std::size_t a) const {
        return std::span<const float>(data_).subspan(a * sample_size(), sample_size());
    }

    float at(std::size_t a, std::size_t row, std::size_t col, std::size_t channel) const {
        return data_[((a * height_ + row) * width_ + col) * depth_ + channel];
    }

    friend bool operator==(const FeatureMapBatch&, const FeatureMapBatch&) = default;

private:
    std::size_t count_;
    std::size_t height_;
    std::size_t width_;
    std::size_t depth_;
    std::vector<float> data_;
    std::vector<std::string> ids_;
};

/// N row vectors of a common dimension.
class FeatureVectorBatch {
public:
    FeatureVectorBatch(std::size_t count, std::size_t dim, std::vector<float> data,
                       std::vector<std::string> ids)
        : count_(count), dim_(dim), data_(std::move(data)), ids_(std::move(ids)) {
        if (count_ == 0 || dim_ == 0) {
            throw DimensionError("feature vector batch dimensions must be positive (N=" +
                                 std::to_string(count_) + " dim=" + std::to_string(dim_) + ")");
        }
        if (data_.size() != count_ * dim_) {
            throw DimensionError("feature vector data holds " + std::to_string(data_.size()) +
                                 " values, expected " + std::to_string(count_ * dim_));
        }
        if (ids_.size() != count_) {
            throw DimensionError("feature vector batch has " + std::to_string(ids_.size()) +
                                 " ids for " + std::to_string(count_) + " samples");
        }
        detail::check_unique_ids(ids_);
    }

    /// Zero-filled batch with the given ids.
    FeatureVectorBatch(std::size_t dim, std::vector<std::string> ids)
        : FeatureVectorBatch(ids.size(), dim, std::vector<float>(ids.size() * dim), ids) {}

    std::size_t count() const noexcept { return count_; }
    std::size_t dim() const noexcept { return dim_; }

    std::span<const float> data() const noexcept { return data_; }
    std::span<float> data() noexcept { return data_; }
    const std::vector<std::string>& ids() const noexcept { return ids_; }

    std::span<const float> row(std::size_t i) const {
        return std::span<const float>(data_).subspan(i * dim_, dim_);
    }
    std::span<float> row(std::size_t i) { return std::span<float>(data_).subspan(i * dim_, dim_); }

    /// New batch holding the given rows, in the given order.
    FeatureVectorBatch select(std::span<const std::size_t> rows) const {
        std::vector<float> data;
        std::vector<std::string> ids;
        data.reserve(rows.size() * dim_);
        ids.reserve(rows.size());
        for (std::size_t r : rows) {
            const auto src = row(r);
            data.insert(data.end(), src.begin(), src.end());
            ids.push_back(ids_[r]);
        }
        return FeatureVectorBatch(rows.size(), dim_, std::move(data), std::move(ids));
    }

    friend bool operator==(const FeatureVectorBatch&, const FeatureVectorBatch&) = default;

private:
    std::size_t count_;
    std::size_t dim_;
    std::vector<float> data_;
    std::vector<std::string> ids_;
};

} // namespace udf
