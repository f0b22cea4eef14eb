#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace ciconv {

/// Single-channel H x W map of doubles, row-major.
class Plane {
public:
    Plane() = default;
    Plane(int width, int height, double fill = 0.0)
        : width_(width), height_(height),
          data_(static_cast<std::size_t>(checked_area(width, height)), fill) {}
    Plane(int width, int height, std::vector<double> values)
        : width_(width), height_(height), data_(std::move(values)) {
        if (data_.size() != static_cast<std::size_t>(checked_area(width, height)))
            throw InvalidInput("plane data size does not match its dimensions");
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(int x, int y) { return data_[index(x, y)]; }
    double operator()(int x, int y) const { return data_[index(x, y)]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }
    std::span<double> row(int y) { return std::span(data_).subspan(index(0, y), width_); }
    std::span<const double> row(int y) const {
        return std::span(data_).subspan(index(0, y), width_);
    }

    bool same_shape(const Plane& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_;
    }

    bool operator==(const Plane&) const = default;

private:
    static long checked_area(int width, int height) {
        if (width < 1 || height < 1) throw InvalidInput("image dimensions must be at least 1x1");
        return static_cast<long>(width) * height;
    }
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * width_ + x;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

/// H x W x 3 image with interleaved R,G,B samples, nominally in [0,1].
class RgbImage {
public:
    RgbImage() = default;
    RgbImage(int width, int height)
        : width_(width), height_(height), data_(checked_size(width, height), 0.0) {}
    RgbImage(int width, int height, std::vector<double> interleaved)
        : width_(width), height_(height), data_(std::move(interleaved)) {
        if (data_.size() != checked_size(width, height))
            throw InvalidInput("rgb data size does not match its dimensions");
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t pixel_count() const noexcept { return data_.size() / 3; }

    double& at(int x, int y, int c) { return data_[index(x, y, c)]; }
    double at(int x, int y, int c) const { return data_[index(x, y, c)]; }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    Plane channel(int c) const {
        Plane p(width_, height_);
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = data_[3 * i + c];
        return p;
    }

    bool operator==(const RgbImage&) const = default;

private:
    static std::size_t checked_size(int width, int height) {
        if (width < 1 || height < 1) throw InvalidInput("image dimensions must be at least 1x1");
        return static_cast<std::size_t>(width) * height * 3;
    }
    std::size_t index(int x, int y, int c) const noexcept {
        return (static_cast<std::size_t>(y) * width_ + x) * 3 + c;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

inline bool all_finite(std::span<const double> values) {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

inline void require_finite(std::span<const double> values, const std::string& what) {
    if (!all_finite(values)) throw InvalidInput(what + " contains non-finite values");
}

}  // namespace ciconv
