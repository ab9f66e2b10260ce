#pragma once

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <span>
#include <vector>

namespace dynclean {

struct Point {
    int x = 0;
    int y = 0;

    friend constexpr bool operator==(const Point&, const Point&) = default;
    constexpr Point operator+(Point o) const { return {x + o.x, y + o.y}; }
    constexpr Point operator-(Point o) const { return {x - o.x, y - o.y}; }
};

/// Inclusive-exclusive pixel rectangle [x0, x1) x [y0, y1).
struct Rect {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;

    constexpr int width() const { return x1 - x0; }
    constexpr int height() const { return y1 - y0; }
    constexpr bool empty() const { return x1 <= x0 || y1 <= y0; }
    constexpr bool contains(Point p) const { return p.x >= x0 && p.x < x1 && p.y >= y0 && p.y < y1; }

    constexpr Rect intersect(const Rect& o) const {
        return {std::max(x0, o.x0), std::max(y0, o.y0), std::min(x1, o.x1), std::min(y1, o.y1)};
    }

    /// Square of side 2*radius+1 centred at c.
    static constexpr Rect centered(Point c, int radius) {
        return {c.x - radius, c.y - radius, c.x + radius + 1, c.y + radius + 1};
    }

    friend constexpr bool operator==(const Rect&, const Rect&) = default;
};

struct Rgb8 {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    friend constexpr bool operator==(const Rgb8&, const Rgb8&) = default;
};

/// CIE L*a*b* triple (D65).
struct Lab {
    float L = 0.f;
    float a = 0.f;
    float b = 0.f;

    friend constexpr bool operator==(const Lab&, const Lab&) = default;
};

/// Dense row-major 2D grid of T.
template <typename T>
class Plane {
public:
    Plane() = default;
    Plane(int width, int height, T fill = T{})
        : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height, fill) {
        assert(width >= 0 && height >= 0);
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }
    Rect bounds() const { return {0, 0, width_, height_}; }
    bool contains(Point p) const { return p.x >= 0 && p.y >= 0 && p.x < width_ && p.y < height_; }

    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

    T& operator()(int x, int y) {
        assert(x >= 0 && y >= 0 && x < width_ && y < height_);
        return data_[index(x, y)];
    }
    const T& operator()(int x, int y) const {
        assert(x >= 0 && y >= 0 && x < width_ && y < height_);
        return data_[index(x, y)];
    }
    T& operator()(Point p) { return (*this)(p.x, p.y); }
    const T& operator()(Point p) const { return (*this)(p.x, p.y); }

    /// Edge-replicated read.
    const T& clamped(int x, int y) const {
        return (*this)(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1));
    }

    Point clamp(Point p) const { return {std::clamp(p.x, 0, width_ - 1), std::clamp(p.y, 0, height_ - 1)}; }

    std::span<T> pixels() { return data_; }
    std::span<const T> pixels() const { return data_; }

    friend bool operator==(const Plane&, const Plane&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

using RgbImage = Plane<Rgb8>;
using LabImage = Plane<Lab>;
/// Binary mask, 0 or 1 per pixel.
using Mask = Plane<std::uint8_t>;

} // namespace dynclean
