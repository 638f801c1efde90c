#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace srs {

/// Position or displacement. Only the first `dim` components are meaningful;
/// the rest stay at zero so that d = 1 and d = 2 share one representation.
using Vec = std::array<double, 2>;

inline double norm2(const Vec& v, int dim) noexcept {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) s += v[i] * v[i];
    return s;
}

inline double norm(const Vec& v, int dim) noexcept { return std::sqrt(norm2(v, dim)); }

/// Axis-aligned box [lo, hi] in torus coordinates (no wrap-around).
struct Box {
    Vec lo{0.0, 0.0};
    Vec hi{0.0, 0.0};

    bool contains(const Vec& p, int dim) const noexcept {
        for (int i = 0; i < dim; ++i)
            if (p[i] < lo[i] || p[i] > hi[i]) return false;
        return true;
    }
    double volume(int dim) const noexcept {
        double v = 1.0;
        for (int i = 0; i < dim; ++i) v *= std::max(0.0, hi[i] - lo[i]);
        return v;
    }
    /// Cube [lo, lo + side]^dim.
    static Box cube(double lo, double side, int dim) noexcept {
        Box b;
        for (int i = 0; i < dim; ++i) {
            b.lo[i] = lo;
            b.hi[i] = lo + side;
        }
        return b;
    }
};

/// The periodic window [0, L)^d standing in for R^d.
class TorusGeometry {
public:
    /// Throws std::invalid_argument for d outside {1, 2} or L <= 0.
    TorusGeometry(int dim, double side);

    int dim() const noexcept { return dim_; }
    double side() const noexcept { return side_; }
    double volume() const noexcept { return dim_ == 1 ? side_ : side_ * side_; }

    /// Maps every coordinate into [0, L).
    Vec wrap(Vec p) const noexcept;
    /// Minimal-image displacement from `from` to `to`, each component in [-L/2, L/2].
    Vec displacement(const Vec& from, const Vec& to) const noexcept;
    double distance(const Vec& x, const Vec& y) const noexcept {
        return norm(displacement(x, y), dim_);
    }
    /// Periodic distance from a point to a box (0 inside the box).
    double distance_to_box(const Vec& p, const Box& box) const noexcept;

    friend bool operator==(const TorusGeometry&, const TorusGeometry&) = default;

private:
    int dim_;
    double side_;
};

/// Finite point set on the torus with a cell-list index for range queries.
///
/// Point ids are dense indices [0, size()). Erasing id k moves the last point
/// into slot k; callers holding parallel arrays must mirror that swap.
class Configuration {
public:
    /// `min_cell_size` is the smallest admissible cell edge (typically the largest
    /// interaction range). The torus side is split into floor(L / min_cell_size)
    /// cells per axis, at least one.
    Configuration(TorusGeometry geometry, double min_cell_size);

    const TorusGeometry& geometry() const noexcept { return geom_; }
    int dim() const noexcept { return geom_.dim(); }
    std::size_t size() const noexcept { return points_.size(); }
    bool empty() const noexcept { return points_.empty(); }
    const Vec& operator[](std::size_t id) const noexcept { return points_[id]; }
    std::span<const Vec> points() const noexcept { return points_; }

    double cell_size() const noexcept { return cell_size_; }
    int cells_per_axis() const noexcept { return cells_per_axis_; }
    std::size_t cell_count() const noexcept { return cells_.size(); }
    std::size_t cell_of(std::size_t id) const noexcept { return cell_id_[id]; }
    std::size_t cell_index(const Vec& p) const noexcept;
    std::span<const std::uint32_t> cell_members(std::size_t cell) const noexcept {
        return cells_[cell];
    }

    /// Inserts p (wrapped onto the torus) and returns its id.
    std::size_t insert(const Vec& p);
    /// Removes the point with the given id; the former last point takes its id.
    void erase(std::size_t id);
    void clear();

    /// Calls f(id, displacement_from_p, squared_distance) for every stored point
    /// within `radius` of p (minimal image), including a point located at p itself.
    template <typename F>
    void for_each_within(const Vec& p, double radius, F&& f) const;

    /// Same as for_each_within but by exhaustive scan; used as a reference.
    template <typename F>
    void for_each_within_brute(const Vec& p, double radius, F&& f) const;

    /// Structural self-check: every id is in exactly one cell and that cell
    /// matches cell_index() of its position.
    bool index_consistent() const;

    friend bool operator==(const Configuration& a, const Configuration& b) {
        return a.geom_ == b.geom_ && a.points_ == b.points_;
    }

private:
    /// Cells [start, start + count) (mod n) along one axis cover [-radius, radius]
    /// around the center cell, each cell at most once.
    struct AxisSpan {
        int start;
        int count;
    };
    int axis_cell(double coord) const noexcept;
    AxisSpan axis_span(int center, double radius) const noexcept;

    TorusGeometry geom_;
    int cells_per_axis_;
    double cell_size_;
    std::vector<Vec> points_;
    std::vector<std::size_t> cell_id_;
    std::vector<std::uint32_t> slot_in_cell_;
    std::vector<std::vector<std::uint32_t>> cells_;
};

template <typename F>
void Configuration::for_each_within(const Vec& p, double radius, F&& f) const {
    const double r2 = radius * radius;
    const Vec c = geom_.wrap(p);
    const AxisSpan sx = axis_span(axis_cell(c[0]), radius);
    const int n = cells_per_axis_;
    if (dim() == 1) {
        for (int k = 0; k < sx.count; ++k) {
            const int cx = (sx.start + k) % n;
            for (std::uint32_t id : cells_[static_cast<std::size_t>(cx)]) {
                const Vec d = geom_.displacement(c, points_[id]);
                const double dd = d[0] * d[0];
                if (dd <= r2) f(static_cast<std::size_t>(id), d, dd);
            }
        }
        return;
    }
    const AxisSpan sy = axis_span(axis_cell(c[1]), radius);
    for (int ky = 0; ky < sy.count; ++ky) {
        const int cy = (sy.start + ky) % n;
        for (int kx = 0; kx < sx.count; ++kx) {
            const int cx = (sx.start + kx) % n;
            const auto cell = static_cast<std::size_t>(cy) * static_cast<std::size_t>(n) +
                              static_cast<std::size_t>(cx);
            for (std::uint32_t id : cells_[cell]) {
                const Vec d = geom_.displacement(c, points_[id]);
                const double dd = d[0] * d[0] + d[1] * d[1];
                if (dd <= r2) f(static_cast<std::size_t>(id), d, dd);
            }
        }
    }
}

template <typename F>
void Configuration::for_each_within_brute(const Vec& p, double radius, F&& f) const {
    const double r2 = radius * radius;
    const Vec c = geom_.wrap(p);
    for (std::size_t id = 0; id < points_.size(); ++id) {
        const Vec d = geom_.displacement(c, points_[id]);
        const double dd = norm2(d, dim());
        if (dd <= r2) f(id, d, dd);
    }
}

}  // namespace srs
