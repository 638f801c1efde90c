#include "srs/geometry.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace srs {

TorusGeometry::TorusGeometry(int dim, double side) : dim_(dim), side_(side) {
    if (dim != 1 && dim != 2)
        throw std::invalid_argument("geometry: dimension must be 1 or 2, got " + std::to_string(dim));
    if (!(side > 0.0) || !std::isfinite(side))
        throw std::invalid_argument("geometry: side length must be positive and finite");
}

Vec TorusGeometry::wrap(Vec p) const noexcept {
    for (int i = 0; i < dim_; ++i) {
        double x = p[i];
        if (x < 0.0 || x >= side_) {
            x = std::fmod(x, side_);
            if (x < 0.0) x += side_;
            // fmod of a tiny negative number can round back up to L.
            if (x >= side_) x = 0.0;
        }
        p[i] = x;
    }
    for (int i = dim_; i < 2; ++i) p[i] = 0.0;
    return p;
}

Vec TorusGeometry::displacement(const Vec& from, const Vec& to) const noexcept {
    Vec d{0.0, 0.0};
    const double half = 0.5 * side_;
    for (int i = 0; i < dim_; ++i) {
        double x = to[i] - from[i];
        if (x > half)
            x -= side_;
        else if (x < -half)
            x += side_;
        d[i] = x;
    }
    return d;
}

double TorusGeometry::distance_to_box(const Vec& p, const Box& box) const noexcept {
    double s = 0.0;
    for (int i = 0; i < dim_; ++i) {
        const double x = p[i];
        if (x >= box.lo[i] && x <= box.hi[i]) continue;
        // Shortest way around the circle to the interval [lo, hi].
        auto circ = [&](double a, double b) {
            double d = std::fabs(a - b);
            d = std::fmod(d, side_);
            return std::min(d, side_ - d);
        };
        const double d = std::min(circ(x, box.lo[i]), circ(x, box.hi[i]));
        s += d * d;
    }
    return std::sqrt(s);
}

Configuration::Configuration(TorusGeometry geometry, double min_cell_size)
    : geom_(geometry), cells_per_axis_(1), cell_size_(geometry.side()) {
    if (min_cell_size > 0.0) {
        const double n = std::floor(geom_.side() / min_cell_size);
        cells_per_axis_ = static_cast<int>(std::clamp(n, 1.0, 1.0e6));
    }
    if (geom_.dim() == 2) cells_per_axis_ = std::min(cells_per_axis_, 4096);
    cell_size_ = geom_.side() / cells_per_axis_;
    const std::size_t total = geom_.dim() == 1
                                  ? static_cast<std::size_t>(cells_per_axis_)
                                  : static_cast<std::size_t>(cells_per_axis_) * cells_per_axis_;
    cells_.resize(total);
}

int Configuration::axis_cell(double coord) const noexcept {
    int c = static_cast<int>(coord / cell_size_);
    return std::clamp(c, 0, cells_per_axis_ - 1);
}

Configuration::AxisSpan Configuration::axis_span(int center, double radius) const noexcept {
    const int n = cells_per_axis_;
    const double reach = std::ceil(radius / cell_size_);
    if (2.0 * reach + 1.0 >= n) return {0, n};
    const int k = static_cast<int>(reach);
    return {((center - k) % n + n) % n, 2 * k + 1};
}

std::size_t Configuration::cell_index(const Vec& p) const noexcept {
    const Vec w = geom_.wrap(p);
    const auto cx = static_cast<std::size_t>(axis_cell(w[0]));
    if (geom_.dim() == 1) return cx;
    const auto cy = static_cast<std::size_t>(axis_cell(w[1]));
    return cy * static_cast<std::size_t>(cells_per_axis_) + cx;
}

std::size_t Configuration::insert(const Vec& p) {
    const Vec w = geom_.wrap(p);
    const std::size_t id = points_.size();
    const std::size_t cell = cell_index(w);
    points_.push_back(w);
    cell_id_.push_back(cell);
    slot_in_cell_.push_back(static_cast<std::uint32_t>(cells_[cell].size()));
    cells_[cell].push_back(static_cast<std::uint32_t>(id));
    return id;
}

void Configuration::erase(std::size_t id) {
    if (id >= points_.size()) throw std::out_of_range("configuration: unknown point id");
    // Unlink id from its cell.
    {
        auto& members = cells_[cell_id_[id]];
        const std::uint32_t slot = slot_in_cell_[id];
        const std::uint32_t moved = members.back();
        members[slot] = moved;
        slot_in_cell_[moved] = slot;
        members.pop_back();
    }
    const std::size_t last = points_.size() - 1;
    if (id != last) {
        points_[id] = points_[last];
        cell_id_[id] = cell_id_[last];
        slot_in_cell_[id] = slot_in_cell_[last];
        cells_[cell_id_[id]][slot_in_cell_[id]] = static_cast<std::uint32_t>(id);
    }
    points_.pop_back();
    cell_id_.pop_back();
    slot_in_cell_.pop_back();
}

void Configuration::clear() {
    points_.clear();
    cell_id_.clear();
    slot_in_cell_.clear();
    for (auto& c : cells_) c.clear();
}

bool Configuration::index_consistent() const {
    std::vector<int> seen(points_.size(), 0);
    for (std::size_t c = 0; c < cells_.size(); ++c) {
        for (std::size_t s = 0; s < cells_[c].size(); ++s) {
            const std::uint32_t id = cells_[c][s];
            if (id >= points_.size()) return false;
            if (cell_id_[id] != c || slot_in_cell_[id] != s) return false;
            ++seen[id];
        }
    }
    for (std::size_t id = 0; id < points_.size(); ++id) {
        if (seen[id] != 1) return false;
        const Vec& p = points_[id];
        for (int i = 0; i < geom_.dim(); ++i)
            if (p[i] < 0.0 || p[i] >= geom_.side()) return false;
        if (cell_index(p) != cell_id_[id]) return false;
    }
    return true;
}

}  // namespace srs
