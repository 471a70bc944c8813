#include "qcens/grid.hpp"

#include <cmath>
#include <set>

namespace qcens {

std::vector<double> Axis::nodes() const {
    std::vector<double> out(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) out[static_cast<std::size_t>(i)] = node(i);
    return out;
}

Grid::Grid(std::vector<Axis> axes, std::size_t budget) : axes_(std::move(axes)) {
    if (axes_.empty() || axes_.size() > 3)
        throw GridError("grid must have between 1 and 3 axes");
    std::set<std::string> seen;
    total_ = 1;
    for (const Axis& a : axes_) {
        if (a.name != "q" && a.name != "p" && a.name != "x")
            throw GridError("axis name must be one of q, p, x: got '" + a.name + "'");
        if (!seen.insert(a.name).second)
            throw GridError("duplicate axis name '" + a.name + "'");
        if (!(a.max > a.min))
            throw GridError("axis '" + a.name + "' needs max > min");
        if (a.points < 8)
            throw GridError("axis '" + a.name + "' needs at least 8 points");
        if (!std::isfinite(a.min) || !std::isfinite(a.max))
            throw GridError("axis '" + a.name + "' has non-finite bounds");
        total_ *= static_cast<std::size_t>(a.points);
    }
    if (total_ > budget)
        throw GridError("grid exceeds point budget");
    strides_.assign(axes_.size(), 1);
    for (int i = static_cast<int>(axes_.size()) - 2; i >= 0; --i)
        strides_[static_cast<std::size_t>(i)] =
            strides_[static_cast<std::size_t>(i) + 1] *
            static_cast<std::size_t>(axes_[static_cast<std::size_t>(i) + 1].points);
}

std::optional<int> Grid::axis_index(const std::string& name) const {
    for (std::size_t i = 0; i < axes_.size(); ++i)
        if (axes_[i].name == name) return static_cast<int>(i);
    return std::nullopt;
}

int Grid::require_axis(const std::string& name) const {
    auto i = axis_index(name);
    if (!i) throw GridError("grid has no axis named '" + name + "'");
    return *i;
}

std::size_t Grid::ravel(const std::array<int, 3>& idx) const {
    std::size_t flat = 0;
    for (std::size_t i = 0; i < axes_.size(); ++i)
        flat += static_cast<std::size_t>(idx[i]) * strides_[i];
    return flat;
}

std::array<int, 3> Grid::unravel(std::size_t flat) const {
    std::array<int, 3> idx{0, 0, 0};
    for (std::size_t i = 0; i < axes_.size(); ++i) {
        idx[i] = static_cast<int>(flat / strides_[i]);
        flat %= strides_[i];
    }
    return idx;
}

double Grid::coord(std::size_t flat, int i) const {
    const std::size_t s = strides_.at(static_cast<std::size_t>(i));
    const int n = axes_[static_cast<std::size_t>(i)].points;
    const int k = static_cast<int>((flat / s) % static_cast<std::size_t>(n));
    return axes_[static_cast<std::size_t>(i)].node(k);
}

double Grid::cell_volume() const {
    double v = 1.0;
    for (const Axis& a : axes_) v *= a.spacing();
    return v;
}

bool Grid::operator==(const Grid& other) const {
    if (axes_.size() != other.axes_.size()) return false;
    for (std::size_t i = 0; i < axes_.size(); ++i) {
        const Axis& a = axes_[i];
        const Axis& b = other.axes_[i];
        if (a.name != b.name || a.min != b.min || a.max != b.max ||
            a.points != b.points || a.boundary != b.boundary)
            return false;
    }
    return true;
}

Axis make_axis(const std::string& name, double min, double max, int points, Boundary boundary) {
    return Axis{name, min, max, points, boundary};
}

Grid make_grid_1d(const Axis& a) { return Grid({a}); }
Grid make_grid_2d(const Axis& a, const Axis& b) { return Grid({a, b}); }
Grid make_grid_3d(const Axis& a, const Axis& b, const Axis& c) { return Grid({a, b, c}); }

}  // namespace qcens
