#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "qcens/errors.hpp"

namespace qcens {

enum class Boundary { periodic, clamped };

/// One uniform grid axis with cell-centered nodes:
///   node(i) = min + (i + 1/2) * spacing,  spacing = (max - min) / points.
/// Cell-centering makes the midpoint quadrature rule exact for constants on
/// both boundary modes and keeps symmetric domains symmetric.
struct Axis {
    std::string name;  // one of "q", "p", "x"
    double min = 0.0;
    double max = 0.0;
    int points = 0;
    Boundary boundary = Boundary::periodic;

    double spacing() const { return (max - min) / points; }
    double node(int i) const { return min + (i + 0.5) * spacing(); }
    std::vector<double> nodes() const;
};

/// Rectangular grid over 1..3 axes, row-major layout (last axis fastest).
/// Value type: copies are cheap and grids compare by content.
class Grid {
  public:
    static constexpr std::size_t default_budget = std::size_t{1} << 24;

    Grid() = default;
    explicit Grid(std::vector<Axis> axes, std::size_t budget = default_budget);

    int rank() const { return static_cast<int>(axes_.size()); }
    const Axis& axis(int i) const { return axes_.at(i); }
    const std::vector<Axis>& axes() const { return axes_; }
    std::optional<int> axis_index(const std::string& name) const;
    /// Axis index by name; throws GridError when absent.
    int require_axis(const std::string& name) const;

    std::size_t total_points() const { return total_; }
    std::size_t stride(int i) const { return strides_.at(i); }

    /// Flat index of a multi-index.
    std::size_t ravel(const std::array<int, 3>& idx) const;
    /// Multi-index of a flat index (unused axes report 0).
    std::array<int, 3> unravel(std::size_t flat) const;
    /// Coordinate of grid point `flat` along axis `i`.
    double coord(std::size_t flat, int i) const;

    /// Product of axis spacings: the quadrature weight of every node.
    double cell_volume() const;

    bool operator==(const Grid& other) const;
    bool operator!=(const Grid& other) const { return !(*this == other); }

  private:
    std::vector<Axis> axes_;
    std::vector<std::size_t> strides_;
    std::size_t total_ = 0;
};

/// Convenience builders.
Axis make_axis(const std::string& name, double min, double max, int points,
               Boundary boundary = Boundary::periodic);
Grid make_grid_1d(const Axis& a);
Grid make_grid_2d(const Axis& a, const Axis& b);
Grid make_grid_3d(const Axis& a, const Axis& b, const Axis& c);

}  // namespace qcens
