// Observation windows: unions of disjoint spacetime boxes snapped to grid nodes.
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qet/lattice.hpp"

namespace qet {

/// Inclusive index ranges [t_begin, t_end] × [x_begin, x_end].
struct WindowBox {
  std::size_t t_begin = 0, t_end = 0;
  std::size_t x_begin = 0, x_end = 0;

  bool contains(std::size_t i, std::size_t j) const {
    return i >= t_begin && i <= t_end && j >= x_begin && j <= x_end;
  }
  bool intersects(const WindowBox& o) const {
    return t_begin <= o.t_end && o.t_begin <= t_end && x_begin <= o.x_end && o.x_begin <= x_end;
  }
};

class ObservationWindow {
 public:
  /// Throws std::invalid_argument if boxes overlap or exceed the grid.
  ObservationWindow(SpacetimeGrid grid, std::vector<WindowBox> boxes);

  /// Nodes with t in [t1, t2] and x in [x1, x2]. May be empty.
  static ObservationWindow box(const SpacetimeGrid& grid, double t1, double t2, double x1,
                               double x2);
  /// [t1, t2] × all of space.
  static ObservationWindow time_interval(const SpacetimeGrid& grid, double t1, double t2);
  /// One time slice over all of space (the sharp-time window).
  static ObservationWindow sharp(const SpacetimeGrid& grid, std::size_t t_index);
  static ObservationWindow whole_grid(const SpacetimeGrid& grid);

  const SpacetimeGrid& grid() const { return grid_; }
  std::span<const WindowBox> boxes() const { return boxes_; }
  bool empty() const { return boxes_.empty(); }
  bool contains(std::size_t i, std::size_t j) const;

  /// Smallest and largest time index covered; nullopt for an empty window.
  std::optional<std::pair<std::size_t, std::size_t>> time_range() const;

  /// Σ over window cells of f(t_i, x_j)·dt·dx.
  double integrate(std::span<const double> field) const;

  std::string describe() const;

 private:
  SpacetimeGrid grid_;
  std::vector<WindowBox> boxes_;
};

}  // namespace qet
