#include "qet/window.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace qet {

ObservationWindow::ObservationWindow(SpacetimeGrid grid, std::vector<WindowBox> boxes)
    : grid_(grid), boxes_(std::move(boxes)) {
  for (std::size_t a = 0; a < boxes_.size(); ++a) {
    const auto& b = boxes_[a];
    if (b.t_begin > b.t_end || b.x_begin > b.x_end || b.t_end >= grid_.n_t() ||
        b.x_end >= grid_.n_x())
      throw std::invalid_argument(fmt::format("window box {} is malformed or off the grid", a));
    for (std::size_t c = 0; c < a; ++c)
      if (b.intersects(boxes_[c]))
        throw std::invalid_argument(fmt::format("window boxes {} and {} overlap", c, a));
  }
}

namespace {
// Node index range [first, last] with coordinate in [lo, hi]; nullopt if none.
std::optional<std::pair<std::size_t, std::size_t>> snap(double origin, double step,
                                                        std::size_t n, double lo, double hi) {
  constexpr double slack = 1e-9;
  const double a = std::ceil((lo - origin) / step - slack);
  const double b = std::floor((hi - origin) / step + slack);
  const double first = std::max(a, 0.0);
  const double last = std::min(b, static_cast<double>(n) - 1);
  if (first > last) return std::nullopt;
  return std::pair{static_cast<std::size_t>(first), static_cast<std::size_t>(last)};
}
}  // namespace

ObservationWindow ObservationWindow::box(const SpacetimeGrid& grid, double t1, double t2,
                                         double x1, double x2) {
  const auto ts = snap(grid.t_min(), grid.dt(), grid.n_t(), t1, t2);
  const auto xs = snap(grid.x_min(), grid.dx(), grid.n_x(), x1, x2);
  if (!ts || !xs) return {grid, {}};
  return {grid, {WindowBox{ts->first, ts->second, xs->first, xs->second}}};
}

ObservationWindow ObservationWindow::time_interval(const SpacetimeGrid& grid, double t1,
                                                   double t2) {
  const auto ts = snap(grid.t_min(), grid.dt(), grid.n_t(), t1, t2);
  if (!ts) return {grid, {}};
  return {grid, {WindowBox{ts->first, ts->second, 0, grid.n_x() - 1}}};
}

ObservationWindow ObservationWindow::sharp(const SpacetimeGrid& grid, std::size_t t_index) {
  return {grid, {WindowBox{t_index, t_index, 0, grid.n_x() - 1}}};
}

ObservationWindow ObservationWindow::whole_grid(const SpacetimeGrid& grid) {
  return {grid, {WindowBox{0, grid.n_t() - 1, 0, grid.n_x() - 1}}};
}

bool ObservationWindow::contains(std::size_t i, std::size_t j) const {
  return std::any_of(boxes_.begin(), boxes_.end(),
                     [&](const WindowBox& b) { return b.contains(i, j); });
}

std::optional<std::pair<std::size_t, std::size_t>> ObservationWindow::time_range() const {
  if (boxes_.empty()) return std::nullopt;
  std::size_t lo = boxes_.front().t_begin, hi = boxes_.front().t_end;
  for (const auto& b : boxes_) {
    lo = std::min(lo, b.t_begin);
    hi = std::max(hi, b.t_end);
  }
  return std::pair{lo, hi};
}

double ObservationWindow::integrate(std::span<const double> field) const {
  if (field.size() != grid_.size()) throw std::invalid_argument("window: field size mismatch");
  double sum = 0;
  for (const auto& b : boxes_)
    for (std::size_t i = b.t_begin; i <= b.t_end; ++i)
      for (std::size_t j = b.x_begin; j <= b.x_end; ++j) sum += field[i * grid_.n_x() + j];
  return sum * grid_.dt() * grid_.dx();
}

std::string ObservationWindow::describe() const {
  std::string out;
  for (const auto& b : boxes_) {
    if (!out.empty()) out += " U ";
    out += fmt::format("[{:.10g},{:.10g}]x[{:.10g},{:.10g}]", grid_.t(b.t_begin),
                       grid_.t(b.t_end), grid_.x(b.x_begin), grid_.x(b.x_end));
  }
  return out.empty() ? "(empty)" : out;
}

}  // namespace qet
