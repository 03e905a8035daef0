#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "core_model.hpp"
#include "validation.hpp"

namespace autocal {

/// Raised when a recipe cannot be turned into a layout (overshoot, no exact tail).
class InfeasibleRecipe : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Geometry plus ordered pools of candidate gaps. Pool order matters: gaps
/// are drawn cyclically in the given order.
struct DesignRecipe {
  RobotGeometry geometry;
  std::vector<double> d_pool;
  std::vector<double> z_pool;
  std::optional<double> os1_override;
  std::optional<std::vector<double>> sensor_heights_override;

  void check() const {
    if (d_pool.empty()) throw std::invalid_argument("recipe: d_pool must not be empty");
    if (z_pool.empty() && !sensor_heights_override)
      throw std::invalid_argument("recipe: z_pool must not be empty");
    for (double x : d_pool)
      if (!(x > 0.0)) throw std::invalid_argument("recipe: d_pool values must be > 0");
    for (double x : z_pool)
      if (!(x > 0.0)) throw std::invalid_argument("recipe: z_pool values must be > 0");
  }
};

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("mean of empty pool");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Lowest sensor at a third of the support height.
inline double first_sensor_height(const RobotGeometry& g) noexcept { return g.h() / 3.0; }

/// d_n = h - ||OS_1|| + b, which satisfies C3 by construction.
inline double distal_reserve(const RobotGeometry& g, double os1) { return g.h() - os1 + g.b(); }

/// 1 + (h - d0 - os1) / z_bar, truncated toward zero.
inline std::size_t sensor_count(const RobotGeometry& g, double d0, double os1, double z_bar) {
  if (!(z_bar > 0.0)) throw std::invalid_argument("sensor_count: mean sensor gap must be > 0");
  const double span = g.h() - d0 - os1;
  if (span < -kGeomTolerance) throw std::invalid_argument("sensor_count: os1 above h - d0");
  // Nudge by the geometric tolerance so exact fits (e.g. 7.5/3.75) never truncate to n-1.
  return static_cast<std::size_t>(1.0 + std::max(span, 0.0) / z_bar + kGeomTolerance);
}

struct MarkCountEstimate {
  double value;
  long rounded;
};

/// Advisory mark count 1 + (rho_max - d0 - dn) / d_bar. The actual count
/// comes out of place_marks.
inline MarkCountEstimate mark_count_estimate(const RobotGeometry& g, double d0, double dn, double d_bar) {
  if (!(d_bar > 0.0)) throw std::invalid_argument("mark_count_estimate: mean mark gap must be > 0");
  const double value = 1.0 + (g.rho_max() - d0 - dn) / d_bar;
  return {value, std::lround(value)};
}

/// Sensors from os1 upwards, stepping through z_pool cyclically; the top
/// sensor is pinned at h - d0 so that it sits d0 below A.
inline SensorLayout place_sensors(const RobotGeometry& g, double os1, const std::vector<double>& z_pool,
                                  double d0) {
  const double top = g.h() - d0;
  if (!(os1 > 0.0)) throw InfeasibleRecipe("place_sensors: first sensor must be above O");
  if (os1 > top + kGeomTolerance) throw InfeasibleRecipe("place_sensors: first sensor above h - d0");
  if (z_pool.empty()) throw std::invalid_argument("place_sensors: empty gap pool");

  const std::size_t n = sensor_count(g, d0, os1, mean_of(z_pool));
  std::vector<double> heights{os1};
  for (std::size_t k = 0; heights.size() + 1 < n; ++k) {
    const double next = heights.back() + z_pool[k % z_pool.size()];
    if (next > top - kGeomTolerance)
      throw InfeasibleRecipe("place_sensors: gap sequence overshoots the support");
    heights.push_back(next);
  }
  if (n > 1) heights.push_back(top);
  return SensorLayout{std::move(heights)};
}

/// Explicit sensor list, range-checked against the support.
inline SensorLayout place_sensors(const RobotGeometry& g, const std::vector<double>& explicit_heights) {
  for (double x : explicit_heights)
    if (!(x > 0.0 && x < g.h())) throw InfeasibleRecipe("sensor override outside (0, h)");
  return SensorLayout{explicit_heights};
}

namespace detail {

struct TailSearch {
  const std::vector<double>& values;  // distinct pool values, ascending
  double remaining;
  std::vector<std::vector<double>> found;

  void run(std::vector<double>& seq, std::size_t len, double left) {
    if (seq.size() == len) {
      if (std::fabs(left) <= kGeomTolerance) found.push_back(seq);
      return;
    }
    for (double v : values) {
      if (v > left + kGeomTolerance) break;
      seq.push_back(v);
      run(seq, len, left - v);
      seq.pop_back();
    }
  }
};

inline bool alternates(const std::vector<double>& seq, std::optional<double> prev) {
  for (double g : seq) {
    if (prev && std::fabs(g - *prev) <= kGeomTolerance) return false;
    prev = g;
  }
  return true;
}

inline bool strictly_ascending(const std::vector<double>& seq) {
  for (std::size_t k = 1; k < seq.size(); ++k)
    if (!(seq[k] > seq[k - 1] + kGeomTolerance)) return false;
  return true;
}

/// Up to three pool gaps summing exactly to `remaining`. Preference order,
/// per length 3, 2, 1:
///   1. successive gaps all differ (C6) and values are distinct: ascending,
///      largest smallest gap, then largest last gap;
///   2. successive gaps all differ, repeats allowed: smallest largest gap;
/// and if nothing respects C6, the first exact combination.
inline std::vector<double> choose_tail(const std::vector<double>& pool, double remaining,
                                       std::optional<double> prev) {
  std::vector<double> values = pool;
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end(),
                           [](double a, double b) { return std::fabs(a - b) <= kGeomTolerance; }),
               values.end());

  std::vector<std::vector<std::vector<double>>> by_len(4);
  for (std::size_t len = 1; len <= 3; ++len) {
    TailSearch s{values, remaining, {}};
    std::vector<double> seq;
    s.run(seq, len, remaining);
    by_len[len] = std::move(s.found);
  }

  for (int len = 3; len >= 1; --len) {
    const auto& cands = by_len[static_cast<std::size_t>(len)];
    const std::vector<double>* best = nullptr;
    for (const auto& c : cands) {
      if (!alternates(c, prev) || !strictly_ascending(c)) continue;
      if (!best || c.front() > best->front() + kGeomTolerance ||
          (std::fabs(c.front() - best->front()) <= kGeomTolerance && c.back() > best->back()))
        best = &c;
    }
    if (best) return *best;

    auto max_of = [](const std::vector<double>& c) { return *std::max_element(c.begin(), c.end()); };
    for (const auto& c : cands) {
      if (!alternates(c, prev)) continue;
      if (!best || max_of(c) < max_of(*best) - kGeomTolerance) best = &c;
    }
    if (best) return *best;
  }
  for (int len = 3; len >= 1; --len) {
    const auto& cands = by_len[static_cast<std::size_t>(len)];
    if (!cands.empty()) return cands.front();
  }
  throw InfeasibleRecipe("place_marks: no combination of up to three pool gaps lands on d_n");
}

}  // namespace detail

/// Marks from rho_max - d0 down to dn. Gaps cycle through d_pool starting
/// after the slot holding d0; once the span left after the next cyclic gap
/// would fall under a third of one pool pass, the last (up to three) gaps
/// are chosen to land exactly on dn.
inline MarkLayout place_marks(const RobotGeometry& g, double d0, double dn, const std::vector<double>& d_pool) {
  if (d_pool.empty()) throw std::invalid_argument("place_marks: empty gap pool");
  if (!(dn > 0.0)) throw InfeasibleRecipe("place_marks: d_n must be > 0 for a mark to exist");
  const double first = g.rho_max() - d0;
  if (first < dn - kGeomTolerance) throw InfeasibleRecipe("place_marks: rho_max < d0 + d_n");

  const double reserve = std::accumulate(d_pool.begin(), d_pool.end(), 0.0) / 3.0;
  const auto min_it = std::min_element(d_pool.begin(), d_pool.end());
  std::size_t cursor = static_cast<std::size_t>(min_it - d_pool.begin()) + 1;

  std::vector<double> pos{first};
  std::optional<double> prev;
  while (true) {
    const double gap = d_pool[cursor % d_pool.size()];
    const double left = pos.back() - dn - gap;
    if (left < reserve - kGeomTolerance) break;
    pos.push_back(pos.back() - gap);
    prev = gap;
    ++cursor;
  }

  const double remaining = pos.back() - dn;
  if (remaining > kGeomTolerance) {
    for (double gap : detail::choose_tail(d_pool, remaining, prev)) pos.push_back(pos.back() - gap);
  }
  pos.back() = dn;
  return MarkLayout{std::move(pos)};
}

struct BuiltDesign {
  CalibrationDesign design;
  ConditionReport report;
};

/// Compose the placement steps: d0 = min(d_pool), os1 = override or h/3,
/// dn = h - os1 + b.
inline BuiltDesign build_design(const DesignRecipe& recipe) {
  recipe.check();
  const auto& g = recipe.geometry;
  const double d0 = *std::min_element(recipe.d_pool.begin(), recipe.d_pool.end());

  SensorLayout sensors = recipe.sensor_heights_override
                             ? place_sensors(g, *recipe.sensor_heights_override)
                             : place_sensors(g, recipe.os1_override.value_or(first_sensor_height(g)),
                                             recipe.z_pool, d0);
  const double os1 = sensors.heights().front();
  const double dn = distal_reserve(g, os1);
  MarkLayout marks = place_marks(g, d0, dn, recipe.d_pool);

  CalibrationDesign design{g, std::move(sensors), std::move(marks)};
  auto report = validate_design(design);
  return {std::move(design), std::move(report)};
}

}  // namespace autocal
