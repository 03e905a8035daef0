#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "core_model.hpp"

namespace autocal {

/// Detection of mark M_i by sensor S_j at time t, with the free length rho at that instant.
struct Event {
  double t;
  std::size_t i;
  std::size_t j;
  double rho;

  friend bool operator==(const Event&, const Event&) = default;
};

/// Time-ordered detections. gaps()[k] is the drop in rho between events k and k+1.
class EventTable {
 public:
  EventTable() = default;

  EventTable(std::vector<Event> events, bool rectified, double tol = kGeomTolerance)
      : events_{std::move(events)}, rectified_{rectified} {
    for (std::size_t k = 1; k < events_.size(); ++k) {
      const double dt = events_[k].t - events_[k - 1].t;
      if (dt < -tol) throw std::invalid_argument("event table: times must be non-decreasing");
      if (rectified_ && !(dt > tol))
        throw std::invalid_argument("event table: rectified times must be strictly increasing");
      if (rectified_ && !(events_[k - 1].rho - events_[k].rho > tol))
        throw std::invalid_argument("event table: rectified gaps must be positive");
    }
    gaps_.reserve(events_.empty() ? 0 : events_.size() - 1);
    for (std::size_t k = 1; k < events_.size(); ++k) gaps_.push_back(events_[k - 1].rho - events_[k].rho);
  }

  const std::vector<Event>& events() const noexcept { return events_; }
  const std::vector<double>& gaps() const noexcept { return gaps_; }
  bool rectified() const noexcept { return rectified_; }
  std::size_t size() const noexcept { return events_.size(); }
  bool empty() const noexcept { return events_.empty(); }
  const Event& operator[](std::size_t k) const { return events_.at(k); }

  friend bool operator==(const EventTable&, const EventTable&) = default;

 private:
  std::vector<Event> events_;
  std::vector<double> gaps_;
  bool rectified_ = false;
};

/// Instant at which M_i faces S_j when winding from rho_max at speed v.
/// Negative when the pair had already passed before winding starts.
inline double detection_time(const CalibrationDesign& d, std::size_t i, std::size_t j) {
  const auto& g = d.geometry();
  return (l_max(g) - d.marks().at(i) - d.sensors().at(j)) / g.v();
}

/// All mark/sensor meetings reachable by winding from rho_max (t >= 0, rho > 0),
/// sorted by time; simultaneous events are ordered by (i asc, j desc).
inline EventTable enumerate_events(const CalibrationDesign& d, double tol = kGeomTolerance) {
  std::vector<Event> ev;
  ev.reserve(d.mark_count() * d.sensor_count());
  for (std::size_t i = 1; i <= d.mark_count(); ++i) {
    for (std::size_t j = 1; j <= d.sensor_count(); ++j) {
      const double t = detection_time(d, i, j);
      const double rho = rho_at(d, i, j);
      if (t < -tol || !(rho > tol)) continue;
      ev.push_back({std::max(t, 0.0), i, j, rho});
    }
  }
  std::sort(ev.begin(), ev.end(), [tol](const Event& a, const Event& b) {
    if (std::fabs(a.t - b.t) > tol) return a.t < b.t;
    if (a.i != b.i) return a.i < b.i;
    return a.j > b.j;
  });
  return EventTable{std::move(ev), false, tol};
}

namespace detail {

// Tie rule for simultaneous events: keep the pair minimising i/j, then i.
inline bool preferred(const Event& a, const Event& b) {
  // a.i/a.j < b.i/b.j, compared exactly by cross-multiplication.
  const auto lhs = a.i * b.j;
  const auto rhs = b.i * a.j;
  if (lhs != rhs) return lhs < rhs;
  return a.i < b.i;
}

}  // namespace detail

/// Collapse groups of simultaneous events to one survivor each, so every
/// instant maps to a unique event. Idempotent.
inline EventTable rectify(const EventTable& raw, double tol = kGeomTolerance) {
  std::vector<Event> out;
  out.reserve(raw.size());
  for (const Event& e : raw.events()) {
    if (!out.empty() && std::fabs(out.back().t - e.t) <= tol) {
      if (detail::preferred(e, out.back())) out.back() = e;
    } else {
      out.push_back(e);
    }
  }
  return EventTable{std::move(out), true, tol};
}

inline EventTable rectified_events(const CalibrationDesign& d, double tol = kGeomTolerance) {
  return rectify(enumerate_events(d, tol), tol);
}

// ----------------------------------------------------------------------------
// Statistics
// ----------------------------------------------------------------------------

struct DeltaStats {
  double mean;
  double std;
  std::size_t count;
};

/// Mean and dispersion of the rectified gaps. The dispersion divides by
/// n_e - 2 (not n_e - 1 gaps minus one), as in the original formulation.
inline DeltaStats delta_stats(const EventTable& table) {
  if (!table.rectified()) throw std::invalid_argument("delta_stats: table must be rectified");
  const std::size_t n = table.size();
  if (n < 3) throw std::invalid_argument("delta_stats: at least three events required");
  const auto& g = table.gaps();
  double sum = 0.0;
  for (double x : g) sum += x;
  const double mean = sum / static_cast<double>(n - 1);
  double ss = 0.0;
  for (double x : g) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(n - 2)), n};
}

// ----------------------------------------------------------------------------
// Stroke profile
// ----------------------------------------------------------------------------

inline constexpr double kDefaultStrokeTolerance = 0.01;

struct StartStroke {
  std::size_t start;             ///< 0-based event index p
  std::optional<std::size_t> k;  ///< gaps needed before the sequence is unique
  double stroke = 0.0;           ///< cable wound over those gaps

  bool identifiable() const noexcept { return k.has_value(); }
};

struct StrokeProfile {
  std::vector<StartStroke> starts;
  double worst_stroke = 0.0;  ///< over identifiable starts
  double mean_stroke = 0.0;   ///< over identifiable starts
  std::size_t unidentifiable = 0;
};

/// Number of positions q at which gaps[p, p+k) reappears (within tol).
inline std::size_t count_occurrences(const std::vector<double>& gaps, std::size_t p, std::size_t k,
                                     double tol) {
  std::size_t hits = 0;
  for (std::size_t q = 0; q + k <= gaps.size(); ++q) {
    bool match = true;
    for (std::size_t r = 0; r < k && match; ++r) match = std::fabs(gaps[q + r] - gaps[p + r]) <= tol;
    if (match) ++hits;
  }
  return hits;
}

/// For each start event, the shortest run of following gaps that pins down
/// its position in the table, and the stroke wound to observe it.
inline StrokeProfile stroke_profile(const EventTable& table, double tol = kDefaultStrokeTolerance) {
  if (!table.rectified()) throw std::invalid_argument("stroke_profile: table must be rectified");
  if (table.size() < 2) throw std::invalid_argument("stroke_profile: at least two events required");
  const auto& g = table.gaps();
  StrokeProfile prof;
  prof.starts.reserve(table.size());
  double sum = 0.0;
  std::size_t ok = 0;
  for (std::size_t p = 0; p < table.size(); ++p) {
    StartStroke s{p, std::nullopt, 0.0};
    double wound = 0.0;
    for (std::size_t k = 1; p + k <= g.size(); ++k) {
      wound += g[p + k - 1];
      if (count_occurrences(g, p, k, tol) == 1) {
        s.k = k;
        s.stroke = wound;
        break;
      }
    }
    if (s.identifiable()) {
      prof.worst_stroke = std::max(prof.worst_stroke, s.stroke);
      sum += s.stroke;
      ++ok;
    } else {
      ++prof.unidentifiable;
    }
    prof.starts.push_back(s);
  }
  prof.mean_stroke = ok ? sum / static_cast<double>(ok) : 0.0;
  return prof;
}

}  // namespace autocal
