#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "core_model.hpp"
#include "event_engine.hpp"
#include "wind_simulator.hpp"

namespace autocal {

inline constexpr double kDefaultGapTolerance = 0.05;

enum class IdentifierStatus {
  AwaitingFirst,  ///< no detection yet
  Ambiguous,      ///< several start positions still fit the observed gaps
  Identified,     ///< exactly one start position fits
  NoMatch,        ///< nothing fits: sensor fault or wrong design
  Exhausted,      ///< long stretch without detection; rho is the exhaustion estimate
};

inline std::string to_string(IdentifierStatus s) {
  switch (s) {
    case IdentifierStatus::AwaitingFirst: return "awaiting-first";
    case IdentifierStatus::Ambiguous: return "ambiguous";
    case IdentifierStatus::Identified: return "identified";
    case IdentifierStatus::NoMatch: return "no-match";
    case IdentifierStatus::Exhausted: return "exhausted";
  }
  return "unknown";
}

inline bool is_terminal(IdentifierStatus s) {
  return s == IdentifierStatus::Identified || s == IdentifierStatus::NoMatch ||
         s == IdentifierStatus::Exhausted;
}

/// Candidate-elimination state. Candidates are 0-based indices p of the
/// event at which the first detection happened; after m observed gaps the
/// current event of candidate p is p + m.
struct IdentifierState {
  EventTable table;
  double tolerance = kDefaultGapTolerance;
  std::vector<double> observed_gaps;
  std::vector<std::size_t> candidates;
  IdentifierStatus status = IdentifierStatus::AwaitingFirst;
  std::optional<std::size_t> current_event;  ///< set when Identified
  std::optional<double> rho;                 ///< set when Identified or Exhausted

  std::size_t candidate_count() const noexcept { return candidates.size(); }
};

inline IdentifierState make_identifier(EventTable table, double tolerance = kDefaultGapTolerance) {
  if (!table.rectified()) throw std::invalid_argument("identifier: table must be rectified");
  if (table.size() < 2) throw std::invalid_argument("identifier: table needs at least two events");
  if (!(tolerance >= 0.0)) throw std::invalid_argument("identifier: tolerance must be >= 0");
  IdentifierState s;
  s.table = std::move(table);
  s.tolerance = tolerance;
  return s;
}

/// State right after the first detection: every event is a possible start.
inline IdentifierState start(EventTable table, double tolerance = kDefaultGapTolerance) {
  IdentifierState s = make_identifier(std::move(table), tolerance);
  s.candidates.resize(s.table.size());
  for (std::size_t p = 0; p < s.candidates.size(); ++p) s.candidates[p] = p;
  s.status = IdentifierStatus::Ambiguous;
  return s;
}

inline IdentifierState first_detection(IdentifierState s) {
  if (s.status != IdentifierStatus::AwaitingFirst)
    throw std::logic_error("identifier: first detection already seen");
  return start(std::move(s.table), s.tolerance);
}

/// Feed the cable length wound since the previous detection.
inline IdentifierState observe(IdentifierState s, double gap) {
  if (s.status != IdentifierStatus::Ambiguous)
    throw std::logic_error("identifier: observe requires an ambiguous state (got " + to_string(s.status) + ")");
  s.observed_gaps.push_back(gap);
  const std::size_t m = s.observed_gaps.size();
  const auto& g = s.table.gaps();
  const std::size_t n = s.table.size();

  std::vector<std::size_t> kept;
  kept.reserve(s.candidates.size());
  for (std::size_t p : s.candidates) {
    if (p + m >= n) continue;
    if (std::fabs(g[p + m - 1] - gap) <= s.tolerance) kept.push_back(p);
  }
  s.candidates = std::move(kept);

  if (s.candidates.empty()) {
    s.status = IdentifierStatus::NoMatch;
  } else if (s.candidates.size() == 1) {
    s.status = IdentifierStatus::Identified;
    s.current_event = s.candidates.front() + m;
    s.rho = s.table[*s.current_event].rho;
  }
  return s;
}

struct NoDetectionCheck {
  IdentifierState state;
  std::optional<double> estimate;
};

/// Winding more than d_n - d_0 without any detection means the platform
/// end of the cable is past the last mark; rho is then taken as
/// rho(M_n, S_1) + (d_n - d_0). This is an exhaustion estimate, distinct
/// from sequence identification.
inline NoDetectionCheck check_no_detection(IdentifierState s, const CalibrationDesign& design,
                                           double wound_since_last) {
  if (is_terminal(s.status)) throw std::logic_error("identifier: state already terminal");
  const double reserve = design.distal_gap() - design.proximal_gap();
  if (!(wound_since_last > reserve)) return {std::move(s), std::nullopt};
  const double estimate = rho_at(design, design.mark_count(), 1) + reserve;
  s.status = IdentifierStatus::Exhausted;
  s.rho = estimate;
  return {std::move(s), estimate};
}

// ----------------------------------------------------------------------------
// Closed-loop encoder correction
// ----------------------------------------------------------------------------

struct EncoderFit {
  double scale;
  double offset;
};

/// Least-squares fit of reading = scale * (reference_rho - rho) + offset
/// over (identified rho, raw reading) pairs; the identified lengths act as
/// setpoints for the incremental encoder.
class ClosedLoopCorrector {
 public:
  struct Sample {
    double rho;
    double reading;
  };

  explicit ClosedLoopCorrector(double reference_rho) : reference_{reference_rho} {}

  double reference_rho() const noexcept { return reference_; }
  const std::vector<Sample>& samples() const noexcept { return samples_; }
  const std::optional<EncoderFit>& fit() const noexcept { return fit_; }

  std::optional<double> corrected_length(double reading) const {
    if (!fit_) return std::nullopt;
    return reference_ - (reading - fit_->offset) / fit_->scale;
  }

  friend ClosedLoopCorrector corrector_update(ClosedLoopCorrector c, double identified_rho, double raw_reading) {
    c.samples_.push_back({identified_rho, raw_reading});
    c.refit();
    return c;
  }

 private:
  void refit() {
    const double n = static_cast<double>(samples_.size());
    if (samples_.size() < 2) return;
    double sx = 0, sy = 0;
    for (const auto& s : samples_) {
      sx += reference_ - s.rho;
      sy += s.reading;
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (const auto& s : samples_) {
      const double dx = (reference_ - s.rho) - mx;
      sxx += dx * dx;
      sxy += dx * (s.reading - my);
    }
    if (!(sxx > kGeomTolerance * kGeomTolerance)) return;  // all rho equal
    const double scale = sxy / sxx;
    if (!(scale > 0.0)) return;
    fit_ = EncoderFit{scale, my - scale * mx};
  }

  double reference_;
  std::vector<Sample> samples_;
  std::optional<EncoderFit> fit_;
};

// ----------------------------------------------------------------------------
// Trace replay
// ----------------------------------------------------------------------------

struct CalibrationResult {
  IdentifierStatus status = IdentifierStatus::AwaitingFirst;
  std::optional<double> rho;
  std::size_t detections_used = 0;
  std::optional<double> stroke;  ///< rho(first) - rho(identified), from the table
  std::optional<std::size_t> start_event;
  std::optional<std::size_t> identified_event;
  std::vector<std::size_t> candidate_history;
  std::optional<EncoderFit> fit;
};

/// Drive the identifier over a detection trace, using encoder differences
/// as the observed gaps.
inline CalibrationResult run_trace(const CalibrationDesign& design, const ObservationTrace& trace,
                                   double tolerance = kDefaultGapTolerance) {
  IdentifierState state = make_identifier(rectified_events(design), tolerance);
  CalibrationResult out;

  if (trace.records.empty()) {
    if (trace.trailing_wound) state = check_no_detection(std::move(state), design, *trace.trailing_wound).state;
    out.status = state.status;
    out.rho = state.rho;
    return out;
  }

  state = first_detection(std::move(state));
  out.detections_used = 1;
  out.candidate_history.push_back(state.candidate_count());
  for (std::size_t k = 1; k < trace.records.size() && state.status == IdentifierStatus::Ambiguous; ++k) {
    state = observe(std::move(state), wound_between(trace, k - 1, k));
    ++out.detections_used;
    out.candidate_history.push_back(state.candidate_count());
  }
  if (!is_terminal(state.status) && trace.trailing_wound)
    state = check_no_detection(std::move(state), design, *trace.trailing_wound).state;

  out.status = state.status;
  out.rho = state.rho;
  if (state.status == IdentifierStatus::Identified) {
    const std::size_t p = state.candidates.front();
    const std::size_t cur = *state.current_event;
    out.start_event = p;
    out.identified_event = cur;
    out.stroke = std::fabs(state.table[p].rho - state.table[cur].rho);

    ClosedLoopCorrector corrector{state.table[p].rho};
    for (std::size_t r = 0; r + p <= cur; ++r)
      corrector = corrector_update(std::move(corrector), state.table[p + r].rho, trace.records[r].encoder_reading);
    out.fit = corrector.fit();
  }
  return out;
}

}  // namespace autocal
