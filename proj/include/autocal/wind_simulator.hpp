#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "core_model.hpp"
#include "event_engine.hpp"

namespace autocal {

/*
 * Gaussian jitter source with output fixed across platforms.
 *
 * std::mt19937_64 is specified bit-exactly by the standard; the standard
 * distributions are not, so uniforms are built from the top 53 bits of each
 * draw and turned into normals with the basic Box-Muller transform (one
 * normal per pair of draws, the sine branch is discarded).
 */
class PortableGaussian {
 public:
  explicit PortableGaussian(std::uint64_t seed) : engine_{seed} {}

  /// Uniform in (0, 1].
  double uniform() {
    const std::uint64_t bits = engine_() >> 11;
    return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
  }

  double normal(double sd) {
    if (sd == 0.0) return 0.0;
    const double u1 = uniform();
    const double u2 = uniform();
    return sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

/// Incremental encoder: reading = offset + scale * wound length + jitter.
struct EncoderModel {
  double scale = 1.0;
  double offset = 0.0;
  double noise_sd = 0.0;
  std::uint64_t seed = 0;

  void check() const {
    if (!(scale > 0.0)) throw std::invalid_argument("encoder: scale must be > 0");
    if (!(noise_sd >= 0.0)) throw std::invalid_argument("encoder: noise_sd must be >= 0");
  }

  static EncoderModel ideal() { return {}; }
};

struct ObservationRecord {
  double t;
  double encoder_reading;
  std::optional<double> truth_rho;
  std::optional<std::pair<std::size_t, std::size_t>> truth_event;

  friend bool operator==(const ObservationRecord&, const ObservationRecord&) = default;
};

/// Detections seen while winding (rho decreasing) from start_rho. Real logs
/// carry only t and encoder_reading; the truth fields come from simulation.
struct ObservationTrace {
  std::vector<ObservationRecord> records;
  double start_rho = 0.0;
  /// Encoder length wound after the last record (or from the start, if no
  /// record) before winding stopped; unknown for imported logs.
  std::optional<double> trailing_wound;

  std::size_t size() const noexcept { return records.size(); }

  friend bool operator==(const ObservationTrace&, const ObservationTrace&) = default;
};

/// Wind at speed v from start_rho down to stop_rho and record every
/// detection with rho in [stop_rho, start_rho]. Simultaneous meetings are
/// one physical instant and yield one record (the rectified survivor).
inline ObservationTrace simulate(const CalibrationDesign& design, const EncoderModel& encoder,
                                 double start_rho, double stop_rho) {
  encoder.check();
  const auto& g = design.geometry();
  if (start_rho > g.rho_max() + kGeomTolerance)
    throw std::invalid_argument("simulate: start_rho exceeds rho_max");
  if (stop_rho < g.b() - kGeomTolerance) throw std::invalid_argument("simulate: stop_rho below the boost b");
  if (stop_rho > start_rho) throw std::invalid_argument("simulate: stop_rho above start_rho");

  ObservationTrace trace;
  trace.start_rho = start_rho;
  if (stop_rho == start_rho) {
    trace.trailing_wound = 0.0;
    return trace;
  }

  PortableGaussian jitter{encoder.seed};
  const EventTable table = rectified_events(design);
  double last_wound = 0.0;
  for (const Event& e : table.events()) {
    if (e.rho > start_rho + kGeomTolerance || e.rho < stop_rho - kGeomTolerance) continue;
    const double wound = start_rho - e.rho;
    const double reading = encoder.offset + encoder.scale * wound + jitter.normal(encoder.noise_sd);
    trace.records.push_back({wound / g.v(), reading, e.rho, std::pair{e.i, e.j}});
    last_wound = wound;
  }
  trace.trailing_wound = encoder.scale * ((start_rho - stop_rho) - last_wound);
  return trace;
}

/// Encoder length wound between records a and b: the identifier's observed gap.
inline double wound_between(const ObservationTrace& trace, std::size_t a, std::size_t b) {
  if (!(a < b)) throw std::out_of_range("wound_between: need a < b");
  if (b >= trace.records.size()) throw std::out_of_range("wound_between: record index out of range");
  return trace.records[b].encoder_reading - trace.records[a].encoder_reading;
}

}  // namespace autocal
