#pragma once

// File formats: JSON design configs, event/trace CSVs, calibration results.
// Requires nlohmann/json (vendor/json.hpp) on the include path.

#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "core_model.hpp"
#include "event_engine.hpp"
#include "identifier.hpp"
#include "layout_designer.hpp"
#include "layout_optimizer.hpp"
#include "wind_simulator.hpp"

namespace autocal::io {

using json = nlohmann::json;

/// Malformed input file. The message names the line or the JSON field.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ----------------------------------------------------------------------------
// Design config
// ----------------------------------------------------------------------------

struct Tolerances {
  double geom = kGeomTolerance;
  double gap = kDefaultGapTolerance;
};

struct ExplicitLayout {
  std::vector<double> sensor_heights;
  std::vector<double> mark_positions;
};

struct DesignConfig {
  RobotGeometry geometry;
  std::variant<ExplicitLayout, DesignRecipe> layout;
  Tolerances tolerances;

  bool has_recipe() const noexcept { return std::holds_alternative<DesignRecipe>(layout); }
};

namespace detail {

inline const json& field(const json& obj, const std::string& path, const char* key) {
  if (!obj.is_object()) throw FormatError(path + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw FormatError(path + "/" + key + ": missing field");
  return *it;
}

inline double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw FormatError(path + ": expected a number");
  return v.get<double>();
}

inline double positive(const json& v, const std::string& path) {
  const double x = number(v, path);
  if (!(x > 0.0)) throw FormatError(path + ": must be > 0");
  return x;
}

inline std::vector<double> positive_list(const json& v, const std::string& path) {
  if (!v.is_array()) throw FormatError(path + ": expected an array of numbers");
  if (v.empty()) throw FormatError(path + ": must not be empty");
  std::vector<double> out;
  for (std::size_t k = 0; k < v.size(); ++k) out.push_back(positive(v[k], path + "/" + std::to_string(k)));
  return out;
}

}  // namespace detail

/*
 * Schema:
 *   {
 *     "geometry":   {"h": 6, "rho_max": 11, "v": 1, "b": 1},
 *     "layout":     {"sensor_heights": [...], "mark_positions": [...]},   // or
 *     "recipe":     {"d_pool": [...], "z_pool": [...],
 *                    "os1": 2, "sensor_heights_override": [...]},         // optional keys
 *     "tolerances": {"geom": 1e-9, "gap": 0.05}                           // optional
 *   }
 * Exactly one of "layout" / "recipe" must be present.
 */
inline DesignConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  if (!doc.is_object()) throw FormatError("config: top level must be an object");

  const json& geo = detail::field(doc, "", "geometry");
  const double h = detail::positive(detail::field(geo, "/geometry", "h"), "/geometry/h");
  const double rho_max = detail::positive(detail::field(geo, "/geometry", "rho_max"), "/geometry/rho_max");
  const double v = detail::positive(detail::field(geo, "/geometry", "v"), "/geometry/v");
  const double b = detail::number(detail::field(geo, "/geometry", "b"), "/geometry/b");
  if (b < 0.0) throw FormatError("/geometry/b: must be >= 0");
  const RobotGeometry geometry{h, rho_max, v, b};

  const bool has_layout = doc.contains("layout");
  const bool has_recipe = doc.contains("recipe");
  if (has_layout == has_recipe) throw FormatError("config: exactly one of /layout or /recipe is required");

  Tolerances tol;
  if (doc.contains("tolerances")) {
    const json& t = doc["tolerances"];
    if (!t.is_object()) throw FormatError("/tolerances: expected an object");
    if (t.contains("geom")) tol.geom = detail::positive(t["geom"], "/tolerances/geom");
    if (t.contains("gap")) tol.gap = detail::positive(t["gap"], "/tolerances/gap");
  }

  if (has_layout) {
    const json& l = doc["layout"];
    ExplicitLayout lay{
        detail::positive_list(detail::field(l, "/layout", "sensor_heights"), "/layout/sensor_heights"),
        detail::positive_list(detail::field(l, "/layout", "mark_positions"), "/layout/mark_positions")};
    return {geometry, std::move(lay), tol};
  }

  const json& r = doc["recipe"];
  DesignRecipe recipe{geometry, detail::positive_list(detail::field(r, "/recipe", "d_pool"), "/recipe/d_pool"),
                      {}, std::nullopt, std::nullopt};
  if (r.contains("sensor_heights_override"))
    recipe.sensor_heights_override =
        detail::positive_list(r["sensor_heights_override"], "/recipe/sensor_heights_override");
  if (r.contains("z_pool")) {
    recipe.z_pool = detail::positive_list(r["z_pool"], "/recipe/z_pool");
  } else if (!recipe.sensor_heights_override) {
    throw FormatError("/recipe/z_pool: missing field");
  }
  if (r.contains("os1")) recipe.os1_override = detail::positive(r["os1"], "/recipe/os1");
  return {geometry, std::move(recipe), tol};
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline DesignConfig load_config(const std::string& path) {
  try {
    return parse_config(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

/// Build the design a config describes. Structural errors (unordered
/// layouts, infeasible recipes) surface as exceptions.
inline CalibrationDesign resolve_design(const DesignConfig& cfg) {
  if (const auto* lay = std::get_if<ExplicitLayout>(&cfg.layout))
    return CalibrationDesign{cfg.geometry, SensorLayout{lay->sensor_heights}, MarkLayout{lay->mark_positions}};
  return build_design(std::get<DesignRecipe>(cfg.layout)).design;
}

inline json to_json(const RobotGeometry& g) {
  return {{"h", g.h()}, {"rho_max", g.rho_max()}, {"v", g.v()}, {"b", g.b()}};
}

/// Config document holding an explicit layout.
inline json design_to_json(const CalibrationDesign& d, const Tolerances& tol = {}) {
  return {{"geometry", to_json(d.geometry())},
          {"layout", {{"sensor_heights", d.sensors().heights()}, {"mark_positions", d.marks().positions()}}},
          {"tolerances", {{"geom", tol.geom}, {"gap", tol.gap}}}};
}

inline json recipe_to_json(const DesignRecipe& r, const Tolerances& tol = {}) {
  json rec{{"d_pool", r.d_pool}, {"z_pool", r.z_pool}};
  if (r.os1_override) rec["os1"] = *r.os1_override;
  if (r.sensor_heights_override) rec["sensor_heights_override"] = *r.sensor_heights_override;
  return {{"geometry", to_json(r.geometry)}, {"recipe", rec}, {"tolerances", {{"geom", tol.geom}, {"gap", tol.gap}}}};
}

// ----------------------------------------------------------------------------
// CSV helpers
// ----------------------------------------------------------------------------

/// Number rendering: fixed with `decimals` places, or round-trip exact when unset.
struct NumberFormat {
  std::optional<int> decimals = 2;

  std::string operator()(double x) const {
    char buf[64];
    if (decimals) {
      std::snprintf(buf, sizeof buf, "%.*f", *decimals, x);
    } else {
      std::snprintf(buf, sizeof buf, "%.17g", x);
    }
    return buf;
  }

  static NumberFormat full() { return NumberFormat{std::nullopt}; }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  return cells;
}

inline double parse_double(const std::string& s, std::size_t line, const char* col) {
  try {
    std::size_t used = 0;
    const double x = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw FormatError("line " + std::to_string(line) + ": column " + col + ": not a number: '" + s + "'");
  }
}

inline std::size_t parse_index(const std::string& s, std::size_t line, const char* col) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(s, &used);
    if (used != s.size() || x < 1) throw std::invalid_argument("bad index");
    return static_cast<std::size_t>(x);
  } catch (const std::exception&) {
    throw FormatError("line " + std::to_string(line) + ": column " + col + ": not a 1-based index: '" + s + "'");
  }
}

}  // namespace detail

// ----------------------------------------------------------------------------
// Event tables: t,i,j,rho,delta_rho
// ----------------------------------------------------------------------------

inline constexpr const char* kEventCsvHeader = "t,i,j,rho,delta_rho";

inline void write_events_csv(std::ostream& out, const EventTable& table, NumberFormat fmt = {}) {
  out << kEventCsvHeader << '\n';
  const auto& ev = table.events();
  for (std::size_t k = 0; k < ev.size(); ++k) {
    out << fmt(ev[k].t) << ',' << ev[k].i << ',' << ev[k].j << ',' << fmt(ev[k].rho) << ',';
    if (k > 0) out << fmt(table.gaps()[k - 1]);
    out << '\n';
  }
}

/// Parse an event CSV. delta_rho is recomputed from rho, not trusted.
inline EventTable read_events_csv(std::istream& in, bool rectified) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("line 1: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kEventCsvHeader) throw FormatError(std::string("line 1: expected header '") + kEventCsvHeader + "'");
  std::vector<Event> ev;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line == "\r") continue;
    const auto c = detail::split_csv_line(line);
    if (c.size() != 5) throw FormatError("line " + std::to_string(n) + ": expected 5 columns");
    ev.push_back({detail::parse_double(c[0], n, "t"), detail::parse_index(c[1], n, "i"),
                  detail::parse_index(c[2], n, "j"), detail::parse_double(c[3], n, "rho")});
  }
  try {
    return EventTable{std::move(ev), rectified};
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
}

// ----------------------------------------------------------------------------
// Observation traces: t,encoder_reading,truth_rho,truth_i,truth_j
// ----------------------------------------------------------------------------

inline constexpr const char* kTraceCsvHeader = "t,encoder_reading,truth_rho,truth_i,truth_j";

inline void write_trace_csv(std::ostream& out, const ObservationTrace& trace,
                            NumberFormat fmt = NumberFormat::full()) {
  out << kTraceCsvHeader << '\n';
  for (const auto& r : trace.records) {
    out << fmt(r.t) << ',' << fmt(r.encoder_reading) << ',';
    if (r.truth_rho) out << fmt(*r.truth_rho);
    out << ',';
    if (r.truth_event) out << r.truth_event->first;
    out << ',';
    if (r.truth_event) out << r.truth_event->second;
    out << '\n';
  }
}

/// Accepts the full header or the two-column "t,encoder_reading" form used
/// by hardware logs; empty truth cells are allowed.
inline ObservationTrace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("line 1: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const bool with_truth = line == kTraceCsvHeader;
  if (!with_truth && line != "t,encoder_reading")
    throw FormatError(std::string("line 1: expected header '") + kTraceCsvHeader + "' or 't,encoder_reading'");

  ObservationTrace trace;
  std::size_t n = 1;
  double last_t = -std::numeric_limits<double>::infinity();
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line == "\r") continue;
    const auto c = detail::split_csv_line(line);
    if (c.size() != (with_truth ? 5u : 2u))
      throw FormatError("line " + std::to_string(n) + ": expected " + (with_truth ? "5" : "2") + " columns");
    ObservationRecord r{detail::parse_double(c[0], n, "t"), detail::parse_double(c[1], n, "encoder_reading"),
                        std::nullopt, std::nullopt};
    if (!(r.t > last_t)) throw FormatError("line " + std::to_string(n) + ": times must be strictly increasing");
    last_t = r.t;
    if (with_truth) {
      if (!c[2].empty()) r.truth_rho = detail::parse_double(c[2], n, "truth_rho");
      if (!c[3].empty() || !c[4].empty())
        r.truth_event = std::pair{detail::parse_index(c[3], n, "truth_i"), detail::parse_index(c[4], n, "truth_j")};
    }
    trace.records.push_back(r);
  }
  return trace;
}

// ----------------------------------------------------------------------------
// Reports
// ----------------------------------------------------------------------------

inline json result_to_json(const CalibrationResult& r) {
  json out{{"status", to_string(r.status)},
           {"detections_used", r.detections_used},
           {"candidate_count_history", r.candidate_history}};
  out["rho"] = r.rho ? json(*r.rho) : json(nullptr);
  out["stroke"] = r.stroke ? json(*r.stroke) : json(nullptr);
  out["exhaustion_estimate"] = r.status == IdentifierStatus::Exhausted;
  if (r.fit)
    out["corrector_fit"] = {{"scale", r.fit->scale}, {"offset", r.fit->offset}};
  else
    out["corrector_fit"] = nullptr;
  return out;
}

inline std::string render_report(const ConditionReport& report) {
  std::ostringstream os;
  for (const auto& e : report.entries())
    os << to_string(e.condition) << "  " << (e.passed ? "pass" : "FAIL") << "  " << e.detail << '\n';
  return os.str();
}

inline constexpr const char* kOptimizeCsvHeader = "iteration,mean,std,worst_stroke";

inline void write_trail_csv(std::ostream& out, const std::vector<TrailEntry>& trail,
                            NumberFormat fmt = NumberFormat::full()) {
  out << kOptimizeCsvHeader << '\n';
  for (const auto& t : trail)
    out << t.iteration << ',' << fmt(t.score.mean_gap) << ',' << fmt(t.score.std_gap) << ','
        << fmt(t.score.worst_stroke) << '\n';
}

}  // namespace autocal::io
