// autocal: command-line front end for the cable-length autocalibration library.
//
// Exit codes: 0 ok, 1 usage/parse/I-O error, 2 condition failure or
// infeasible recipe, 3 identifier found no match, 4 identifier still ambiguous.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "autocal/autocal.hpp"
#include "autocal/io.hpp"

namespace fs = std::filesystem;
using namespace autocal;

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kCondition = 2, kNoMatch = 3, kAmbiguous = 4 };

/// Relative config paths that do not exist locally are looked up in $AUTOCAL_CONFIG_DIR.
std::string resolve_config_path(const std::string& path) {
  if (fs::exists(path) || fs::path(path).is_absolute()) return path;
  if (const char* dir = std::getenv("AUTOCAL_CONFIG_DIR")) {
    const fs::path alt = fs::path(dir) / path;
    if (fs::exists(alt)) return alt.string();
  }
  return path;
}

struct Loaded {
  io::DesignConfig config;
  CalibrationDesign design;
};

Loaded load(const std::string& path) {
  auto cfg = io::load_config(resolve_config_path(path));
  auto design = io::resolve_design(cfg);
  return {std::move(cfg), std::move(design)};
}

/// Write to `path`, or stdout when empty.
template <typename Fn>
void emit(const std::string& path, Fn&& fn) {
  if (path.empty()) {
    fn(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  fn(out);
  if (!out) throw std::runtime_error("write failed: " + path);
}

int report_conditions(const ConditionReport& report) {
  std::cout << io::render_report(report);
  if (!report.required_pass()) {
    std::cout << "result: FAIL (C1-C5 required)\n";
    return kCondition;
  }
  if (!report.all_pass()) {
    std::cout << "result: pass with warning (";
    bool first = true;
    for (Condition c : {Condition::C6, Condition::C7})
      if (!report.passed(c)) {
        std::cout << (first ? "" : ", ") << to_string(c);
        first = false;
      }
    std::cout << " not met)\n";
    return kOk;
  }
  std::cout << "result: pass\n";
  return kOk;
}

struct Options {
  std::string config;
  std::string out;
  // events
  bool raw = false;
  int precision = 2;
  bool full_precision = false;
  // simulate
  double start = 0, stop = 0, scale = 1.0, offset = 0.0, noise = 0.0;
  std::uint64_t seed = 0;
  // calibrate
  std::string trace;
  std::optional<double> tolerance;
  std::optional<double> tail_wound;
  std::string json_out;
  // optimize
  std::size_t budget = 1000;
  std::string report;
};

int cmd_validate(const Options& o) {
  const auto l = load(o.config);
  return report_conditions(validate_design(l.design, l.config.tolerances.geom));
}

int cmd_design(const Options& o) {
  const auto l = load(o.config);
  const int rc = report_conditions(validate_design(l.design, l.config.tolerances.geom));
  emit(o.out, [&](std::ostream& os) { os << io::design_to_json(l.design, l.config.tolerances).dump(2) << '\n'; });
  return rc;
}

int cmd_events(const Options& o) {
  const auto l = load(o.config);
  const double tol = l.config.tolerances.geom;
  const EventTable raw = enumerate_events(l.design, tol);
  const EventTable table = o.raw ? raw : rectify(raw, tol);
  const io::NumberFormat fmt = o.full_precision ? io::NumberFormat::full() : io::NumberFormat{o.precision};
  emit(o.out, [&](std::ostream& os) { io::write_events_csv(os, table, fmt); });
  return kOk;
}

int cmd_simulate(const Options& o) {
  const auto l = load(o.config);
  const EncoderModel enc{o.scale, o.offset, o.noise, o.seed};
  const ObservationTrace trace = simulate(l.design, enc, o.start, o.stop);
  emit(o.out, [&](std::ostream& os) { io::write_trace_csv(os, trace); });
  if (!o.out.empty()) std::cout << trace.size() << " records written to " << o.out << '\n';
  return kOk;
}

int cmd_calibrate(const Options& o) {
  const auto l = load(o.config);
  std::ifstream in(o.trace, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + o.trace);
  ObservationTrace trace = io::read_trace_csv(in);
  trace.trailing_wound = o.tail_wound;
  const double tol = o.tolerance.value_or(l.config.tolerances.gap);
  const CalibrationResult r = run_trace(l.design, trace, tol);

  std::cout << "candidates: ";
  for (std::size_t k = 0; k < r.candidate_history.size(); ++k)
    std::cout << (k ? " -> " : "") << r.candidate_history[k];
  std::cout << "\nstatus: " << to_string(r.status) << '\n';
  if (r.rho) std::cout << "rho: " << io::NumberFormat{}(*r.rho) << " m" << '\n';
  if (r.status == IdentifierStatus::Exhausted) std::cout << "note: rho is an exhaustion estimate\n";
  std::cout << "detections_used: " << r.detections_used << '\n';
  if (r.stroke) std::cout << "stroke: " << io::NumberFormat{}(*r.stroke) << " m" << '\n';
  if (r.fit) std::cout << "encoder fit: scale " << r.fit->scale << ", offset " << r.fit->offset << '\n';
  if (!o.json_out.empty())
    emit(o.json_out, [&](std::ostream& os) { os << io::result_to_json(r).dump(2) << '\n'; });

  switch (r.status) {
    case IdentifierStatus::Identified:
    case IdentifierStatus::Exhausted: return kOk;
    case IdentifierStatus::NoMatch: return kNoMatch;
    default: return kAmbiguous;
  }
}

int cmd_optimize(const Options& o) {
  const auto cfg = io::load_config(resolve_config_path(o.config));
  const auto* recipe = std::get_if<DesignRecipe>(&cfg.layout);
  if (!recipe) throw io::FormatError(o.config + ": optimize needs a /recipe section");
  const SearchResult res = search(*recipe, o.budget, o.seed);

  const auto& s = res.score;
  std::cout << (res.exhaustive ? "exhaustive" : "hill-climb") << " search, " << res.trail.size()
            << " designs scored\n"
            << "best: mean " << s.mean_gap << " m, std " << s.std_gap << " m, worst stroke " << s.worst_stroke
            << " m, unidentifiable starts " << s.unidentifiable_starts << '\n';
  std::cout << "d_pool order:";
  for (double d : res.recipe.d_pool) std::cout << ' ' << d;
  std::cout << '\n';

  const int rc = report_conditions(validate_design(res.design, cfg.tolerances.geom));
  emit(o.out, [&](std::ostream& os) { os << io::design_to_json(res.design, cfg.tolerances).dump(2) << '\n'; });
  if (!o.report.empty()) emit(o.report, [&](std::ostream& os) { io::write_trail_csv(os, res.trail); });
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cable-length autocalibration: layout design, event tables, simulation, identification"};
  app.require_subcommand(1);
  Options o;

  auto* validate = app.add_subcommand("validate", "Check a design against conditions C1-C7");
  validate->add_option("config", o.config, "Design config (JSON)")->required();

  auto* design = app.add_subcommand("design", "Build a design from a recipe and write it as an explicit layout");
  design->add_option("config", o.config, "Design config (JSON)")->required();
  design->add_option("-o,--out", o.out, "Output config path (default stdout)");

  auto* events = app.add_subcommand("events", "Enumerate detection events as CSV");
  events->add_option("config", o.config, "Design config (JSON)")->required();
  auto* raw_flag = events->add_flag("--raw", o.raw, "All possible events, simultaneous ones included");
  events->add_flag("--rectified", "One event per instant (default)")->excludes(raw_flag);
  events->add_option("--csv,-o,--out", o.out, "Output CSV path (default stdout)");
  auto* prec = events->add_option("--precision", o.precision, "Decimal places (default 2)")->check(CLI::Range(0, 17));
  events->add_flag("--full-precision", o.full_precision, "Round-trip exact numbers")->excludes(prec);

  auto* sim = app.add_subcommand("simulate", "Simulate a winding run with an imperfect encoder");
  sim->add_option("config", o.config, "Design config (JSON)")->required();
  sim->add_option("--start", o.start, "Free length at start [m]")->required();
  sim->add_option("--stop", o.stop, "Free length at stop [m]")->required();
  sim->add_option("--scale", o.scale, "Encoder scale error (1 = ideal)");
  sim->add_option("--offset", o.offset, "Encoder initial register value [m]");
  sim->add_option("--noise", o.noise, "Reading jitter standard deviation [m]");
  sim->add_option("--seed", o.seed, "Jitter seed");
  sim->add_option("-o,--out", o.out, "Output trace CSV (default stdout)");

  auto* cal = app.add_subcommand("calibrate", "Identify the cable length from a detection trace");
  cal->add_option("config", o.config, "Design config (JSON)")->required();
  cal->add_option("--trace", o.trace, "Trace CSV")->required();
  cal->add_option("--tolerance", o.tolerance, "Gap matching tolerance [m] (default: config)");
  cal->add_option("--tail-wound", o.tail_wound, "Encoder length wound after the last detection [m]");
  cal->add_option("--json", o.json_out, "Also write the result as JSON");

  auto* opt = app.add_subcommand("optimize", "Search gap-pool orderings for a better layout");
  opt->add_option("config", o.config, "Recipe config (JSON)")->required();
  opt->add_option("--budget", o.budget, "Designs to score (exhaustive when the space fits)");
  opt->add_option("--seed", o.seed, "Hill-climb seed");
  opt->add_option("-o,--out", o.out, "Winning design config (default stdout)");
  opt->add_option("--report", o.report, "Score trail CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*validate) return cmd_validate(o);
    if (*design) return cmd_design(o);
    if (*events) return cmd_events(o);
    if (*sim) return cmd_simulate(o);
    if (*cal) return cmd_calibrate(o);
    if (*opt) return cmd_optimize(o);
  } catch (const InfeasibleRecipe& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kCondition;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
