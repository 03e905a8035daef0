#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

#include "core_model.hpp"
#include "event_engine.hpp"
#include "layout_designer.hpp"

namespace autocal {

/// Calibration quality of a design: small mean gap, large gap dispersion,
/// short strokes, and no start position that winding cannot resolve.
struct ObjectiveScore {
  double mean_gap = 0.0;
  double std_gap = 0.0;
  double worst_stroke = 0.0;
  double mean_stroke = 0.0;
  std::size_t unidentifiable_starts = 0;

  friend bool operator==(const ObjectiveScore&, const ObjectiveScore&) = default;
};

inline ObjectiveScore score(const CalibrationDesign& design, double stroke_tol = kDefaultStrokeTolerance) {
  const EventTable table = rectified_events(design);
  const DeltaStats stats = delta_stats(table);
  const StrokeProfile prof = stroke_profile(table, stroke_tol);
  return {stats.mean, stats.std, prof.worst_stroke, prof.mean_stroke, prof.unidentifiable};
}

/// Lexicographic: fewer unidentifiable starts, then smaller worst stroke,
/// then smaller mean gap, then larger gap dispersion. `less` means better.
inline std::weak_ordering compare(const ObjectiveScore& a, const ObjectiveScore& b,
                                  double tol = kGeomTolerance) {
  if (a.unidentifiable_starts != b.unidentifiable_starts) return a.unidentifiable_starts <=> b.unidentifiable_starts;
  auto cmp = [tol](double x, double y) {
    if (std::fabs(x - y) <= tol) return std::weak_ordering::equivalent;
    return x < y ? std::weak_ordering::less : std::weak_ordering::greater;
  };
  if (auto c = cmp(a.worst_stroke, b.worst_stroke); c != 0) return c;
  if (auto c = cmp(a.mean_gap, b.mean_gap); c != 0) return c;
  return cmp(b.std_gap, a.std_gap);
}

struct TrailEntry {
  std::size_t iteration;
  ObjectiveScore score;
};

struct SearchResult {
  DesignRecipe recipe;
  CalibrationDesign design;
  ObjectiveScore score;
  std::vector<TrailEntry> trail;
  bool exhaustive = false;
};

namespace detail {

/// Distinct orderings of a multiset, as a double (saturates gracefully).
inline double distinct_permutations(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double total = 1.0;
  std::size_t run = 0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    total *= static_cast<double>(k + 1);
    run = (k > 0 && v[k] == v[k - 1]) ? run + 1 : 1;
    total /= static_cast<double>(run);
  }
  return total;
}

/// Fisher-Yates driven directly by the 64-bit engine so the shuffle is the
/// same on every standard library.
inline void portable_shuffle(std::vector<double>& v, std::mt19937_64& rng) {
  for (std::size_t k = v.size(); k > 1; --k) {
    const std::size_t r = static_cast<std::size_t>(rng() % k);
    std::swap(v[k - 1], v[r]);
  }
}

class Evaluator {
 public:
  explicit Evaluator(const DesignRecipe& base, double stroke_tol) : base_{base}, stroke_tol_{stroke_tol} {}

  struct Outcome {
    DesignRecipe recipe;
    CalibrationDesign design;
    ObjectiveScore score;
  };

  std::optional<Outcome> operator()(const std::vector<double>& d, const std::vector<double>& z) {
    DesignRecipe r = base_;
    r.d_pool = d;
    r.z_pool = z;
    try {
      auto built = build_design(r);
      if (!built.report.required_pass()) return std::nullopt;
      const auto s = score(built.design, stroke_tol_);
      return Outcome{std::move(r), std::move(built.design), s};
    } catch (const InfeasibleRecipe&) {
      return std::nullopt;
    } catch (const std::invalid_argument&) {
      return std::nullopt;
    }
  }

 private:
  DesignRecipe base_;
  double stroke_tol_;
};

}  // namespace detail

/// Search over orderings of the recipe's gap pools. When the number of
/// distinct orderings fits in the budget every one is scored; otherwise a
/// seeded random-restart hill climb over adjacent swaps is run. The
/// starting recipe is always scored first, so the result is never worse.
inline SearchResult search(const DesignRecipe& recipe, std::size_t budget, std::uint64_t seed,
                           double stroke_tol = kDefaultStrokeTolerance) {
  recipe.check();
  detail::Evaluator eval{recipe, stroke_tol};
  const bool permute_z = !recipe.sensor_heights_override.has_value();

  std::vector<TrailEntry> trail;
  std::optional<detail::Evaluator::Outcome> best;
  std::size_t iteration = 0;

  auto consider = [&](const std::vector<double>& d, const std::vector<double>& z) {
    auto out = eval(d, z);
    const std::size_t it = iteration++;
    if (!out) return std::optional<ObjectiveScore>{};
    trail.push_back({it, out->score});
    const ObjectiveScore s = out->score;
    if (!best || compare(s, best->score) < 0) best = std::move(out);
    return std::optional<ObjectiveScore>{s};
  };

  const auto initial = consider(recipe.d_pool, recipe.z_pool);

  const double space = detail::distinct_permutations(recipe.d_pool) *
                       (permute_z ? detail::distinct_permutations(recipe.z_pool) : 1.0);
  const bool exhaustive = budget > 0 && space <= static_cast<double>(budget);

  if (exhaustive) {
    std::vector<double> d = recipe.d_pool;
    std::sort(d.begin(), d.end());
    do {
      std::vector<double> z = recipe.z_pool;
      std::sort(z.begin(), z.end());
      do {
        consider(d, z);
      } while (permute_z && std::next_permutation(z.begin(), z.end()));
    } while (std::next_permutation(d.begin(), d.end()));
  } else if (budget > 0) {
    std::mt19937_64 rng{seed};
    std::map<std::pair<std::vector<double>, std::vector<double>>, std::optional<ObjectiveScore>> cache;
    cache.emplace(std::pair{recipe.d_pool, recipe.z_pool}, initial);
    std::size_t spent = 0;
    auto eval_cached = [&](const std::vector<double>& d, const std::vector<double>& z) {
      auto key = std::pair{d, z};
      if (auto it = cache.find(key); it != cache.end()) return it->second;
      ++spent;
      auto s = consider(d, z);
      cache.emplace(std::move(key), s);
      return s;
    };

    std::vector<double> cur_d = recipe.d_pool, cur_z = recipe.z_pool;
    std::optional<ObjectiveScore> cur = initial;
    std::size_t stale = 0;  // moves that only hit the cache
    while (spent < budget && stale < 4 * budget + 16) {
      const std::size_t before = spent;
      std::optional<std::pair<std::vector<double>, std::vector<double>>> step;
      std::optional<ObjectiveScore> step_score;
      auto try_swap = [&](std::vector<double>& v, std::size_t k) {
        if (spent >= budget || v[k] == v[k + 1]) return;
        std::swap(v[k], v[k + 1]);
        auto s = eval_cached(cur_d, cur_z);
        if (s && (!cur || compare(*s, *cur) < 0) && (!step_score || compare(*s, *step_score) < 0)) {
          step = std::pair{cur_d, cur_z};
          step_score = s;
        }
        std::swap(v[k], v[k + 1]);
      };
      for (std::size_t k = 0; k + 1 < cur_d.size(); ++k) try_swap(cur_d, k);
      if (permute_z)
        for (std::size_t k = 0; k + 1 < cur_z.size(); ++k) try_swap(cur_z, k);

      if (step) {
        std::tie(cur_d, cur_z) = *step;
        cur = step_score;
      } else {
        // Local optimum: restart from a random ordering.
        detail::portable_shuffle(cur_d, rng);
        if (permute_z) detail::portable_shuffle(cur_z, rng);
        cur = eval_cached(cur_d, cur_z);
      }
      stale = (spent == before) ? stale + 1 : 0;
    }
  }

  if (!best) throw InfeasibleRecipe("search: no pool ordering yields a conforming design");
  return {std::move(best->recipe), std::move(best->design), best->score, std::move(trail), exhaustive};
}

}  // namespace autocal
