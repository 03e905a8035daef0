#pragma once

#include <string>

#include "core_model.hpp"
#include "event_engine.hpp"

namespace autocal {

/// Check a design against the seven placement conditions. Failures are
/// report entries, never exceptions.
inline ConditionReport validate_design(const CalibrationDesign& design, double tol = kGeomTolerance) {
  const auto geo = check_geometric_conditions(design, tol);

  const EventTable raw = enumerate_events(design, tol);
  ConditionEntry c5{Condition::C5, true, ""};
  try {
    const EventTable rect = rectify(raw, tol);
    const auto merged = raw.size() - rect.size();
    c5.detail = std::to_string(raw.size()) + " events, " + std::to_string(rect.size()) +
                " after rectification (" + std::to_string(merged) + " simultaneous merged)";
  } catch (const std::invalid_argument& e) {
    // Rectified table still holds two events at one instant or with equal rho.
    c5.passed = false;
    c5.detail = e.what();
  }

  return ConditionReport{{geo.c1, geo.c2, geo.c3, geo.c4, c5, geo.c6, geo.c7}};
}

}  // namespace autocal
