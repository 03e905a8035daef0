#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace autocal {

/// Equality tolerance for geometric quantities, in meters.
inline constexpr double kGeomTolerance = 1e-9;

inline bool nearly_equal(double a, double b, double tol = kGeomTolerance) {
  return std::fabs(a - b) <= tol;
}

// ----------------------------------------------------------------------------
// RobotGeometry
// ----------------------------------------------------------------------------

/// Vertical support of height h with the winch centre O at its foot and the
/// top pulley A at its head. The cable leaves A towards the platform point B.
class RobotGeometry {
 public:
  RobotGeometry(double h, double rho_max, double v, double b)
      : h_{h}, rho_max_{rho_max}, v_{v}, b_{b} {
    if (!(h > 0.0)) throw std::invalid_argument("geometry: h must be > 0");
    if (!(rho_max > 0.0)) throw std::invalid_argument("geometry: rho_max must be > 0");
    if (!(v > 0.0)) throw std::invalid_argument("geometry: v must be > 0");
    if (!(b >= 0.0)) throw std::invalid_argument("geometry: b must be >= 0");
  }

  double h() const noexcept { return h_; }
  double rho_max() const noexcept { return rho_max_; }
  double v() const noexcept { return v_; }
  double b() const noexcept { return b_; }

  friend bool operator==(const RobotGeometry&, const RobotGeometry&) = default;

 private:
  double h_;
  double rho_max_;
  double v_;
  double b_;
};

/// Total cable length from the winch centre to the platform at full extension.
inline double l_max(const RobotGeometry& g) noexcept { return g.h() + g.rho_max(); }

// ----------------------------------------------------------------------------
// Layouts
// ----------------------------------------------------------------------------

/// Sensor heights ||OS_j|| above the winch centre, strictly ascending (S_1 lowest).
class SensorLayout {
 public:
  explicit SensorLayout(std::vector<double> heights) : heights_{std::move(heights)} {
    if (heights_.empty()) throw std::invalid_argument("sensor layout: at least one sensor required");
    if (!(heights_.front() > 0.0))
      throw std::invalid_argument("sensor layout: sensor heights must be > 0");
    for (std::size_t k = 1; k < heights_.size(); ++k) {
      if (!(heights_[k] > heights_[k - 1]))
        throw std::invalid_argument("sensor layout: heights must be strictly ascending (S_" +
                                    std::to_string(k) + " / S_" + std::to_string(k + 1) + ")");
    }
  }

  std::size_t size() const noexcept { return heights_.size(); }
  const std::vector<double>& heights() const noexcept { return heights_; }

  /// 1-based access, matching the S_j numbering.
  double at(std::size_t j) const {
    if (j < 1 || j > heights_.size()) throw std::out_of_range("sensor index out of range");
    return heights_[j - 1];
  }

  /// z_j = ||OS_{j+1}|| - ||OS_j||, for j = 1..n_s-1.
  std::vector<double> gaps() const {
    std::vector<double> z;
    z.reserve(heights_.size() > 0 ? heights_.size() - 1 : 0);
    for (std::size_t k = 1; k < heights_.size(); ++k) z.push_back(heights_[k] - heights_[k - 1]);
    return z;
  }

  friend bool operator==(const SensorLayout&, const SensorLayout&) = default;

 private:
  std::vector<double> heights_;
};

/// Mark distances ||BM_i|| from the platform end B, strictly descending
/// (M_1 is the mark nearest the pulley A).
class MarkLayout {
 public:
  explicit MarkLayout(std::vector<double> positions) : positions_{std::move(positions)} {
    if (positions_.empty()) throw std::invalid_argument("mark layout: at least one mark required");
    if (!(positions_.back() > 0.0))
      throw std::invalid_argument("mark layout: mark positions must be > 0");
    for (std::size_t k = 1; k < positions_.size(); ++k) {
      if (!(positions_[k] < positions_[k - 1]))
        throw std::invalid_argument("mark layout: positions must be strictly descending (M_" +
                                    std::to_string(k) + " / M_" + std::to_string(k + 1) + ")");
    }
  }

  std::size_t size() const noexcept { return positions_.size(); }
  const std::vector<double>& positions() const noexcept { return positions_; }

  double at(std::size_t i) const {
    if (i < 1 || i > positions_.size()) throw std::out_of_range("mark index out of range");
    return positions_[i - 1];
  }

  /// d_i = ||BM_i|| - ||BM_{i+1}||, for i = 1..n_m-1.
  std::vector<double> gaps() const {
    std::vector<double> d;
    d.reserve(positions_.size() > 0 ? positions_.size() - 1 : 0);
    for (std::size_t k = 1; k < positions_.size(); ++k) d.push_back(positions_[k - 1] - positions_[k]);
    return d;
  }

  /// d_n = ||BM_n||, the reserve between the last mark and B.
  double distal_gap() const noexcept { return positions_.back(); }

  friend bool operator==(const MarkLayout&, const MarkLayout&) = default;

 private:
  std::vector<double> positions_;
};

// ----------------------------------------------------------------------------
// CalibrationDesign
// ----------------------------------------------------------------------------

/// Geometry plus sensor and mark layouts. Only structural consistency is
/// enforced here; conformance to the placement conditions is a report
/// (see validate_design), so deliberately non-conforming designs can be studied.
class CalibrationDesign {
 public:
  CalibrationDesign(RobotGeometry geometry, SensorLayout sensors, MarkLayout marks)
      : geometry_{geometry}, sensors_{std::move(sensors)}, marks_{std::move(marks)} {
    if (!(sensors_.heights().back() < geometry_.h()))
      throw std::invalid_argument("design: top sensor must sit below the support height h");
  }

  const RobotGeometry& geometry() const noexcept { return geometry_; }
  const SensorLayout& sensors() const noexcept { return sensors_; }
  const MarkLayout& marks() const noexcept { return marks_; }

  std::size_t sensor_count() const noexcept { return sensors_.size(); }
  std::size_t mark_count() const noexcept { return marks_.size(); }

  /// d_0 = rho_max - ||BM_1||, the reserve between A and the first mark.
  double proximal_gap() const noexcept { return geometry_.rho_max() - marks_.positions().front(); }
  double distal_gap() const noexcept { return marks_.distal_gap(); }

  friend bool operator==(const CalibrationDesign&, const CalibrationDesign&) = default;

 private:
  RobotGeometry geometry_;
  SensorLayout sensors_;
  MarkLayout marks_;
};

/// Free length ||AB|| when mark M_i faces sensor S_j. Negative for
/// pairs that can never meet; callers filter.
inline double rho_at(const CalibrationDesign& d, std::size_t i, std::size_t j) {
  return d.marks().at(i) - (d.geometry().h() - d.sensors().at(j));
}

// ----------------------------------------------------------------------------
// Condition report
// ----------------------------------------------------------------------------

enum class Condition { C1 = 1, C2, C3, C4, C5, C6, C7 };

inline constexpr std::array<Condition, 7> kAllConditions{Condition::C1, Condition::C2, Condition::C3,
                                                         Condition::C4, Condition::C5, Condition::C6,
                                                         Condition::C7};

inline std::string to_string(Condition c) { return "C" + std::to_string(static_cast<int>(c)); }

struct ConditionEntry {
  Condition condition;
  bool passed;
  std::string detail;
};

/// Outcome of validate_design: exactly one entry per condition, in order C1..C7.
class ConditionReport {
 public:
  explicit ConditionReport(std::array<ConditionEntry, 7> entries) : entries_{std::move(entries)} {
    for (std::size_t k = 0; k < entries_.size(); ++k) {
      if (entries_[k].condition != kAllConditions[k])
        throw std::invalid_argument("condition report: entries must be ordered C1..C7");
    }
  }

  const std::array<ConditionEntry, 7>& entries() const noexcept { return entries_; }
  const ConditionEntry& operator[](Condition c) const { return entries_[static_cast<int>(c) - 1]; }
  bool passed(Condition c) const { return (*this)[c].passed; }

  /// C1..C5 are required for identification; C6/C7 only improve it.
  bool required_pass() const {
    return std::all_of(entries_.begin(), entries_.begin() + 5, [](const auto& e) { return e.passed; });
  }
  bool all_pass() const {
    return std::all_of(entries_.begin(), entries_.end(), [](const auto& e) { return e.passed; });
  }

 private:
  std::array<ConditionEntry, 7> entries_;
};

namespace detail {

inline std::string fmt_len(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

/// Indices k (1-based) where seq[k] - seq[k-1] vanishes within tol.
inline std::vector<std::size_t> repeated_steps(const std::vector<double>& seq, double tol) {
  std::vector<std::size_t> bad;
  for (std::size_t k = 1; k < seq.size(); ++k)
    if (std::fabs(seq[k] - seq[k - 1]) <= tol) bad.push_back(k);
  return bad;
}

inline std::string join_indices(const std::vector<std::size_t>& idx, const char* prefix) {
  std::string s;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (k) s += ", ";
    s += prefix + std::to_string(idx[k]);
  }
  return s;
}

}  // namespace detail

// C5 needs event enumeration, which lives in event_engine.hpp. The report is
// assembled there; this computes the purely geometric part.
struct GeometricConditions {
  ConditionEntry c1, c2, c3, c4, c6, c7;
};

inline GeometricConditions check_geometric_conditions(const CalibrationDesign& design,
                                                      double tol = kGeomTolerance) {
  const auto& g = design.geometry();
  const auto d = design.marks().gaps();
  const auto z = design.sensors().gaps();
  const double d0 = design.proximal_gap();
  const double dn = design.distal_gap();
  const double os1 = design.sensors().heights().front();
  const double osn = design.sensors().heights().back();

  GeometricConditions out{};

  {
    double min_gap = d0;
    for (double di : d) min_gap = std::min(min_gap, di);
    const bool d0_is_min = d0 <= min_gap + tol;
    const bool top_sensor = nearly_equal(osn, g.h() - d0, tol);
    std::string detail = "d0=" + detail::fmt_len(d0) + ", min gap=" + detail::fmt_len(min_gap) +
                         ", ||OS_n||=" + detail::fmt_len(osn) + ", h-d0=" + detail::fmt_len(g.h() - d0);
    if (!d0_is_min) detail += "; d0 exceeds the smallest mark gap";
    if (!top_sensor) detail += "; top sensor not at h-d0";
    out.c1 = {Condition::C1, d0_is_min && top_sensor, detail};
  }
  {
    std::vector<std::size_t> zero;
    if (!(d0 > tol)) zero.push_back(0);
    for (std::size_t k = 0; k < d.size(); ++k)
      if (!(std::fabs(d[k]) > tol)) zero.push_back(k + 1);
    out.c2 = {Condition::C2, zero.empty(),
              zero.empty() ? "all mark gaps non-zero" : "zero gaps: " + detail::join_indices(zero, "d")};
  }
  {
    const double residual = g.h() - os1 - dn + g.b();
    out.c3 = {Condition::C3, nearly_equal(residual, 0.0, tol),
              "h - ||OS_1|| - d_n + b = " + detail::fmt_len(residual)};
  }
  {
    std::vector<std::size_t> zero;
    for (std::size_t k = 0; k < z.size(); ++k)
      if (!(std::fabs(z[k]) > tol)) zero.push_back(k + 1);
    out.c4 = {Condition::C4, zero.empty(),
              zero.empty() ? "all sensor gaps non-zero" : "zero gaps: " + detail::join_indices(zero, "z")};
  }
  {
    const auto bad = detail::repeated_steps(d, tol);
    out.c6 = {Condition::C6, bad.empty(),
              bad.empty() ? "successive mark gaps all differ"
                          : "equal successive mark gaps at " + detail::join_indices(bad, "d")};
  }
  {
    const auto bad = detail::repeated_steps(z, tol);
    out.c7 = {Condition::C7, bad.empty(),
              bad.empty() ? "successive sensor gaps all differ"
                          : "equal successive sensor gaps at " + detail::join_indices(bad, "z")};
  }
  return out;
}

}  // namespace autocal
