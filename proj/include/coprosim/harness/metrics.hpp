#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coprosim/types.hpp"

/// Session-level analysis metrics and the tabular record they are reported
/// in. Pure computation; serialization lives in artifacts.hpp.
namespace coprosim::harness {

/// One operating point of a detector: everything scoring >= `threshold` is
/// called positive.
struct RocPoint {
  double threshold;
  double fpr;
  double tpr;
};

struct RocCurve {
  /// Thresholds strictly descending from +inf (the all-negative corner,
  /// fpr = tpr = 0) down to the lowest score (the all-positive corner,
  /// fpr = tpr = 1). Tied scores collapse into a single point.
  std::vector<RocPoint> points;
  double auc = 0.0;
};

/// Threshold sweep over the unique score values with trapezoidal area.
/// Labels must be 0/1 with both classes present (a single-class sweep has no
/// curve); throws DimensionError on length mismatch, DataError on a missing
/// class, std::invalid_argument on non-binary labels or non-finite scores.
RocCurve compute_roc(const Vec& scores, const std::vector<int>& labels);

/// Plug-in mutual information (bits, log base 2) of two binary vectors from
/// their empirical 2x2 joint, with 0 log 0 := 0. The plug-in estimate is a
/// KL divergence, hence nonnegative; summation dust below 1e-12 is floored
/// to exactly 0. No bias correction is applied — this matches descriptive
/// use on session-length vectors, and the plug-in bias (~1/(2n ln 2) per
/// degree of freedom) is the caller's to keep in mind on short inputs.
/// Throws DimensionError on length mismatch, DataError on empty input,
/// std::invalid_argument on entries other than 0 and 1.
double mutual_information(const std::vector<std::uint8_t>& a,
                          const std::vector<std::uint8_t>& b);

/// Per-session metric table: one labeled, unit-annotated column per scalar,
/// one row per session. The CSV emitted from this is the scenario's primary
/// quantitative artifact.
struct MetricsTable {
  struct Column {
    std::string name;
    std::string unit;  // empty for dimensionless quantities
  };
  std::vector<Column> columns;
  std::vector<Vec> rows;

  /// Throws std::invalid_argument on empty/duplicate column names, rows of
  /// the wrong width, or non-finite values.
  void validate() const;

  /// Header then one line per row; values printed with 17 significant
  /// digits so identical runs serialize identically.
  std::string to_csv() const;
};

}  // namespace coprosim::harness
