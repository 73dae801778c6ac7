#include "coprosim/harness/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

#include "coprosim/errors.hpp"

namespace coprosim::harness {

RocCurve compute_roc(const Vec& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw DimensionError("compute_roc: scores and labels differ in length");
  if (scores.empty()) throw DataError("compute_roc: no samples");

  std::size_t n_pos = 0, n_neg = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1)
      throw std::invalid_argument("compute_roc: labels must be 0 or 1");
    if (!std::isfinite(scores[i]))
      throw std::invalid_argument("compute_roc: non-finite score");
    (labels[i] == 1 ? n_pos : n_neg) += 1;
  }
  if (n_pos == 0 || n_neg == 0)
    throw DataError("compute_roc: both classes must be present");

  // Sweep thresholds from high to low; each distinct score value admits one
  // more batch of samples into the positive call, ties as a group.
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });

  RocCurve roc;
  roc.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::size_t tp = 0, fp = 0, i = 0;
  while (i < order.size()) {
    const double t = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == t; ++i)
      (labels[order[i]] == 1 ? tp : fp) += 1;
    roc.points.push_back(
        {t, double(fp) / double(n_neg), double(tp) / double(n_pos)});
  }

  double auc = 0.0;
  for (std::size_t p = 1; p < roc.points.size(); ++p)
    auc += (roc.points[p].fpr - roc.points[p - 1].fpr) *
           (roc.points[p].tpr + roc.points[p - 1].tpr) * 0.5;
  roc.auc = auc;
  return roc;
}

double mutual_information(const std::vector<std::uint8_t>& a,
                          const std::vector<std::uint8_t>& b) {
  if (a.size() != b.size())
    throw DimensionError("mutual_information: vectors differ in length");
  if (a.empty()) throw DataError("mutual_information: empty vectors");

  double joint[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > 1 || b[i] > 1)
      throw std::invalid_argument("mutual_information: entries must be 0 or 1");
    joint[a[i]][b[i]] += 1.0;
  }
  const double n = double(a.size());
  const double pa[2] = {(joint[0][0] + joint[0][1]) / n,
                        (joint[1][0] + joint[1][1]) / n};
  const double pb[2] = {(joint[0][0] + joint[1][0]) / n,
                        (joint[0][1] + joint[1][1]) / n};

  double mi = 0.0;
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) {
      const double p = joint[x][y] / n;
      if (p > 0.0) mi += p * std::log2(p / (pa[x] * pb[y]));
    }
  // The estimate is a KL divergence, so negatives can only be rounding dust.
  return (mi < 0.0 && mi > -1e-12) ? 0.0 : mi;
}

void MetricsTable::validate() const {
  if (columns.empty())
    throw std::invalid_argument("MetricsTable: no columns defined");
  std::set<std::string> seen;
  for (const Column& c : columns) {
    if (c.name.empty())
      throw std::invalid_argument("MetricsTable: empty column name");
    if (!seen.insert(c.name).second)
      throw std::invalid_argument("MetricsTable: duplicate column '" + c.name +
                                  "'");
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != columns.size())
      throw std::invalid_argument("MetricsTable: row " + std::to_string(r) +
                                  " has " + std::to_string(rows[r].size()) +
                                  " values for " +
                                  std::to_string(columns.size()) + " columns");
    for (double v : rows[r])
      if (!std::isfinite(v))
        throw std::invalid_argument("MetricsTable: non-finite value in row " +
                                    std::to_string(r));
  }
}

std::string MetricsTable::to_csv() const {
  validate();
  std::string out;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (c) out += ',';
    out += columns[c].name;
    if (!columns[c].unit.empty()) out += " (" + columns[c].unit + ")";
  }
  out += '\n';
  char buf[40];
  for (const Vec& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      std::snprintf(buf, sizeof buf, "%.17g", row[c]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace coprosim::harness
