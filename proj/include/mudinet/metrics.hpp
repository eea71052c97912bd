#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace mudinet {

// Position-error summary: mean Euclidean error, RMSE, and the empirical CDF
// over sorted errors. rmse^2 >= me^2 always (Jensen); rmse >= me is not
// asserted anywhere.
struct MetricsReport {
  double me_m = 0.0;
  double rmse_m = 0.0;
  std::vector<std::pair<double, double>> cdf;  // (error_m, cumulative_prob)
};

inline MetricsReport compute_metrics(std::span<const std::array<double, 2>> predictions,
                                     std::span<const std::array<double, 2>> labels) {
  if (predictions.size() != labels.size()) {
    throw std::invalid_argument("compute_metrics: prediction/label count mismatch");
  }
  if (predictions.empty()) throw std::invalid_argument("compute_metrics: empty input");
  std::vector<double> errors(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    errors[i] = std::hypot(predictions[i][0] - labels[i][0], predictions[i][1] - labels[i][1]);
  }
  std::sort(errors.begin(), errors.end());
  MetricsReport report;
  double sum = 0.0, sq = 0.0;
  for (double e : errors) {
    sum += e;
    sq += e * e;
  }
  const double n = static_cast<double>(errors.size());
  report.me_m = sum / n;
  report.rmse_m = std::sqrt(sq / n);
  report.cdf.reserve(errors.size());
  for (std::size_t i = 0; i < errors.size(); ++i) {
    report.cdf.emplace_back(errors[i], static_cast<double>(i + 1) / n);
  }
  return report;
}

}  // namespace mudinet
