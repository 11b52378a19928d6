#pragma once
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "cpv/errors.hpp"
#include "cpv/tensor.hpp"

namespace cpv {

// ============================================================================
// Segment costs (negative maximized log-likelihood, constants dropped)
// ============================================================================
// Both models expose cost(i, j) over the half-open measurement range [i, j)
// in O(1) via prefix sums, the interface the offline detectors share.

/// Exponential inter-arrival model: cost = -m * ln(rate_hat) with
/// rate_hat = m / sum(x) over the m measurements in the segment.
class ExponentialCost {
 public:
  explicit ExponentialCost(const InterArrivalSeries& series) {
    prefix_.resize(series.size() + 1);
    prefix_[0] = 0.0;
    for (std::size_t i = 0; i < series.size(); ++i)
      prefix_[i + 1] = prefix_[i] + series.measurements[i];
  }
  explicit ExponentialCost(std::span<const double> durations) {
    prefix_.resize(durations.size() + 1);
    prefix_[0] = 0.0;
    for (std::size_t i = 0; i < durations.size(); ++i)
      prefix_[i + 1] = prefix_[i] + durations[i];
  }

  std::size_t size() const { return prefix_.size() - 1; }

  double cost(std::size_t i, std::size_t j) const {
    const auto m = static_cast<double>(j - i);
    const double total = prefix_[j] - prefix_[i];
    if (!(total > 0.0)) throw SaturationError("segment_cost: zero total duration");
    return -m * std::log(m / total);
  }

 private:
  std::vector<double> prefix_;
};

/// Bernoulli binary-frame model: cost = -(k ln p_hat + (m-k) ln(1-p_hat))
/// with p_hat = k/m; pure segments cost 0 by the 0*ln(0) = 0 convention.
class BernoulliCost {
 public:
  explicit BernoulliCost(std::span<const uint8_t> counts) {
    ones_.resize(counts.size() + 1);
    ones_[0] = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (counts[i] > 1) throw InputError("segment_cost_qis: values must be binary");
      ones_[i + 1] = ones_[i] + counts[i];
    }
  }

  std::size_t size() const { return ones_.size() - 1; }

  double cost(std::size_t i, std::size_t j) const {
    const auto m = static_cast<double>(j - i);
    const auto k = static_cast<double>(ones_[j] - ones_[i]);
    if (k == 0.0 || k == m) return 0.0;
    const double p = k / m;
    return -(k * std::log(p) + (m - k) * std::log1p(-p));
  }

 private:
  std::vector<uint64_t> ones_;
};

/// Cost of one segment [i, j) of an inter-arrival series.
inline double segment_cost(const InterArrivalSeries& series, std::size_t i, std::size_t j) {
  if (i >= j || j > series.size()) throw InputError("segment_cost: need i < j within bounds");
  return ExponentialCost(series).cost(i, j);
}

/// Cost of one segment [i, j) of a binary sequence.
inline double segment_cost_qis(std::span<const uint8_t> counts, std::size_t i, std::size_t j) {
  if (i >= j || j > counts.size()) throw InputError("segment_cost_qis: need i < j within bounds");
  return BernoulliCost(counts).cost(i, j);
}

}  // namespace cpv
