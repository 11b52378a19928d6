#pragma once
#include <algorithm>
#include <cstdint>
#include <limits>
#include <queue>
#include <span>
#include <vector>

#include "cpv/cost.hpp"
#include "cpv/errors.hpp"
#include "cpv/tensor.hpp"

namespace cpv {

// ============================================================================
// Changepoint sets
// ============================================================================

/// A segmentation of N measurements into half-open segments
/// [b_0, b_1), ..., [b_{K-1}, b_K) with b_0 = 0 and b_K = N. The first and
/// last measurement always act as changepoints, so the changepoint count L
/// used by the penalized objective is the boundary count K + 1 (segments
/// plus one); interior changepoints are the K - 1 inner boundaries.
struct ChangepointSet {
  std::vector<std::size_t> boundaries;
  double penalty_used = 0.0;

  std::size_t segments() const { return boundaries.empty() ? 0 : boundaries.size() - 1; }
  std::size_t count() const { return boundaries.size(); }  // L
  std::size_t interior_count() const {
    return boundaries.size() >= 2 ? boundaries.size() - 2 : 0;
  }
  std::span<const std::size_t> interior() const {
    if (boundaries.size() < 3) return {};
    return {boundaries.data() + 1, boundaries.size() - 2};
  }
};

/// Penalized objective: total segment cost + penalty * L.
template <class Cost>
double changepoint_objective(const Cost& cost, const ChangepointSet& cps, double penalty) {
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cps.boundaries.size(); ++k)
    total += cost.cost(cps.boundaries[k], cps.boundaries[k + 1]);
  return total + penalty * static_cast<double>(cps.count());
}

inline double changepoint_objective(const InterArrivalSeries& series, const ChangepointSet& cps,
                                    double penalty) {
  return changepoint_objective(ExponentialCost(series), cps, penalty);
}

namespace detail {

/// Candidate comparison for optimal partitions. Ties in objective value are
/// broken toward fewer segments, then toward the earlier (smaller) boundary,
/// which makes every detector deterministic.
inline bool better(double obj_a, std::size_t segs_a, std::size_t last_a, double obj_b,
                   std::size_t segs_b, std::size_t last_b) {
  if (obj_a != obj_b) return obj_a < obj_b;
  if (segs_a != segs_b) return segs_a < segs_b;
  return last_a < last_b;
}

}  // namespace detail

// ============================================================================
// PELT: exact penalized minimization with cost-based pruning
// ============================================================================

/// Exact minimizer of  sum_k cost(b_k, b_{k+1}) + penalty * L  by dynamic
/// programming. A candidate split s is pruned once F(s) + cost(s, t) > F(t);
/// with K = 0 this never discards an optimal split because the costs here
/// satisfy cost(i, j) >= cost(i, k) + cost(k, j).
template <class Cost>
ChangepointSet pelt_partition(const Cost& cost, double penalty) {
  const std::size_t n = cost.size();
  if (n < 2) throw InputError("detect_pelt: need at least 2 measurements");
  if (!(penalty >= 0.0)) throw InputError("detect_pelt: penalty must be >= 0");

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> best(n + 1, kInf);       // objective with one penalty per segment
  std::vector<std::size_t> prev(n + 1, 0);     // optimal last boundary before t
  std::vector<std::size_t> nseg(n + 1, 0);
  best[0] = 0.0;

  std::vector<std::size_t> candidates{0};
  std::vector<std::size_t> kept;
  for (std::size_t t = 1; t <= n; ++t) {
    double best_t = kInf;
    std::size_t best_s = 0, best_c = 0;
    for (std::size_t s : candidates) {
      const double total = best[s] + cost.cost(s, t) + penalty;
      if (best_t == kInf || detail::better(total, nseg[s] + 1, s, best_t, best_c, best_s)) {
        best_t = total;
        best_s = s;
        best_c = nseg[s] + 1;
      }
    }
    best[t] = best_t;
    prev[t] = best_s;
    nseg[t] = best_c;

    kept.clear();
    for (std::size_t s : candidates)
      if (best[s] + cost.cost(s, t) <= best_t) kept.push_back(s);
    kept.push_back(t);
    candidates.swap(kept);
  }

  ChangepointSet out;
  out.penalty_used = penalty;
  for (std::size_t t = n; t > 0; t = prev[t]) out.boundaries.push_back(t);
  out.boundaries.push_back(0);
  std::reverse(out.boundaries.begin(), out.boundaries.end());
  return out;
}

inline ChangepointSet detect_pelt(const InterArrivalSeries& series, double penalty) {
  return pelt_partition(ExponentialCost(series), penalty);
}

inline ChangepointSet detect_pelt_qis(std::span<const uint8_t> counts, double penalty) {
  return pelt_partition(BernoulliCost(counts), penalty);
}

// ============================================================================
// BottomUp: greedy merge from a fine initial grid
// ============================================================================

/// Start from a boundary every `grid` measurements and repeatedly delete the
/// boundary whose removal increases total segment cost the least, while that
/// increase stays within the penalty. Approximate but O(N log N).
template <class Cost>
ChangepointSet bottomup_partition(const Cost& cost, double penalty, std::size_t grid = 2) {
  const std::size_t n = cost.size();
  if (n < 2) throw InputError("detect_bottomup: need at least 2 measurements");
  if (!(penalty >= 0.0)) throw InputError("detect_bottomup: penalty must be >= 0");
  if (grid < 1) throw InputError("detect_bottomup: grid must be >= 1");

  // doubly linked list over the initial boundaries
  std::vector<std::size_t> pos{0};
  for (std::size_t b = grid; b < n; b += grid) pos.push_back(b);
  pos.push_back(n);
  const std::size_t m = pos.size();
  std::vector<std::size_t> prev(m), next(m);
  std::vector<char> alive(m, 1);
  for (std::size_t i = 0; i < m; ++i) {
    prev[i] = i == 0 ? i : i - 1;
    next[i] = i + 1 < m ? i + 1 : i;
  }

  auto merge_gain = [&](std::size_t i) {
    // cost increase if interior boundary i is deleted
    const std::size_t a = pos[prev[i]], b = pos[i], c = pos[next[i]];
    return cost.cost(a, c) - cost.cost(a, b) - cost.cost(b, c);
  };

  struct Entry {
    double gain;
    std::size_t idx;
    uint32_t version;
    bool operator>(const Entry& o) const {
      return gain != o.gain ? gain > o.gain : idx > o.idx;
    }
  };
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap;
  std::vector<uint32_t> version(m, 0);
  for (std::size_t i = 1; i + 1 < m; ++i) heap.push({merge_gain(i), i, 0});

  while (!heap.empty()) {
    const Entry e = heap.top();
    heap.pop();
    if (!alive[e.idx] || e.version != version[e.idx]) continue;
    if (e.gain > penalty) break;  // every remaining deletion costs more than the penalty
    alive[e.idx] = 0;
    const std::size_t p = prev[e.idx], q = next[e.idx];
    next[p] = q;
    prev[q] = p;
    if (p != 0 && pos[p] != 0) {
      ++version[p];
      heap.push({merge_gain(p), p, version[p]});
    }
    if (q + 1 != m && pos[q] != n) {
      ++version[q];
      heap.push({merge_gain(q), q, version[q]});
    }
  }

  ChangepointSet out;
  out.penalty_used = penalty;
  for (std::size_t i = 0;; i = next[i]) {
    out.boundaries.push_back(pos[i]);
    if (next[i] == i) break;
  }
  return out;
}

inline ChangepointSet detect_bottomup(const InterArrivalSeries& series, double penalty,
                                      std::size_t grid = 2) {
  return bottomup_partition(ExponentialCost(series), penalty, grid);
}

inline ChangepointSet detect_bottomup_qis(std::span<const uint8_t> counts, double penalty,
                                          std::size_t grid = 2) {
  return bottomup_partition(BernoulliCost(counts), penalty, grid);
}

// ============================================================================
// Exhaustive oracle
// ============================================================================

/// Global minimizer by enumerating every subset of the n-1 interior
/// boundaries. Usable up to n = 32; meant as the independent reference the
/// fast detectors are validated against.
template <class Cost>
ChangepointSet exhaustive_partition(const Cost& cost, double penalty) {
  const std::size_t n = cost.size();
  if (n < 2) throw InputError("detect_exhaustive: need at least 2 measurements");
  if (n > 32) throw InputError("detect_exhaustive: series longer than 32 measurements");

  // dense cost table keeps the inner loop to table adds
  std::vector<double> table(n * (n + 1), 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j <= n; ++j) table[i * (n + 1) + j] = cost.cost(i, j);

  const uint64_t masks = uint64_t{1} << (n - 1);  // bit k set => boundary at k+1
  double best_obj = std::numeric_limits<double>::infinity();
  uint64_t best_mask = 0;
  std::size_t best_segs = 0;
  for (uint64_t mask = 0; mask < masks; ++mask) {
    double total = 0.0;
    std::size_t last = 0, segs = 0;
    uint64_t bits = mask;
    while (bits) {
      const std::size_t b = static_cast<std::size_t>(__builtin_ctzll(bits)) + 1;
      bits &= bits - 1;
      total += table[last * (n + 1) + b];
      last = b;
      ++segs;
    }
    total += table[last * (n + 1) + n];
    ++segs;
    const double obj = total + penalty * static_cast<double>(segs + 1);
    // same tie rules as the detectors: fewer segments, then the mask whose
    // boundary vector is lexicographically smaller
    bool take = false;
    if (obj < best_obj) {
      take = true;
    } else if (obj == best_obj) {
      if (segs + 1 < best_segs + 1) {
        take = true;
      } else if (segs == best_segs && mask != best_mask) {
        const uint64_t diff = mask ^ best_mask;
        take = (mask & (diff & -diff)) != 0;  // candidate has the earlier extra boundary
      }
    }
    if (take) {
      best_obj = obj;
      best_mask = mask;
      best_segs = segs;
    }
  }

  ChangepointSet out;
  out.penalty_used = penalty;
  out.boundaries.push_back(0);
  for (std::size_t k = 0; k + 1 < n; ++k)
    if (best_mask & (uint64_t{1} << k)) out.boundaries.push_back(k + 1);
  out.boundaries.push_back(n);
  return out;
}

inline ChangepointSet detect_exhaustive(const InterArrivalSeries& series, double penalty) {
  return exhaustive_partition(ExponentialCost(series), penalty);
}

inline ChangepointSet detect_exhaustive_qis(std::span<const uint8_t> counts, double penalty) {
  return exhaustive_partition(BernoulliCost(counts), penalty);
}

}  // namespace cpv
