#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace fkeit {

/// Monte Carlo estimate with sampling provenance.
struct McEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;   // sample standard deviation / sqrt(n_units)
  std::int64_t n_paths = 0;  // simulated trajectories
  std::int64_t n_units = 0;  // independent sample units (pairs when antithetic)
  std::uint64_t seed = 0;
  double elapsed_seconds = 0.0;

  double half_width(double k) const { return k * stderr_; }
};

/// Plain running sums over one chunk. Accumulation order inside a chunk is
/// the path order; chunks are merged in index order, so totals are
/// bit-identical for any worker count.
struct ChunkSums {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::int64_t n = 0;

  void add(double x) {
    sum += x;
    sum_sq += x * x;
    ++n;
  }
  void merge(const ChunkSums& o) {
    sum += o.sum;
    sum_sq += o.sum_sq;
    n += o.n;
  }
};

inline McEstimate finalize_estimate(const ChunkSums& s) {
  if (s.n < 2) throw std::runtime_error("McEstimate needs at least 2 sample units");
  McEstimate e;
  e.n_units = s.n;
  e.n_paths = s.n;
  e.mean = s.sum / static_cast<double>(s.n);
  double var = (s.sum_sq - s.sum * s.sum / static_cast<double>(s.n)) / static_cast<double>(s.n - 1);
  e.stderr_ = std::sqrt(std::max(0.0, var) / static_cast<double>(s.n));
  return e;
}

/// Mean/stderr over a vector of per-realization means (annealed two-level
/// sampling: realization-level spread dominates and is the honest error bar).
inline McEstimate estimate_from_samples(const std::vector<double>& xs) {
  ChunkSums s;
  for (double x : xs) s.add(x);
  return finalize_estimate(s);
}

}  // namespace fkeit
