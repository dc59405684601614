#ifndef SSNMF_BENCH_HPP
#define SSNMF_BENCH_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace ssnmf {

struct ProjectionBenchConfig {
  std::vector<std::size_t> dims;
  std::size_t batch_cols = 100;
  std::vector<double> sparsities;
  std::size_t trials = 40;
  std::uint64_t seed = 42;
};

struct ProjectionBenchRow {
  std::size_t dim = 0;
  double sparsity = 0.0;
  std::string algorithm;  // "sparse_opt" or "projection_hoyer"
  double mean_seconds = 0.0;
};

struct ProjectionBenchResult {
  std::vector<ProjectionBenchRow> rows;
  /// Largest |objective(sparse_opt) - objective(projection_hoyer)| over the
  /// sampled columns (first column of every trial).
  double max_objective_gap = 0.0;
  /// Largest amount by which Hoyer's objective exceeded the exact one.
  double max_hoyer_excess = 0.0;
  std::size_t hoyer_failures = 0;
};

/**
 * Times both projections on batches of `batch_cols` columns with entries uniform
 * on [0, 1]. For every (dim, sparsity) pair each trial draws a fresh batch and
 * times the exact projection and Hoyer's on the same data; the reported value is
 * the mean batch time over trials. Runs single-threaded.
 */
ProjectionBenchResult run_projection_bench(const ProjectionBenchConfig& cfg);

/// CSV with header `dim,sparsity,algorithm,mean_seconds`.
void write_bench_csv(std::ostream& out, const std::vector<ProjectionBenchRow>& rows);

}  // namespace ssnmf

#endif  // SSNMF_BENCH_HPP
