#include "ssnmf/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

#include "ssnmf/errors.hpp"
#include "ssnmf/io.hpp"
#include "ssnmf/matrix.hpp"
#include "ssnmf/rng.hpp"
#include "ssnmf/sparsity.hpp"

namespace ssnmf {

ProjectionBenchResult run_projection_bench(const ProjectionBenchConfig& cfg) {
  if (cfg.trials < 1 || cfg.batch_cols < 1) throw RangeError("bench needs trials and columns");
  using Clock = std::chrono::steady_clock;
  ProjectionBenchResult result;
  SeededRng rng(cfg.seed);
  volatile double sink = 0.0;

  for (std::size_t dim : cfg.dims) {
    if (dim < 1) throw RangeError("bench dimension must be positive");
    for (double sparsity : cfg.sparsities) {
      const double k = k_from_alpha(sparsity, dim);
      Clock::duration exact_total{};
      Clock::duration hoyer_total{};
      DenseMatrix batch(dim, cfg.batch_cols);
      for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
        for (double& v : batch.data()) v = rng.uniform();

        std::vector<double> exact_first;
        auto t0 = Clock::now();
        for (std::size_t j = 0; j < cfg.batch_cols; ++j) {
          auto sol = sparse_opt(batch.col(j), k);
          sink = sink + sol.y[0];
          if (j == 0) exact_first = std::move(sol.y);
        }
        exact_total += Clock::now() - t0;

        std::vector<double> hoyer_first;
        t0 = Clock::now();
        for (std::size_t j = 0; j < cfg.batch_cols; ++j) {
          try {
            auto y = projection_hoyer(batch.col(j), k);
            sink = sink + y[0];
            if (j == 0) hoyer_first = std::move(y);
          } catch (const BaselineFailure&) {
            ++result.hoyer_failures;
          }
        }
        hoyer_total += Clock::now() - t0;

        if (!hoyer_first.empty()) {
          const auto b = batch.col(0);
          const double exact_obj = dot(b, exact_first);
          const double hoyer_obj = dot(b, hoyer_first);
          result.max_objective_gap =
              std::max(result.max_objective_gap, std::abs(exact_obj - hoyer_obj));
          result.max_hoyer_excess = std::max(result.max_hoyer_excess, hoyer_obj - exact_obj);
        }
      }
      const double trials = static_cast<double>(cfg.trials);
      result.rows.push_back({dim, sparsity, "sparse_opt",
                             std::chrono::duration<double>(exact_total).count() / trials});
      result.rows.push_back({dim, sparsity, "projection_hoyer",
                             std::chrono::duration<double>(hoyer_total).count() / trials});
    }
  }
  return result;
}

void write_bench_csv(std::ostream& out, const std::vector<ProjectionBenchRow>& rows) {
  out << "dim,sparsity,algorithm,mean_seconds\n";
  for (const auto& r : rows) {
    out << r.dim << ',' << format_double(r.sparsity) << ',' << r.algorithm << ','
        << format_double(r.mean_seconds) << '\n';
  }
}

}  // namespace ssnmf
