#include <chrono>
#include <string>

#include "ssnmf/errors.hpp"
#include "ssnmf/solver.hpp"

namespace ssnmf {

namespace {

// Keeps pass column orders independent of the initialization stream.
constexpr std::uint64_t kPassSeedSalt = 0x9e3779b97f4a7c15ULL;

using Clock = std::chrono::steady_clock;

// Builds the trace; time spent inside observer callbacks is not counted.
class TraceRecorder {
 public:
  TraceRecorder() : start_(Clock::now()) {}

  TraceRecord add(ConvergenceTrace& trace, double error) {
    const auto now = Clock::now();
    const std::chrono::duration<double> elapsed = now - start_ - excluded_;
    TraceRecord rec{++updates_, elapsed.count(), error};
    trace.add(rec);
    return rec;
  }

  template <typename F>
  void untimed(F&& f) {
    const auto t0 = Clock::now();
    f();
    excluded_ += Clock::now() - t0;
  }

 private:
  Clock::time_point start_;
  Clock::duration excluded_{};
  std::size_t updates_ = 0;
};

// Runs the configured update of the constrained factor `w` against `h`.
DenseMatrix update_constrained(const DenseMatrix& x, DenseMatrix w, const DenseMatrix& h,
                               std::span<const SparsityConstraint> constraints,
                               const SolverConfig& cfg, SeededRng& rng, BatchStepState& step,
                               const std::function<void(double)>& on_column,
                               TraceRecorder& clock, FactorizationResult& result) {
  if (cfg.w_algorithm == WAlgorithm::kBatchGradient) {
    w = batch_pass(x, std::move(w), h, constraints, step);
    result.batch_stalled = result.batch_stalled || step.stalled;
    if (on_column) {
      clock.untimed([&] { on_column(frobenius_error(x, w, h)); });
    }
    return w;
  }
  PassOptions options;
  options.order = cfg.column_order;
  options.hoyer_projection = cfg.w_algorithm == WAlgorithm::kSequentialHoyer;
  if (on_column) {
    options.on_column = [&](std::size_t, const DenseMatrix& current) {
      clock.untimed([&] { on_column(frobenius_error(x, current, h)); });
    };
  }
  PassResult pass = sequential_pass(x, std::move(w), h, constraints, options, rng);
  result.reinitialized_columns += pass.reinitialized_columns;
  result.hoyer_fallbacks += pass.hoyer_fallbacks;
  return std::move(pass.w);
}

void check_start(const FactorizationProblem& problem, const Factors& start) {
  const std::size_t m = problem.x.rows();
  const std::size_t n = problem.x.cols();
  const std::size_t r = problem.rank;
  if (start.w.rows() != m || start.w.cols() != r || start.h.rows() != r || start.h.cols() != n) {
    throw DimensionError("starting factors do not match the problem shape");
  }
  require_nonnegative(start.w, "starting W");
  require_nonnegative(start.h, "starting H");
}

}  // namespace

FactorizationResult ssnmf(const FactorizationProblem& problem, const SolverConfig& cfg,
                          const SolverObserver& observer) {
  return ssnmf(problem, cfg, initialize(problem, cfg), observer);
}

FactorizationResult ssnmf(const FactorizationProblem& problem, const SolverConfig& cfg,
                          Factors start, const SolverObserver& observer) {
  if (problem.is_bisparse()) return bisparse(problem, cfg, std::move(start), observer);
  problem.validate();
  cfg.validate();
  check_start(problem, start);

  // Constraints on H only: factorize X^T = H^T W^T with H^T as the constrained side.
  const bool transposed = !problem.h_constraints.empty();
  const DenseMatrix x = transposed ? problem.x.transposed() : problem.x;
  const std::vector<SparsityConstraint> constraints =
      transposed ? problem.h_constraints : problem.resolved_w_constraints();
  DenseMatrix w = transposed ? start.h.transposed() : std::move(start.w);
  DenseMatrix h = transposed ? start.w.transposed() : std::move(start.h);

  FactorizationResult result;
  SeededRng rng(cfg.seed ^ kPassSeedSalt);
  BatchStepState step;
  TraceRecorder clock;
  std::vector<double> iteration_errors;

  auto record = [&](double error) {
    const TraceRecord rec = clock.add(result.trace, error);
    if (observer.on_record) {
      clock.untimed([&] {
        Factors f = transposed ? Factors{h.transposed(), w.transposed(), std::nullopt}
                               : Factors{w, h, std::nullopt};
        observer.on_record(f, rec);
      });
    }
    return rec;
  };

  while (true) {
    w = update_constrained(x, std::move(w), h, constraints, cfg, rng, step, observer.on_column,
                           clock, result);
    record(frobenius_error(x, w, h));
    h = nnls_mult(x, w, std::move(h), cfg.update);
    const TraceRecord rec = record(frobenius_error(x, w, h));
    ++result.outer_iterations;
    iteration_errors.push_back(rec.error);
    if (check_termination(iteration_errors, cfg) == TerminationDecision::kStop) break;
  }

  if (transposed) {
    result.factors.w = h.transposed();
    result.factors.h = w.transposed();
  } else {
    result.factors.w = std::move(w);
    result.factors.h = std::move(h);
  }
  return result;
}

FactorizationResult bisparse(const FactorizationProblem& problem, const SolverConfig& cfg,
                             const SolverObserver& observer) {
  return bisparse(problem, cfg, initialize(problem, cfg), observer);
}

FactorizationResult bisparse(const FactorizationProblem& problem, const SolverConfig& cfg,
                             Factors start, const SolverObserver& observer) {
  problem.validate();
  cfg.validate();
  check_start(problem, start);
  if (problem.h_constraints.empty()) {
    throw DimensionError("bi-sparse factorization needs constraints on the rows of H");
  }
  const std::size_t r = problem.rank;
  DenseMatrix d = start.d ? std::move(*start.d) : DenseMatrix::identity(r);
  if (d.rows() != r || d.cols() != r) throw DimensionError("D must be r x r");
  require_nonnegative(d, "starting D");
  if (problem.diagonal_d) {
    for (std::size_t j = 0; j < r; ++j)
      for (std::size_t i = 0; i < r; ++i)
        if (i != j && d(i, j) != 0.0) throw DimensionError("diagonal D has off-diagonal mass");
  }

  const DenseMatrix& x = problem.x;
  const DenseMatrix xt = x.transposed();
  const std::vector<SparsityConstraint> w_constraints = problem.resolved_w_constraints();
  DenseMatrix w = std::move(start.w);
  DenseMatrix h = std::move(start.h);

  FactorizationResult result;
  SeededRng rng(cfg.seed ^ kPassSeedSalt);
  BatchStepState w_step;
  BatchStepState h_step;
  TraceRecorder clock;
  std::vector<double> iteration_errors;

  auto record = [&]() {
    const TraceRecord rec = clock.add(result.trace, frobenius_error(x, w, d, h));
    if (observer.on_record) {
      clock.untimed([&] { observer.on_record(Factors{w, h, d}, rec); });
    }
    return rec;
  };

  while (true) {
    // W block against the effective coefficients D H.
    const DenseMatrix dh = matmul(d, h);
    w = update_constrained(x, std::move(w), dh, w_constraints, cfg, rng, w_step,
                           observer.on_column, clock, result);
    record();

    // H block: rows of H are columns of H^T in X^T ~ H^T (W D)^T.
    const DenseMatrix wd_t = matmul(w, d).transposed();
    DenseMatrix ht = update_constrained(xt, h.transposed(), wd_t, problem.h_constraints, cfg,
                                        rng, h_step, observer.on_column, clock, result);
    h = ht.transposed();
    record();

    d = diag_mult(x, w, h, std::move(d), problem.diagonal_d, cfg.update);
    const TraceRecord rec = record();
    ++result.outer_iterations;
    iteration_errors.push_back(rec.error);
    if (check_termination(iteration_errors, cfg) == TerminationDecision::kStop) break;
  }

  result.factors = Factors{std::move(w), std::move(h), std::move(d)};
  return result;
}

}  // namespace ssnmf
