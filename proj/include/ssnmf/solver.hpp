#ifndef SSNMF_SOLVER_HPP
#define SSNMF_SOLVER_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ssnmf/matrix.hpp"
#include "ssnmf/rng.hpp"
#include "ssnmf/sparsity.hpp"
#include "ssnmf/updates.hpp"

namespace ssnmf {

enum class ColumnOrder { kRandom, kFixed };

/// How the sparsity-constrained factor is updated.
enum class WAlgorithm {
  kSequential,       // one column at a time, exact projection
  kSequentialHoyer,  // one column at a time, Hoyer's iterative projection
  kBatchGradient,    // projected gradient on the whole factor (NMFSC-style)
};

enum class TerminationRule { kFixedIters, kRelativeErrorChange };

struct SolverConfig {
  std::size_t outer_iters = 100;
  UpdateConfig update;
  std::uint64_t seed = 42;
  ColumnOrder column_order = ColumnOrder::kRandom;
  WAlgorithm w_algorithm = WAlgorithm::kSequential;
  TerminationRule termination = TerminationRule::kFixedIters;
  double tol = 1e-6;  // used by kRelativeErrorChange

  void validate() const;
};

/**
 * X ~ W H with per-column constraints on W and optionally per-row constraints
 * on H. With both sides constrained the bi-sparse model X ~ W D H is solved,
 * with unit-norm W columns and H rows and the scale carried by D >= 0.
 *
 * An empty constraint list means "all free": unit L2 norm without a sparsity
 * requirement for W, no constraint at all for H.
 */
struct FactorizationProblem {
  DenseMatrix x;
  std::size_t rank = 1;
  std::vector<SparsityConstraint> w_constraints;
  std::vector<SparsityConstraint> h_constraints;
  bool bisparse = false;
  bool diagonal_d = true;

  /// Equality sparsity alpha on every column of W.
  static FactorizationProblem sparse_w(DenseMatrix x, std::size_t rank, double alpha);
  /// Bi-sparse problem with alpha on W columns and beta on H rows.
  static FactorizationProblem sparse_both(DenseMatrix x, std::size_t rank, double alpha,
                                          double beta, bool diagonal_d);

  /// True when `bisparse` is set or both sides carry constraints.
  bool is_bisparse() const noexcept {
    return bisparse || (!w_constraints.empty() && !h_constraints.empty());
  }
  /// Constraints for W, expanding an empty list to free columns.
  std::vector<SparsityConstraint> resolved_w_constraints() const;
  void validate() const;
};

struct Factors {
  DenseMatrix w;
  DenseMatrix h;
  std::optional<DenseMatrix> d;
};

struct TraceRecord {
  std::size_t updates = 0;  // matrix updates so far
  double elapsed_seconds = 0.0;
  double error = 0.0;  // ||X - WH||_F or ||X - WDH||_F

  bool operator==(const TraceRecord&) const = default;
};

struct ConvergenceTrace {
  std::vector<TraceRecord> records;

  bool empty() const noexcept { return records.empty(); }
  std::size_t size() const noexcept { return records.size(); }
  const TraceRecord& back() const { return records.back(); }
  /// Appends a record; update counts must be strictly increasing.
  void add(const TraceRecord& record);

  bool operator==(const ConvergenceTrace&) const = default;
};

struct FactorizationResult {
  Factors factors;
  ConvergenceTrace trace;
  std::size_t outer_iterations = 0;
  std::size_t reinitialized_columns = 0;
  std::size_t hoyer_fallbacks = 0;  // Hoyer failures replaced by the exact projection
  bool batch_stalled = false;
};

/// Called with the working factor after every single column write.
using ColumnObserver = std::function<void(std::size_t column, const DenseMatrix& w)>;

struct PassOptions {
  ColumnOrder order = ColumnOrder::kRandom;
  bool hoyer_projection = false;
  ColumnObserver on_column;
};

/// Gradient bookkeeping of the sequential pass: C = -X H^T + W H H^T, G = H H^T.
struct SequentialPassState {
  DenseMatrix c;
  DenseMatrix g;
};

struct PassResult {
  DenseMatrix w;
  SequentialPassState state;  // as maintained incrementally, at pass exit
  std::size_t reinitialized_columns = 0;
  std::size_t hoyer_fallbacks = 0;
};

/**
 * One block-coordinate sweep over the columns of W.
 *
 * For column j the objective restricted to W_j is 1/2 G_jj |W_j|^2 + U_j^T W_j with
 * U_j = C_j - W_j G_jj, so with |W_j|_2 = 1 fixed the exact minimizer is the
 * projection of -U_j. C is updated by a rank-one correction after each column.
 * A column whose direction -U_j is identically zero cannot affect the objective
 * and is re-drawn from `rng`.
 */
PassResult sequential_pass(const DenseMatrix& x, DenseMatrix w, const DenseMatrix& h,
                           std::span<const SparsityConstraint> constraints,
                           const PassOptions& options, SeededRng& rng);

/// Step size carried across projected-gradient passes.
struct BatchStepState {
  double step = 1.0;
  bool stalled = false;
};

/**
 * Projected gradient step on the whole of W:
 * W' = project_columns(W - step (W H H^T - X H^T)). The step halves (up to 40
 * times) while the objective would increase and grows by 1.2 on acceptance. If
 * no step decreases the objective, W is returned unchanged and `stalled` is set.
 */
DenseMatrix batch_pass(const DenseMatrix& x, DenseMatrix w, const DenseMatrix& h,
                       std::span<const SparsityConstraint> constraints, BatchStepState& state);

/**
 * Random feasible starting point. Each constrained column of W is the projection
 * of one shared positive random vector, randomly permuted per column; H is
 * uniform on [0, 1]. In the bi-sparse case H rows are built like W columns and
 * D starts at the identity. With constraints on H only, the roles swap.
 */
Factors initialize(const FactorizationProblem& problem, const SolverConfig& cfg);

struct SolverObserver {
  /// Reconstruction error after every single column (or H-row) update.
  std::function<void(double error)> on_column;
  /// Called after every matrix update with the factors behind the new record.
  std::function<void(const Factors&, const TraceRecord&)> on_record;
};

/// Alternates the configured W update with nnls_mult on H until termination.
/// Constraints on H only are handled by factorizing X^T.
FactorizationResult ssnmf(const FactorizationProblem& problem, const SolverConfig& cfg,
                          const SolverObserver& observer = {});
FactorizationResult ssnmf(const FactorizationProblem& problem, const SolverConfig& cfg,
                          Factors start, const SolverObserver& observer = {});

/// Bi-sparse driver: W pass against D H, transposed H pass against W D, then diag_mult.
FactorizationResult bisparse(const FactorizationProblem& problem, const SolverConfig& cfg,
                             const SolverObserver& observer = {});
FactorizationResult bisparse(const FactorizationProblem& problem, const SolverConfig& cfg,
                             Factors start, const SolverObserver& observer = {});

enum class TerminationDecision { kContinue, kStop };

/// `iteration_errors` holds the error at the end of each completed outer iteration.
TerminationDecision check_termination(std::span<const double> iteration_errors,
                                      const SolverConfig& cfg);

/// Objective 1/2 ||X - W H||_F^2.
double objective(const DenseMatrix& x, const DenseMatrix& w, const DenseMatrix& h);

}  // namespace ssnmf

#endif  // SSNMF_SOLVER_HPP
