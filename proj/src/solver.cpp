#include "ssnmf/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ssnmf/errors.hpp"

namespace ssnmf {

void SolverConfig::validate() const {
  if (outer_iters < 1) throw RangeError("outer_iters must be at least 1");
  update.validate();
  if (termination == TerminationRule::kRelativeErrorChange && !(tol > 0.0)) {
    throw RangeError("relative-change tolerance must be positive");
  }
}

FactorizationProblem FactorizationProblem::sparse_w(DenseMatrix x, std::size_t rank,
                                                    double alpha) {
  FactorizationProblem p;
  p.w_constraints.assign(rank, SparsityConstraint::equality(alpha, x.rows()));
  p.x = std::move(x);
  p.rank = rank;
  return p;
}

FactorizationProblem FactorizationProblem::sparse_both(DenseMatrix x, std::size_t rank,
                                                       double alpha, double beta,
                                                       bool diagonal_d) {
  FactorizationProblem p;
  p.w_constraints.assign(rank, SparsityConstraint::equality(alpha, x.rows()));
  p.h_constraints.assign(rank, SparsityConstraint::equality(beta, x.cols()));
  p.x = std::move(x);
  p.rank = rank;
  p.bisparse = true;
  p.diagonal_d = diagonal_d;
  return p;
}

std::vector<SparsityConstraint> FactorizationProblem::resolved_w_constraints() const {
  if (!w_constraints.empty()) return w_constraints;
  return std::vector<SparsityConstraint>(rank, SparsityConstraint::free(x.rows()));
}

void FactorizationProblem::validate() const {
  if (rank < 1) throw RangeError("rank must be at least 1");
  if (x.empty()) throw DimensionError("data matrix is empty");
  require_nonnegative(x, "data matrix");
  auto check_list = [this](const std::vector<SparsityConstraint>& list, std::size_t dim,
                           const char* side) {
    if (list.empty()) return;
    if (list.size() != rank) {
      throw DimensionError(std::string(side) + ": " + std::to_string(list.size()) +
                           " constraints for rank " + std::to_string(rank));
    }
    for (const auto& c : list) {
      if (c.dim != dim) {
        throw DimensionError(std::string(side) + ": constraint dimension " +
                             std::to_string(c.dim) + ", expected " + std::to_string(dim));
      }
    }
  };
  check_list(w_constraints, x.rows(), "W constraints");
  check_list(h_constraints, x.cols(), "H constraints");
  if (bisparse && h_constraints.empty()) {
    throw DimensionError("bi-sparse problem needs constraints on the rows of H");
  }
}

void ConvergenceTrace::add(const TraceRecord& record) {
  if (!records.empty() && record.updates <= records.back().updates) {
    throw RangeError("trace update counts must be strictly increasing");
  }
  if (!std::isfinite(record.error) || record.error < 0.0) {
    throw RangeError("trace error must be finite and nonnegative");
  }
  records.push_back(record);
}

double objective(const DenseMatrix& x, const DenseMatrix& w, const DenseMatrix& h) {
  const double e = frobenius_error(x, w, h);
  return 0.5 * e * e;
}

namespace {

void check_pass_shapes(const DenseMatrix& x, const DenseMatrix& w, const DenseMatrix& h,
                       std::span<const SparsityConstraint> constraints, const char* op) {
  const bool ok = x.rows() == w.rows() && w.cols() == h.rows() && x.cols() == h.cols();
  if (!ok) throw DimensionError(std::string(op) + ": X, W, H shapes do not conform");
  if (constraints.size() != w.cols()) {
    throw DimensionError(std::string(op) + ": need one constraint per column of W");
  }
  for (const auto& c : constraints) {
    if (c.dim != w.rows()) throw DimensionError(std::string(op) + ": constraint dimension");
  }
}

std::vector<double> random_feasible_column(const SparsityConstraint& c, SeededRng& rng) {
  std::vector<double> v(c.dim);
  for (double& e : v) e = rng.uniform_positive();
  return project_column(v, c).y;
}

}  // namespace

PassResult sequential_pass(const DenseMatrix& x, DenseMatrix w, const DenseMatrix& h,
                           std::span<const SparsityConstraint> constraints,
                           const PassOptions& options, SeededRng& rng) {
  check_pass_shapes(x, w, h, constraints, "sequential_pass");
  const std::size_t m = w.rows();
  const std::size_t r = w.cols();

  PassResult out;
  out.state.g = matmul_nt(h, h);
  out.state.c = matmul(w, out.state.g);
  {
    const DenseMatrix xht = matmul_nt(x, h);
    auto c = out.state.c.data();
    const auto p = xht.data();
    for (std::size_t i = 0; i < c.size(); ++i) c[i] -= p[i];
  }
  DenseMatrix& c = out.state.c;
  const DenseMatrix& g = out.state.g;

  std::vector<std::size_t> order(r);
  if (options.order == ColumnOrder::kFixed) {
    std::iota(order.begin(), order.end(), std::size_t{0});
  } else {
    order = rng.permutation(r);
  }

  std::vector<double> direction(m);
  std::vector<double> delta(m);
  for (std::size_t j : order) {
    const SparsityConstraint& constraint = constraints[j];
    auto wj = w.col(j);
    const auto cj = c.col(j);
    const double gjj = g(j, j);
    bool all_zero = true;
    for (std::size_t i = 0; i < m; ++i) {
      direction[i] = wj[i] * gjj - cj[i];  // -U_j
      all_zero = all_zero && direction[i] == 0.0;
    }

    std::vector<double> t;
    if (all_zero) {
      t = random_feasible_column(constraint, rng);
      ++out.reinitialized_columns;
    } else if (options.hoyer_projection && constraint.kind == ConstraintKind::kEquality) {
      try {
        t = projection_hoyer(direction, constraint.k_lo);
      } catch (const BaselineFailure&) {
        t = sparse_opt(direction, constraint.k_lo).y;
        ++out.hoyer_fallbacks;
      }
    } else {
      t = project_column(direction, constraint).y;
    }

    for (std::size_t i = 0; i < m; ++i) delta[i] = t[i] - wj[i];
    for (std::size_t l = 0; l < r; ++l) {
      const double gjl = g(j, l);
      if (gjl == 0.0) continue;
      auto cl = c.col(l);
      for (std::size_t i = 0; i < m; ++i) cl[i] += delta[i] * gjl;
    }
    std::copy(t.begin(), t.end(), wj.begin());
    if (options.on_column) options.on_column(j, w);
  }
  out.w = std::move(w);
  return out;
}

DenseMatrix batch_pass(const DenseMatrix& x, DenseMatrix w, const DenseMatrix& h,
                       std::span<const SparsityConstraint> constraints, BatchStepState& state) {
  check_pass_shapes(x, w, h, constraints, "batch_pass");
  constexpr int kMaxHalvings = 40;

  DenseMatrix grad = matmul(w, matmul_nt(h, h));
  {
    const DenseMatrix xht = matmul_nt(x, h);
    auto gd = grad.data();
    const auto p = xht.data();
    for (std::size_t i = 0; i < gd.size(); ++i) gd[i] -= p[i];
  }
  const double before = objective(x, w, h);

  DenseMatrix candidate(w.rows(), w.cols());
  for (int attempt = 0; attempt <= kMaxHalvings; ++attempt) {
    for (std::size_t j = 0; j < w.cols(); ++j) {
      const auto wj = w.col(j);
      const auto gj = grad.col(j);
      std::vector<double> moved(w.rows());
      for (std::size_t i = 0; i < moved.size(); ++i) moved[i] = wj[i] - state.step * gj[i];
      const auto projected = project_column(moved, constraints[j]).y;
      std::copy(projected.begin(), projected.end(), candidate.col(j).begin());
    }
    if (objective(x, candidate, h) <= before) {
      state.step *= 1.2;
      state.stalled = false;
      return candidate;
    }
    state.step *= 0.5;
  }
  state.stalled = true;
  return w;
}

Factors initialize(const FactorizationProblem& problem, const SolverConfig& cfg) {
  problem.validate();
  SeededRng rng(cfg.seed);
  const std::size_t m = problem.x.rows();
  const std::size_t n = problem.x.cols();
  const std::size_t r = problem.rank;

  // Columns built from one shared positive vector, permuted after the first.
  auto feasible_columns = [&rng, r](std::size_t dim,
                                    const std::vector<SparsityConstraint>& constraints) {
    std::vector<double> base(dim);
    for (double& v : base) v = rng.uniform_positive();
    DenseMatrix out(dim, r);
    for (std::size_t j = 0; j < r; ++j) {
      auto column = project_column(base, constraints[j]).y;
      if (j > 0) rng.shuffle(column);
      std::copy(column.begin(), column.end(), out.col(j).begin());
    }
    return out;
  };
  auto uniform = [&rng](std::size_t rows, std::size_t cols) {
    DenseMatrix out(rows, cols);
    for (double& v : out.data()) v = rng.uniform();
    return out;
  };

  const bool both = problem.is_bisparse();
  Factors f;
  if (!both && !problem.h_constraints.empty()) {
    f.h = feasible_columns(n, problem.h_constraints).transposed();
    f.w = uniform(m, r);
    return f;
  }
  f.w = feasible_columns(m, problem.resolved_w_constraints());
  if (both) {
    f.h = feasible_columns(n, problem.h_constraints).transposed();
    f.d = DenseMatrix::identity(r);
  } else {
    f.h = uniform(r, n);
  }
  return f;
}

TerminationDecision check_termination(std::span<const double> iteration_errors,
                                      const SolverConfig& cfg) {
  const std::size_t done = iteration_errors.size();
  if (done == 0) return TerminationDecision::kContinue;
  if (done >= cfg.outer_iters) return TerminationDecision::kStop;
  if (cfg.termination == TerminationRule::kRelativeErrorChange && done >= 2) {
    const double prev = iteration_errors[done - 2];
    const double cur = iteration_errors[done - 1];
    if (std::abs(cur - prev) / std::max(prev, 1e-300) < cfg.tol) {
      return TerminationDecision::kStop;
    }
  }
  return TerminationDecision::kContinue;
}

}  // namespace ssnmf
