#include <doctest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "ssnmf/errors.hpp"
#include "ssnmf/solver.hpp"
#include "test_support.hpp"

using namespace ssnmf;
using ssnmf::testing::random_matrix;

namespace {

void check_columns_feasible(const DenseMatrix& w, std::span<const SparsityConstraint> cs) {
  for (std::size_t j = 0; j < w.cols(); ++j) {
    CHECK(cs[j].satisfied_by(w.col(j), 1e-6));
    CHECK(std::abs(norm2(w.col(j)) - 1.0) <= 1e-8);
  }
}

DenseMatrix gradient_state(const DenseMatrix& x, const DenseMatrix& w, const DenseMatrix& h) {
  DenseMatrix c = matmul(w, matmul_nt(h, h));
  const DenseMatrix xht = matmul_nt(x, h);
  for (std::size_t i = 0; i < c.data().size(); ++i) c.data()[i] -= xht.data()[i];
  return c;
}

}  // namespace

TEST_CASE("config and problem validation") {
  SolverConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.outer_iters = 0;
  CHECK_THROWS_AS(cfg.validate(), RangeError);
  cfg.outer_iters = 1;
  cfg.termination = TerminationRule::kRelativeErrorChange;
  cfg.tol = 0.0;
  CHECK_THROWS_AS(cfg.validate(), RangeError);

  auto p = FactorizationProblem::sparse_w(DenseMatrix(4, 3, 1.0), 2, 0.5);
  CHECK_NOTHROW(p.validate());
  p.rank = 3;
  CHECK_THROWS_AS(p.validate(), DimensionError);
  auto neg = FactorizationProblem::sparse_w(DenseMatrix::from_rows({{1, -1}, {1, 1}}), 1, 0.5);
  CHECK_THROWS_AS(neg.validate(), NegativityError);
  FactorizationProblem zero_rank;
  zero_rank.x = DenseMatrix(2, 2, 1.0);
  zero_rank.rank = 0;
  CHECK_THROWS_AS(zero_rank.validate(), RangeError);
  CHECK(FactorizationProblem::sparse_both(DenseMatrix(4, 3, 1.0), 2, 0.5, 0.5, true).is_bisparse());
}

TEST_CASE("trace invariants") {
  ConvergenceTrace t;
  t.add({1, 0.0, 1.0});
  CHECK_THROWS_AS(t.add({1, 0.0, 1.0}), RangeError);
  CHECK_THROWS_AS(t.add({2, 0.0, -1.0}), RangeError);
  CHECK_THROWS_AS(t.add({2, 0.0, std::nan("")}), RangeError);
  CHECK(t.size() == 1);
}

TEST_CASE("check_termination") {
  SolverConfig cfg;
  cfg.outer_iters = 1;
  const std::vector<double> one{1.0};
  CHECK(check_termination(one, cfg) == TerminationDecision::kStop);

  cfg.outer_iters = 100;
  cfg.termination = TerminationRule::kRelativeErrorChange;
  cfg.tol = 1e-6;
  const std::vector<double> same{0.7, 0.7};
  CHECK(check_termination(same, cfg) == TerminationDecision::kStop);

  cfg.tol = 1e-4;
  const std::vector<double> seq{1.0, 0.5, 0.499999};
  CHECK(check_termination(std::span(seq).first(2), cfg) == TerminationDecision::kContinue);
  // |0.499999 - 0.5| / 0.5 = 2e-6 < 1e-4
  CHECK(check_termination(seq, cfg) == TerminationDecision::kStop);

  cfg.termination = TerminationRule::kFixedIters;
  CHECK(check_termination(seq, cfg) == TerminationDecision::kContinue);
}

TEST_CASE("initialize") {
  SeededRng rng(1);
  const auto x = random_matrix(16, 10, rng);
  auto p = FactorizationProblem::sparse_w(x, 4, 0.6);
  SolverConfig cfg;
  cfg.seed = 1;
  const auto a = initialize(p, cfg);
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(std::abs(sparsity_measure(a.w.col(j)) - 0.6) <= 1e-8);
    CHECK(std::abs(norm2(a.w.col(j)) - 1.0) <= 1e-8);
  }
  for (double v : a.h.data()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  const auto again = initialize(p, cfg);
  CHECK(a.w == again.w);
  CHECK(a.h == again.h);
  cfg.seed = 2;
  CHECK_FALSE(initialize(p, cfg).w == a.w);

  auto both = FactorizationProblem::sparse_both(x, 3, 0.6, 0.4, true);
  const auto b = initialize(both, cfg);
  REQUIRE(b.d.has_value());
  CHECK(*b.d == DenseMatrix::identity(3));
  for (std::size_t i = 0; i < 3; ++i) {
    const auto row = b.h.row(i);
    CHECK(std::abs(sparsity_measure(row) - 0.4) <= 1e-8);
    CHECK(std::abs(norm2(row) - 1.0) <= 1e-8);
  }
}

TEST_CASE("sequential_pass rank one reduces to one projection") {
  SeededRng rng(2);
  const auto x = random_matrix(7, 5, rng);
  const auto h = random_matrix(1, 5, rng);
  const auto c = std::vector{SparsityConstraint::equality(0.5, 7)};
  const auto w0 = DenseMatrix(7, 1, 1.0 / std::sqrt(7.0));
  PassOptions opts;
  opts.order = ColumnOrder::kFixed;
  const auto out = sequential_pass(x, w0, h, c, opts, rng);
  const auto xht = matmul_nt(x, h);
  const auto expected = sparse_opt(xht.col(0), c[0].k_lo).y;
  for (std::size_t i = 0; i < 7; ++i) CHECK(std::abs(out.w(i, 0) - expected[i]) <= 1e-12);
}

TEST_CASE("sequential_pass fixed point") {
  SeededRng rng(3);
  const auto x = random_matrix(8, 6, rng);
  const auto h = random_matrix(3, 6, rng);
  const std::vector<SparsityConstraint> cs(3, SparsityConstraint::equality(0.4, 8));
  PassOptions opts;
  opts.order = ColumnOrder::kFixed;
  DenseMatrix w = initialize(FactorizationProblem::sparse_w(x, 3, 0.4), SolverConfig{}).w;
  // Iterate to a column-wise optimum, then one more pass changes nothing.
  for (int i = 0; i < 500; ++i) w = sequential_pass(x, w, h, cs, opts, rng).w;
  const auto next = sequential_pass(x, w, h, cs, opts, rng).w;
  CHECK(max_abs_diff(next, w) <= 1e-10);
}

TEST_CASE("sequential_pass is monotone per column and keeps C consistent") {
  SeededRng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 5 + rng.index(20);
    const std::size_t n = 5 + rng.index(20);
    const std::size_t r = 1 + rng.index(5);
    const auto x = random_matrix(m, n, rng);
    const auto h = random_matrix(r, n, rng);
    std::vector<SparsityConstraint> cs;
    for (std::size_t j = 0; j < r; ++j) {
      const double a = rng.uniform(0.1, 0.9);
      if (j % 3 == 1) cs.push_back(SparsityConstraint::interval(a * 0.5, a, m));
      else if (j % 3 == 2) cs.push_back(SparsityConstraint::free(m));
      else cs.push_back(SparsityConstraint::equality(a, m));
    }
    FactorizationProblem p;
    p.x = x;
    p.rank = r;
    p.w_constraints = cs;
    const auto w0 = initialize(p, SolverConfig{}).w;
    double prev = objective(x, w0, h);
    PassOptions opts;
    opts.on_column = [&](std::size_t, const DenseMatrix& w) {
      const double cur = objective(x, w, h);
      CHECK(cur <= prev + 1e-10 * std::max(1.0, prev));
      prev = cur;
    };
    const auto out = sequential_pass(x, w0, h, cs, opts, rng);
    check_columns_feasible(out.w, cs);
    const auto fresh = gradient_state(x, out.w, h);
    const double scale = std::max(1.0, frobenius_norm(out.state.c));
    CHECK(max_abs_diff(out.state.c, fresh) * std::sqrt(double(m * r)) <= 1e-6 * scale);
  }
}

TEST_CASE("sequential_pass matches the naive recomputation oracle") {
  SeededRng rng(5);
  const auto x = random_matrix(8, 6, rng);
  const auto h = random_matrix(3, 6, rng);
  const std::vector<double> alphas{0.3, 0.5, 0.7};
  std::vector<SparsityConstraint> cs;
  std::vector<double> ks;
  for (double a : alphas) {
    cs.push_back(SparsityConstraint::equality(a, 8));
    ks.push_back(k_from_alpha(a, 8));
  }
  FactorizationProblem p;
  p.x = x;
  p.rank = 3;
  p.w_constraints = cs;
  const auto w0 = initialize(p, SolverConfig{}).w;
  PassOptions opts;
  opts.order = ColumnOrder::kFixed;
  const auto fast = sequential_pass(x, w0, h, cs, opts, rng).w;
  const std::vector<std::size_t> order{0, 1, 2};
  const auto slow = oracle::naive_pass_oracle(x, w0, h, ks, order);
  CHECK(max_abs_diff(fast, slow) <= 1e-10);
}

TEST_CASE("sequential_pass re-draws a column with no signal") {
  // H has a zero row, so column 1 of W receives a zero direction.
  const auto x = DenseMatrix(4, 3, 1.0);
  auto h = DenseMatrix(2, 3, 1.0);
  for (std::size_t j = 0; j < 3; ++j) h(1, j) = 0.0;
  const std::vector<SparsityConstraint> cs(2, SparsityConstraint::equality(0.5, 4));
  const auto w0 = initialize(FactorizationProblem::sparse_w(x, 2, 0.5), SolverConfig{}).w;
  PassOptions opts;
  opts.order = ColumnOrder::kFixed;
  SeededRng rng(6);
  const auto out = sequential_pass(x, w0, h, cs, opts, rng);
  CHECK(out.reinitialized_columns == 1);
  check_columns_feasible(out.w, cs);
}

TEST_CASE("sequential_pass shape errors") {
  SeededRng rng(7);
  const std::vector<SparsityConstraint> cs(2, SparsityConstraint::equality(0.5, 4));
  CHECK_THROWS_AS(sequential_pass(DenseMatrix(4, 3), DenseMatrix(4, 2), DenseMatrix(2, 2), cs,
                                  PassOptions{}, rng),
                  DimensionError);
  CHECK_THROWS_AS(sequential_pass(DenseMatrix(4, 3), DenseMatrix(4, 2), DenseMatrix(2, 3),
                                  std::span(cs).first(1), PassOptions{}, rng),
                  DimensionError);
}

TEST_CASE("batch_pass") {
  SUBCASE("zero gradient leaves W unchanged") {
    SeededRng rng(8);
    auto p = FactorizationProblem::sparse_w(DenseMatrix(6, 5, 1.0), 2, 0.5);
    auto f = initialize(p, SolverConfig{});
    const auto x = matmul(f.w, f.h);
    const std::vector<SparsityConstraint> cs(2, SparsityConstraint::equality(0.5, 6));
    BatchStepState st;
    const auto w = batch_pass(x, f.w, f.h, cs, st);
    CHECK(max_abs_diff(w, f.w) <= 1e-12);
  }
  SUBCASE("monotone and feasible") {
    SeededRng rng(9);
    const auto x = random_matrix(12, 15, rng);
    const auto h = random_matrix(3, 15, rng);
    const std::vector<SparsityConstraint> cs(3, SparsityConstraint::equality(0.5, 12));
    auto w = initialize(FactorizationProblem::sparse_w(x, 3, 0.5), SolverConfig{}).w;
    BatchStepState st;
    double prev = objective(x, w, h);
    for (int i = 0; i < 20; ++i) {
      w = batch_pass(x, w, h, cs, st);
      const double cur = objective(x, w, h);
      CHECK(cur <= prev);
      prev = cur;
      check_columns_feasible(w, cs);
    }
  }
}

TEST_CASE("ssnmf driver") {
  SeededRng rng(10);
  SUBCASE("exact start is a fixed point") {
    auto p = FactorizationProblem::sparse_w(DenseMatrix(9, 12, 1.0), 3, 0.5);
    SolverConfig cfg;
    cfg.outer_iters = 5;
    auto truth = initialize(p, cfg);
    p.x = matmul(truth.w, truth.h);
    const auto res = ssnmf::ssnmf(p, cfg, truth);
    for (const auto& rec : res.trace.records) CHECK(rec.error <= 1e-8);
  }
  SUBCASE("budget accounting and monotone trace") {
    auto p = FactorizationProblem::sparse_w(random_matrix(20, 25, rng), 4, 0.5);
    SolverConfig cfg;
    cfg.outer_iters = 10;
    std::vector<double> errors;
    SolverObserver obs;
    obs.on_record = [&](const Factors& f, const TraceRecord& rec) {
      errors.push_back(rec.error);
      check_columns_feasible(f.w, p.w_constraints);
    };
    const auto res = ssnmf::ssnmf(p, cfg, obs);
    CHECK(res.trace.size() == 20);
    CHECK(res.outer_iterations == 10);
    for (std::size_t i = 0; i < res.trace.size(); ++i) {
      CHECK(res.trace.records[i].updates == i + 1);
      CHECK(res.trace.records[i].error == errors[i]);
    }
    for (std::size_t i = 1; i < errors.size(); ++i)
      CHECK(errors[i] <= errors[i - 1] * (1.0 + 1e-10));
  }
  SUBCASE("deterministic reruns") {
    auto p = FactorizationProblem::sparse_w(random_matrix(15, 20, rng), 3, 0.4);
    SolverConfig cfg;
    cfg.outer_iters = 8;
    const auto a = ssnmf::ssnmf(p, cfg);
    const auto b = ssnmf::ssnmf(p, cfg);
    CHECK(a.factors.w == b.factors.w);
    CHECK(a.factors.h == b.factors.h);
    for (std::size_t i = 0; i < a.trace.size(); ++i)
      CHECK(a.trace.records[i].error == b.trace.records[i].error);
  }
  SUBCASE("relative-change termination stops early") {
    auto p = FactorizationProblem::sparse_w(random_matrix(10, 10, rng), 2, 0.3);
    SolverConfig cfg;
    cfg.outer_iters = 10000;
    cfg.termination = TerminationRule::kRelativeErrorChange;
    cfg.tol = 1e-3;
    const auto res = ssnmf::ssnmf(p, cfg);
    CHECK(res.outer_iterations < 10000);
    CHECK(res.trace.size() == 2 * res.outer_iterations);
  }
  SUBCASE("constraints on H only") {
    FactorizationProblem p;
    p.x = random_matrix(10, 14, rng);
    p.rank = 3;
    p.h_constraints.assign(3, SparsityConstraint::equality(0.6, 14));
    SolverConfig cfg;
    cfg.outer_iters = 5;
    const auto res = ssnmf::ssnmf(p, cfg);
    CHECK(res.factors.w.rows() == 10);
    CHECK(res.factors.h.cols() == 14);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(std::abs(sparsity_measure(res.factors.h.row(i)) - 0.6) <= 1e-6);
    }
  }
  SUBCASE("hoyer and batch variants stay feasible") {
    auto p = FactorizationProblem::sparse_w(random_matrix(16, 20, rng), 3, 0.5);
    for (auto algo : {WAlgorithm::kSequentialHoyer, WAlgorithm::kBatchGradient}) {
      SolverConfig cfg;
      cfg.outer_iters = 10;
      cfg.w_algorithm = algo;
      SolverObserver obs;
      obs.on_record = [&](const Factors& f, const TraceRecord&) {
        check_columns_feasible(f.w, p.w_constraints);
      };
      const auto res = ssnmf::ssnmf(p, cfg, obs);
      CHECK(res.trace.size() == 20);
    }
  }
}

TEST_CASE("bisparse driver") {
  auto p = FactorizationProblem::sparse_both(DenseMatrix(10, 12, 1.0), 2, 0.5, 0.4, true);
  SolverConfig cfg;
  cfg.outer_iters = 4;
  SUBCASE("exact start is a fixed point") {
    auto truth = initialize(p, cfg);
    truth.d = DenseMatrix::identity(2);
    (*truth.d)(0, 0) = 3.0;
    (*truth.d)(1, 1) = 1.5;
    p.x = matmul(matmul(truth.w, *truth.d), truth.h);
    const auto res = bisparse(p, cfg, truth);
    for (const auto& rec : res.trace.records) CHECK(rec.error <= 1e-8);
  }
  SUBCASE("three records per iteration, feasible throughout") {
    SeededRng rng(11);
    p.x = random_matrix(10, 12, rng);
    double prev = 1e300;
    SolverObserver obs;
    obs.on_record = [&](const Factors& f, const TraceRecord& rec) {
      check_columns_feasible(f.w, p.w_constraints);
      const auto ht = f.h.transposed();
      check_columns_feasible(ht, p.h_constraints);
      REQUIRE(f.d.has_value());
      CHECK(is_nonnegative(*f.d));
      CHECK((*f.d)(0, 1) == 0.0);
      CHECK((*f.d)(1, 0) == 0.0);
      CHECK(rec.error <= prev * (1.0 + 1e-10));
      prev = rec.error;
    };
    const auto res = ssnmf::ssnmf(p, cfg, obs);
    CHECK(res.trace.size() == 12);
    CHECK(res.factors.d.has_value());
  }
  SUBCASE("missing H constraints") {
    auto q = FactorizationProblem::sparse_w(DenseMatrix(4, 4, 1.0), 2, 0.5);
    CHECK_THROWS_AS(bisparse(q, cfg), DimensionError);
  }
}
