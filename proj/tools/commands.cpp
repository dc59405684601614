#include "commands.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ssnmf/bench.hpp"
#include "ssnmf/errors.hpp"
#include "ssnmf/io.hpp"
#include "ssnmf/matrix.hpp"
#include "ssnmf/rng.hpp"
#include "ssnmf/solver.hpp"
#include "ssnmf/sparsity.hpp"

namespace ssnmf::cli {

namespace {

namespace fs = std::filesystem;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

/// Flag combinations CLI11 cannot express on its own.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FactorizeOptions {
  std::string input;
  std::size_t rank = 0;
  std::optional<double> sparsity_w;
  std::string constraints_w;
  std::optional<double> sparsity_h;
  std::string constraints_h;
  std::size_t outer_iters = 0;
  std::size_t inner_repeats = 1;
  std::uint64_t seed = 42;
  double eps = 1e-9;
  std::string w_algorithm = "sequential";
  std::string term = "fixed";
  std::string out_dir;
  bool diagonal_d = false;
};

void add_factorize_flags(CLI::App& cmd, FactorizeOptions& o, bool bisparse) {
  cmd.add_option("--input", o.input, "Data matrix CSV (nonnegative)")->required();
  cmd.add_option("--rank", o.rank, "Number of features r")->required()->check(CLI::PositiveNumber);
  auto* sw = cmd.add_option("--sparsity-w", o.sparsity_w, "Sparsity of every W column")
                 ->check(CLI::Range(0.0, 1.0));
  auto* cw = cmd.add_option("--constraints-w", o.constraints_w, "Per-column constraint CSV");
  sw->excludes(cw);
  auto* sh = cmd.add_option("--sparsity-h", o.sparsity_h, "Sparsity of every H row")
                 ->check(CLI::Range(0.0, 1.0));
  auto* ch = cmd.add_option("--constraints-h", o.constraints_h, "Per-row constraint CSV");
  sh->excludes(ch);
  cmd.add_option("--outer-iters", o.outer_iters, "Outer iterations (budget)")
      ->required()
      ->check(CLI::PositiveNumber);
  cmd.add_option("--inner-repeats", o.inner_repeats, "Multiplicative sweeps per update")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--seed", o.seed, "Random seed");
  cmd.add_option("--eps", o.eps, "Denominator guard")->check(CLI::PositiveNumber);
  cmd.add_option("--w-algorithm", o.w_algorithm, "sequential | sequential-hoyer | batch")
      ->check(CLI::IsMember({"sequential", "sequential-hoyer", "batch"}));
  cmd.add_option("--term", o.term, "fixed | rel:TOL");
  cmd.add_option("--out-dir", o.out_dir, "Output directory")->required();
  if (bisparse) cmd.add_flag("--diagonal-d", o.diagonal_d, "Keep D diagonal");
}

SolverConfig solver_config(const FactorizeOptions& o) {
  SolverConfig cfg;
  cfg.outer_iters = o.outer_iters;
  cfg.update.inner_repeats = o.inner_repeats;
  cfg.update.epsilon = o.eps;
  cfg.seed = o.seed;
  if (o.w_algorithm == "sequential-hoyer") {
    cfg.w_algorithm = WAlgorithm::kSequentialHoyer;
  } else if (o.w_algorithm == "batch") {
    cfg.w_algorithm = WAlgorithm::kBatchGradient;
  }
  if (o.term == "fixed") {
    cfg.termination = TerminationRule::kFixedIters;
  } else if (o.term.rfind("rel:", 0) == 0) {
    cfg.termination = TerminationRule::kRelativeErrorChange;
    const std::string tol = o.term.substr(4);
    std::size_t used = 0;
    try {
      cfg.tol = std::stod(tol, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tol.size() || !(cfg.tol > 0.0)) {
      throw UsageError("--term rel:TOL needs a positive tolerance, got '" + o.term + "'");
    }
  } else {
    throw UsageError("--term must be 'fixed' or 'rel:TOL', got '" + o.term + "'");
  }
  return cfg;
}

void write_echo(const fs::path& path, const std::vector<std::pair<std::string, std::string>>& kv) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
}

int run_factorize(const FactorizeOptions& o, bool bisparse_command) {
  const bool has_w = o.sparsity_w.has_value() || !o.constraints_w.empty();
  const bool has_h = o.sparsity_h.has_value() || !o.constraints_h.empty();
  if (bisparse_command && (!has_w || !has_h)) {
    throw UsageError("bisparse needs sparsity on both W (--sparsity-w/--constraints-w) and H "
                     "(--sparsity-h/--constraints-h)");
  }
  SolverConfig cfg = solver_config(o);

  FactorizationProblem problem;
  problem.x = load_matrix(o.input);
  problem.rank = o.rank;
  const std::size_t m = problem.x.rows();
  const std::size_t n = problem.x.cols();
  if (o.sparsity_w) {
    problem.w_constraints.assign(o.rank, SparsityConstraint::equality(*o.sparsity_w, m));
  } else if (!o.constraints_w.empty()) {
    problem.w_constraints = load_constraints(o.constraints_w, o.rank, m);
  }
  if (o.sparsity_h) {
    problem.h_constraints.assign(o.rank, SparsityConstraint::equality(*o.sparsity_h, n));
  } else if (!o.constraints_h.empty()) {
    problem.h_constraints = load_constraints(o.constraints_h, o.rank, n);
  }
  problem.bisparse = bisparse_command || (has_w && has_h);
  problem.diagonal_d = o.diagonal_d;

  const FactorizationResult result =
      problem.is_bisparse() ? bisparse(problem, cfg) : ssnmf(problem, cfg);

  const fs::path dir(o.out_dir);
  fs::create_directories(dir);
  save_matrix(result.factors.w, dir / "W.csv");
  save_matrix(result.factors.h, dir / "H.csv");
  if (result.factors.d) save_matrix(*result.factors.d, dir / "D.csv");
  save_trace(result.trace, dir / "trace.csv");

  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  write_echo(dir / "config.echo",
             {{"command", bisparse_command ? "bisparse" : "factorize"},
              {"input", o.input},
              {"rank", std::to_string(o.rank)},
              {"sparsity_w", opt(o.sparsity_w)},
              {"constraints_w", o.constraints_w},
              {"sparsity_h", opt(o.sparsity_h)},
              {"constraints_h", o.constraints_h},
              {"outer_iters", std::to_string(o.outer_iters)},
              {"inner_repeats", std::to_string(o.inner_repeats)},
              {"seed", std::to_string(o.seed)},
              {"eps", format_double(o.eps)},
              {"w_algorithm", o.w_algorithm},
              {"term", o.term},
              {"bisparse", problem.is_bisparse() ? "true" : "false"},
              {"diagonal_d", o.diagonal_d ? "true" : "false"},
              {"out_dir", o.out_dir}});

  std::cout << "seed=" << o.seed << "\nouter_iterations=" << result.outer_iterations
            << "\nfinal_error=" << format_double(result.trace.back().error) << '\n';
  return 0;
}

std::string join(std::span<const double> values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) s += ',';
    s += format_double(values[i]);
  }
  return s;
}

int run_project(const std::string& vector_path, double sparsity, const std::string& baseline) {
  const std::vector<double> b = load_vector(vector_path);
  const double k = k_from_alpha(sparsity, b.size());
  std::vector<double> y;
  std::size_t support = 0;
  if (baseline == "hoyer") {
    y = projection_hoyer(b, k);
    for (double v : y) support += v > 0.0 ? 1 : 0;
  } else {
    ProjectionSolution sol = sparse_opt(b, k);
    support = sol.support_size;
    y = std::move(sol.y);
  }
  std::cout << "y," << join(y) << "\nsupport_size," << support << "\nobjective,"
            << format_double(dot(b, y)) << '\n';
  return 0;
}

int run_measure(const std::string& input, bool rows) {
  const DenseMatrix m = load_matrix(input);
  std::cout << "index,sparsity\n";
  const std::size_t count = rows ? m.rows() : m.cols();
  for (std::size_t i = 0; i < count; ++i) {
    const std::vector<double> v = rows ? m.row(i) : std::vector<double>(m.col(i).begin(), m.col(i).end());
    std::cout << i << ',' << format_double(sparsity_measure(v)) << '\n';
  }
  return 0;
}

struct SynthOptions {
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t rank = 0;
  double sparsity_w = 0.0;
  std::optional<double> sparsity_h;
  double noise = 0.0;
  std::uint64_t seed = 42;
  std::string out;
  std::string save_truth;
};

int run_synth(const SynthOptions& o) {
  const DenseMatrix shape(o.m, o.n);
  FactorizationProblem problem =
      o.sparsity_h ? FactorizationProblem::sparse_both(shape, o.rank, o.sparsity_w, *o.sparsity_h, true)
                   : FactorizationProblem::sparse_w(shape, o.rank, o.sparsity_w);
  SolverConfig cfg;
  cfg.seed = o.seed;
  Factors truth = initialize(problem, cfg);

  SeededRng rng(o.seed ^ 0x5851f42d4c957f2dULL);
  DenseMatrix x;
  if (truth.d) {
    for (std::size_t i = 0; i < o.rank; ++i) (*truth.d)(i, i) = rng.uniform(1.0, 2.0);
    x = matmul(matmul(truth.w, *truth.d), truth.h);
  } else {
    x = matmul(truth.w, truth.h);
  }
  if (o.noise > 0.0) {
    for (double& v : x.data()) v = std::max(0.0, v + rng.normal(0.0, o.noise));
  }
  save_matrix(x, o.out);
  if (!o.save_truth.empty()) {
    const fs::path dir(o.save_truth);
    fs::create_directories(dir);
    save_matrix(truth.w, dir / "W.csv");
    save_matrix(truth.h, dir / "H.csv");
    if (truth.d) save_matrix(*truth.d, dir / "D.csv");
  }
  std::cout << "seed=" << o.seed << "\nrows=" << o.m << "\ncols=" << o.n << '\n';
  return 0;
}

int run_bench(const ProjectionBenchConfig& cfg, const std::string& out_path) {
  const ProjectionBenchResult result = run_projection_bench(cfg);
  std::ofstream out(out_path);
  if (!out) throw DataError("cannot open '" + out_path + "' for writing");
  write_bench_csv(out, result.rows);
  std::cout << "seed=" << cfg.seed << "\nrows=" << result.rows.size()
            << "\nmax_objective_gap=" << format_double(result.max_objective_gap)
            << "\nhoyer_failures=" << result.hoyer_failures << '\n';
  return 0;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Sparse NMF via sequential block coordinate descent"};
  app.require_subcommand(1);

  FactorizeOptions factorize_opts;
  auto* factorize = app.add_subcommand("factorize", "Sparse NMF X ~ W H");
  add_factorize_flags(*factorize, factorize_opts, false);

  FactorizeOptions bisparse_opts;
  auto* bisparse_cmd = app.add_subcommand("bisparse", "Bi-sparse NMF X ~ W D H");
  add_factorize_flags(*bisparse_cmd, bisparse_opts, true);

  std::string project_vector;
  double project_sparsity = 0.0;
  std::string project_baseline;
  auto* project = app.add_subcommand("project", "Project one vector onto a sparsity level");
  project->add_option("--vector", project_vector, "Vector CSV (one row or column)")->required();
  project->add_option("--sparsity", project_sparsity, "Target sparsity")
      ->required()
      ->check(CLI::Range(0.0, 1.0));
  project->add_option("--baseline", project_baseline, "Use Hoyer's projection instead")
      ->check(CLI::IsMember({"hoyer"}));

  std::string measure_input;
  bool measure_rows = false;
  bool measure_cols = false;
  auto* measure = app.add_subcommand("measure", "Hoyer sparsity of each column (or row)");
  measure->add_option("--input", measure_input, "Matrix CSV")->required();
  auto* rows_flag = measure->add_flag("--rows", measure_rows, "Measure rows");
  auto* cols_flag = measure->add_flag("--columns", measure_cols, "Measure columns (default)");
  rows_flag->excludes(cols_flag);

  ProjectionBenchConfig bench_cfg;
  bench_cfg.sparsities = {0.2, 0.4, 0.6, 0.8};
  std::string bench_out;
  auto* bench = app.add_subcommand("bench-projection", "Time exact vs Hoyer projection");
  bench->add_option("--dims", bench_cfg.dims, "Comma-separated dimensions")
      ->required()
      ->delimiter(',');
  bench->add_option("--batch-cols", bench_cfg.batch_cols, "Columns per batch")
      ->check(CLI::PositiveNumber);
  bench->add_option("--sparsities", bench_cfg.sparsities, "Comma-separated sparsities")
      ->delimiter(',')
      ->check(CLI::Range(0.0, 1.0));
  bench->add_option("--trials", bench_cfg.trials, "Trials per point")->check(CLI::PositiveNumber);
  bench->add_option("--seed", bench_cfg.seed, "Random seed");
  bench->add_option("--out", bench_out, "Output CSV")->required();

  SynthOptions synth_opts;
  auto* synth = app.add_subcommand("synth", "Planted-factor dataset generator");
  synth->add_option("--m", synth_opts.m, "Rows")->required()->check(CLI::PositiveNumber);
  synth->add_option("--n", synth_opts.n, "Columns")->required()->check(CLI::PositiveNumber);
  synth->add_option("--rank", synth_opts.rank, "Rank")->required()->check(CLI::PositiveNumber);
  synth->add_option("--sparsity-w", synth_opts.sparsity_w, "Sparsity of W columns")
      ->required()
      ->check(CLI::Range(0.0, 1.0));
  synth->add_option("--sparsity-h", synth_opts.sparsity_h, "Sparsity of H rows (adds D)")
      ->check(CLI::Range(0.0, 1.0));
  synth->add_option("--noise", synth_opts.noise, "Gaussian noise sigma (truncated at 0)")
      ->check(CLI::NonNegativeNumber);
  synth->add_option("--seed", synth_opts.seed, "Random seed")->required();
  synth->add_option("--out", synth_opts.out, "Output data CSV")->required();
  synth->add_option("--save-truth", synth_opts.save_truth, "Directory for planted factors");

  std::string render_features_path;
  std::string render_tile;
  std::string render_grid;
  std::string render_out;
  auto* render = app.add_subcommand("render", "Feature sheet as a PGM image");
  render->add_option("--features", render_features_path, "W CSV")->required();
  render->add_option("--tile", render_tile, "Tile shape ROWSxCOLS")->required();
  render->add_option("--grid", render_grid, "Grid shape ROWSxCOLS")->required();
  render->add_option("--out", render_out, "Output PGM")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*factorize) return run_factorize(factorize_opts, false);
    if (*bisparse_cmd) return run_factorize(bisparse_opts, true);
    if (*project) return run_project(project_vector, project_sparsity, project_baseline);
    if (*measure) return run_measure(measure_input, measure_rows);
    if (*bench) return run_bench(bench_cfg, bench_out);
    if (*synth) return run_synth(synth_opts);
    if (*render) {
      const DenseMatrix w = load_matrix(render_features_path, EntryPolicy::kAnyReal);
      render_features(w, parse_grid_shape(render_tile), parse_grid_shape(render_grid),
                      render_out);
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace ssnmf::cli
