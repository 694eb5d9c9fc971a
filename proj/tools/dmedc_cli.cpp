// Command-line front end: generate instances, run solvers, emit traces and
// aggregate benchmark tables.

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dmedc/instance_gen.hpp"
#include "dmedc/solvers_constrained.hpp"
#include "dmedc/solvers_unconstrained.hpp"

namespace {

using dmedc::Vector;
using json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_trace_csv(const std::string& path, const dmedc::IterateTrace& tr) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw dmedc::IoError("cannot open trace output " + path);
  out << dmedc::kTraceHeader << "\n";
  for (const auto& r : tr) {
    out << r.k << ',' << fmt_double(r.objective) << ','
        << fmt_double(r.infeasibility) << ',' << fmt_double(r.xi_norm) << ','
        << fmt_double(r.gap_norm) << ',' << r.inner_iters << ','
        << fmt_double(r.time_ms) << "\n";
  }
  if (!out) throw dmedc::IoError("trace write failed for " + path);
}

// Flags win over config-file values: only fill options the user did not pass.
void apply_config_defaults(CLI::App* cmd, const std::string& config_path) {
  if (config_path.empty()) return;
  std::ifstream in(config_path);
  if (!in) throw dmedc::IoError("cannot open config " + config_path);
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::parse_error& e) {
    throw dmedc::SchemaMismatch(std::string("config parse failed: ") +
                                e.what());
  }
  for (const auto& [key, val] : cfg.items()) {
    CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (!opt || opt->count() > 0) continue;
    if (val.is_array()) {
      for (const auto& v : val)
        opt->add_result(v.is_string() ? v.get<std::string>() : v.dump());
    } else {
      opt->add_result(val.is_string() ? val.get<std::string>() : val.dump());
    }
    opt->run_callback();
  }
}

struct GenArgs {
  std::string kind;
  std::size_t m = 0, n = 0, s = 0;
  double rho = 1.0, M = 2.0;
  std::uint64_t seed = 0;
  std::string out;
  std::string config;
};

int run_gen(const GenArgs& a) {
  dmedc::InstanceFile inst;
  if (a.kind == "l12ls") {
    inst = dmedc::gen_l12_ls(a.m, a.n, a.s, a.rho, a.seed).second;
  } else if (a.kind == "cdcls") {
    inst = dmedc::gen_constrained_dcls(a.m, a.n, a.s, a.rho, a.M, a.seed).file;
  } else if (a.kind == "ncqp") {
    inst = dmedc::gen_nonconvex_qp(a.m, a.n, a.seed).second;
  } else {
    std::cerr << "unknown instance kind: " << a.kind << "\n";
    return kExitConfig;
  }
  dmedc::save_instance(a.out, inst);
  std::cout << "wrote " << a.out << "\n";
  return kExitOk;
}

struct SolveArgs {
  std::string instance;
  std::string solver;
  double mu = 0.0;          // 0 -> solver default
  double beta = 0.0;        // 0 -> 1
  double rho_penalty = 0.0; // 0 -> recipe / heuristic
  double eps = 1e-5;
  double tol = 1e-5;
  int max_iter = 10000;
  std::string trace_out;
  std::string out;  // summary JSON
  std::string config;
};

struct SolveOutcome {
  dmedc::IterateTrace trace;
  int iterations = 0;
  double final_objective = 0.0;
  double xi_norm = 0.0;
  double gap_norm = 0.0;
  double infeasibility = 0.0;
  bool converged = false;
};

bool is_unconstrained_solver(const std::string& s) {
  return s == "gd" || s == "inexact_gd" || s == "dca" || s == "pdca" ||
         s == "pdcae";
}

SolveOutcome dispatch_solve(const dmedc::BuiltInstance& built,
                            const SolveArgs& a) {
  SolveOutcome o;
  if (is_unconstrained_solver(a.solver)) {
    const dmedc::DCProblem& p = built.dc;
    dmedc::UnconstrainedConfig cfg;
    cfg.mu = a.mu > 0.0 ? a.mu : 0.99 / p.f.lipschitz_grad;
    if (a.solver == "pdcae" && a.mu <= 0.0 &&
        p.f.kind == dmedc::SmoothSpec::Kind::LeastSquares) {
      // pDCAe convention: prox step from the cheap Frobenius bound on ||C||^2.
      double fro2 = 0.0;
      for (double v : p.f.C.data) fro2 += v * v;
      if (fro2 > 0.0) cfg.mu = 1.0 / fro2;
    }
    cfg.beta = a.beta > 0.0 ? a.beta : 1.0;
    cfg.max_iter = a.max_iter;
    cfg.tol = a.tol;
    Vector x0(p.n, 0.0);
    dmedc::UnconstrainedResult r;
    if (a.solver == "gd")
      r = dmedc::gd_on_fmu(p, cfg, x0);
    else if (a.solver == "inexact_gd")
      r = dmedc::inexact_gd(p, cfg, x0, x0);
    else if (a.solver == "dca")
      r = dmedc::dca(p, cfg, x0);
    else if (a.solver == "pdca")
      r = dmedc::pdca(p, cfg, x0);
    else
      r = dmedc::pdcae(p, cfg, x0);
    o.trace = std::move(r.trace);
    o.iterations = r.iterations;
    o.final_objective = r.final_objective;
    o.xi_norm = r.xi_norm;
    o.gap_norm = r.gap_norm;
    o.converged = r.status == dmedc::SolveStatus::Converged;
    return o;
  }

  const dmedc::LCDCProblem& p = built.lcdc;
  const double L_f = p.dc.f.lipschitz_grad;
  dmedc::ConstrainedConfig cfg;
  cfg.beta = a.beta > 0.0 ? a.beta : 1.0;
  cfg.rho = a.rho_penalty;
  cfg.eps = a.eps;
  cfg.max_iter = a.max_iter;
  Vector x0(p.dc.n, 0.0);
  Vector lam0(p.b.size(), 0.0);
  dmedc::ConstrainedResult r;
  if (a.solver == "lcdc_alm") {
    cfg.mu = a.mu > 0.0 ? a.mu : 0.5 / L_f;
    r = dmedc::lcdc_alm(p, cfg, x0, x0, lam0);
  } else if (a.solver == "composite_alm") {
    cfg.mu = a.mu > 0.0 ? a.mu : 0.4 / L_f;
    if (cfg.rho <= 0.0) cfg.rho = 10.0 / cfg.mu;
    r = dmedc::composite_lcdc_alm(p, cfg, x0, x0, lam0);
  } else {
    throw dmedc::ShapeMismatch("unknown solver tag: " + a.solver);
  }
  o.trace = std::move(r.trace);
  o.iterations = r.iterations;
  o.final_objective = r.final_objective;
  o.xi_norm = r.xi_norm;
  o.gap_norm = r.gap_norm;
  o.infeasibility = r.infeasibility;
  o.converged = r.status == dmedc::SolveStatus::Converged;
  return o;
}

bool solver_matches_kind(const std::string& solver, const std::string& kind) {
  if (kind == "L12LS") return is_unconstrained_solver(solver);
  if (kind == "NonconvexQP") return solver == "lcdc_alm";
  if (kind == "ConstrainedDCLS") return solver == "composite_alm";
  return false;
}

int run_solve(const SolveArgs& a) {
  dmedc::InstanceFile inst = dmedc::load_instance(a.instance);
  dmedc::BuiltInstance built = dmedc::build_problem(inst);
  if (!solver_matches_kind(a.solver, built.kind)) {
    std::cerr << "solver '" << a.solver << "' is not compatible with a "
              << built.kind << " instance\n";
    return kExitConfig;
  }
  dmedc::StopWatch clock;
  SolveOutcome o;
  try {
    o = dispatch_solve(built, a);
  } catch (const dmedc::Error& e) {
    if (!a.trace_out.empty()) write_trace_csv(a.trace_out, o.trace);
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  }
  if (!a.trace_out.empty()) write_trace_csv(a.trace_out, o.trace);
  json summary;
  summary["iters"] = o.iterations;
  summary["final_objective"] = o.final_objective;
  summary["final_residuals"] = {{"xi_norm", o.xi_norm},
                                {"gap_norm", o.gap_norm},
                                {"infeasibility", o.infeasibility}};
  summary["status"] = o.converged ? "converged" : "max_iter";
  summary["wall_ms"] = clock.elapsed_ms();
  if (a.out.empty()) {
    std::cout << summary.dump(2) << "\n";
  } else {
    std::ofstream out(a.out, std::ios::binary);
    if (!out) throw dmedc::IoError("cannot open summary output " + a.out);
    out << summary.dump(2) << "\n";
  }
  return kExitOk;
}

struct BenchArgs {
  std::string kind = "l12ls";
  std::size_t m = 0, n = 0, s = 0;
  double M = 2.0;
  std::vector<double> rho_list{1.0};
  std::vector<double> beta_list;
  std::vector<std::string> solvers;
  int reps = 1;
  std::uint64_t seed = 1;
  double tol = 1e-5;
  double eps = 1e-5;
  double mu = 0.0;
  int max_iter = 10000;
  std::string out;
  std::string config;
};

struct BenchCell {
  double rho = 0.0;
  double beta = 0.0;  // 0 -> default
  std::string solver;
};

struct BenchRow {
  BenchCell cell;
  int runs = 0, failures = 0;
  double sum_iters = 0.0, sum_ms = 0.0, sum_obj = 0.0;
};

int run_bench(const BenchArgs& a) {
  if (a.solvers.empty()) {
    std::cerr << "bench: at least one solver required\n";
    return kExitConfig;
  }
  std::vector<BenchCell> cells;
  const std::vector<double> betas =
      a.beta_list.empty() ? std::vector<double>{0.0} : a.beta_list;
  for (double rho : a.rho_list)
    for (double beta : betas)
      for (const auto& s : a.solvers) cells.push_back({rho, beta, s});

  std::vector<BenchRow> rows(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      BenchRow row;
      row.cell = cells[i];
      for (int r = 0; r < a.reps; ++r) {
        const std::uint64_t seed = a.seed + static_cast<std::uint64_t>(r);
        ++row.runs;
        try {
          dmedc::InstanceFile inst;
          if (a.kind == "l12ls")
            inst = dmedc::gen_l12_ls(a.m, a.n, a.s, cells[i].rho, seed).second;
          else if (a.kind == "cdcls")
            inst = dmedc::gen_constrained_dcls(a.m, a.n, a.s, cells[i].rho,
                                               a.M, seed)
                       .file;
          else if (a.kind == "ncqp")
            inst = dmedc::gen_nonconvex_qp(a.m, a.n, seed).second;
          else
            throw dmedc::SchemaMismatch("bench: unknown kind " + a.kind);
          dmedc::BuiltInstance built = dmedc::build_problem(inst);
          if (!solver_matches_kind(cells[i].solver, built.kind))
            throw dmedc::ShapeMismatch("bench: solver/kind mismatch");
          SolveArgs sa;
          sa.solver = cells[i].solver;
          sa.mu = a.mu;
          sa.beta = cells[i].beta;
          sa.tol = a.tol;
          sa.eps = a.eps;
          sa.max_iter = a.max_iter;
          dmedc::StopWatch clock;
          SolveOutcome o = dispatch_solve(built, sa);
          row.sum_iters += o.iterations;
          row.sum_ms += clock.elapsed_ms();
          row.sum_obj += o.final_objective;
        } catch (const dmedc::Error& e) {
          ++row.failures;
          std::lock_guard<std::mutex> lk(err_mutex);
          std::cerr << "bench cell " << cells[i].solver << " rho "
                    << cells[i].rho << " seed " << seed
                    << " failed: " << e.what() << "\n";
        }
      }
      rows[i] = std::move(row);
    }
  };

  std::size_t pool = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("DME_DC_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap > 0) pool = std::min<std::size_t>(pool, cap);
  }
  pool = std::min(pool, cells.size());
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < pool; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out, std::ios::binary);
    if (!file) throw dmedc::IoError("cannot open bench output " + a.out);
    out = &file;
  }
  *out << "kind,m,n,s,rho,M,beta,solver,runs,failures,avg_iters,avg_time_ms,"
          "avg_final_objective\n";
  for (const auto& row : rows) {
    const int ok = row.runs - row.failures;
    const double denom = ok > 0 ? ok : 1;
    *out << a.kind << ',' << a.m << ',' << a.n << ',' << a.s << ','
         << fmt_double(row.cell.rho) << ',' << fmt_double(a.M) << ','
         << fmt_double(row.cell.beta) << ',' << row.cell.solver << ','
         << row.runs << ',' << row.failures << ','
         << fmt_double(row.sum_iters / denom) << ','
         << fmt_double(row.sum_ms / denom) << ','
         << fmt_double(row.sum_obj / denom) << "\n";
  }
  return kExitOk;
}

struct ReportArgs {
  std::vector<std::string> traces;
  std::vector<std::string> metrics;
  std::string out;
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) fields.push_back(f);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

int run_report(const ReportArgs& a) {
  const std::string long_header = "run_id,k,metric,value";
  auto metric_wanted = [&](const std::string& m) {
    if (a.metrics.empty()) return true;
    for (const auto& w : a.metrics)
      if (w == m) return true;
    return false;
  };

  std::ostringstream body;
  for (const auto& path : a.traces) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw dmedc::IoError("cannot open trace " + path);
    std::string header;
    if (!std::getline(in, header))
      throw dmedc::SchemaMismatch("empty trace file " + path);
    if (!header.empty() && header.back() == '\r') header.pop_back();

    std::string line;
    if (header == long_header) {
      // Already long-format: pass rows through (metric filter still applies).
      int lineno = 1;
      while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != 4)
          throw dmedc::SchemaMismatch("malformed row in " + path + " line " +
                                      std::to_string(lineno));
        if (metric_wanted(f[2])) body << line << "\n";
      }
      continue;
    }
    if (header != dmedc::kTraceHeader)
      throw dmedc::SchemaMismatch("unrecognized trace header in " + path);

    const std::string run_id = std::filesystem::path(path).stem().string();
    const char* metric_names[] = {"objective", "infeasibility", "xi_norm",
                                  "gap_norm", "inner_iters", "time_ms"};
    int lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      auto f = split_csv_line(line);
      if (f.size() != 7)
        throw dmedc::SchemaMismatch("malformed row in " + path + " line " +
                                    std::to_string(lineno));
      for (std::size_t j = 0; j < 6; ++j)
        if (metric_wanted(metric_names[j]))
          body << run_id << ',' << f[0] << ',' << metric_names[j] << ','
               << f[j + 1] << "\n";
    }
  }

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out, std::ios::binary);
    if (!file) throw dmedc::IoError("cannot open report output " + a.out);
    out = &file;
  }
  *out << long_header << "\n" << body.str();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dmedc: difference-of-convex solvers via Moreau-envelope "
               "smoothing"};
  app.require_subcommand(1);

  GenArgs ga;
  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic instance");
  gen->add_option("kind", ga.kind, "l12ls | cdcls | ncqp")->required();
  gen->add_option("--m", ga.m)->required();
  gen->add_option("--n", ga.n)->required();
  gen->add_option("--s", ga.s);
  gen->add_option("--rho", ga.rho, "DC regularization weight");
  gen->add_option("--M", ga.M, "l1-ball radius (cdcls)");
  gen->add_option("--seed", ga.seed);
  gen->add_option("-o,--out", ga.out)->required();
  gen->add_option("--config", ga.config);

  SolveArgs sa;
  CLI::App* solve = app.add_subcommand("solve", "run one solver on an instance");
  solve->add_option("instance", sa.instance)->required();
  solve->add_option("--solver", sa.solver,
                    "gd | inexact_gd | dca | pdca | pdcae | lcdc_alm | "
                    "composite_alm")
      ->required();
  solve->add_option("--mu", sa.mu);
  solve->add_option("--beta", sa.beta);
  solve->add_option("--rho-penalty", sa.rho_penalty);
  solve->add_option("--eps", sa.eps);
  solve->add_option("--tol", sa.tol);
  solve->add_option("--max-iter", sa.max_iter);
  solve->add_option("--trace-out", sa.trace_out);
  solve->add_option("-o,--out", sa.out, "summary JSON path (default stdout)");
  solve->add_option("--config", sa.config);

  BenchArgs ba;
  CLI::App* bench = app.add_subcommand("bench", "run a benchmark suite");
  bench->add_option("--kind", ba.kind);
  bench->add_option("--m", ba.m);
  bench->add_option("--n", ba.n);
  bench->add_option("--s", ba.s);
  bench->add_option("--M", ba.M);
  bench->add_option("--rho-list", ba.rho_list)->delimiter(',');
  bench->add_option("--beta-list", ba.beta_list)->delimiter(',');
  bench->add_option("--solvers", ba.solvers)->delimiter(',');
  bench->add_option("--reps", ba.reps);
  bench->add_option("--seed", ba.seed);
  bench->add_option("--tol", ba.tol);
  bench->add_option("--eps", ba.eps);
  bench->add_option("--mu", ba.mu);
  bench->add_option("--max-iter", ba.max_iter);
  bench->add_option("-o,--out", ba.out);
  bench->add_option("--config", ba.config);

  ReportArgs ra;
  CLI::App* report =
      app.add_subcommand("report", "merge traces into long-format CSV");
  report->add_option("traces", ra.traces)->required();
  report->add_option("--metrics", ra.metrics)->delimiter(',');
  report->add_option("-o,--out", ra.out);

  try {
    app.parse(argc, argv);
    if (gen->parsed()) apply_config_defaults(gen, ga.config);
    if (solve->parsed()) apply_config_defaults(solve, sa.config);
    if (bench->parsed()) apply_config_defaults(bench, ba.config);
    if (gen->parsed()) return run_gen(ga);
    if (solve->parsed()) return run_solve(sa);
    if (bench->parsed()) return run_bench(ba);
    if (report->parsed()) return run_report(ra);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  } catch (const dmedc::BadDims& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const dmedc::SchemaMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const dmedc::InfeasibleParameters& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const dmedc::ShapeMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const dmedc::DimensionMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const dmedc::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const dmedc::Error& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  }
  return kExitConfig;
}
