#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "experiment.hpp"
#include "nlirls/diagnostics.hpp"
#include "nlirls/functional.hpp"
#include "nlirls/irls.hpp"
#include "nlirls/problem_io.hpp"
#include "nlirls/problems.hpp"
#include "nlirls/rng.hpp"

namespace nlirls::cli {

namespace {

struct SolverFlags {
  double p = 1.0;
  double omega = 0.0;
  double eps_tilde = 1e-6;
  double stop_eps = 0.0;
  int max_iters = 200;
  std::uint64_t seed = 0;
  std::string starts;
  int random_starts = 0;
  double radius = 1.0;
  int workers = 1;
  std::string out;
};

void add_solver_flags(CLI::App* app, SolverFlags& f) {
  app->add_option("--p", f.p, "Residual exponent in [1, 2]");
  app->add_option("--omega", f.omega, "Convexification weight (0 = plain scheme)");
  app->add_option("--eps-tilde", f.eps_tilde, "Fixed lower bound of the eps schedule");
  app->add_option("--stop-eps", f.stop_eps, "Stop once eps <= this value");
  app->add_option("--max-iters", f.max_iters, "Maximum outer iterations");
  app->add_option("--seed", f.seed, "Seed for random start points");
  app->add_option("--starts", f.starts, "Start points: coordinates split by ',', points by ';'");
  app->add_option("--random-starts", f.random_starts, "Additional random starts in a ball");
  app->add_option("--radius", f.radius, "Radius of the random-start ball");
  app->add_option("--workers", f.workers, "Concurrent multistart branches");
}

IrlsConfig to_config(const SolverFlags& f) {
  IrlsConfig c;
  c.p = f.p;
  c.omega = f.omega;
  c.eps_tilde = f.eps_tilde;
  c.stop_eps = f.stop_eps;
  c.max_outer_iters = f.max_iters;
  return c;
}

std::string vec_str(const Vector& v) {
  std::string s;
  for (Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_real(v[i]);
  return s;
}

struct Solved {
  MapPtr map;  // restricted when the instance carries a support
  SolveReport report;
  std::size_t best_index = 0;
  std::size_t num_starts = 1;
};

Solved solve_instance(const ProblemInstance& inst, const SolverFlags& f) {
  Solved s;
  s.map = inst.restricted_map();
  const IrlsConfig config = to_config(f);
  config.validate();
  const Index dim = s.map->dim_in();
  std::vector<Vector> starts =
      f.starts.empty() ? std::vector<Vector>{Vector::Zero(dim)} : parse_starts(f.starts, dim);
  if (f.random_starts < 0) raise(ErrorCode::InvalidConfig, "--random-starts must be >= 0");
  if (f.random_starts > 0) {
    for (Vector& v : MultistartPlan::random_in_ball(f.random_starts, f.radius, f.seed).materialize(dim))
      starts.push_back(std::move(v));
  }
  s.num_starts = starts.size();
  if (starts.size() == 1) {
    s.report = config.omega > 0.0 ? run_convexified(*s.map, inst.y, config, starts[0])
                                  : run_nr_irls(*s.map, inst.y, config, starts[0]);
    return s;
  }
  MultistartPlan plan = MultistartPlan::user_provided(std::move(starts));
  plan.max_workers = f.workers;
  MultistartResult res = multistart_convexified(*s.map, inst.y, config, plan);
  s.report = std::move(res.best);
  s.best_index = res.best_index;
  return s;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream o(path, std::ios::binary);
  if (!o) raise(ErrorCode::InvalidConfig, "cannot write '" + path + "'");
  o << content;
  if (!o) raise(ErrorCode::InvalidConfig, "write to '" + path + "' failed");
}

int cmd_solve(const std::string& problem, const SolverFlags& f, std::ostream& out) {
  const ProblemInstance inst = load_instance(problem);
  const Solved s = solve_instance(inst, f);
  const SolveReport& rep = s.report;
  out << "termination=" << to_string(rep.termination) << '\n';
  out << "outer_iterations=" << rep.iterates.size() - 1 << '\n';
  out << "final_eps=" << format_real(rep.iterates.back().eps) << '\n';
  out << "final_lp_residual=" << format_real(rep.final_lp_residual) << '\n';
  out << "final_x=" << vec_str(rep.final_x) << '\n';
  if (!inst.support.empty()) {
    out << "final_x_ambient=" << vec_str(std::static_pointer_cast<const RestrictedMap>(s.map)->pad(rep.final_x))
        << '\n';
  }
  if (s.num_starts > 1) out << "best_start=" << s.best_index << '\n';
  if (!f.out.empty()) {
    std::ostringstream csv;
    write_trace_csv(csv, rep, *s.map, inst.y, f.p);
    write_file(f.out, csv.str());
    out << "trace=" << f.out << '\n';
  }
  return rep.termination == Termination::InnerSolverFailure ? kExitSolverFailure : kExitOk;
}

struct ExperimentFlags {
  std::string config;
  std::string scale;
  std::string out;
  std::string summary;
  std::uint64_t seed = 0;
  std::string p;
  double omega = 0, eps_tilde = 0, stop_eps = 0;
  int max_iters = 0, workers = 0;
};

int cmd_experiment(CLI::App* sub, const ExperimentFlags& f, std::ostream& out) {
  ExperimentConfig c = load_experiment_config(f.config);
  if (!f.scale.empty()) {
    const bool paper = f.scale == "paper";
    c.n = paper ? 80 : 20;
    c.m = paper ? 30 : 12;
  }
  if (sub->count("--seed")) c.base_seed = f.seed;
  if (sub->count("--p")) {
    c.p.clear();
    std::stringstream ss(f.p);
    std::string t;
    while (std::getline(ss, t, ',')) {
      char* end = nullptr;
      const double v = std::strtod(t.c_str(), &end);
      if (t.empty() || *end != '\0') raise(ErrorCode::InvalidConfig, "bad --p value '" + t + "'");
      c.p.push_back(v);
    }
  }
  if (sub->count("--omega")) c.omega = f.omega;
  if (sub->count("--eps-tilde")) c.eps_tilde = f.eps_tilde;
  if (sub->count("--stop-eps")) c.stop_eps = f.stop_eps;
  if (sub->count("--max-iters")) c.max_outer_iters = f.max_iters;
  if (sub->count("--workers")) c.workers = f.workers;
  if (!f.out.empty()) c.output_path = f.out;
  if (!f.summary.empty()) c.summary_path = f.summary;
  if (c.summary_path.empty()) {
    const std::filesystem::path p(c.output_path);
    c.summary_path = (p.parent_path() / (p.stem().string() + "_summary.csv")).string();
  }
  c.validate();

  const std::vector<ExperimentRecord> records = run_experiment(c);
  const std::vector<SummaryRow> rows = summarize(records);
  std::ostringstream rec_csv, sum_csv;
  write_records_csv(rec_csv, records);
  write_summary_csv(sum_csv, rows);
  write_file(c.output_path, rec_csv.str());
  write_file(c.summary_path, sum_csv.str());
  int failures = 0;
  for (const ExperimentRecord& r : records) failures += r.error.empty() ? 0 : 1;
  out << "records=" << records.size() << '\n';
  out << "grid_points=" << rows.size() << '\n';
  out << "trial_errors=" << failures << '\n';
  out << "rng=" << Rng::kName << '\n';
  out << "output=" << c.output_path << '\n';
  out << "summary=" << c.summary_path << '\n';
  return kExitOk;
}

struct DiagnoseFlags {
  SolverFlags solver;
  bool mu_nu = false;
  double c_hat = 0.0;
  double beta = -1.0;
  int m = -1;
  int samples = 200;
  int probes = 10;
  double probe_radius = 0.0;
  std::vector<double> box;
};

int cmd_diagnose(const std::string& problem, const DiagnoseFlags& f, std::ostream& out) {
  const ProblemInstance inst = load_instance(problem);
  const double p = f.solver.p;

  auto print_mu_nu = [&](double beta, int m) {
    const DecayConstants d = compute_mu_nu(p, m, beta, f.c_hat);
    out << "mu=" << format_real(d.mu) << '\n';
    out << "nu=" << format_real(d.nu) << '\n';
    out << "contraction=" << (d.contraction ? "true" : "false") << '\n';
  };

  const Solved s = solve_instance(inst, f.solver);
  const SolveReport& rep = s.report;
  const ResidualMap& map = *s.map;
  const Index dim = map.dim_in();
  out << "termination=" << to_string(rep.termination) << '\n';
  out << "final_lp_residual=" << format_real(rep.final_lp_residual) << '\n';

  // BCC around the ground truth when known, else around the computed solution.
  const bool has_truth = inst.x_star.size() > 0;
  const Vector x_ref = has_truth ? inst.restricted_x_star() : rep.final_x;
  std::vector<double> box = f.box;
  if (box.empty() && inst.family == Family::Simple1D) box = {0.0, 1.0};
  if (!box.empty() && box.size() != 2) raise(ErrorCode::InvalidConfig, "--box needs two values LO,HI");
  Rng rng(derive_seed(f.solver.seed, 99));
  std::vector<Vector> samples;
  const double radius = std::max(1.0, x_ref.norm());
  for (int i = 0; i < f.samples; ++i) {
    Vector z;
    if (!box.empty()) {
      z.resize(dim);
      for (Index j = 0; j < dim; ++j) z[j] = box[0] + (box[1] - box[0]) * rng.uniform();
    } else {
      z = x_ref + rng.point_in_ball(dim, radius);
    }
    if ((z - x_ref).norm() >= 1e-14) samples.push_back(std::move(z));
  }
  const BccEstimate bcc = estimate_bcc(map, x_ref, samples, p);
  out << "bcc_alpha_hat=" << format_real(bcc.alpha_hat) << '\n';
  out << "bcc_beta_hat=" << format_real(bcc.beta_hat) << '\n';
  out << "bcc_samples=" << bcc.num_samples << '\n';

  const IrlsState& last = rep.iterates.back();
  if (last.eps > 0.0) {
    const Vector y = inst.y;
    const Weights w = last.w;
    const double eps = last.eps;
    const ScalarObjective obj = [&](const Vector& x) { return eval_J(map, x, y, w, eps, p); };
    const double pr = f.probe_radius > 0.0 ? f.probe_radius : 0.1 * std::max(1.0, rep.final_x.norm());
    out << "strong_convexity_estimate="
        << format_real(probe_strong_convexity(obj, rep.final_x, pr, f.probes, f.solver.seed)) << '\n';
  }

  if (rep.iterates.size() >= 2) {
    const Uscc1Check u = check_uscc1_on_trace(rep, map, inst.y, p);
    out << "uscc1_steps=" << u.ratios.size() << '\n';
    out << "uscc1_skipped=" << u.skipped << '\n';
    if (!u.ratios.empty()) out << "uscc1_c_empirical=" << format_real(u.c_empirical) << '\n';
    // Lipschitz estimate on the first step that moves.
    for (std::size_t n = 0; n + 1 < rep.iterates.size(); ++n) {
      const IrlsState& a = rep.iterates[n];
      const IrlsState& b = rep.iterates[n + 1];
      if ((a.x - b.x).norm() < 1e-12) continue;
      const std::vector<double> grid{0.1, 0.25, 0.5, 0.75, 0.9};
      out << "lipcond_step=" << a.n << '\n';
      out << "lipcond_l_estimate=" << format_real(check_lipcond(map, inst.y, a.w, a.x, b.x, grid)) << '\n';
      break;
    }
  }

  if (has_truth && rep.iterates.size() >= 4) {
    const DecayFit fit = fit_error_decay(rep, x_ref);
    out << "decay_no_decay=" << (fit.no_decay ? "true" : "false") << '\n';
    if (!fit.no_decay) out << "decay_mu_empirical=" << format_real(fit.mu_empirical) << '\n';
    out << "decay_plateau=" << format_real(fit.plateau) << '\n';
  }

  if (f.mu_nu) {
    print_mu_nu(f.beta >= 0.0 ? f.beta : bcc.beta_hat, f.m > 0 ? f.m : static_cast<int>(map.dim_out()));
  }
  return kExitOk;
}

}  // namespace

int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidP:
    case ErrorCode::InvalidDims:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::IndexOutOfRange:
    case ErrorCode::NonPositiveCHat:
    case ErrorCode::NonPositiveAlpha:
      return kExitInputError;
    default:
      return kExitSolverFailure;
  }
}

std::vector<Vector> parse_starts(const std::string& text, Index dim) {
  std::vector<Vector> out;
  std::stringstream points(text);
  std::string point;
  while (std::getline(points, point, ';')) {
    std::vector<double> coords;
    std::stringstream cs(point);
    std::string tok;
    while (std::getline(cs, tok, ',')) {
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      if (tok.empty() || *end != '\0' || !std::isfinite(v)) {
        raise(ErrorCode::InvalidConfig, "bad start coordinate '" + tok + "'");
      }
      coords.push_back(v);
    }
    if (coords.size() == 1) {
      out.push_back(Vector::Constant(dim, coords[0]));
    } else if (static_cast<Index>(coords.size()) == dim) {
      out.push_back(Eigen::Map<const Vector>(coords.data(), dim));
    } else {
      raise(ErrorCode::DimensionMismatch, "start '" + point + "' has " + std::to_string(coords.size()) +
                                              " coordinates, expected " + std::to_string(dim));
    }
  }
  if (out.empty()) raise(ErrorCode::InvalidConfig, "no start points given");
  return out;
}

void write_trace_csv(std::ostream& out, const SolveReport& report, const ResidualMap& map,
                     const Vector& y, double p) {
  out << "n,eps,J,lp_residual,step_norm\n";
  for (std::size_t i = 0; i < report.iterates.size(); ++i) {
    const IrlsState& s = report.iterates[i];
    const double step = i == 0 ? 0.0 : (s.x - report.iterates[i - 1].x).norm();
    out << s.n << ',' << format_real(s.eps) << ',' << format_real(s.j_value) << ','
        << format_real(lp_norm(residual(map, s.x, y), p)) << ',' << format_real(step) << '\n';
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"IRLS solver for minimal lp-norm residuals of nonlinear equations", "nlirls"};
  app.require_subcommand(1);

  std::string problem;
  SolverFlags solve_flags;
  CLI::App* solve = app.add_subcommand("solve", "Solve one problem instance");
  solve->add_option("problem", problem, "Problem instance file")->required();
  add_solver_flags(solve, solve_flags);
  solve->add_option("--out", solve_flags.out, "Write the iteration trace CSV here");

  ExperimentFlags exp_flags;
  CLI::App* experiment = app.add_subcommand("experiment", "Run a seeded batch experiment");
  experiment->add_option("config", exp_flags.config, "Experiment config file")->required();
  experiment->add_option("--scale", exp_flags.scale, "desk (N=20, m=12) or paper (N=80, m=30)")
      ->check(CLI::IsMember({"desk", "paper"}));
  experiment->add_option("--out", exp_flags.out, "Records CSV path (overrides the config)");
  experiment->add_option("--summary-out", exp_flags.summary, "Summary CSV path");
  experiment->add_option("--seed", exp_flags.seed, "Base seed (overrides the config)");
  experiment->add_option("--p", exp_flags.p, "Comma-separated p grid (overrides the config)");
  experiment->add_option("--omega", exp_flags.omega, "Convexification weight");
  experiment->add_option("--eps-tilde", exp_flags.eps_tilde, "Fixed lower bound of the eps schedule");
  experiment->add_option("--stop-eps", exp_flags.stop_eps, "Stop once eps <= this value");
  experiment->add_option("--max-iters", exp_flags.max_iters, "Maximum outer iterations");
  experiment->add_option("--workers", exp_flags.workers, "Concurrent trials");

  DiagnoseFlags diag_flags;
  CLI::App* diagnose = app.add_subcommand("diagnose", "Solve and report structural diagnostics");
  diagnose->add_option("problem", problem, "Problem instance file")->required();
  add_solver_flags(diagnose, diag_flags.solver);
  diagnose->add_flag("--mu-nu", diag_flags.mu_nu, "Report the decay constants mu and nu");
  diagnose->add_option("--c-hat", diag_flags.c_hat, "Strong convexity constant for --mu-nu");
  diagnose->add_option("--beta", diag_flags.beta, "Upper BCC constant for --mu-nu (default: estimate)");
  diagnose->add_option("--m", diag_flags.m, "Measurement count for --mu-nu (default: map output size)");
  diagnose->add_option("--samples", diag_flags.samples, "BCC sample count");
  diagnose->add_option("--probes", diag_flags.probes, "Strong convexity probe points");
  diagnose->add_option("--probe-radius", diag_flags.probe_radius, "Strong convexity probe radius");
  diagnose->add_option("--box", diag_flags.box, "BCC sampling box LO HI (per coordinate)")->expected(2);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }

  try {
    if (*solve) return cmd_solve(problem, solve_flags, out);
    if (*experiment) return cmd_experiment(experiment, exp_flags, out);
    if (*diagnose) return cmd_diagnose(problem, diag_flags, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitSolverFailure;
  }
  return kExitInputError;
}

}  // namespace nlirls::cli
