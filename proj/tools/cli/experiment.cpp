#include "experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "nlirls/functional.hpp"
#include "nlirls/greedy.hpp"
#include "nlirls/irls.hpp"
#include "nlirls/parallel.hpp"
#include "nlirls/problems.hpp"
#include "nlirls/rng.hpp"

namespace nlirls::cli {

namespace {

[[noreturn]] void fail(int line, const std::string& msg) {
  raise(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

double to_real(const std::string& tok, int line) {
  const std::string s = trim(tok);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) fail(line, "bad number '" + s + "'");
  return v;
}

long long to_int(const std::string& tok, int line) {
  const std::string s = trim(tok);
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size()) fail(line, "bad integer '" + s + "'");
  return v;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

std::vector<double> real_list(const std::string& v, int line) {
  std::vector<double> out;
  for (const std::string& t : split_list(v)) out.push_back(to_real(t, line));
  if (out.empty()) fail(line, "empty list");
  return out;
}

bool to_bool(const std::string& v, int line) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(line, "expected true or false, got '" + v + "'");
}

std::optional<ExperimentFamily> family_from(const std::string& s) {
  if (s == "Simple1D") return ExperimentFamily::Simple1D;
  if (s == "PerturbedRip") return ExperimentFamily::PerturbedRip;
  if (s == "PhaseRetrieval") return ExperimentFamily::PhaseRetrieval;
  if (s == "ImpulsiveNoise") return ExperimentFamily::ImpulsiveNoise;
  return std::nullopt;
}

template <class T>
std::vector<T> sorted_unique(std::vector<T> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::string opt_field(const std::optional<double>& v) { return v ? format_real(*v) : std::string(); }
std::string opt_field(const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); }

struct GridPoint {
  std::optional<double> p, rho, kappa, alpha_p;
  std::optional<int> k;

  std::string key(ExperimentFamily f) const {
    return std::string(to_string(f)) + "|p=" + opt_field(p) + "|k=" + opt_field(k) +
           "|rho=" + opt_field(rho) + "|kappa=" + opt_field(kappa) + "|alpha_p=" + opt_field(alpha_p);
  }
};

std::vector<GridPoint> expand_grid(const ExperimentConfig& c) {
  const bool has_k = c.family != ExperimentFamily::Simple1D;
  const bool has_rho = c.family == ExperimentFamily::PerturbedRip;
  const bool has_alpha = c.family == ExperimentFamily::ImpulsiveNoise;
  auto or_none = [](bool on, const std::vector<double>& v) {
    std::vector<std::optional<double>> out;
    if (!on) return std::vector<std::optional<double>>{std::nullopt};
    for (double x : sorted_unique(v)) out.emplace_back(x);
    return out;
  };
  std::vector<std::optional<int>> ks;
  if (has_k) {
    for (int k : sorted_unique(c.k)) ks.emplace_back(k);
  } else {
    ks.emplace_back(std::nullopt);
  }
  std::vector<GridPoint> grid;
  for (double p : sorted_unique(c.p))
    for (const auto& k : ks)
      for (const auto& rho : or_none(has_rho, c.rho))
        for (const auto& kappa : or_none(has_k, c.kappa))
          for (const auto& alpha : or_none(has_alpha, c.alpha_p))
            grid.push_back({p, rho, kappa, alpha, k});
  return grid;
}

IrlsConfig irls_config(const ExperimentConfig& c, double p) {
  IrlsConfig ic;
  ic.p = p;
  ic.omega = c.omega;
  ic.eps_tilde = c.eps_tilde;
  ic.stop_eps = c.stop_eps;
  ic.max_outer_iters = c.max_outer_iters;
  return ic;
}

double grid_min_1d(const Vector& y, double p, double lo, double hi) {
  double best = std::numeric_limits<double>::infinity();
  const long steps = std::lround((hi - lo) / 1e-5);
  for (long i = 0; i <= steps; ++i) {
    const double x = lo + static_cast<double>(i) * 1e-5;
    best = std::min(best, std::pow(std::abs(x - y[0]), p) + std::pow(std::abs(x * x - y[1]), p));
  }
  return best;
}

void run_trial(const ExperimentConfig& c, const GridPoint& g, ExperimentRecord& rec) {
  const double p = *g.p;
  const IrlsConfig ic = irls_config(c, p);
  if (c.family == ExperimentFamily::Simple1D) {
    const MapPtr map = make_simple_1d();
    const Vector x0 = Vector::Constant(1, c.starts_1d[static_cast<std::size_t>(rec.trial)]);
    SolveReport rep;
    if (ic.omega > 0.0) {
      rep = multistart_convexified(*map, c.y_1d, ic, MultistartPlan::user_provided({x0})).best;
    } else {
      rep = run_nr_irls(*map, c.y_1d, ic, x0);
    }
    const auto [lo, hi] = std::minmax_element(c.starts_1d.begin(), c.starts_1d.end());
    const double fmin = grid_min_1d(c.y_1d, p, std::min(0.0, *lo), std::max(1.0, *hi));
    const double f = lp_norm_pow(residual(*map, rep.final_x, c.y_1d), p);
    rec.rel_error = (f - fmin) / std::max(fmin, 1e-300);
    rec.success = *rec.rel_error <= c.success_threshold;
    rec.outer_iters = static_cast<int>(rep.iterates.size()) - 1;
    rec.final_eps = rep.iterates.back().eps;
    return;
  }

  InstanceParams params;
  params.n = c.n;
  params.m = c.m;
  params.k = *g.k;
  params.kappa = *g.kappa;
  params.norm = c.norm;
  params.rho = g.rho.value_or(0.0);
  std::optional<NoiseSpec> noise;
  if (g.alpha_p) noise = NoiseSpec{*g.alpha_p, 1.0, true};
  const Family fam =
      c.family == ExperimentFamily::PerturbedRip ? Family::PerturbedRip : Family::PhaseRetrieval;
  const ProblemInstance inst = make_instance(fam, params, noise, rec.seed);

  MultistartPlan plan = MultistartPlan::random_in_ball(c.random_starts, c.start_radius,
                                                       derive_seed(rec.seed, 10));
  GreedyOptions opts;
  opts.x_star = inst.x_star;
  opts.success_threshold = c.success_threshold;
  opts.sign_invariant = fam == Family::PhaseRetrieval;
  const GreedyReport gr =
      greedy_sparse_recovery(*inst.map, inst.y, *g.k, ic, plan, derive_seed(rec.seed, 11), opts);
  rec.success = gr.success;
  rec.rel_error = gr.rel_error;
  rec.outer_iters = gr.final_outer_iters;
  rec.final_eps = gr.final_eps;
}

}  // namespace

std::string_view to_string(ExperimentFamily f) noexcept {
  switch (f) {
    case ExperimentFamily::Simple1D: return "Simple1D";
    case ExperimentFamily::PerturbedRip: return "PerturbedRip";
    case ExperimentFamily::PhaseRetrieval: return "PhaseRetrieval";
    case ExperimentFamily::ImpulsiveNoise: return "ImpulsiveNoise";
  }
  return "unknown";
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t trial_seed(std::uint64_t base_seed, const std::string& grid_key, int trial) {
  return base_seed ^ hash_string(grid_key + "|trial=" + std::to_string(trial));
}

void ExperimentConfig::validate() const {
  auto bad = [](const std::string& m) { raise(ErrorCode::InvalidConfig, m); };
  if (p.empty() || k.empty() || rho.empty() || kappa.empty() || alpha_p.empty()) bad("grids must be nonempty");
  for (double v : p)
    if (!(v >= 1.0 && v <= 2.0)) raise(ErrorCode::InvalidP, "grid p values must lie in [1, 2]");
  if (family == ExperimentFamily::Simple1D) {
    if (y_1d.size() != 2) bad("y must have two entries for Simple1D");
    if (starts_1d.empty()) bad("starts must be nonempty for Simple1D");
  } else {
    if (trials < 1) bad("trials must be >= 1");
    if (n < 1 || m < 1) bad("N and m must be positive");
    for (int v : k)
      if (v < 1 || v > n || v > m) bad("grid k values must lie in [1, min(N, m)]");
    for (double v : kappa)
      if (!(v > 0.0 && v <= 1.0)) bad("kappa must lie in (0, 1]");
    for (double v : rho)
      if (!(v >= 0.0)) bad("rho must be nonnegative");
    for (double v : alpha_p)
      if (!(v >= 0.0 && v <= 1.0)) bad("alpha_p must lie in [0, 1]");
    if (family == ExperimentFamily::PerturbedRip && m > n) bad("PerturbedRip needs m <= N");
    if (random_starts < 0) bad("random_starts must be >= 0");
    if (!(start_radius >= 0.0)) bad("start_radius must be nonnegative");
    if (!(norm > 0.0)) bad("norm must be positive");
  }
  if (!(success_threshold >= 0.0)) bad("success_threshold must be nonnegative");
  if (max_outer_iters < 1) bad("max_outer_iters must be >= 1");
  if (!(omega >= 0.0)) bad("omega must be nonnegative");
  if (!(eps_tilde > 0.0)) bad("eps_tilde must be positive");
  if (!(stop_eps >= 0.0)) bad("stop_eps must be nonnegative");
  if (workers < 1) bad("workers must be >= 1");
}

ExperimentConfig default_config(ExperimentFamily family, bool paper_scale) {
  ExperimentConfig c;
  c.family = family;
  c.n = paper_scale ? 80 : 20;
  c.m = paper_scale ? 30 : 12;
  switch (family) {
    case ExperimentFamily::Simple1D:
      c.p = {1.1, 1.3, 1.7, 1.9};
      c.y_1d = (Vector(2) << 0.0, 0.9).finished();
      c.starts_1d = {0.0, 0.25, 0.5, 0.75, 1.0};
      c.max_outer_iters = 50;
      c.success_threshold = 1e-3;
      break;
    case ExperimentFamily::PerturbedRip:
      c.k = {1, 2, 3};
      c.rho = {0.0, 0.5, 1.0, 3.0, 5.0, 10.0, 20.0};
      c.norm = 0.015;
      c.start_radius = 0.015;
      break;
    case ExperimentFamily::PhaseRetrieval:
      c.k = {1, 2, 3};
      c.omega = 100.0;
      c.norm = 1.0;
      c.start_radius = 1.0;
      break;
    case ExperimentFamily::ImpulsiveNoise:
      c.k = {1, 2, 3};
      c.kappa = {0.5};
      c.alpha_p = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
      c.omega = 100.0;
      c.norm = 1.0;
      c.start_radius = 1.0;
      c.success_threshold = 0.05;
      break;
  }
  return c;
}

ExperimentConfig parse_experiment_config(std::string_view text) {
  struct Entry {
    std::string value;
    int line;
  };
  std::map<std::string, Entry> entries;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(raw);
    if (s.empty() || s[0] == '#') continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) fail(line, "expected key=value, got '" + s + "'");
    const std::string key = trim(s.substr(0, eq));
    if (entries.count(key)) fail(line, "duplicate key '" + key + "'");
    entries[key] = {trim(s.substr(eq + 1)), line};
  }

  auto fam_it = entries.find("family");
  if (fam_it == entries.end()) fail(line, "missing key 'family'");
  const auto fam = family_from(fam_it->second.value);
  if (!fam) fail(fam_it->second.line, "unknown family '" + fam_it->second.value + "'");
  bool paper = false;
  if (auto it = entries.find("scale"); it != entries.end()) {
    if (it->second.value != "desk" && it->second.value != "paper") fail(it->second.line, "scale must be desk or paper");
    paper = it->second.value == "paper";
  }
  ExperimentConfig c = default_config(*fam, paper);

  for (const auto& [key, e] : entries) {
    const std::string& v = e.value;
    const int ln = e.line;
    if (key == "family" || key == "scale") continue;
    if (key == "p") c.p = real_list(v, ln);
    else if (key == "k") {
      c.k.clear();
      for (const std::string& t : split_list(v)) c.k.push_back(static_cast<int>(to_int(t, ln)));
      if (c.k.empty()) fail(ln, "empty list");
    } else if (key == "rho") c.rho = real_list(v, ln);
    else if (key == "kappa") c.kappa = real_list(v, ln);
    else if (key == "alpha_p") c.alpha_p = real_list(v, ln);
    else if (key == "N") c.n = to_int(v, ln);
    else if (key == "m") c.m = to_int(v, ln);
    else if (key == "trials") c.trials = static_cast<int>(to_int(v, ln));
    else if (key == "success_threshold") c.success_threshold = to_real(v, ln);
    else if (key == "max_outer_iters") c.max_outer_iters = static_cast<int>(to_int(v, ln));
    else if (key == "omega") c.omega = to_real(v, ln);
    else if (key == "eps_tilde") c.eps_tilde = to_real(v, ln);
    else if (key == "stop_eps") c.stop_eps = to_real(v, ln);
    else if (key == "base_seed") {
      const long long s = to_int(v, ln);
      if (s < 0) fail(ln, "base_seed must be nonnegative");
      c.base_seed = static_cast<std::uint64_t>(s);
    } else if (key == "norm") c.norm = to_real(v, ln);
    else if (key == "random_starts") c.random_starts = static_cast<int>(to_int(v, ln));
    else if (key == "start_radius") c.start_radius = to_real(v, ln);
    else if (key == "y") {
      const std::vector<double> yv = real_list(v, ln);
      c.y_1d = Eigen::Map<const Vector>(yv.data(), static_cast<Index>(yv.size()));
    } else if (key == "starts") c.starts_1d = real_list(v, ln);
    else if (key == "workers") c.workers = static_cast<int>(to_int(v, ln));
    else if (key == "timing") c.timing = to_bool(v, ln);
    else if (key == "output") c.output_path = v;
    else if (key == "summary_output") c.summary_path = v;
    else fail(ln, "unknown key '" + key + "'");
  }
  try {
    c.validate();
  } catch (const Error& err) {
    raise(ErrorCode::ParseError, std::string("invalid experiment: ") + err.what());
  }
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::ParseError, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str());
}

std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& config) {
  config.validate();
  const std::vector<GridPoint> grid = expand_grid(config);
  const int per_point = config.family == ExperimentFamily::Simple1D
                            ? static_cast<int>(config.starts_1d.size())
                            : config.trials;

  std::vector<ExperimentRecord> records;
  std::vector<GridPoint> points;
  for (const GridPoint& g : grid) {
    const std::string key = g.key(config.family);
    for (int t = 0; t < per_point; ++t) {
      ExperimentRecord r;
      r.family = std::string(to_string(config.family));
      r.p = g.p;
      r.k = g.k;
      r.rho = g.rho;
      r.kappa = g.kappa;
      r.alpha_p = g.alpha_p;
      r.trial = t;
      r.seed = trial_seed(config.base_seed, key, t);
      records.push_back(std::move(r));
      points.push_back(g);
    }
  }

  parallel_for(records.size(), config.workers, [&](std::size_t i) {
    ExperimentRecord& r = records[i];
    const auto t0 = std::chrono::steady_clock::now();
    try {
      run_trial(config, points[i], r);
    } catch (const Error& e) {
      r.success = false;
      r.rel_error.reset();
      r.final_eps.reset();
      r.error = std::string(nlirls::to_string(e.code()));
    }
    if (config.timing) {
      r.runtime_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    }
  });
  return records;
}

std::vector<SummaryRow> summarize(const std::vector<ExperimentRecord>& records) {
  std::vector<SummaryRow> rows;
  std::vector<int> rel_count, time_count;
  auto same_point = [](const SummaryRow& s, const ExperimentRecord& r) {
    return s.family == r.family && s.p == r.p && s.k == r.k && s.rho == r.rho && s.kappa == r.kappa &&
           s.alpha_p == r.alpha_p;
  };
  for (const ExperimentRecord& r : records) {
    auto it = std::find_if(rows.begin(), rows.end(), [&](const SummaryRow& s) { return same_point(s, r); });
    if (it == rows.end()) {
      SummaryRow s;
      s.family = r.family;
      s.p = r.p;
      s.k = r.k;
      s.rho = r.rho;
      s.kappa = r.kappa;
      s.alpha_p = r.alpha_p;
      rows.push_back(s);
      rel_count.push_back(0);
      time_count.push_back(0);
      it = rows.end() - 1;
    }
    const auto idx = static_cast<std::size_t>(it - rows.begin());
    ++it->trials;
    it->successes += r.success ? 1 : 0;
    if (r.rel_error) {
      it->mean_rel_error = it->mean_rel_error.value_or(0.0) + *r.rel_error;
      ++rel_count[idx];
    }
    if (r.runtime_ms) {
      it->mean_runtime_ms = it->mean_runtime_ms.value_or(0.0) + *r.runtime_ms;
      ++time_count[idx];
    }
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].recovery_rate = static_cast<double>(rows[i].successes) / rows[i].trials;
    if (rows[i].mean_rel_error) *rows[i].mean_rel_error /= rel_count[i];
    if (rows[i].mean_runtime_ms) *rows[i].mean_runtime_ms /= time_count[i];
  }
  return rows;
}

void write_records_csv(std::ostream& out, const std::vector<ExperimentRecord>& records) {
  out << "family,p,k,rho,kappa,alpha_p,trial,seed,success,rel_error,outer_iters,final_eps,runtime_ms,error\n";
  for (const ExperimentRecord& r : records) {
    out << r.family << ',' << opt_field(r.p) << ',' << opt_field(r.k) << ',' << opt_field(r.rho) << ','
        << opt_field(r.kappa) << ',' << opt_field(r.alpha_p) << ',' << r.trial << ',' << r.seed << ','
        << (r.success ? 1 : 0) << ',' << opt_field(r.rel_error) << ',' << r.outer_iters << ','
        << opt_field(r.final_eps) << ',' << opt_field(r.runtime_ms) << ',' << r.error << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "family,p,k,rho,kappa,alpha_p,trials,successes,recovery_rate,mean_rel_error,mean_runtime_ms\n";
  for (const SummaryRow& s : rows) {
    out << s.family << ',' << opt_field(s.p) << ',' << opt_field(s.k) << ',' << opt_field(s.rho) << ','
        << opt_field(s.kappa) << ',' << opt_field(s.alpha_p) << ',' << s.trials << ',' << s.successes
        << ',' << format_real(s.recovery_rate) << ',' << opt_field(s.mean_rel_error) << ','
        << opt_field(s.mean_runtime_ms) << '\n';
  }
}

}  // namespace nlirls::cli
