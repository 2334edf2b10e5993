#include "nlirls/greedy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "nlirls/functional.hpp"
#include "nlirls/problems.hpp"
#include "nlirls/rng.hpp"

namespace nlirls {

namespace {

// Coordinate probe offsets, relative to max(1, ||x||).
constexpr double kProbeSteps[] = {0.01, 0.1, 1.0, 10.0};

struct Scored {
  Index j;
  double score;
};

std::vector<Scored> rank_candidates(const ResidualMap& map, const Vector& y, const Vector& x,
                                    const std::set<Index>& excluded, double eps, double p,
                                    double current) {
  const Vector g = grad_f_eps(map, x, y, eps, p);
  std::vector<Scored> out;
  double gmax = 0.0;
  for (Index j = 0; j < x.size(); ++j) {
    if (excluded.count(j)) continue;
    out.push_back({j, std::abs(g[j])});
    gmax = std::max(gmax, std::abs(g[j]));
  }
  if (gmax <= 1e-14 * (1.0 + std::abs(current))) {
    // Stationary for every free coordinate (e.g. quadratic maps at 0): rank by
    // the best residual decrease along +-t e_j instead.
    const double scale = std::max(1.0, x.norm());
    for (Scored& s : out) {
      double best = current;
      for (double t : kProbeSteps) {
        for (double sign : {1.0, -1.0}) {
          Vector z = x;
          z[s.j] += sign * t * scale;
          const Vector r = map.eval(z) - y;
          if (r.allFinite()) best = std::min(best, lp_norm(r, p));
        }
      }
      s.score = current - best;
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Scored& a, const Scored& b) { return a.score > b.score; });
  return out;
}

}  // namespace

double relative_error(const Vector& estimate, const Vector& x_star, bool sign_invariant) {
  if (estimate.size() != x_star.size()) raise(ErrorCode::DimensionMismatch, "estimate and x_star sizes differ");
  const double denom = x_star.norm();
  if (!(denom > 0.0)) raise(ErrorCode::InvalidConfig, "x_star must be nonzero");
  double err = (estimate - x_star).norm();
  if (sign_invariant) err = std::min(err, (estimate + x_star).norm());
  return err / denom;
}

GreedyReport greedy_sparse_recovery(const ResidualMap& map, const Vector& y, int max_sparsity,
                                    const IrlsConfig& config, const MultistartPlan& plan,
                                    std::uint64_t seed, const GreedyOptions& options) {
  config.validate();
  const Index n = map.dim_in();
  if (max_sparsity < 1 || max_sparsity > n) {
    raise(ErrorCode::InvalidDims, "max sparsity must lie in [1, N], got " + std::to_string(max_sparsity));
  }
  if (y.size() != map.dim_out()) raise(ErrorCode::DimensionMismatch, "data size differs from map output");
  if (!map.has_jacobian()) raise(ErrorCode::JacobianUnavailable, "greedy scoring needs a Jacobian");
  if (options.x_star && options.x_star->size() != n) {
    raise(ErrorCode::DimensionMismatch, "x_star size differs from map input");
  }
  if (options.max_candidates < 1) raise(ErrorCode::InvalidConfig, "max_candidates must be positive");

  const auto k_max = static_cast<std::size_t>(max_sparsity);
  const int budget = 3 * max_sparsity;
  const double p = config.p;
  const double score_eps = std::max(config.eps_tilde, config.eps_hard_floor);
  const double stop_level = options.residual_tol * (1.0 + lp_norm(y, p));
  // Non-owning handle; the restricted maps never outlive this call.
  const MapPtr parent(&map, [](const ResidualMap*) {});

  GreedyReport rep;
  rep.estimate = Vector::Zero(n);
  std::vector<Index> support;
  double current = lp_norm(residual(map, rep.estimate, y), p);
  std::set<Index> tabu;

  for (int step = 0; step < budget; ++step) {
    if (current <= stop_level) break;
    std::set<Index> excluded(tabu);
    excluded.insert(support.begin(), support.end());
    if (excluded.size() >= static_cast<std::size_t>(n)) break;
    const std::vector<Scored> ranked =
        rank_candidates(map, y, rep.estimate, excluded, score_eps, p, current);
    ++rep.steps_used;

    bool accepted = false;
    const std::size_t tries = std::min(ranked.size(), static_cast<std::size_t>(options.max_candidates));
    for (std::size_t c = 0; c < tries && !accepted; ++c) {
      const Index j = ranked[c].j;
      std::vector<Index> trial = support;
      if (trial.size() >= k_max) {
        const auto weakest = std::min_element(trial.begin(), trial.end(), [&](Index a, Index b) {
          return std::abs(rep.estimate[a]) < std::abs(rep.estimate[b]);
        });
        trial.erase(weakest);
      }
      trial.push_back(j);
      std::sort(trial.begin(), trial.end());
      if (static_cast<Index>(trial.size()) > map.dim_out()) {
        tabu.insert(j);
        continue;
      }

      const auto sub = std::make_shared<RestrictedMap>(parent, trial);
      Vector warm(static_cast<Index>(trial.size()));
      for (std::size_t i = 0; i < trial.size(); ++i) warm[static_cast<Index>(i)] = rep.estimate[trial[i]];

      MultistartPlan sub_plan = plan;
      sub_plan.seed = derive_seed(derive_seed(seed, static_cast<std::uint64_t>(step)),
                                  static_cast<std::uint64_t>(j));
      std::vector<Vector> starts{warm};
      if (plan.sampler == MultistartPlan::Sampler::RandomInBall) {
        for (Vector& s : sub_plan.materialize(sub->dim_in())) starts.push_back(warm + s);
      } else {
        for (const Vector& s : plan.start_points) {
          if (s.size() == sub->dim_in()) starts.push_back(s);
        }
      }
      sub_plan.sampler = MultistartPlan::Sampler::UserProvided;
      sub_plan.start_points = std::move(starts);

      try {
        const MultistartResult res = multistart_convexified(*sub, y, config, sub_plan);
        if (res.best.final_lp_residual < current) {
          rep.estimate = sub->pad(res.best.final_x);
          support = trial;
          current = res.best.final_lp_residual;
          rep.final_outer_iters = static_cast<int>(res.best.iterates.size()) - 1;
          rep.final_eps = res.best.iterates.back().eps;
          accepted = true;
          tabu.clear();
        } else {
          tabu.insert(j);
        }
      } catch (const Error&) {
        tabu.insert(j);
      }
    }
    rep.support_trace.push_back(support);
    rep.per_step_residuals.push_back(current);
    if (!accepted && ranked.size() <= static_cast<std::size_t>(options.max_candidates)) {
      // Every remaining candidate was tried without progress.
      break;
    }
  }

  if (options.x_star) {
    rep.rel_error = relative_error(rep.estimate, *options.x_star, options.sign_invariant);
    rep.success = rep.rel_error <= options.success_threshold;
  }
  return rep;
}

}  // namespace nlirls
