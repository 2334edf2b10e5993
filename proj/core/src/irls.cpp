#include "nlirls/irls.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "nlirls/functional.hpp"
#include "nlirls/parallel.hpp"
#include "nlirls/rng.hpp"

namespace nlirls {

namespace {

constexpr int kStallWindow = 5;
constexpr double kStallRelDecrease = 1e-15;

void check_problem(const ResidualMap& map, const Vector& y, const Vector& x_start) {
  require_overdetermined(map);
  if (!map.has_jacobian()) raise(ErrorCode::JacobianUnavailable, "IRLS needs a Jacobian");
  if (x_start.size() != map.dim_in()) {
    raise(ErrorCode::DimensionMismatch, "start point has size " + std::to_string(x_start.size()) +
                                            ", expected " + std::to_string(map.dim_in()));
  }
  if (y.size() != map.dim_out()) {
    raise(ErrorCode::DimensionMismatch, "data has size " + std::to_string(y.size()) +
                                            ", expected " + std::to_string(map.dim_out()));
  }
}

bool below_floor(double eps, const IrlsConfig& config) {
  return eps <= config.stop_eps || eps <= config.eps_hard_floor;
}

// Shared outer loop. rep.iterates holds the initial state on entry.
void outer_loop(const ResidualMap& map, const Vector& y, const IrlsConfig& config,
                SolveReport& rep) {
  int stall = 0;
  for (int iter = 0;; ++iter) {
    if (iter >= config.max_outer_iters) {
      rep.termination = Termination::MaxIters;
      return;
    }
    const IrlsState& cur = rep.iterates.back();
    const ProximalTerm prox = config.omega > 0.0
                                  ? ProximalTerm{config.omega / config.p, cur.x}
                                  : ProximalTerm::none();
    InnerResult inner;
    try {
      inner = lm_solve(map, y, cur.w, cur.x, prox, config.inner);
    } catch (const Error&) {
      if (iter == 0) throw;
      rep.termination = Termination::InnerSolverFailure;
      return;
    }

    const Vector r = residual(map, inner.x, y);
    const EpsilonUpdate upd = update_epsilon(r, cur.eps, config.eps_tilde);
    IrlsState next;
    next.n = cur.n + 1;
    next.x = inner.x;
    next.eps = upd.next_eps;
    if (next.eps == 0.0) {
      // Zero residual: the weights would be infinite, keep the previous ones.
      next.w = cur.w;
      next.j_value = f_eps_from_residual(r, 0.0, config.p);
      rep.iterates.push_back(std::move(next));
      rep.termination = Termination::EpsZero;
      return;
    }
    next.w = optimal_weights(r, next.eps, config.p);
    next.j_value = j_from_residual(r, next.w, next.eps, config.p);
    const double decrease = cur.j_value - next.j_value;
    const bool eps_same = next.eps == cur.eps;
    const double j_scale = std::max(1.0, std::abs(next.j_value));
    rep.iterates.push_back(std::move(next));
    const IrlsState& last = rep.iterates.back();

    if (below_floor(last.eps, config)) {
      rep.termination = Termination::EpsBelowFloor;
      return;
    }
    stall = (eps_same && decrease < kStallRelDecrease * j_scale) ? stall + 1 : 0;
    if (stall >= kStallWindow) {
      rep.termination = Termination::Stalled;
      return;
    }
  }
}

void finish(const ResidualMap& map, const Vector& y, const IrlsConfig& config, SolveReport& rep,
            std::chrono::steady_clock::time_point t0) {
  rep.final_x = rep.iterates.back().x;
  rep.final_lp_residual = lp_norm(residual(map, rep.final_x, y), config.p);
  rep.wall_time = std::chrono::steady_clock::now() - t0;
}

}  // namespace

MultistartPlan MultistartPlan::user_provided(std::vector<Vector> points) {
  MultistartPlan plan;
  plan.sampler = Sampler::UserProvided;
  plan.num_starts = static_cast<int>(points.size());
  plan.start_points = std::move(points);
  return plan;
}

MultistartPlan MultistartPlan::random_in_ball(int num_starts, double radius, std::uint64_t seed) {
  MultistartPlan plan;
  plan.sampler = Sampler::RandomInBall;
  plan.num_starts = num_starts;
  plan.radius = radius;
  plan.seed = seed;
  return plan;
}

std::vector<Vector> MultistartPlan::materialize(Index dim) const {
  if (sampler == Sampler::UserProvided) {
    if (start_points.empty()) raise(ErrorCode::InvalidConfig, "multistart plan has no start points");
    for (const Vector& s : start_points) {
      if (s.size() != dim) {
        raise(ErrorCode::DimensionMismatch, "start point has size " + std::to_string(s.size()) +
                                                ", expected " + std::to_string(dim));
      }
    }
    return start_points;
  }
  if (num_starts < 1) raise(ErrorCode::InvalidConfig, "num_starts must be positive");
  if (!(radius >= 0.0)) raise(ErrorCode::InvalidConfig, "radius must be nonnegative");
  std::vector<Vector> points;
  points.reserve(static_cast<std::size_t>(num_starts));
  for (int l = 0; l < num_starts; ++l) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(l)));
    points.push_back(rng.point_in_ball(dim, radius));
  }
  return points;
}

SolveReport run_nr_irls(const ResidualMap& map, const Vector& y, const IrlsConfig& config,
                        const Vector& x_start) {
  config.validate();
  if (config.omega != 0.0) raise(ErrorCode::InvalidConfig, "run_nr_irls requires omega = 0");
  check_problem(map, y, x_start);
  const auto t0 = std::chrono::steady_clock::now();

  SolveReport rep;
  IrlsState s0;
  s0.n = 0;
  s0.x = x_start;
  s0.w = Weights::ones(map.dim_out());
  s0.eps = 1.0;
  s0.j_value = j_from_residual(residual(map, x_start, y), s0.w, s0.eps, config.p);
  rep.iterates.push_back(std::move(s0));

  outer_loop(map, y, config, rep);
  finish(map, y, config, rep, t0);
  return rep;
}

SolveReport run_convexified(const ResidualMap& map, const Vector& y, const IrlsConfig& config,
                            const Vector& x_start) {
  config.validate();
  if (!(config.omega > 0.0)) raise(ErrorCode::InvalidConfig, "run_convexified requires omega > 0");
  check_problem(map, y, x_start);
  const auto t0 = std::chrono::steady_clock::now();

  SolveReport rep;
  const Vector r = residual(map, x_start, y);
  IrlsState s1;
  s1.n = 1;
  s1.x = x_start;
  s1.eps = update_epsilon(r, 1.0, config.eps_tilde).next_eps;
  if (s1.eps == 0.0) {
    s1.w = Weights::ones(map.dim_out());
    s1.j_value = 0.0;
    rep.iterates.push_back(std::move(s1));
    rep.termination = Termination::EpsZero;
    finish(map, y, config, rep, t0);
    return rep;
  }
  s1.w = optimal_weights(r, s1.eps, config.p);
  s1.j_value = j_from_residual(r, s1.w, s1.eps, config.p);
  rep.iterates.push_back(std::move(s1));

  if (below_floor(rep.iterates.back().eps, config)) {
    rep.termination = Termination::EpsBelowFloor;
  } else {
    outer_loop(map, y, config, rep);
  }
  finish(map, y, config, rep, t0);
  return rep;
}

MultistartResult multistart_convexified(const ResidualMap& map, const Vector& y,
                                        const IrlsConfig& config, const MultistartPlan& plan) {
  config.validate();
  const std::vector<Vector> starts = plan.materialize(map.dim_in());

  MultistartResult out;
  out.branches.resize(starts.size());
  parallel_for(starts.size(), plan.max_workers, [&](std::size_t l) {
    MultistartBranch& b = out.branches[l];
    b.start = starts[l];
    try {
      check_problem(map, y, b.start);
      const InnerResult l2 =
          lm_solve(map, y, Weights::ones(map.dim_out()), b.start, ProximalTerm::none(), config.inner);
      b.l2_point = l2.x;
      b.report = config.omega > 0.0 ? run_convexified(map, y, config, b.l2_point)
                                    : run_nr_irls(map, y, config, b.l2_point);
      b.ok = true;
    } catch (const Error& e) {
      b.ok = false;
      b.error = e.what();
    }
  });

  double best = std::numeric_limits<double>::infinity();
  bool found = false;
  for (std::size_t l = 0; l < out.branches.size(); ++l) {
    const MultistartBranch& b = out.branches[l];
    if (!b.ok) continue;
    if (!found || b.report.final_lp_residual < best) {
      best = b.report.final_lp_residual;
      out.best_index = l;
      found = true;
    }
  }
  if (!found) {
    raise(ErrorCode::AllStartsFailed,
          "all " + std::to_string(starts.size()) + " starts failed; first: " + out.branches[0].error);
  }
  out.best = out.branches[out.best_index].report;
  return out;
}

}  // namespace nlirls
