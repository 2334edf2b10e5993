#include <gtest/gtest.h>

#include <cmath>

#include "nlirls/functional.hpp"
#include "nlirls/inner_solver.hpp"
#include "nlirls/irls.hpp"
#include "nlirls/problems.hpp"
#include "nlirls/rng.hpp"
#include "oracles.hpp"

using namespace nlirls;

namespace {

Vector v1(double a) { return Vector::Constant(1, a); }
Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }

void expect_trace_invariants(const SolveReport& rep) {
  ASSERT_FALSE(rep.iterates.empty());
  for (std::size_t i = 1; i < rep.iterates.size(); ++i) {
    const IrlsState& a = rep.iterates[i - 1];
    const IrlsState& b = rep.iterates[i];
    EXPECT_LE(b.eps, a.eps);
    if (b.eps > 0.0) EXPECT_LE(b.j_value, a.j_value + 1e-12 * (1.0 + std::abs(a.j_value))) << "step " << i;
  }
}

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no exception";
  return ErrorCode::ParseError;
}

}  // namespace

TEST(RunNrIrls, ExactDataGivesEpsZero) {
  const Simple1DMap map;
  const SolveReport rep = run_nr_irls(map, v2(0.5, 0.25), {}, v1(0.5));
  EXPECT_EQ(rep.termination, Termination::EpsZero);
  EXPECT_EQ(rep.final_x[0], 0.5);
  EXPECT_EQ(rep.final_lp_residual, 0.0);
}

TEST(RunNrIrls, L1MedianOfThreeSamples) {
  const LinearMap map(Matrix::Ones(3, 1));
  IrlsConfig cfg;
  cfg.p = 1.0;
  const SolveReport rep = run_nr_irls(map, (Vector(3) << 0, 0, 10).finished(), cfg, v1(5));
  EXPECT_LE(std::abs(rep.final_x[0]), 0.01);
  expect_trace_invariants(rep);
}

TEST(RunNrIrls, ToyCriticalPointOfFinalFEps) {
  const Simple1DMap map;
  const Vector y = v2(0, 0.9);
  IrlsConfig cfg;
  cfg.p = 1.1;
  const SolveReport rep = run_nr_irls(map, y, cfg, v1(1));
  expect_trace_invariants(rep);
  const double eps = rep.iterates.back().eps;
  EXPECT_LE(grad_f_eps(map, rep.final_x, y, eps, cfg.p).norm(), 1e-4);
  // The grid certifies a local minimum of f_eps within a small window.
  const double x = rep.final_x[0];
  const auto local = nlirls::testing::grid_minimize(
      [&](double t) { return eval_f_eps(map, v1(t), y, eps, cfg.p); }, std::max(0.0, x - 0.05),
      std::min(1.0, x + 0.05), 1e-5);
  EXPECT_LE(eval_f_eps(map, rep.final_x, y, eps, cfg.p), local.value + 1e-8);
}

TEST(RunNrIrls, InitialStateAndErrors) {
  const Simple1DMap map;
  const SolveReport rep = run_nr_irls(map, v2(0, 0.9), {}, v1(1));
  const IrlsState& s0 = rep.iterates.front();
  EXPECT_EQ(s0.n, 0);
  EXPECT_EQ(s0.eps, 1.0);
  EXPECT_EQ(s0.w.values(), Vector::Ones(2));
  IrlsConfig bad;
  bad.omega = 1.0;
  EXPECT_EQ(code_of([&] { run_nr_irls(map, v2(0, 0.9), bad, v1(1)); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([&] { run_nr_irls(map, v2(0, 0.9), {}, v2(1, 1)); }), ErrorCode::DimensionMismatch);
  const LinearMap wide(Matrix::Ones(1, 2));
  EXPECT_EQ(code_of([&] { run_nr_irls(wide, v1(0), {}, v2(0, 0)); }), ErrorCode::InvalidDims);
}

TEST(RunNrIrls, StopEpsEndsEarly) {
  const LinearMap map(Matrix::Ones(3, 1));
  IrlsConfig cfg;
  cfg.stop_eps = 0.5;
  const SolveReport rep = run_nr_irls(map, (Vector(3) << 0, 1, 10).finished(), cfg, v1(3));
  EXPECT_EQ(rep.termination, Termination::EpsBelowFloor);
  EXPECT_LE(rep.iterates.back().eps, 0.5);
}

TEST(RunNrIrls, MaxItersIsRespected) {
  const Simple1DMap map;
  IrlsConfig cfg;
  cfg.p = 1.1;
  cfg.max_outer_iters = 3;
  const SolveReport rep = run_nr_irls(map, v2(0, 0.9), cfg, v1(1));
  EXPECT_EQ(rep.termination, Termination::MaxIters);
  EXPECT_EQ(rep.iterates.back().n, 3);
}

TEST(RunConvexified, HugeOmegaBarelyMoves) {
  const MapPtr map = make_phase_retrieval(2, 6, 31);
  Rng rng(1);
  const Vector y = rng.normal_vector(6);
  IrlsConfig cfg;
  cfg.omega = 1e8;
  cfg.max_outer_iters = 2;
  const Vector x1 = v2(0.4, -0.3);
  const SolveReport rep = run_convexified(*map, y, cfg, x1);
  ASSERT_GE(rep.iterates.size(), 2u);
  const IrlsState& s1 = rep.iterates[0];
  const Vector x2 = rep.iterates[1].x;
  const double g = inner_gradient(*map, x1, y, s1.w, ProximalTerm::none()).norm();
  EXPECT_LE((x2 - x1).norm(), g / (2.0 * 1e8) * (1.0 + 1e-6));
}

TEST(RunConvexified, ExactDataGivesEpsZero) {
  const Simple1DMap map;
  IrlsConfig cfg;
  cfg.omega = 1.0;
  const SolveReport rep = run_convexified(map, v2(0.3, 0.09), cfg, v1(0.3));
  EXPECT_EQ(rep.termination, Termination::EpsZero);
  EXPECT_EQ(rep.final_x[0], 0.3);
}

TEST(RunConvexified, PhaseRetrievalCriticalPoint) {
  const MapPtr map = make_phase_retrieval(2, 6, 5);
  Rng rng(6);
  const Vector x_true = v2(0.8, -0.6);
  Vector y = map->eval(x_true) + 0.05 * rng.normal_vector(6);
  IrlsConfig cfg;
  cfg.omega = 100.0;
  cfg.p = 1.0;
  cfg.eps_tilde = 1e-3;
  const SolveReport rep = run_convexified(*map, y, cfg, v2(0.5, -0.5));
  expect_trace_invariants(rep);
  const double eps = rep.iterates.back().eps;
  ASSERT_GT(eps, 0.0);
  const double f = eval_f_eps(*map, rep.final_x, y, eps, cfg.p);
  EXPECT_LE(grad_f_eps(*map, rep.final_x, y, eps, cfg.p).norm(), 1e-3 * (1.0 + f));
}

TEST(RunConvexified, RequiresPositiveOmega) {
  const Simple1DMap map;
  EXPECT_EQ(code_of([&] { run_convexified(map, v2(0, 0.9), {}, v1(1)); }), ErrorCode::InvalidConfig);
}

TEST(MultistartPlan, MaterializeIsDeterministic) {
  const MultistartPlan plan = MultistartPlan::random_in_ball(4, 0.5, 77);
  const auto a = plan.materialize(3);
  const auto b = plan.materialize(3);
  ASSERT_EQ(a.size(), 4u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i], b[i]);
    EXPECT_LE(a[i].norm(), 0.5);
  }
  EXPECT_NE(a[0], a[1]);
  EXPECT_EQ(code_of([] { MultistartPlan::user_provided({}).materialize(1); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([] { MultistartPlan::user_provided({v2(0, 0)}).materialize(1); }),
            ErrorCode::DimensionMismatch);
}

TEST(Multistart, SingleStartEqualsL2SolveThenDriver) {
  const MapPtr map = make_phase_retrieval(2, 6, 8);
  const Vector y = map->eval(v2(0.3, 0.9)) + 0.02 * Rng(2).normal_vector(6);
  IrlsConfig cfg;
  cfg.omega = 100.0;
  const Vector start = v2(0.1, 0.2);
  const MultistartResult ms = multistart_convexified(*map, y, cfg, MultistartPlan::user_provided({start}));
  const InnerResult l2 = lm_solve(*map, y, Weights::ones(6), start, ProximalTerm::none(), cfg.inner);
  const SolveReport direct = run_convexified(*map, y, cfg, l2.x);
  EXPECT_EQ(ms.branches.size(), 1u);
  EXPECT_EQ(ms.branches[0].l2_point, l2.x);
  EXPECT_EQ(ms.best.final_x, direct.final_x);
  EXPECT_EQ(ms.best.iterates.size(), direct.iterates.size());
}

TEST(Multistart, ToyBestIsMinimumAndNearGlobal) {
  const Simple1DMap map;
  const Vector y = v2(0, 0.9);
  IrlsConfig cfg;
  cfg.p = 1.1;
  std::vector<Vector> starts;
  for (double s : {0.0, 0.25, 0.5, 0.75, 1.0}) starts.push_back(v1(s));
  const MultistartResult ms = multistart_convexified(map, y, cfg, MultistartPlan::user_provided(starts));
  ASSERT_EQ(ms.branches.size(), 5u);
  for (const MultistartBranch& b : ms.branches) {
    ASSERT_TRUE(b.ok);
    EXPECT_LE(ms.best.final_lp_residual, b.report.final_lp_residual);
  }
  const auto grid = nlirls::testing::grid_minimize(
      [](double x) { return nlirls::testing::toy_lp_pow(x, 0.0, 0.9, 1.1); }, 0.0, 1.0, 1e-5);
  EXPECT_LE(std::pow(ms.best.final_lp_residual, 1.1) - grid.value, 1e-3);
}

TEST(Multistart, ParallelMatchesSequential) {
  const MapPtr map = make_phase_retrieval(3, 9, 41);
  const Vector y = map->eval((Vector(3) << 0.5, -0.2, 0.7).finished());
  IrlsConfig cfg;
  cfg.omega = 100.0;
  MultistartPlan plan = MultistartPlan::random_in_ball(6, 1.0, 3);
  const MultistartResult seq = multistart_convexified(*map, y, cfg, plan);
  plan.max_workers = 4;
  const MultistartResult par = multistart_convexified(*map, y, cfg, plan);
  EXPECT_EQ(seq.best_index, par.best_index);
  EXPECT_EQ(seq.best.final_x, par.best.final_x);
  for (std::size_t i = 0; i < seq.branches.size(); ++i) {
    EXPECT_EQ(seq.branches[i].report.final_x, par.branches[i].report.final_x);
  }
}

TEST(Multistart, AllStartsFailed) {
  const Simple1DMap map;
  IrlsConfig cfg;
  const std::vector<Vector> starts = {v1(1e200), v1(-1e200)};
  EXPECT_EQ(code_of([&] { multistart_convexified(map, v2(0, 0.9), cfg, MultistartPlan::user_provided(starts)); }),
            ErrorCode::AllStartsFailed);
}
