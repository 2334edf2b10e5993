#include <benchmark/benchmark.h>

#include "nlirls/greedy.hpp"
#include "nlirls/inner_solver.hpp"
#include "nlirls/irls.hpp"
#include "nlirls/problems.hpp"
#include "nlirls/rng.hpp"

using namespace nlirls;

namespace {

// Weighted LS solve on a restricted phase-retrieval map; range(0) = support size.
void BM_LmSolve(benchmark::State& state) {
  InstanceParams params;
  params.k = state.range(0);
  const ProblemInstance inst = make_instance(Family::PhaseRetrieval, params, std::nullopt, 1);
  const MapPtr map = inst.restricted_map();
  const Vector x0 = inst.restricted_x_star() + Rng(2).point_in_ball(params.k, 0.3);
  const Weights w = Weights::ones(map->dim_out());
  for (auto _ : state) {
    InnerResult res = lm_solve(*map, inst.y, w, x0, ProximalTerm::none(), {});
    benchmark::DoNotOptimize(res.x.data());
  }
}
BENCHMARK(BM_LmSolve)->Arg(1)->Arg(3)->Arg(5);

void BM_NrIrlsLinear(benchmark::State& state) {
  const Index m = state.range(0);
  Rng rng(3);
  Matrix a(m, 4);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < 4; ++j) a(i, j) = rng.normal();
  const LinearMap map(a);
  const Vector y = rng.normal_vector(m);
  IrlsConfig cfg;
  cfg.p = 1.0;
  for (auto _ : state) {
    SolveReport rep = run_nr_irls(map, y, cfg, Vector::Zero(4));
    benchmark::DoNotOptimize(rep.final_lp_residual);
  }
}
BENCHMARK(BM_NrIrlsLinear)->Arg(12)->Arg(30)->Arg(100);

void BM_ConvexifiedPhaseRetrieval(benchmark::State& state) {
  InstanceParams params;
  params.k = 3;
  const ProblemInstance inst = make_instance(Family::PhaseRetrieval, params, NoiseSpec{0.3}, 4);
  const MapPtr map = inst.restricted_map();
  IrlsConfig cfg;
  cfg.omega = 100.0;
  cfg.eps_tilde = 1e-3;
  const Vector x0 = inst.restricted_x_star() + Rng(5).point_in_ball(3, 0.5);
  for (auto _ : state) {
    SolveReport rep = run_convexified(*map, inst.y, cfg, x0);
    benchmark::DoNotOptimize(rep.final_lp_residual);
  }
}
BENCHMARK(BM_ConvexifiedPhaseRetrieval);

// One greedy recovery at desk scale (N=20, m=12); range(0) = sparsity.
void BM_GreedyPerturbedRip(benchmark::State& state) {
  InstanceParams params;
  params.k = state.range(0);
  params.rho = 5.0;
  const ProblemInstance inst = make_instance(Family::PerturbedRip, params, std::nullopt, 6);
  const MultistartPlan plan = MultistartPlan::random_in_ball(2, 0.015, 7);
  for (auto _ : state) {
    GreedyReport rep = greedy_sparse_recovery(*inst.map, inst.y, static_cast<int>(params.k), {}, plan, 8);
    benchmark::DoNotOptimize(rep.estimate.data());
  }
}
BENCHMARK(BM_GreedyPerturbedRip)->Arg(1)->Arg(3)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
