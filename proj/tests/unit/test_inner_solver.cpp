#include <gtest/gtest.h>

#include <cmath>

#include "nlirls/functional.hpp"
#include "nlirls/inner_solver.hpp"
#include "nlirls/problems.hpp"
#include "nlirls/rng.hpp"
#include "oracles.hpp"

using namespace nlirls;

namespace {

Vector v1(double a) { return Vector::Constant(1, a); }
Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }

void expect_monotone(const InnerResult& res) {
  for (std::size_t i = 1; i < res.objective_trace.size(); ++i) {
    EXPECT_LT(res.objective_trace[i], res.objective_trace[i - 1]);
  }
}

}  // namespace

TEST(GnNormalMatrix, LinearMapStepLandsOnLeastSquares) {
  Matrix m(4, 2);
  m << 1, 0, 1, 1, 1, 2, 1, 3;
  const LinearMap map(m);
  const Vector y = (Vector(4) << 1, 2, 2, 5).finished();
  const Vector x = v2(0.3, -0.7);
  const NormalSystem sys = gn_normal_matrix(map, x, y, Weights::ones(4), ProximalTerm::none());
  EXPECT_LE((sys.matrix - m.transpose() * m).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE((sys.rhs + m.transpose() * (m * x - y)).cwiseAbs().maxCoeff(), 1e-14);
  const Vector step = sys.matrix.ldlt().solve(sys.rhs);
  const Vector ls = nlirls::testing::weighted_ls(m, y, Vector::Ones(4));
  EXPECT_LE((x + step - ls).norm(), 1e-12);
}

TEST(GnNormalMatrix, ToyMapAtOne) {
  const Simple1DMap map;
  const NormalSystem sys = gn_normal_matrix(map, v1(1), v2(0, 0), Weights::ones(2), ProximalTerm::none());
  EXPECT_DOUBLE_EQ(sys.matrix(0, 0), 5.0);
  EXPECT_DOUBLE_EQ(sys.rhs[0], -3.0);
  EXPECT_DOUBLE_EQ(sys.rhs[0] / sys.matrix(0, 0), -0.6);
}

TEST(GnNormalMatrix, ProximalAtCenterShiftsDiagonalOnly) {
  Matrix m(3, 2);
  m << 1, 2, 3, 4, 5, 6;
  const LinearMap map(m);
  const Vector x = v2(1, -1);
  const Vector y = Vector::Zero(3);
  const NormalSystem plain = gn_normal_matrix(map, x, y, Weights::ones(3), ProximalTerm::none());
  const NormalSystem prox = gn_normal_matrix(map, x, y, Weights::ones(3), ProximalTerm{100.0, x});
  EXPECT_LE((prox.matrix - plain.matrix - 200.0 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(prox.rhs, plain.rhs);
}

TEST(GnNormalMatrix, Errors) {
  const LinearMap map(Matrix::Identity(2, 2));
  try {
    gn_normal_matrix(map, v2(0, 0), v2(0, 0), Weights::ones(2), ProximalTerm{1.0, v1(0)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(LmSolve, LinearFullRankMatchesDirectSolve) {
  Matrix m(5, 3);
  m << 2, 0, 1, 1, 1, 0, 0, 3, 1, 1, -1, 2, 0, 1, 1;
  const LinearMap map(m);
  const Vector y = (Vector(5) << 1, -2, 0.5, 3, 1).finished();
  const Vector direct = nlirls::testing::weighted_ls(m, y, Vector::Ones(5));
  const double f_direct = inner_objective(map, direct, y, Weights::ones(5), ProximalTerm::none());
  for (InnerMethod method : {InnerMethod::LevenbergMarquardt, InnerMethod::GaussNewton}) {
    InnerSolverOptions opts;
    opts.method = method;
    const InnerResult res = lm_solve(map, y, Weights::ones(5), Vector::Constant(3, 10.0),
                                     ProximalTerm::none(), opts);
    EXPECT_TRUE(res.converged);
    EXPECT_NEAR(inner_objective(map, res.x, y, Weights::ones(5), ProximalTerm::none()), f_direct, 1e-10);
    expect_monotone(res);
  }
}

TEST(LmSolve, ToyStationaryPointIsSqrtPointFour) {
  const Simple1DMap map;
  const Vector y = v2(0, 0.9);
  const InnerResult res = lm_solve(map, y, Weights::ones(2), v1(1), ProximalTerm::none(), {});
  EXPECT_TRUE(res.converged);
  EXPECT_NEAR(res.x[0], std::sqrt(0.4), 1e-6);
  const auto grid = nlirls::testing::grid_minimize(
      [](double x) { return x * x + (x * x - 0.9) * (x * x - 0.9); }, 0.0, 1.0, 1e-6);
  EXPECT_NEAR(res.x[0], grid.x, 2e-6);
  expect_monotone(res);
}

TEST(LmSolve, StationaryStartIsReturnedUnchanged) {
  const Simple1DMap map;
  const Vector y = v2(0.5, 0.25);
  const InnerResult res = lm_solve(map, y, Weights::ones(2), v1(0.5), ProximalTerm::none(), {});
  EXPECT_TRUE(res.converged);
  EXPECT_EQ(res.iterations, 0);
  EXPECT_EQ(res.x[0], 0.5);
  EXPECT_EQ(res.status, InnerStatus::GradientTolerance);
}

TEST(LmSolve, RandomLinearWeightedExactness) {
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const Index k = 1 + static_cast<Index>(rng.below(5));
    const Index m = std::max<Index>(k + static_cast<Index>(rng.below(6)), 3);
    Matrix a(m, k);
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < k; ++j) a(i, j) = rng.normal();
    const LinearMap map(a);
    const Vector y = rng.normal_vector(m);
    Vector w(m);
    for (Index i = 0; i < m; ++i) w[i] = 0.05 + 3.0 * rng.uniform();
    const Vector direct = nlirls::testing::weighted_ls(a, y, w);
    const InnerResult res = lm_solve(map, y, Weights(w), rng.normal_vector(k), ProximalTerm::none(), {});
    EXPECT_LE((res.x - direct).norm(), 1e-8 * std::max(1.0, direct.norm())) << "trial " << trial;
    expect_monotone(res);
  }
}

TEST(LmSolve, MonotoneOnNonlinearMaps) {
  Rng rng(4);
  const MapPtr pr = make_phase_retrieval(3, 8, 12);
  const MapPtr rip = restrict_to_support(make_perturbed_rip(8, 6, 5.0, rng.normal_vector(8), 13), {0, 2, 5, 7});
  for (const MapPtr& map : {pr, rip}) {
    for (int t = 0; t < 20; ++t) {
      const Vector y = rng.normal_vector(map->dim_out());
      const Vector x0 = rng.point_in_ball(map->dim_in(), 2.0);
      for (InnerMethod method : {InnerMethod::LevenbergMarquardt, InnerMethod::GaussNewton}) {
        InnerSolverOptions opts;
        opts.method = method;
        try {
          const InnerResult res = lm_solve(*map, y, Weights::ones(map->dim_out()), x0, ProximalTerm::none(), opts);
          expect_monotone(res);
          EXPECT_LE(inner_objective(*map, res.x, y, Weights::ones(map->dim_out()), ProximalTerm::none()),
                    res.objective_trace.front());
        } catch (const Error& e) {
          // Gauss-Newton without damping may meet a singular system; nothing else may throw.
          EXPECT_EQ(method, InnerMethod::GaussNewton);
          EXPECT_EQ(e.code(), ErrorCode::SingularNormalEquations);
        }
      }
    }
  }
}

TEST(LmSolve, ProximalCoercivity) {
  Rng rng(17);
  const MapPtr map = make_phase_retrieval(3, 7, 2);
  for (int t = 0; t < 20; ++t) {
    const Vector y = rng.normal_vector(7);
    const Vector u = rng.point_in_ball(3, 1.0);
    const Weights w = Weights::ones(7);
    const Matrix jac = map->jacobian(u);
    const double gram_norm = (jac.transpose() * jac).norm();
    const double omega = 1e4 * std::max(gram_norm, 1.0);
    const ProximalTerm prox{omega, u};
    const InnerResult res = lm_solve(*map, y, w, u, prox, {});
    const double g = inner_gradient(*map, u, y, w, ProximalTerm::none()).norm();
    EXPECT_LE((res.x - u).norm(), g / omega * (1.0 + 1e-6));
  }
}

TEST(LmSolve, GramDiagonalDampingAlsoConverges) {
  const Simple1DMap map;
  InnerSolverOptions opts;
  opts.damping = DampingKind::GramDiagonal;
  const InnerResult res = lm_solve(map, v2(0, 0.9), Weights::ones(2), v1(1), ProximalTerm::none(), opts);
  EXPECT_NEAR(res.x[0], std::sqrt(0.4), 1e-6);
}

TEST(LmSolve, RejectsNonFiniteStart) {
  const Simple1DMap map;
  try {
    lm_solve(map, v2(0, 0), Weights::ones(2), v1(std::nan("")), ProximalTerm::none(), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFiniteEvaluation);
  }
}
