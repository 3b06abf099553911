#include <doctest.h>

#include <cmath>
#include <random>

#include "clothservo/errors.hpp"
#include "clothservo/sparse.hpp"
#include "oracles.hpp"

using namespace clothservo;

namespace {

Eigen::MatrixXd random_atoms(int dim, int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  return Eigen::MatrixXd::NullaryExpr(dim, n, [&] { return g(rng); });
}

Eigen::VectorXd random_vec(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  return Eigen::VectorXd::NullaryExpr(dim, [&] { return g(rng); });
}

SparseSolverConfig tight(double alpha) {
  SparseSolverConfig c;
  c.alpha = alpha;
  c.tol = 1e-10;
  c.max_iters = 100000;
  return c;
}

FeedbackDictionary dictionary_from(const Eigen::MatrixXd& ds, const Eigen::MatrixXd& dr) {
  FeedbackDictionary d;
  d.spec.set = FeatureSet::Color;
  d.spec.color_bins = static_cast<int>(ds.rows() / 3);
  d.n_dof = static_cast<int>(dr.rows());
  for (Eigen::Index j = 0; j < ds.cols(); ++j) d.words.push_back({ds.col(j), dr.col(j)});
  return d;
}

}  // namespace

TEST_SUITE("sparse") {
  TEST_CASE("zero query gives zero code") {
    std::mt19937_64 rng(1);
    const SparseCoder coder(random_atoms(10, 6, rng));
    const SparseCode c = coder.solve(Eigen::VectorXd::Zero(10), tight(0.1));
    CHECK(c.beta.isZero(0.0));
    CHECK(c.objective == 0.0);
    CHECK(c.converged);
    CHECK(c.support_size() == 0);
  }

  TEST_CASE("single unit atom soft-thresholds") {
    Eigen::MatrixXd a(3, 1);
    a << 0.6, 0.0, 0.8;
    const SparseCode c = SparseCoder(a).solve(a.col(0), tight(0.5));
    CHECK(c.beta[0] == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(c.objective == doctest::Approx(0.25 * 0.25 + 0.5 * 0.75).epsilon(1e-12));
  }

  TEST_CASE("five atoms match the sign-pattern brute force") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 5; ++trial) {
      const Eigen::MatrixXd D = random_atoms(8, 5, rng);
      const Eigen::VectorXd q = random_vec(8, rng);
      const Eigen::VectorXd ref = oracle::lasso_brute_force(D, q, 0.3);
      const SparseCode c = SparseCoder(D).solve(q, tight(0.3));
      CHECK(c.objective == doctest::Approx(oracle::lasso_objective(D, q, ref, 0.3)).epsilon(1e-9));
      CHECK(std::abs(c.objective - oracle::lasso_objective(D, q, ref, 0.3)) < 1e-6);
      CHECK(lasso_objective(D, q, c.beta, 0.3) == doctest::Approx(c.objective).epsilon(1e-12));

      // reconstruct against the oracle's weighted label sum
      const Eigen::MatrixXd labels = random_atoms(6, 5, rng);
      const auto dict = dictionary_from(D.topRows(6), labels);
      SparseCode oc;
      oc.beta = ref;
      const Reconstruction rec = reconstruct(oc, dict);
      CHECK((rec.v_hat - labels * ref).cwiseAbs().maxCoeff() < 1e-9);
      CHECK((rec.s_hat - D.topRows(6) * ref).cwiseAbs().maxCoeff() < 1e-9);
    }
  }

  TEST_CASE("converged codes satisfy the KKT conditions") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      const int n = 2 + trial * 3;
      const int dim = 10 + trial * 12;
      const Eigen::MatrixXd D = random_atoms(dim, n, rng);
      const Eigen::VectorXd q = random_vec(dim, rng);
      SparseSolverConfig cfg;
      cfg.alpha = 0.05 * (1 + trial % 5);
      const SparseCode c = SparseCoder(D).solve(q, cfg);
      REQUIRE(c.converged);
      const double scale = std::max(1.0, (2.0 * D.transpose() * q).cwiseAbs().maxCoeff());
      CHECK(kkt_violation(D, q, c.beta, cfg.alpha) <= cfg.tol * scale);
      CHECK(c.kkt_violation == doctest::Approx(kkt_violation(D, q, c.beta, cfg.alpha)));
    }
  }

  TEST_CASE("l1 norm shrinks as alpha grows and vanishes past the threshold") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 5; ++trial) {
      const Eigen::MatrixXd D = random_atoms(30, 12, rng);
      const Eigen::VectorXd q = random_vec(30, rng);
      const SparseCoder coder(D);
      double prev = std::numeric_limits<double>::infinity();
      for (double alpha = 1e-3; alpha < 100.0; alpha *= 1.5) {
        const double l1 = coder.solve(q, tight(alpha)).beta.lpNorm<1>();
        CHECK(l1 <= prev + 1e-9);
        prev = l1;
      }
      const double threshold = 2.0 * (D.transpose() * q).cwiseAbs().maxCoeff();
      CHECK(coder.solve(q, tight(threshold * (1 + 1e-9))).beta.isZero(0.0));
      CHECK(!coder.solve(q, tight(threshold * 0.9)).beta.isZero(0.0));
    }
  }

  TEST_CASE("reconstruction selects and is linear") {
    std::mt19937_64 rng(5);
    const Eigen::MatrixXd ds = random_atoms(9, 4, rng);
    const Eigen::MatrixXd dr = random_atoms(6, 4, rng);
    const auto dict = dictionary_from(ds, dr);
    SparseCode one;
    one.beta = Eigen::VectorXd::Unit(4, 2);
    const auto r = reconstruct(one, dict);
    CHECK(r.s_hat == ds.col(2));
    CHECK(r.v_hat == dr.col(2));

    SparseCode zero;
    zero.beta = Eigen::VectorXd::Zero(4);
    CHECK(reconstruct(zero, dict).v_hat.isZero(0.0));

    SparseCode a, b, mix;
    a.beta = random_vec(4, rng);
    b.beta = random_vec(4, rng);
    mix.beta = 2.0 * a.beta - 0.5 * b.beta;
    const Eigen::VectorXd lhs = reconstruct(mix, dict).v_hat;
    const Eigen::VectorXd rhs = 2.0 * reconstruct(a, dict).v_hat - 0.5 * reconstruct(b, dict).v_hat;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);

    SparseCode wrong;
    wrong.beta = Eigen::VectorXd::Zero(3);
    CHECK_THROWS_AS(reconstruct(wrong, dict), ContractError);
  }

  TEST_CASE("solver contract checks") {
    std::mt19937_64 rng(6);
    const auto dict = dictionary_from(random_atoms(6, 3, rng), random_atoms(6, 3, rng));
    SparseSolverConfig cfg;
    CHECK_THROWS_AS(solve(FeatureVector{Eigen::VectorXd::Zero(6), "other-layout"}, dict, cfg), LayoutMismatch);
    const auto ok = solve(FeatureVector{Eigen::VectorXd::Ones(6), dict.layout_id()}, dict, cfg);
    CHECK(ok.beta.size() == 3);

    cfg.alpha = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
    cfg = SparseSolverConfig{};
    cfg.tol = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
  }

  TEST_CASE("an exhausted iteration budget is flagged, not fatal") {
    std::mt19937_64 rng(7);
    // Highly correlated atoms converge slowly under coordinate descent.
    Eigen::MatrixXd D = random_atoms(40, 1, rng).replicate(1, 20) + 1e-3 * random_atoms(40, 20, rng);
    SparseSolverConfig cfg = tight(1e-4);
    cfg.max_iters = 2;
    const SparseCode c = SparseCoder(D).solve(random_vec(40, rng), cfg);
    CHECK(!c.converged);
    CHECK(c.beta.allFinite());
    CHECK(c.iterations == 2);
  }
}
