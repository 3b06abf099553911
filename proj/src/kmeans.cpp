#include "clothservo/kmeans.hpp"

#include <Eigen/Dense>
#include <limits>
#include <random>

#include "clothservo/errors.hpp"

namespace clothservo {

namespace {

// Squared distances between every point (rows) and every center (cols).
Eigen::MatrixXd pairwise_sq(const Eigen::MatrixXd& points, const Eigen::VectorXd& point_sq,
                            const Eigen::MatrixXd& centers) {
  Eigen::MatrixXd d = -2.0 * points.transpose() * centers;
  d.colwise() += point_sq;
  d.rowwise() += centers.colwise().squaredNorm();
  return d.cwiseMax(0.0);
}

}  // namespace

Eigen::Index nearest_column(const Eigen::MatrixXd& points, const Eigen::VectorXd& target) {
  Eigen::Index best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < points.cols(); ++j) {
    const double d = (points.col(j) - target).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                    const KMeansOptions& options) {
  const Eigen::Index n = points.cols();
  if (k < 1) throw ParameterError("k-means needs k >= 1");
  if (k > n) throw ParameterError("k-means needs at least k points");

  std::mt19937_64 rng(seed);
  KMeansResult res;
  res.centers.resize(points.rows(), k);

  // k-means++ seeding.
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  Eigen::Index pick = first(rng);
  for (int c = 0; c < k; ++c) {
    res.centers.col(c) = points.col(pick);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (points.col(i) - res.centers.col(c)).squaredNorm());
      total += d2[i];
    }
    if (c + 1 == k) break;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        target -= d2[i];
        if (target < 0.0 && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
      while (d2[pick] == 0.0 && pick > 0) --pick;
    } else {
      pick = first(rng);
    }
  }

  const Eigen::VectorXd point_sq = points.colwise().squaredNorm().transpose();
  res.assignment.assign(static_cast<std::size_t>(n), 0);
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < options.max_iters; ++it) {
    const Eigen::MatrixXd dist = pairwise_sq(points, point_sq, res.centers);
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      dist.row(i).minCoeff(&best);
      // The expanded-form distances carry round-off; only move a point when the
      // exact distance improves so the inertia cannot creep upward.
      double d_best = (points.col(i) - res.centers.col(best)).squaredNorm();
      if (it > 0 && best != res.assignment[i]) {
        const double d_cur = (points.col(i) - res.centers.col(res.assignment[i])).squaredNorm();
        if (!(d_best < d_cur)) {
          best = res.assignment[i];
          d_best = d_cur;
        }
      }
      res.assignment[i] = static_cast<int>(best);
      inertia += d_best;
    }
    res.inertia.push_back(inertia);
    res.iterations = it + 1;
    if (inertia == 0.0 || (prev - inertia) <= options.rel_tol * prev) break;
    prev = inertia;

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(points.rows(), k);
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.col(res.assignment[i]) += points.col(i);
      ++counts[res.assignment[i]];
    }
    for (int c = 0; c < k; ++c)
      if (counts[c] > 0) res.centers.col(c) = sums.col(c) / counts[c];
  }
  return res;
}

}  // namespace clothservo
