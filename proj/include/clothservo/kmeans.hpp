#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace clothservo {

struct KMeansOptions {
  int max_iters = 100;
  double rel_tol = 1e-6;  ///< stop when the relative inertia decrease falls below this
};

struct KMeansResult {
  Eigen::MatrixXd centers;        ///< one column per cluster
  std::vector<int> assignment;    ///< cluster of each point
  std::vector<double> inertia;    ///< sum of squared distances after each assignment pass
  int iterations = 0;
};

/// Lloyd's k-means with k-means++ seeding on the columns of `points`.
/// Ties in assignment go to the lowest cluster index; an emptied cluster keeps
/// its previous center.
KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                    const KMeansOptions& options = {});

/// Index of the column of `points` nearest to `target` (lowest index on ties).
Eigen::Index nearest_column(const Eigen::MatrixXd& points, const Eigen::VectorXd& target);

}  // namespace clothservo
