#pragma once

#include <Eigen/Core>

#include "clothservo/dictionary.hpp"
#include "clothservo/features.hpp"

namespace clothservo {

struct SparseSolverConfig {
  double alpha = 0.1;     ///< L1 weight
  int max_iters = 10000;  ///< coordinate-descent sweeps
  double tol = 1e-6;      ///< KKT tolerance, relative to max(1, |2 D^T q|_inf)

  void validate() const;
};

struct SparseCode {
  Eigen::VectorXd beta;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  double kkt_violation = 0.0;  ///< max per-coordinate stationarity violation

  Eigen::Index support_size() const;
};

/// Minimizes |q - D beta|_2^2 + alpha |beta|_1 over beta by cyclic coordinate
/// descent with soft-thresholding. D's columns are the dictionary atoms; the
/// Gram matrix is cached so repeated queries against one dictionary are cheap.
class SparseCoder {
 public:
  explicit SparseCoder(Eigen::MatrixXd atoms);

  SparseCode solve(const Eigen::VectorXd& query, const SparseSolverConfig& cfg) const;

  const Eigen::MatrixXd& atoms() const { return atoms_; }
  Eigen::Index atom_count() const { return atoms_.cols(); }
  Eigen::Index dim() const { return atoms_.rows(); }

 private:
  Eigen::MatrixXd atoms_;
  Eigen::MatrixXd gram_;
};

double lasso_objective(const Eigen::MatrixXd& atoms, const Eigen::VectorXd& query,
                       const Eigen::VectorXd& beta, double alpha);

/// Largest violation of: |2 a_i^T r| <= alpha where beta_i = 0, and
/// 2 a_i^T r = alpha sign(beta_i) elsewhere, with r = q - D beta.
double kkt_violation(const Eigen::MatrixXd& atoms, const Eigen::VectorXd& query,
                     const Eigen::VectorXd& beta, double alpha);

/// Solve against a dictionary; the query must carry the dictionary's layout.
SparseCode solve(const FeatureVector& query, const FeedbackDictionary& dict, const SparseSolverConfig& cfg);

struct Reconstruction {
  Eigen::VectorXd s_hat;  ///< sum_j beta_j ds_j
  Eigen::VectorXd v_hat;  ///< sum_j beta_j dr_j
};

Reconstruction reconstruct(const SparseCode& code, const FeedbackDictionary& dict);

}  // namespace clothservo
