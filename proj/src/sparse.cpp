#include "clothservo/sparse.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "clothservo/errors.hpp"

namespace clothservo {

void SparseSolverConfig::validate() const {
  if (!(alpha >= 0.0)) throw ParameterError("sparse alpha must be >= 0");
  if (!(tol > 0.0)) throw ParameterError("sparse tolerance must be > 0");
  if (max_iters < 1) throw ParameterError("sparse max_iters must be >= 1");
}

Eigen::Index SparseCode::support_size() const { return (beta.array() != 0.0).count(); }

SparseCoder::SparseCoder(Eigen::MatrixXd atoms) : atoms_(std::move(atoms)) {
  gram_ = atoms_.transpose() * atoms_;
}

namespace {

double violation(double grad, double beta, double alpha) {
  if (beta == 0.0) return std::max(0.0, std::abs(grad) - alpha);
  return std::abs(grad - alpha * (beta > 0.0 ? 1.0 : -1.0));
}

}  // namespace

double lasso_objective(const Eigen::MatrixXd& atoms, const Eigen::VectorXd& query,
                       const Eigen::VectorXd& beta, double alpha) {
  return (query - atoms * beta).squaredNorm() + alpha * beta.lpNorm<1>();
}

double kkt_violation(const Eigen::MatrixXd& atoms, const Eigen::VectorXd& query,
                     const Eigen::VectorXd& beta, double alpha) {
  const Eigen::VectorXd grad = 2.0 * atoms.transpose() * (query - atoms * beta);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < beta.size(); ++i) worst = std::max(worst, violation(grad[i], beta[i], alpha));
  return worst;
}

SparseCode SparseCoder::solve(const Eigen::VectorXd& query, const SparseSolverConfig& cfg) const {
  cfg.validate();
  if (query.size() != atoms_.rows()) throw ContractError("query length does not match the atoms");
  const Eigen::Index n = atoms_.cols();
  const double alpha = cfg.alpha;

  // corr = D^T q; g = D^T (q - D beta) is kept incrementally.
  const Eigen::VectorXd corr = atoms_.transpose() * query;
  const double scale = std::max(1.0, 2.0 * (n > 0 ? corr.cwiseAbs().maxCoeff() : 0.0));
  const double threshold = cfg.tol * scale;

  SparseCode code;
  code.beta = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd g = corr;

  auto max_violation = [&](const Eigen::VectorXd& grad_half) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (gram_(i, i) > 0.0) worst = std::max(worst, violation(2.0 * grad_half[i], code.beta[i], alpha));
    return worst;
  };

  for (int it = 0; it < cfg.max_iters; ++it) {
    code.iterations = it + 1;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double gii = gram_(i, i);
      if (gii <= 0.0) continue;
      const double old = code.beta[i];
      const double z = g[i] + gii * old;
      const double mag = std::abs(z) - 0.5 * alpha;
      const double updated = mag > 0.0 ? std::copysign(mag, z) / gii : 0.0;
      if (updated != old) {
        g.noalias() -= gram_.col(i) * (updated - old);
        code.beta[i] = updated;
      }
    }
    // Refresh the gradient exactly before testing, so drift cannot fake convergence.
    g = corr - gram_ * code.beta;
    code.kkt_violation = max_violation(g);
    if (code.kkt_violation <= threshold) {
      code.converged = true;
      break;
    }
  }
  code.objective = lasso_objective(atoms_, query, code.beta, alpha);
  return code;
}

SparseCode solve(const FeatureVector& query, const FeedbackDictionary& dict, const SparseSolverConfig& cfg) {
  if (query.layout_id != dict.layout_id())
    throw LayoutMismatch("query layout '" + query.layout_id + "' does not match dictionary layout '" +
                         dict.layout_id() + "'");
  return SparseCoder(dict.feature_matrix()).solve(query.values, cfg);
}

Reconstruction reconstruct(const SparseCode& code, const FeedbackDictionary& dict) {
  if (code.beta.size() != static_cast<Eigen::Index>(dict.size()))
    throw ContractError("sparse code length does not match the dictionary size");
  Reconstruction out;
  out.s_hat = Eigen::VectorXd::Zero(dict.words.empty() ? 0 : dict.words.front().ds.size());
  out.v_hat = Eigen::VectorXd::Zero(dict.n_dof);
  for (std::size_t j = 0; j < dict.size(); ++j) {
    const double b = code.beta[static_cast<Eigen::Index>(j)];
    if (b == 0.0) continue;
    out.s_hat += b * dict.words[j].ds;
    out.v_hat += b * dict.words[j].dr;
  }
  return out;
}

}  // namespace clothservo
