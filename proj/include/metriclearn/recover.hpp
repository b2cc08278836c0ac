#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "metriclearn/linops.hpp"
#include "metriclearn/types.hpp"

namespace metriclearn {

struct SigmaEstimate {
  double sigma = 0.0;
  int multiplicity = 0;
  double eigengap = 0.0;  // gap between the winning cluster and its neighbors
};

// Recover sigma_G from H = G - sigma_G V: for a centered rank-d Gram,
// -sigma_G repeats as an eigenvalue of H with multiplicity n - d - 1, so
// the most-multiple eigenvalue cluster identifies it.
inline SigmaEstimate identify_sigma(const Matrix& h, double cluster_tol = 1e-6,
                                    bool strict = false) {
  require_symmetric(h, "identify_sigma");
  const auto n = h.rows();
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("identify_sigma: eigendecomposition failed");
  const Vector w = es.eigenvalues();  // ascending
  const double opnorm = std::max(std::abs(w(0)), std::abs(w(n - 1)));
  const double tol = cluster_tol * std::max(opnorm, 1e-300);

  // group consecutive eigenvalues separated by gaps <= tol
  struct Cluster {
    int start, size;
    double mean;
  };
  std::vector<Cluster> clusters;
  int start = 0;
  for (int i = 1; i <= n; ++i) {
    if (i == n || w(i) - w(i - 1) > tol) {
      const int size = i - start;
      double mean = 0.0;
      for (int j = start; j < i; ++j) mean += w(j);
      clusters.push_back({start, size, mean / size});
      start = i;
    }
  }
  auto best = std::max_element(clusters.begin(), clusters.end(),
                               [](const Cluster& a, const Cluster& b) {
                                 return a.size < b.size;
                               });
  const long ties = std::count_if(clusters.begin(), clusters.end(),
                                  [&](const Cluster& c) { return c.size == best->size; });
  if (ties > 1)
    throw std::runtime_error("identify_sigma: ambiguous spectrum (tied clusters)");
  if (strict && best->size <= static_cast<double>(n) / 2.0 - 1.0)
    throw std::runtime_error("identify_sigma: no cluster of multiplicity > n/2 - 1");

  SigmaEstimate out;
  out.sigma = -best->mean;
  out.multiplicity = best->size;
  double gap = std::numeric_limits<double>::infinity();
  if (best->start > 0) gap = std::min(gap, w(best->start) - w(best->start - 1));
  if (best->start + best->size < n)
    gap = std::min(gap, w(best->start + best->size) - w(best->start + best->size - 1));
  out.eigengap = std::isfinite(gap) ? gap : 0.0;
  return out;
}

// G = H + sigma V.
inline Matrix reconstruct_gram(const Matrix& h, double sigma) {
  require_symmetric(h, "reconstruct_gram");
  return h + sigma * centering_matrix(h.rows());
}

inline double centering_residual(const Matrix& g) {
  return (g * Vector::Ones(g.cols())).norm();
}

// Least-squares K from G = X^T K X: K = (XX^T)^-1 X G X^T (XX^T)^-1.
// Requires rank(X) = p; mild ill-conditioning is tolerated via the
// pseudoinverse, a hard error fires only below the rank tolerance.
inline Matrix recover_metric(const Matrix& g, const PointSet& x,
                             double rank_tol = 1e-10) {
  require_symmetric(g, "recover_metric");
  if (g.rows() != x.n()) throw std::invalid_argument("recover_metric: G must be n x n");
  const Matrix xxt = x.data * x.data.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(xxt);
  const Vector w = es.eigenvalues();
  const double wmax = w.maxCoeff();
  if (wmax <= 0.0 || w.minCoeff() <= rank_tol * wmax)
    throw std::runtime_error("recover_metric: X is rank deficient, problem ill-posed");
  const Matrix xxt_inv =
      es.eigenvectors() * w.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  Matrix k = xxt_inv * x.data * g * x.data.transpose() * xxt_inv;
  return 0.5 * (k + k.transpose());
}

// Best rank-d PSD factor: Z = Lambda_d^{1/2} U_d^T with negative
// eigenvalues clamped; Z^T Z is the closest rank-d PSD matrix to G.
inline Matrix embed_from_gram(const Matrix& g, Eigen::Index d) {
  require_symmetric(g, "embed_from_gram");
  if (d < 1 || d > g.rows())
    throw std::invalid_argument("embed_from_gram: need 1 <= d <= n");
  Eigen::SelfAdjointEigenSolver<Matrix> es(g);
  const auto n = g.rows();
  Matrix z(d, n);
  for (Eigen::Index r = 0; r < d; ++r) {
    const Eigen::Index src = n - 1 - r;  // largest first
    const double lam = std::max(es.eigenvalues()(src), 0.0);
    z.row(r) = std::sqrt(lam) * es.eigenvectors().col(src).transpose();
  }
  return z;
}

struct RecoveryError {
  double absolute = 0.0;
  std::optional<double> relative;
};

// ||Khat - Kstar||_F^2 and its ratio to ||Kstar||_F^2.
inline RecoveryError recovery_error(const Matrix& khat, const Matrix& kstar) {
  if (khat.rows() != kstar.rows() || khat.cols() != kstar.cols())
    throw std::invalid_argument("recovery_error: shape mismatch");
  RecoveryError out;
  out.absolute = (khat - kstar).squaredNorm();
  const double denom = kstar.squaredNorm();
  if (denom > 0.0) out.relative = out.absolute / denom;
  return out;
}

// epsilon-rank: eigenvalues above rel_tol * lambda_max.
inline int numerical_rank(const Matrix& k, double rel_tol = 1e-6) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(k, Eigen::EigenvaluesOnly);
  const double lmax = es.eigenvalues().cwiseAbs().maxCoeff();
  if (lmax == 0.0) return 0;
  return static_cast<int>((es.eigenvalues().array() > rel_tol * lmax).count());
}

}  // namespace metriclearn
