#pragma once

#include <stdexcept>

#include "metriclearn/triplet.hpp"
#include "metriclearn/types.hpp"

namespace metriclearn {

// L_t(G) = 2 G_ik - 2 G_ij + G_jj - G_kk
inline double l_value(const Matrix& g, const Triplet& t) {
  const auto n = g.rows();
  if (t.i >= n || t.j >= n || t.k >= n)
    throw std::out_of_range("l_value: triplet index out of range");
  return 2.0 * g(t.i, t.k) - 2.0 * g(t.i, t.j) + g(t.j, t.j) - g(t.k, t.k);
}

// M_t(K) = d_K(x_i,x_j) - d_K(x_i,x_k), evaluated from the quadratic
// forms without materializing X^T K X.
inline double m_value(const PointSet& x, const Matrix& k, const Triplet& t) {
  if (k.rows() != x.p() || k.cols() != x.p())
    throw std::invalid_argument("m_value: K must be p x p");
  if (t.i >= x.n() || t.j >= x.n() || t.k >= x.n())
    throw std::out_of_range("m_value: triplet index out of range");
  const auto xi = x.data.col(t.i);
  const auto xj = x.data.col(t.j);
  const auto xk = x.data.col(t.k);
  const Vector kxi = k * xi;
  return 2.0 * kxi.dot(xk) - 2.0 * kxi.dot(xj) + xj.dot(k * xj) - xk.dot(k * xk);
}

// The matrix M_t with <M_t, K> = m_value(X, K, t) for symmetric K.
inline Matrix m_matrix(const PointSet& x, const Triplet& t) {
  if (t.i >= x.n() || t.j >= x.n() || t.k >= x.n())
    throw std::out_of_range("m_matrix: triplet index out of range");
  const auto xi = x.data.col(t.i);
  const auto xj = x.data.col(t.j);
  const auto xk = x.data.col(t.k);
  Matrix m = xi * xk.transpose() + xk * xi.transpose() - xi * xj.transpose() -
             xj * xi.transpose() + xj * xj.transpose() - xk * xk.transpose();
  return m;
}

// Centered Gram -> hollow squared-distance matrix:
// D = diag(G) 1^T - 2G + 1 diag(G)^T.
inline Matrix gram_to_edm(const Matrix& g) {
  require_symmetric(g, "gram_to_edm");
  const Vector dg = g.diagonal();
  Matrix d = dg.replicate(1, g.cols()) - 2.0 * g + dg.transpose().replicate(g.rows(), 1);
  d.diagonal().setZero();
  return d;
}

// Hollow EDM -> centered Gram: D -> -1/2 V D V.
inline Matrix edm_to_gram(const Matrix& d) {
  require_symmetric(d, "edm_to_gram");
  const double scale = d.cwiseAbs().maxCoeff();
  if (d.diagonal().cwiseAbs().maxCoeff() > 1e-12 * (scale == 0.0 ? 1.0 : scale))
    throw std::invalid_argument("edm_to_gram: input must be hollow (zero diagonal)");
  const auto n = d.rows();
  const Matrix v = centering_matrix(n);
  return -0.5 * v * d * v;
}

// G = H + sigma V with H orthogonal to V, sigma = <G,V>/||V||_F^2.
struct GramDecomposition {
  Matrix h;
  double sigma = 0.0;
};

inline GramDecomposition decompose_gram(const Matrix& g) {
  require_symmetric(g, "decompose_gram");
  const auto n = g.rows();
  const Matrix v = centering_matrix(n);
  const double sigma = g.cwiseProduct(v).sum() / static_cast<double>(n - 1);
  GramDecomposition out;
  out.sigma = sigma;
  out.h = g - sigma * v;
  return out;
}

}  // namespace metriclearn
