#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace metriclearn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Centering matrix V = I - (1/n) 11^T.
inline Matrix centering_matrix(Eigen::Index n) {
  return Matrix::Identity(n, n).array() - 1.0 / static_cast<double>(n);
}

inline bool is_symmetric(const Matrix& a, double rel_tol = 1e-12) {
  if (a.rows() != a.cols()) return false;
  const double scale = a.cwiseAbs().maxCoeff();
  if (scale == 0.0) return true;
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

inline void require_symmetric(const Matrix& a, const char* what) {
  if (!is_symmetric(a))
    throw std::invalid_argument(std::string(what) + ": matrix is not symmetric");
}

// Columns are items: X is p x n.
struct PointSet {
  Matrix data;
  bool centered = false;

  PointSet() = default;
  explicit PointSet(Matrix x, bool is_centered = false)
      : data(std::move(x)), centered(is_centered) {
    if (data.cols() < 3)
      throw std::invalid_argument("PointSet: need at least 3 items");
  }

  Eigen::Index p() const { return data.rows(); }
  Eigen::Index n() const { return data.cols(); }
};

// Subtracts the column mean from every column. Idempotent.
inline Matrix center_columns(const Matrix& x) {
  Matrix c = x;
  c.colwise() -= x.rowwise().mean();
  return c;
}

inline PointSet center_points(const PointSet& x) {
  return PointSet(center_columns(x.data), true);
}

}  // namespace metriclearn
