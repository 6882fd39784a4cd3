#include "benh/whitening.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "benh/common.hpp"
#include "benh/kernels.hpp"

namespace benh {

WhiteningTransform fit_whitening(const std::vector<std::vector<double>>& rows, uint32_t d_t,
                                 const WhiteningOptions& opts) {
  const size_t n = rows.size();
  if (n < 2) throw DataError("fit_whitening needs at least 2 rows, got " + std::to_string(n));
  const size_t d = rows[0].size();
  if (d_t > d)
    throw DataError("fit_whitening: d_t " + std::to_string(d_t) + " exceeds input dim " +
                    std::to_string(d));
  for (const auto& r : rows)
    if (r.size() != d) throw DataError("fit_whitening: ragged input rows");

  Eigen::MatrixXd x(n, d);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < d; ++j) x(long(i), long(j)) = rows[i][j];

  Eigen::RowVectorXd mu = x.colwise().mean();
  Eigen::MatrixXd centered = x.rowwise() - mu;
  Eigen::MatrixXd cov = (centered.transpose() * centered) / double(n - 1);
  if (!cov.allFinite()) throw DataError("fit_whitening: covariance contains non-finite values");

  // Symmetric PSD, so the SVD coincides with the eigendecomposition; the
  // solver returns ascending eigenvalues and we flip to descending.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw DataError("fit_whitening: eigendecomposition failed");
  Eigen::VectorXd evals = eig.eigenvalues().reverse();
  Eigen::MatrixXd evecs = eig.eigenvectors().rowwise().reverse();

  double floor = std::max(opts.rel_eig_floor * std::max(evals(0), 0.0), 1e-300);
  for (long i = 0; i < evals.size(); ++i)
    if (evals(i) < floor) evals(i) = floor;

  Eigen::VectorXd inv_sqrt = evals.array().rsqrt();
  Eigen::MatrixXd w_slice;
  if (opts.pca_slice) {
    // top-variance directions: (V D^-1/2)[:, :d_t]
    w_slice = (evecs * inv_sqrt.asDiagonal()).leftCols(d_t);
  } else {
    Eigen::MatrixXd w_full = evecs * inv_sqrt.asDiagonal() * evecs.transpose();
    w_slice = w_full.leftCols(d_t);
  }
  if (!w_slice.allFinite()) throw DataError("fit_whitening: whitening matrix is non-finite");

  WhiteningTransform t;
  t.d = uint32_t(d);
  t.d_t = d_t;
  t.eig_floor = floor;
  t.mu.assign(mu.data(), mu.data() + d);
  t.w.resize(d * d_t);
  for (size_t i = 0; i < d; ++i)
    for (size_t j = 0; j < d_t; ++j) t.w[i * d_t + j] = w_slice(long(i), long(j));
  return t;
}

WhiteningTransform fit_whitening(const EmbeddingMatrix& x, uint32_t d_t, const WhiteningOptions& opts) {
  std::vector<std::vector<double>> rows;
  rows.reserve(x.rows.size());
  for (const auto& [id, v] : x.rows) rows.push_back(v);
  return fit_whitening(rows, d_t, opts);
}

WhiteningTransform identity_whitening(uint32_t d, uint32_t d_t) {
  if (d_t > d) throw DataError("identity_whitening: d_t exceeds d");
  WhiteningTransform t;
  t.d = d;
  t.d_t = d_t;
  t.eig_floor = 0.0;
  t.mu.assign(d, 0.0);
  t.w.assign(size_t(d) * d_t, 0.0);
  for (uint32_t i = 0; i < d_t; ++i) t.w[size_t(i) * d_t + i] = 1.0;
  return t;
}

std::vector<double> WhiteningTransform::apply(const std::vector<double>& v) const {
  if (v.size() != d)
    throw DataError("apply_whitening: vector length " + std::to_string(v.size()) +
                    " does not match transform dim " + std::to_string(d));
  std::vector<double> centered(d);
  for (uint32_t i = 0; i < d; ++i) centered[i] = v[i] - mu[i];
  // e = (v - mu) * W, with W stored row-major d x d_t
  std::vector<double> e(d_t, 0.0);
  kernels::matvec_t(w.data(), d, d_t, centered.data(), e.data());
  double n = kernels::l2_norm(e.data(), e.size());
  if (n > 0.0) kernels::scale(e.data(), 1.0 / n, e.size());
  return e;
}

std::vector<double> apply_whitening(const WhiteningTransform& t, const std::vector<double>& v) {
  return t.apply(v);
}

}  // namespace benh
