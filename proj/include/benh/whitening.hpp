#pragma once

#include <cstdint>
#include <vector>

#include "benh/embed.hpp"

namespace benh {

// Fitted centering + decorrelation map onto a d_t-dimensional unit-norm
// space. w is stored row-major with shape d x d_t.
struct WhiteningTransform {
  uint32_t d = 0;
  uint32_t d_t = 0;
  std::vector<double> mu;  // length d
  std::vector<double> w;   // d x d_t
  double eig_floor = 0.0;  // smallest eigenvalue accepted during the fit

  std::vector<double> apply(const std::vector<double>& v) const;
};

struct WhiteningOptions {
  // Floor for covariance eigenvalues, relative to the largest one.
  double rel_eig_floor = 1e-6;
  // false: take the first d_t columns of the symmetric map V D^-1/2 V^T.
  // true: take the top-variance columns of V D^-1/2 instead.
  bool pca_slice = false;
};

WhiteningTransform fit_whitening(const EmbeddingMatrix& x, uint32_t d_t,
                                 const WhiteningOptions& opts = {});
WhiteningTransform fit_whitening(const std::vector<std::vector<double>>& rows, uint32_t d_t,
                                 const WhiteningOptions& opts = {});

// Degenerate pass-through (mu = 0, w = identity slice) for the case where a
// node class has fewer than two samples; such a transform is only ever
// applied to node classes that do not occur in any graph.
WhiteningTransform identity_whitening(uint32_t d, uint32_t d_t);

std::vector<double> apply_whitening(const WhiteningTransform& t, const std::vector<double>& v);

}  // namespace benh
