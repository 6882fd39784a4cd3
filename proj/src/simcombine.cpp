#include "benh/simcombine.hpp"

#include <algorithm>
#include <cmath>

#include "benh/common.hpp"
#include "benh/kernels.hpp"

namespace benh {

double jaccard(const std::vector<uint64_t>& a, const std::vector<uint64_t>& b) {
  if (a.empty() && b.empty()) return 0.0;
  size_t inter = 0, i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) { ++inter; ++i; ++j; }
    else if (a[i] < b[j]) ++i;
    else ++j;
  }
  size_t uni = a.size() + b.size() - inter;
  return double(inter) / double(uni);
}

double cosine(const std::vector<double>& u, const std::vector<double>& v) {
  if (u.size() != v.size())
    throw DataError("cosine: length mismatch (" + std::to_string(u.size()) + " vs " +
                    std::to_string(v.size()) + ")");
  double nu = kernels::l2_norm(u.data(), u.size());
  double nv = kernels::l2_norm(v.data(), v.size());
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return kernels::dot(u.data(), v.data(), u.size()) / (nu * nv);
}

double combine_similarity(const FfnParams& ffn, double sim_cos, double jaccard_strings,
                          double jaccard_globals, double leaky_slope) {
  const double in[3] = {sim_cos, jaccard_strings, jaccard_globals};
  std::vector<double> hidden(ffn.w1.rows);
  kernels::matvec(ffn.w1.a.data(), ffn.w1.rows, 3, in, hidden.data());
  kernels::vadd(hidden.data(), ffn.b1.data(), hidden.size());
  for (double& x : hidden)
    if (x < 0.0) x *= leaky_slope;
  double y;
  kernels::matvec(ffn.w2.a.data(), 1, ffn.w2.cols, hidden.data(), &y);
  y += ffn.b2[0];
  return std::tanh(y);
}

SimilarityBreakdown combine_breakdown(const FfnParams& ffn, double sim_cos, double jaccard_strings,
                                      double jaccard_globals, double leaky_slope) {
  SimilarityBreakdown b;
  b.sim_cos = sim_cos;
  b.jaccard_strings = jaccard_strings;
  b.jaccard_globals = jaccard_globals;
  b.final = combine_similarity(ffn, sim_cos, jaccard_strings, jaccard_globals, leaky_slope);
  return b;
}

Tape::Id combine_similarity_tape(Tape& tape, const FfnParams& ffn, Tape::Id sim_cos,
                                 double jaccard_strings, double jaccard_globals, double leaky_slope) {
  Tape::Id in = tape.concat({sim_cos, tape.constant({jaccard_strings, jaccard_globals})});
  Tape::Id w1 = tape.param_mat("ffn.w1", &ffn.w1);
  Tape::Id b1 = tape.param_vec("ffn.b1", &ffn.b1);
  Tape::Id hidden = tape.leaky_relu(tape.sum({tape.matvec(w1, in), b1}), leaky_slope);
  Tape::Id w2 = tape.param_mat("ffn.w2", &ffn.w2);
  Tape::Id b2 = tape.param_vec("ffn.b2", &ffn.b2);
  return tape.tanh_op(tape.sum({tape.matvec(w2, hidden), b2}));
}

}  // namespace benh
