#pragma once

#include <cstdint>
#include <vector>

#include "benh/sem.hpp"
#include "benh/tape.hpp"

namespace benh {

// |a ∩ b| / |a ∪ b| over sorted unique feature sets; 0 when both are empty.
double jaccard(const std::vector<uint64_t>& a, const std::vector<uint64_t>& b);

// u.v / (|u||v|); 0 if either norm is 0.
double cosine(const std::vector<double>& u, const std::vector<double>& v);

struct SimilarityBreakdown {
  double sim_cos = 0.0;
  double jaccard_strings = 0.0;
  double jaccard_globals = 0.0;
  double final = 0.0;
};

// tanh(W2 . LeakyReLU(W1 [cos, jac_s, jac_g] + b1) + b2)
double combine_similarity(const FfnParams& ffn, double sim_cos, double jaccard_strings,
                          double jaccard_globals, double leaky_slope);

SimilarityBreakdown combine_breakdown(const FfnParams& ffn, double sim_cos, double jaccard_strings,
                                      double jaccard_globals, double leaky_slope);

// Differentiable variant: sim_cos enters as a tape node, the Jaccard terms as
// constants; participates in end-to-end training.
Tape::Id combine_similarity_tape(Tape& tape, const FfnParams& ffn, Tape::Id sim_cos,
                                 double jaccard_strings, double jaccard_globals, double leaky_slope);

}  // namespace benh
