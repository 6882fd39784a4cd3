#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "benh/eesg.hpp"
#include "benh/tape.hpp"

namespace benh {

struct SemConfig {
  uint32_t d_t = 128;
  uint32_t n_layers = 4;
  uint32_t n_relations = kNumEdgeTypes;
  uint32_t ffn_hidden = 8;
  double leaky_slope = 0.01;
  double init_scale = 1.0;
  uint64_t seed = 0;

  void validate() const;
};

// Combiner weights: similarity vector [cos, jaccard_strings, jaccard_globals]
// -> hidden (leaky relu) -> scalar -> tanh.
struct FfnParams {
  Mat w1;              // hidden x 3
  std::vector<double> b1;
  Mat w2;              // 1 x hidden
  std::vector<double> b2;  // length 1
};

struct SemParams {
  std::vector<std::vector<Mat>> w_rel;  // [layer][relation], each d_t x d_t
  Mat w_res;                            // d_t x d_t
  std::vector<double> b_res;            // d_t
  FfnParams ffn;
};

SemParams init_params(const SemConfig& cfg);

// Flat named view over every trainable tensor, in a fixed order. Shared by
// the optimizer, the checkpoint writer, and the finite-difference oracle.
std::vector<std::pair<std::string, std::span<double>>> param_tensors(SemParams& p);
std::vector<std::pair<std::string, std::span<const double>>> param_tensors(const SemParams& p);

// Node embeddings keyed by node id; every node of the graph must be covered,
// every vector of length d_t.
using NodeEmbeddings = std::map<std::string, std::vector<double>>;

// Plain (untaped) forward pass: the enhanced embedding of the target.
std::vector<double> sem_forward(const SemParams& p, const SemConfig& cfg, const Eesg& g,
                                const NodeEmbeddings& h0);

// Taped forward; returns the tape id of the enhanced embedding.
Tape::Id sem_forward_tape(Tape& tape, const SemParams& p, const SemConfig& cfg, const Eesg& g,
                          const NodeEmbeddings& h0);

// Exact reverse-mode adjoints for every parameter reachable from the loss.
void compute_gradients(Tape& tape, Tape::Id loss, GradMap& grads);

struct GradCheckReport {
  std::map<std::string, double> max_rel_err_by_block;
  double max_rel_err = 0.0;
};

// Analytic vs central finite differences (step 1e-5) for the full
// SEM -> cosine -> FFN -> tanh -> squared-error chain against pair_target
// (+1 homologous / -1 non-homologous). The numeric side uses the plain
// forward path only. Relative error denominators are floored at 1e-6;
// a pair of zero gradients reports error 0.
GradCheckReport finite_diff_check(SemParams& p, const SemConfig& cfg, const Eesg& g,
                                  const NodeEmbeddings& h0, const std::vector<double>& reference,
                                  double jac_strings, double jac_globals, double pair_target);

}  // namespace benh
