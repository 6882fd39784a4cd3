#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "benh/context.hpp"
#include "benh/rng.hpp"

namespace benh {

struct TrainTriple {
  std::string anchor;
  std::string positive;  // same source_key, different binary
  std::string negative;  // different source_key
};

struct TrainConfig {
  uint32_t batch_size = 32;
  uint32_t epochs = 10;
  double lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  uint64_t seed = 0;
  uint32_t md = 4;
  uint32_t d_t = 128;
  uint32_t threads = 1;

  void validate() const;
};

struct AdamState {
  std::map<std::string, std::vector<double>> m;
  std::map<std::string, std::vector<double>> v;
  uint64_t t = 0;
};

// Per-triple term of the batch-mean squared-error objective.
double pair_loss(double sim_p, double sim_n);

// Anchors drawn uniformly from functions whose homology group offers a
// positive in another binary; positives uniform within the group; negatives
// uniform over keyed functions of other groups.
std::vector<TrainTriple> sample_triples(const CorpusView& view, Split split, uint32_t m, Rng& rng);

// Standard Adam with bias correction; `grads` holds batch-mean gradients.
void adam_step(SemParams& params, const GradMap& grads, AdamState& state, const TrainConfig& cfg);

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<double> epoch_mean_loss;
  std::vector<std::pair<uint64_t, double>> step_losses;  // (step, batch loss)
};

using TrainLogFn = std::function<void(uint64_t step, double loss)>;

// End-to-end training: fits whitening on the train split, precomputes EESGs,
// then runs epochs over all eligible anchors. Only SEM and FFN tensors
// update; providers and whitening stay frozen. Deterministic in cfg.seed
// regardless of thread count.
TrainResult train(const Corpus& corpus, const TrainConfig& cfg, const PipelineConfig& pipeline,
                  const TrainLogFn& log = {});

}  // namespace benh
