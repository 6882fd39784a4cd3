#pragma once

#include <cstdint>

#include "benh/eesg.hpp"
#include "benh/embed.hpp"
#include "benh/sem.hpp"
#include "benh/whitening.hpp"

namespace benh {

// Everything needed to turn a corpus into enhanced embeddings, minus the
// trained tensors. Persisted inside the checkpoint header.
struct PipelineConfig {
  ProviderConfig fn_provider{ProviderKind::ToyFunction, 64, 1, std::nullopt};
  ProviderConfig str_provider{ProviderKind::ToyString, 768, 2, std::nullopt};
  SemConfig sem;
  uint32_t md = 4;
  EesgOptions eesg;
  WhiteningOptions whitening;
  // When false, similarity is the plain cosine of enhanced embeddings and
  // the combiner never trains (the -SimCombination configuration).
  bool use_combiner = true;

  void validate() const;
};

}  // namespace benh
