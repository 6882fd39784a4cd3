#pragma once

#include <memory>

#include "benh/checkpoint.hpp"
#include "benh/corpus.hpp"
#include "benh/simcombine.hpp"

namespace benh {

enum class ScoreMode {
  Enhanced,           // combined similarity over SEM output (the full model)
  EnhancedNoCombine,  // cosine of SEM output only
  RawBaseline,        // cosine of the raw internal embeddings
  ResidualOnly,       // combined similarity over the residual block output
};

// Binds a filtered corpus to a checkpoint and caches every derived artifact:
// relation indexes, EESGs, whitened node embeddings, enhanced embeddings and
// Jaccard feature sets. Construction is lazy and single-threaded unless
// precompute_enhanced() is used; after precomputation, scoring is read-only
// and safe to call from multiple threads.
class EnhanceContext {
 public:
  // The corpus must already be string-filtered and outlive the context.
  EnhanceContext(const Corpus& filtered, Checkpoint ckpt);

  const Checkpoint& checkpoint() const { return ckpt_; }
  Checkpoint& checkpoint() { return ckpt_; }
  const CorpusView& view() const { return view_; }
  const Corpus& corpus() const { return *corpus_; }

  const RelationIndex& relations(const std::string& binary_id);
  const Eesg& graph(const std::string& function_id);
  NodeEmbeddings node_embeddings(const Eesg& g);

  const std::vector<double>& raw_embedding(const std::string& function_id);
  const std::vector<double>& whitened_embedding(const std::string& function_id);
  const std::vector<double>& enhanced_embedding(const std::string& function_id);
  const std::vector<double>& residual_embedding(const std::string& function_id);

  const std::vector<uint64_t>& string_features(const std::string& function_id);
  const std::vector<uint64_t>& global_features(const std::string& function_id);

  double score(ScoreMode mode, const std::string& query, const std::string& candidate);

  // Fills every cache needed by score() for the given functions; parallel
  // over functions, results independent of thread count.
  void precompute(const std::vector<std::string>& function_ids, uint32_t threads);

  // Whitening transforms fitted on the train split of this corpus.
  static Checkpoint fit(const Corpus& filtered, const PipelineConfig& cfg);

 private:
  const std::vector<double>& string_embedding(const std::string& binary_id, const std::string& string_id);

  const Corpus* corpus_;
  Checkpoint ckpt_;
  CorpusView view_;
  EmbeddingProvider fn_provider_;
  EmbeddingProvider str_provider_;

  std::map<std::string, RelationIndex> rel_cache_;
  std::map<std::string, Eesg> graph_cache_;
  std::map<std::string, std::vector<double>> raw_cache_;
  std::map<std::string, std::vector<double>> whitened_cache_;
  std::map<std::string, std::vector<double>> str_embed_cache_;  // keyed binary_id + '\0' + string_id
  std::map<std::string, std::vector<double>> enhanced_cache_;
  std::map<std::string, std::vector<double>> residual_cache_;
  std::map<std::string, std::vector<uint64_t>> strfeat_cache_;
  std::map<std::string, std::vector<uint64_t>> globfeat_cache_;
};

}  // namespace benh
