#include "benh/context.hpp"

#include <set>
#include <thread>

#include "benh/common.hpp"
#include "benh/kernels.hpp"

namespace benh {

namespace {

uint64_t feature_hash(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= uint8_t(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

std::vector<uint64_t> sorted_unique(std::vector<uint64_t> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

EnhanceContext::EnhanceContext(const Corpus& filtered, Checkpoint ckpt)
    : corpus_(&filtered),
      ckpt_(std::move(ckpt)),
      view_(filtered),
      fn_provider_(ckpt_.cfg.fn_provider),
      str_provider_(ckpt_.cfg.str_provider) {
  ckpt_.cfg.validate();
}

Checkpoint EnhanceContext::fit(const Corpus& filtered, const PipelineConfig& cfg) {
  cfg.validate();
  EmbeddingProvider fn_provider(cfg.fn_provider);
  EmbeddingProvider str_provider(cfg.str_provider);

  // Fit both whitening transforms on the training split only; they are
  // frozen from here on, so applying them at test time leaks no statistics.
  std::vector<std::vector<double>> fn_rows, str_rows;
  for (const BinaryImage& b : filtered.binaries) {
    if (b.split != Split::Train) continue;
    for (const FunctionRecord& f : b.functions) fn_rows.push_back(fn_provider.function_embedding(f));
    for (const StringRecord& s : b.strings) str_rows.push_back(str_provider.string_embedding(s));
  }

  Checkpoint ckpt;
  ckpt.cfg = cfg;
  ckpt.params = init_params(cfg.sem);
  if (fn_rows.size() < 2)
    throw DataError("training split provides fewer than 2 function embeddings; cannot fit whitening");
  ckpt.whiten_fn = fit_whitening(fn_rows, cfg.sem.d_t, cfg.whitening);
  // A corpus without strings still trains; the string transform is inert
  // because no graph will contain string nodes.
  ckpt.whiten_str = str_rows.size() >= 2
                        ? fit_whitening(str_rows, cfg.sem.d_t, cfg.whitening)
                        : identity_whitening(std::max(cfg.str_provider.dim, cfg.sem.d_t), cfg.sem.d_t);
  return ckpt;
}

const RelationIndex& EnhanceContext::relations(const std::string& binary_id) {
  auto it = rel_cache_.find(binary_id);
  if (it != rel_cache_.end()) return it->second;
  for (const BinaryImage& b : corpus_->binaries)
    if (b.binary_id == binary_id)
      return rel_cache_.emplace(binary_id, index_relations(b)).first->second;
  throw DataError("unknown binary id \"" + binary_id + "\"");
}

const Eesg& EnhanceContext::graph(const std::string& function_id) {
  auto it = graph_cache_.find(function_id);
  if (it != graph_cache_.end()) return it->second;
  const FunctionRecord& f = view_.fn(function_id);
  const RelationIndex& idx = relations(f.binary_id);
  Eesg g = build_eesg(idx, function_id, ckpt_.cfg.md, ckpt_.cfg.eesg);
  return graph_cache_.emplace(function_id, std::move(g)).first->second;
}

const std::vector<double>& EnhanceContext::raw_embedding(const std::string& function_id) {
  auto it = raw_cache_.find(function_id);
  if (it != raw_cache_.end()) return it->second;
  return raw_cache_.emplace(function_id, fn_provider_.function_embedding(view_.fn(function_id)))
      .first->second;
}

const std::vector<double>& EnhanceContext::whitened_embedding(const std::string& function_id) {
  auto it = whitened_cache_.find(function_id);
  if (it != whitened_cache_.end()) return it->second;
  return whitened_cache_.emplace(function_id, ckpt_.whiten_fn.apply(raw_embedding(function_id)))
      .first->second;
}

const std::vector<double>& EnhanceContext::string_embedding(const std::string& binary_id,
                                                            const std::string& string_id) {
  std::string key = binary_id + '\0' + string_id;
  auto it = str_embed_cache_.find(key);
  if (it != str_embed_cache_.end()) return it->second;
  for (const BinaryImage& b : corpus_->binaries) {
    if (b.binary_id != binary_id) continue;
    for (const StringRecord& s : b.strings)
      if (s.string_id == string_id)
        return str_embed_cache_
            .emplace(std::move(key), ckpt_.whiten_str.apply(str_provider_.string_embedding(s)))
            .first->second;
  }
  throw DataError("unknown string id \"" + string_id + "\" in binary \"" + binary_id + "\"");
}

NodeEmbeddings EnhanceContext::node_embeddings(const Eesg& g) {
  const std::string binary_id = view_.fn(g.target).binary_id;
  NodeEmbeddings h0;
  for (const EesgNode& n : g.nodes) {
    if (n.kind == NodeKind::Function)
      h0[n.node_id] = whitened_embedding(n.node_id);
    else
      h0[n.node_id] = string_embedding(binary_id, n.node_id);
  }
  return h0;
}

const std::vector<double>& EnhanceContext::enhanced_embedding(const std::string& function_id) {
  auto it = enhanced_cache_.find(function_id);
  if (it != enhanced_cache_.end()) return it->second;
  const Eesg& g = graph(function_id);
  NodeEmbeddings h0 = node_embeddings(g);
  std::vector<double> e = sem_forward(ckpt_.params, ckpt_.cfg.sem, g, h0);
  return enhanced_cache_.emplace(function_id, std::move(e)).first->second;
}

const std::vector<double>& EnhanceContext::residual_embedding(const std::string& function_id) {
  auto it = residual_cache_.find(function_id);
  if (it != residual_cache_.end()) return it->second;
  const std::vector<double>& h0 = whitened_embedding(function_id);
  const uint32_t d = ckpt_.cfg.sem.d_t;
  std::vector<double> res(d);
  kernels::matvec(ckpt_.params.w_res.a.data(), d, d, h0.data(), res.data());
  kernels::vadd(res.data(), ckpt_.params.b_res.data(), d);
  return residual_cache_.emplace(function_id, std::move(res)).first->second;
}

const std::vector<uint64_t>& EnhanceContext::string_features(const std::string& function_id) {
  auto it = strfeat_cache_.find(function_id);
  if (it != strfeat_cache_.end()) return it->second;
  const FunctionRecord& f = view_.fn(function_id);
  const BinaryImage& b = view_.binary_of(function_id);
  std::map<std::string, const StringRecord*> by_id;
  for (const StringRecord& s : b.strings) by_id[s.string_id] = &s;
  std::vector<uint64_t> feats;
  // Features are content-hashed so homologous functions in different
  // binaries compare equal even though their string ids differ.
  for (const std::string& sid : f.string_refs) {
    auto sit = by_id.find(sid);
    if (sit != by_id.end()) feats.push_back(feature_hash(sit->second->content));
  }
  return strfeat_cache_.emplace(function_id, sorted_unique(std::move(feats))).first->second;
}

const std::vector<uint64_t>& EnhanceContext::global_features(const std::string& function_id) {
  auto it = globfeat_cache_.find(function_id);
  if (it != globfeat_cache_.end()) return it->second;
  const FunctionRecord& f = view_.fn(function_id);
  const BinaryImage& b = view_.binary_of(function_id);
  std::map<std::string, const GlobalDataRecord*> by_id;
  for (const GlobalDataRecord& g : b.globals) by_id[g.global_id] = &g;
  std::vector<uint64_t> feats;
  // Labelled globals compare by label; unlabelled ones fall back to the
  // address, which only matches within identically-based layouts.
  for (const std::string& gid : f.global_refs) {
    auto git = by_id.find(gid);
    if (git == by_id.end()) continue;
    if (git->second->label)
      feats.push_back(feature_hash("l:" + *git->second->label));
    else
      feats.push_back(feature_hash("a:" + std::to_string(git->second->address)));
  }
  return globfeat_cache_.emplace(function_id, sorted_unique(std::move(feats))).first->second;
}

double EnhanceContext::score(ScoreMode mode, const std::string& query, const std::string& candidate) {
  switch (mode) {
    case ScoreMode::RawBaseline:
      return cosine(raw_embedding(query), raw_embedding(candidate));
    case ScoreMode::EnhancedNoCombine:
      return cosine(enhanced_embedding(query), enhanced_embedding(candidate));
    case ScoreMode::Enhanced:
    case ScoreMode::ResidualOnly: {
      const std::vector<double>& eq =
          mode == ScoreMode::Enhanced ? enhanced_embedding(query) : residual_embedding(query);
      const std::vector<double>& ec =
          mode == ScoreMode::Enhanced ? enhanced_embedding(candidate) : residual_embedding(candidate);
      double sc = cosine(eq, ec);
      if (!ckpt_.cfg.use_combiner) return sc;
      double js = jaccard(string_features(query), string_features(candidate));
      double jg = jaccard(global_features(query), global_features(candidate));
      return combine_similarity(ckpt_.params.ffn, sc, js, jg, ckpt_.cfg.sem.leaky_slope);
    }
  }
  throw std::logic_error("unreachable score mode");
}

void EnhanceContext::precompute(const std::vector<std::string>& function_ids, uint32_t threads) {
  // Graphs, relation indexes and per-string embeddings mutate shared maps,
  // so they are materialized on one thread first.
  for (const std::string& id : function_ids) {
    const Eesg& g = graph(id);
    node_embeddings(g);
    raw_embedding(id);
    string_features(id);
    global_features(id);
    residual_embedding(id);
  }
  if (threads <= 1) {
    for (const std::string& id : function_ids) enhanced_embedding(id);
    return;
  }
  // The forward passes dominate; run them in parallel into distinct slots.
  std::vector<std::string> todo;
  for (const std::string& id : function_ids)
    if (enhanced_cache_.find(id) == enhanced_cache_.end()) todo.push_back(id);
  std::vector<std::vector<double>> results(todo.size());
  std::vector<std::thread> pool;
  for (uint32_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t]() {
      for (size_t i = t; i < todo.size(); i += threads) {
        const Eesg& g = graph_cache_.at(todo[i]);
        NodeEmbeddings h0;
        const std::string binary_id = view_.fn(todo[i]).binary_id;
        for (const EesgNode& n : g.nodes)
          h0[n.node_id] = n.kind == NodeKind::Function
                              ? whitened_cache_.at(n.node_id)
                              : str_embed_cache_.at(binary_id + '\0' + n.node_id);
        results[i] = sem_forward(ckpt_.params, ckpt_.cfg.sem, g, h0);
      }
    });
  }
  for (auto& th : pool) th.join();
  for (size_t i = 0; i < todo.size(); ++i) enhanced_cache_.emplace(todo[i], std::move(results[i]));
}

}  // namespace benh
