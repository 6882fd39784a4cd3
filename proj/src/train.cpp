#include "benh/train.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "benh/common.hpp"
#include "benh/kernels.hpp"

namespace benh {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (lr <= 0.0) throw ConfigError("train: lr must be > 0");
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (d_t < 2) throw ConfigError("train: d_t must be >= 2");
}

double pair_loss(double sim_p, double sim_n) {
  return 0.5 * (1.0 - sim_p) * (1.0 - sim_p) + 0.5 * (1.0 + sim_n) * (1.0 + sim_n);
}

namespace {

struct SamplingPools {
  std::vector<std::string> anchors;  // sorted; each has >= 1 positive candidate
  std::map<std::string, std::vector<std::string>> positives;  // anchor -> candidates (sorted)
  std::vector<std::string> keyed;    // sorted; all functions with a source_key
  std::map<std::string, std::string> key_of;
};

SamplingPools build_pools(const CorpusView& view, Split split) {
  SamplingPools p;
  const Corpus& corpus = *view.corpus;
  std::map<std::string, std::string> binary_of;
  for (const BinaryImage& b : corpus.binaries) {
    if (b.split != split) continue;
    for (const FunctionRecord& f : b.functions) {
      if (!f.source_key) continue;
      binary_of[f.function_id] = b.binary_id;
      p.key_of[f.function_id] = *f.source_key;
      p.keyed.push_back(f.function_id);
    }
  }
  std::sort(p.keyed.begin(), p.keyed.end());

  std::map<std::string, std::vector<std::string>> groups;
  for (const std::string& id : p.keyed) groups[p.key_of[id]].push_back(id);

  for (const std::string& id : p.keyed) {
    std::vector<std::string> cands;
    for (const std::string& other : groups[p.key_of[id]])
      if (other != id && binary_of[other] != binary_of[id]) cands.push_back(other);
    if (!cands.empty()) {
      p.anchors.push_back(id);
      p.positives[id] = std::move(cands);
    }
  }
  return p;
}

std::string draw_negative(const SamplingPools& p, const std::string& anchor_key, Rng& rng) {
  // Rejection over the keyed pool; group sizes are small relative to it.
  for (int tries = 0; tries < 10000; ++tries) {
    const std::string& cand = p.keyed[rng.below(p.keyed.size())];
    if (p.key_of.at(cand) != anchor_key) return cand;
  }
  throw DataError("cannot sample a negative: all functions share one homology group");
}

}  // namespace

std::vector<TrainTriple> sample_triples(const CorpusView& view, Split split, uint32_t m, Rng& rng) {
  SamplingPools pools = build_pools(view, split);
  if (pools.anchors.empty())
    throw DataError("no homology group with members in more than one binary; cannot sample triples");
  bool have_negative = false;
  std::set<std::string> keys;
  for (const auto& [id, key] : pools.key_of) keys.insert(key);
  have_negative = keys.size() >= 2;
  if (!have_negative) throw DataError("need at least two homology groups to sample negatives");

  std::vector<TrainTriple> out;
  out.reserve(m);
  for (uint32_t i = 0; i < m; ++i) {
    TrainTriple t;
    t.anchor = pools.anchors[rng.below(pools.anchors.size())];
    const std::vector<std::string>& cands = pools.positives.at(t.anchor);
    t.positive = cands[rng.below(cands.size())];
    t.negative = draw_negative(pools, pools.key_of.at(t.anchor), rng);
    out.push_back(std::move(t));
  }
  return out;
}

void adam_step(SemParams& params, const GradMap& grads, AdamState& state, const TrainConfig& cfg) {
  state.t += 1;
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double bc1 = 1.0 - std::pow(b1, double(state.t));
  const double bc2 = 1.0 - std::pow(b2, double(state.t));
  for (auto& [name, span] : param_tensors(params)) {
    std::vector<double>& m = state.m[name];
    std::vector<double>& v = state.v[name];
    if (m.empty()) m.assign(span.size(), 0.0);
    if (v.empty()) v.assign(span.size(), 0.0);
    if (m.size() != span.size() || v.size() != span.size())
      throw DataError("adam_step: state shape mismatch for \"" + name + "\"");
    const std::vector<double>* g = nullptr;
    if (auto it = grads.find(name); it != grads.end()) {
      if (it->second.size() != span.size())
        throw DataError("adam_step: gradient shape mismatch for \"" + name + "\"");
      g = &it->second;
    }
    for (size_t k = 0; k < span.size(); ++k) {
      double gk = g ? (*g)[k] : 0.0;
      m[k] = b1 * m[k] + (1.0 - b1) * gk;
      v[k] = b2 * v[k] + (1.0 - b2) * gk * gk;
      double mhat = m[k] / bc1;
      double vhat = v[k] / bc2;
      span[k] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
    }
  }
}

namespace {

struct TripleWork {
  double loss = 0.0;
  GradMap grads;
};

TripleWork triple_gradient(EnhanceContext& ctx, const TrainTriple& t) {
  const Checkpoint& ckpt = ctx.checkpoint();
  const SemConfig& sem = ckpt.cfg.sem;
  Tape tape;
  auto enhanced = [&](const std::string& id) {
    const Eesg& g = ctx.graph(id);
    return sem_forward_tape(tape, ckpt.params, sem, g, ctx.node_embeddings(g));
  };
  Tape::Id ea = enhanced(t.anchor);
  Tape::Id ep = enhanced(t.positive);
  Tape::Id en = enhanced(t.negative);

  auto similarity = [&](Tape::Id a, Tape::Id b, const std::string& qa, const std::string& qb) {
    Tape::Id sc = tape.cosine(a, b);
    if (!ckpt.cfg.use_combiner) return sc;
    double js = jaccard(ctx.string_features(qa), ctx.string_features(qb));
    double jg = jaccard(ctx.global_features(qa), ctx.global_features(qb));
    return combine_similarity_tape(tape, ckpt.params.ffn, sc, js, jg, sem.leaky_slope);
  };
  Tape::Id sim_p = similarity(ea, ep, t.anchor, t.positive);
  Tape::Id sim_n = similarity(ea, en, t.anchor, t.negative);
  Tape::Id loss = tape.pair_loss(sim_p, sim_n);

  TripleWork w;
  w.loss = tape.scalar(loss);
  compute_gradients(tape, loss, w.grads);
  return w;
}

}  // namespace

TrainResult train(const Corpus& corpus, const TrainConfig& cfg, const PipelineConfig& pipeline_in,
                  const TrainLogFn& log) {
  cfg.validate();
  PipelineConfig pipeline = pipeline_in;
  pipeline.md = cfg.md;
  pipeline.sem.d_t = cfg.d_t;
  pipeline.sem.seed = cfg.seed;

  Corpus filtered = filter_strings(corpus);
  Checkpoint ckpt = EnhanceContext::fit(filtered, pipeline);
  EnhanceContext ctx(filtered, std::move(ckpt));

  SamplingPools pools = build_pools(ctx.view(), Split::Train);
  if (pools.anchors.empty())
    throw DataError("train split has no homology group spanning more than one binary");
  {
    std::set<std::string> keys;
    for (const auto& [id, key] : pools.key_of) keys.insert(key);
    if (keys.size() < 2) throw DataError("train split needs at least two homology groups");
  }

  // EESGs and node embeddings are static across steps; build them once.
  std::vector<std::string> involved = pools.keyed;
  for (const std::string& id : involved) {
    const Eesg& g = ctx.graph(id);
    ctx.node_embeddings(g);
    ctx.string_features(id);
    ctx.global_features(id);
  }

  AdamState adam;
  TrainResult result;
  uint64_t step = 0;
  const uint32_t threads = std::max<uint32_t>(1, cfg.threads);

  for (uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng erng = derive_rng(cfg.seed, "epoch", epoch);
    std::vector<std::string> order = pools.anchors;
    erng.shuffle(order);

    double epoch_loss_sum = 0.0;
    size_t epoch_batches = 0;
    for (size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      size_t end = std::min(order.size(), begin + cfg.batch_size);
      std::vector<TrainTriple> batch;
      for (size_t i = begin; i < end; ++i) {
        TrainTriple t;
        t.anchor = order[i];
        const std::vector<std::string>& cands = pools.positives.at(t.anchor);
        t.positive = cands[erng.below(cands.size())];
        t.negative = draw_negative(pools, pools.key_of.at(t.anchor), erng);
        batch.push_back(std::move(t));
      }

      std::vector<TripleWork> work(batch.size());
      if (threads <= 1 || batch.size() == 1) {
        for (size_t i = 0; i < batch.size(); ++i) work[i] = triple_gradient(ctx, batch[i]);
      } else {
        std::vector<std::thread> pool;
        for (uint32_t t = 0; t < threads; ++t)
          pool.emplace_back([&, t]() {
            for (size_t i = t; i < batch.size(); i += threads)
              work[i] = triple_gradient(ctx, batch[i]);
          });
        for (auto& th : pool) th.join();
      }

      // Fixed reduction order (triple index), so results do not depend on
      // the thread count.
      GradMap mean;
      for (auto& [name, span] : param_tensors(ctx.checkpoint().params))
        mean[name].assign(span.size(), 0.0);
      double batch_loss = 0.0;
      for (const TripleWork& w : work) {
        batch_loss += w.loss;
        for (const auto& [name, g] : w.grads)
          kernels::vadd(mean[name].data(), g.data(), g.size());
      }
      const double inv_m = 1.0 / double(batch.size());
      batch_loss *= inv_m;
      for (auto& [name, g] : mean) kernels::scale(g.data(), inv_m, g.size());

      adam_step(ctx.checkpoint().params, mean, adam, cfg);

      // Parameters changed: cached enhanced embeddings are stale, but the
      // training path never reads them, so nothing to invalidate.
      ++step;
      epoch_loss_sum += batch_loss;
      ++epoch_batches;
      result.step_losses.emplace_back(step, batch_loss);
      if (log) log(step, batch_loss);
    }
    result.epoch_mean_loss.push_back(epoch_batches ? epoch_loss_sum / double(epoch_batches) : 0.0);
  }

  result.checkpoint = ctx.checkpoint();
  return result;
}

}  // namespace benh
