#include "benh/sem.hpp"

#include <algorithm>
#include <array>

#include "benh/common.hpp"
#include "benh/kernels.hpp"
#include "benh/rng.hpp"
#include "benh/simcombine.hpp"

namespace benh {

void SemConfig::validate() const {
  if (n_layers < 1) throw ConfigError("sem: n_layers must be >= 1");
  if (d_t < 2) throw ConfigError("sem: d_t must be >= 2");
  if (n_relations != kNumEdgeTypes) throw ConfigError("sem: n_relations must be 6");
  if (ffn_hidden < 1) throw ConfigError("sem: ffn_hidden must be >= 1");
}

SemParams init_params(const SemConfig& cfg) {
  cfg.validate();
  Rng rng = derive_rng(cfg.seed, "init");
  const double bound = cfg.init_scale / std::sqrt(double(cfg.d_t));
  auto fill = [&](Mat& m, size_t rows, size_t cols) {
    m = Mat(rows, cols);
    for (double& x : m.a) x = rng.uniform(-bound, bound);
  };

  SemParams p;
  p.w_rel.resize(cfg.n_layers);
  for (uint32_t l = 0; l < cfg.n_layers; ++l) {
    p.w_rel[l].resize(cfg.n_relations);
    for (uint32_t r = 0; r < cfg.n_relations; ++r) fill(p.w_rel[l][r], cfg.d_t, cfg.d_t);
  }
  fill(p.w_res, cfg.d_t, cfg.d_t);
  p.b_res.assign(cfg.d_t, 0.0);
  fill(p.ffn.w1, cfg.ffn_hidden, 3);
  p.ffn.b1.assign(cfg.ffn_hidden, 0.0);
  fill(p.ffn.w2, 1, cfg.ffn_hidden);
  p.ffn.b2.assign(1, 0.0);
  return p;
}

std::vector<std::pair<std::string, std::span<double>>> param_tensors(SemParams& p) {
  std::vector<std::pair<std::string, std::span<double>>> out;
  for (size_t l = 0; l < p.w_rel.size(); ++l)
    for (size_t r = 0; r < p.w_rel[l].size(); ++r)
      out.emplace_back("w_rel." + std::to_string(l) + "." + std::to_string(r),
                       std::span<double>(p.w_rel[l][r].a));
  out.emplace_back("w_res", std::span<double>(p.w_res.a));
  out.emplace_back("b_res", std::span<double>(p.b_res));
  out.emplace_back("ffn.w1", std::span<double>(p.ffn.w1.a));
  out.emplace_back("ffn.b1", std::span<double>(p.ffn.b1));
  out.emplace_back("ffn.w2", std::span<double>(p.ffn.w2.a));
  out.emplace_back("ffn.b2", std::span<double>(p.ffn.b2));
  return out;
}

std::vector<std::pair<std::string, std::span<const double>>> param_tensors(const SemParams& p) {
  std::vector<std::pair<std::string, std::span<const double>>> out;
  for (auto& [name, span] : param_tensors(const_cast<SemParams&>(p)))
    out.emplace_back(name, std::span<const double>(span));
  return out;
}

namespace {

// Node ranks sorted by id plus per-node per-relation in-neighbor lists, so
// the summation order is a function of the graph alone, not of edge-list or
// insertion order.
struct GraphPlan {
  std::vector<uint32_t> order;  // rank -> node index
  uint32_t target_rank = 0;
  std::vector<std::array<std::vector<uint32_t>, kNumEdgeTypes>> in_by_rel;  // by rank
};

GraphPlan plan_graph(const Eesg& g) {
  GraphPlan plan;
  const size_t n = g.nodes.size();
  plan.order.resize(n);
  for (size_t i = 0; i < n; ++i) plan.order[i] = uint32_t(i);
  std::sort(plan.order.begin(), plan.order.end(),
            [&](uint32_t a, uint32_t b) { return g.nodes[a].node_id < g.nodes[b].node_id; });
  std::vector<uint32_t> rank(n);
  for (size_t r = 0; r < n; ++r) rank[plan.order[r]] = uint32_t(r);
  plan.target_rank = rank[0];  // nodes[0] is the target
  plan.in_by_rel.resize(n);
  for (const EesgEdge& e : g.edges) plan.in_by_rel[rank[e.dst]][e.etype].push_back(rank[e.src]);
  for (auto& per_node : plan.in_by_rel)
    for (auto& srcs : per_node) std::sort(srcs.begin(), srcs.end());
  return plan;
}

std::vector<std::vector<double>> gather_h0(const Eesg& g, const GraphPlan& plan,
                                           const NodeEmbeddings& h0, uint32_t d_t) {
  std::vector<std::vector<double>> h(g.nodes.size());
  for (size_t r = 0; r < plan.order.size(); ++r) {
    const EesgNode& node = g.nodes[plan.order[r]];
    auto it = h0.find(node.node_id);
    if (it == h0.end())
      throw DataError("sem_forward: missing node embedding for \"" + node.node_id + "\"");
    if (it->second.size() != d_t)
      throw DataError("sem_forward: embedding for \"" + node.node_id + "\" has length " +
                      std::to_string(it->second.size()) + ", expected d_t = " + std::to_string(d_t));
    h[r] = it->second;
  }
  return h;
}

}  // namespace

std::vector<double> sem_forward(const SemParams& p, const SemConfig& cfg, const Eesg& g,
                                const NodeEmbeddings& h0) {
  cfg.validate();
  GraphPlan plan = plan_graph(g);
  const size_t n = g.nodes.size();
  const uint32_t d = cfg.d_t;
  std::vector<std::vector<double>> h = gather_h0(g, plan, h0, d);
  std::vector<double> h0_target = h[plan.target_rank];

  std::vector<double> nb(d), msg(d);
  for (uint32_t layer = 0; layer < cfg.n_layers; ++layer) {
    std::vector<std::vector<double>> next(n);
    for (size_t i = 0; i < n; ++i) {
      std::vector<double> acc;
      for (int r = 0; r < kNumEdgeTypes; ++r) {
        const std::vector<uint32_t>& srcs = plan.in_by_rel[i][r];
        if (srcs.empty()) continue;  // relations with no neighbors contribute nothing
        nb = h[srcs[0]];
        for (size_t k = 1; k < srcs.size(); ++k) kernels::vadd(nb.data(), h[srcs[k]].data(), d);
        kernels::scale(nb.data(), 1.0 / double(srcs.size()), d);
        kernels::matvec(p.w_rel[layer][r].a.data(), d, d, nb.data(), msg.data());
        if (acc.empty()) acc = msg;
        else kernels::vadd(acc.data(), msg.data(), d);
      }
      if (acc.empty()) acc.assign(d, 0.0);
      for (double& x : acc)
        if (x < 0.0) x *= cfg.leaky_slope;
      next[i] = std::move(acc);
    }
    h = std::move(next);
  }

  // enhanced = RGCN output + residual block on the internal embedding
  std::vector<double> res(d);
  kernels::matvec(p.w_res.a.data(), d, d, h0_target.data(), res.data());
  kernels::vadd(res.data(), p.b_res.data(), d);
  std::vector<double> out = h[plan.target_rank];
  kernels::vadd(out.data(), res.data(), d);
  return out;
}

Tape::Id sem_forward_tape(Tape& tape, const SemParams& p, const SemConfig& cfg, const Eesg& g,
                          const NodeEmbeddings& h0) {
  cfg.validate();
  GraphPlan plan = plan_graph(g);
  const size_t n = g.nodes.size();
  const uint32_t d = cfg.d_t;
  std::vector<std::vector<double>> h0v = gather_h0(g, plan, h0, d);

  std::vector<Tape::Id> h(n);
  for (size_t i = 0; i < n; ++i) h[i] = tape.constant(h0v[i]);
  Tape::Id h0_target = h[plan.target_rank];

  // one weight leaf per (layer, relation), created on first use
  std::vector<std::vector<Tape::Id>> wleaf(cfg.n_layers,
                                           std::vector<Tape::Id>(kNumEdgeTypes, -1));
  Tape::Id zero = -1;

  for (uint32_t layer = 0; layer < cfg.n_layers; ++layer) {
    std::vector<Tape::Id> next(n);
    for (size_t i = 0; i < n; ++i) {
      std::vector<Tape::Id> msgs;
      for (int r = 0; r < kNumEdgeTypes; ++r) {
        const std::vector<uint32_t>& srcs = plan.in_by_rel[i][r];
        if (srcs.empty()) continue;
        std::vector<Tape::Id> ins;
        ins.reserve(srcs.size());
        for (uint32_t s : srcs) ins.push_back(h[s]);
        Tape::Id nb = ins.size() == 1 ? ins[0] : tape.sum(ins);
        nb = tape.scale(nb, 1.0 / double(srcs.size()));
        if (wleaf[layer][r] < 0)
          wleaf[layer][r] = tape.param_mat(
              "w_rel." + std::to_string(layer) + "." + std::to_string(r), &p.w_rel[layer][r]);
        msgs.push_back(tape.matvec(wleaf[layer][r], nb));
      }
      Tape::Id acc;
      if (msgs.empty()) {
        if (zero < 0) zero = tape.constant(std::vector<double>(d, 0.0));
        acc = zero;
      } else {
        acc = msgs.size() == 1 ? msgs[0] : tape.sum(msgs);
      }
      next[i] = tape.leaky_relu(acc, cfg.leaky_slope);
    }
    h = std::move(next);
  }

  Tape::Id wres = tape.param_mat("w_res", &p.w_res);
  Tape::Id res = tape.matvec(wres, h0_target);
  Tape::Id bres = tape.param_vec("b_res", &p.b_res);
  res = tape.sum({res, bres});
  return tape.sum({h[plan.target_rank], res});
}

void compute_gradients(Tape& tape, Tape::Id loss, GradMap& grads) {
  tape.backward(loss, grads);
}

namespace {

double single_pair_loss(double sim, double pair_target) {
  double e = pair_target - sim;
  return 0.5 * e * e;
}

}  // namespace

GradCheckReport finite_diff_check(SemParams& p, const SemConfig& cfg, const Eesg& g,
                                  const NodeEmbeddings& h0, const std::vector<double>& reference,
                                  double jac_strings, double jac_globals, double pair_target) {
  auto loss_plain = [&]() {
    std::vector<double> e = sem_forward(p, cfg, g, h0);
    double sc = cosine(e, reference);
    double sim = combine_similarity(p.ffn, sc, jac_strings, jac_globals, cfg.leaky_slope);
    return single_pair_loss(sim, pair_target);
  };

  GradMap analytic;
  {
    Tape tape;
    Tape::Id e = sem_forward_tape(tape, p, cfg, g, h0);
    Tape::Id sc = tape.cosine(e, tape.constant(reference));
    Tape::Id sim = combine_similarity_tape(tape, p.ffn, sc, jac_strings, jac_globals, cfg.leaky_slope);
    // pair_loss against a constant opposite label isolates the single term
    Tape::Id loss = pair_target > 0 ? tape.pair_loss(sim, tape.constant({-1.0}))
                                    : tape.pair_loss(tape.constant({1.0}), sim);
    compute_gradients(tape, loss, analytic);
  }

  const double step = 1e-5;
  GradCheckReport report;
  for (auto& [name, span] : param_tensors(p)) {
    const std::vector<double>* ga = nullptr;
    if (auto it = analytic.find(name); it != analytic.end()) ga = &it->second;
    double block_err = 0.0;
    for (size_t k = 0; k < span.size(); ++k) {
      double saved = span[k];
      span[k] = saved + step;
      double up = loss_plain();
      span[k] = saved - step;
      double down = loss_plain();
      span[k] = saved;
      double numeric = (up - down) / (2.0 * step);
      double a = ga ? (*ga)[k] : 0.0;
      double err = 0.0;
      if (std::abs(a) >= 1e-12 || std::abs(numeric) >= 1e-12)
        err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
      block_err = std::max(block_err, err);
    }
    report.max_rel_err_by_block[name] = block_err;
    report.max_rel_err = std::max(report.max_rel_err, block_err);
  }
  return report;
}

}  // namespace benh
