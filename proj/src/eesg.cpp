#include "benh/eesg.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "benh/common.hpp"

namespace benh {

namespace {

class Builder {
 public:
  Builder(const RelationIndex& idx, const EesgOptions& opts) : idx_(idx), opts_(opts) {}

  Eesg run(const std::string& target, uint32_t md) {
    g_.target = target;
    g_.md = md;
    add_node(target, NodeKind::Function, 0);

    std::vector<uint32_t> frontier{0};
    for (uint32_t d = 0; d < md && !frontier.empty(); ++d) {
      std::vector<uint32_t> next;
      for (uint32_t ni : frontier) expand(ni, d + 1, next);
      frontier = std::move(next);
    }
    return std::move(g_);
  }

 private:
  uint32_t add_node(const std::string& id, NodeKind kind, uint32_t depth) {
    auto it = node_index_.find(id);
    if (it != node_index_.end()) return it->second;
    uint32_t idx = uint32_t(g_.nodes.size());
    g_.nodes.push_back(EesgNode{id, kind, depth});
    node_index_.emplace(id, idx);
    return idx;
  }

  bool known(const std::string& id) const { return node_index_.count(id) != 0; }

  void add_edge(uint32_t src, uint32_t dst, uint8_t etype) {
    if (opts_.masked[etype]) return;
    if (edge_set_.insert((uint64_t(src) << 35) | (uint64_t(dst) << 6) | etype).second)
      g_.edges.push_back(EesgEdge{src, dst, etype});
  }

  // Discovers `other` (a function) at `depth` if new, pushing it onto the
  // next frontier, and returns its node index.
  uint32_t touch_function(const std::string& other, uint32_t depth, std::vector<uint32_t>& next) {
    bool fresh = !known(other);
    uint32_t idx = add_node(other, NodeKind::Function, depth);
    if (fresh) next.push_back(idx);
    return idx;
  }

  void expand(uint32_t ni, uint32_t depth, std::vector<uint32_t>& next) {
    const std::string id = g_.nodes[ni].node_id;  // copy: g_.nodes may reallocate

    if (!opts_.masked[kEdgeCall] || !opts_.masked[kEdgeBeCalled]) {
      for (const std::string& callee : idx_.call_out.at(id)) {
        uint32_t other = touch_function(callee, depth, next);
        add_edge(ni, other, kEdgeCall);
        add_edge(other, ni, kEdgeBeCalled);
      }
      for (const std::string& caller : idx_.call_in.at(id)) {
        uint32_t other = touch_function(caller, depth, next);
        add_edge(other, ni, kEdgeCall);
        add_edge(ni, other, kEdgeBeCalled);
      }
    }

    if (!opts_.masked[kEdgeAddrPre] || !opts_.masked[kEdgeAddrPost]) {
      // Adjacent pair (lower L, higher H): (H, L, pre) and (L, H, post).
      if (const auto& pred = idx_.addr_pred.at(id)) {
        uint32_t other = touch_function(*pred, depth, next);
        add_edge(ni, other, kEdgeAddrPre);
        add_edge(other, ni, kEdgeAddrPost);
      }
      if (const auto& succ = idx_.addr_succ.at(id)) {
        uint32_t other = touch_function(*succ, depth, next);
        add_edge(other, ni, kEdgeAddrPre);
        add_edge(ni, other, kEdgeAddrPost);
      }
    }

    if (!opts_.masked[kEdgeDataCoUse]) {
      const std::vector<std::string>& partners = idx_.couse.at(id);
      size_t limit = std::min<size_t>(partners.size(), opts_.couse_cap);
      for (size_t i = 0; i < limit; ++i) {
        uint32_t other = touch_function(partners[i], depth, next);
        add_edge(ni, other, kEdgeDataCoUse);
        add_edge(other, ni, kEdgeDataCoUse);
      }
    }

    if (!opts_.masked[kEdgeStringUse]) {
      for (const std::string& sid : idx_.strings_used.at(id)) {
        uint32_t snode = add_node(sid, NodeKind::String, depth);
        add_edge(snode, ni, kEdgeStringUse);
        if (opts_.su_bidirectional) add_edge(ni, snode, kEdgeStringUse);
      }
    }
  }

  const RelationIndex& idx_;
  const EesgOptions& opts_;
  Eesg g_;
  std::map<std::string, uint32_t> node_index_;
  std::set<uint64_t> edge_set_;
};

}  // namespace

Eesg build_eesg(const RelationIndex& idx, const std::string& target, uint32_t md,
                const EesgOptions& opts) {
  if (!idx.contains(target)) throw DataError("build_eesg: unknown target id \"" + target + "\"");
  return Builder(idx, opts).run(target, md);
}

EesgStats eesg_stats(const Eesg& g) {
  EesgStats s;
  s.node_count = g.nodes.size();
  for (const EesgEdge& e : g.edges) s.edges_by_type[e.etype]++;
  for (const EesgNode& n : g.nodes) s.max_depth = std::max(s.max_depth, n.depth);
  return s;
}

std::string eesg_to_json(const Eesg& g) {
  using json = nlohmann::json;
  json doc;
  doc["target"] = g.target;

  std::vector<size_t> order(g.nodes.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return g.nodes[a].node_id < g.nodes[b].node_id; });
  json nodes = json::array();
  for (size_t i : order) {
    const EesgNode& n = g.nodes[i];
    nodes.push_back({{"id", n.node_id},
                     {"kind", n.kind == NodeKind::Function ? "function" : "string"},
                     {"depth", n.depth}});
  }
  doc["nodes"] = std::move(nodes);

  std::vector<std::array<std::string, 3>> edges;
  for (const EesgEdge& e : g.edges)
    edges.push_back({g.nodes[e.src].node_id, g.nodes[e.dst].node_id, std::to_string(e.etype)});
  std::sort(edges.begin(), edges.end());
  json jedges = json::array();
  for (const auto& e : edges) jedges.push_back({e[0], e[1], std::stoi(e[2])});
  doc["edges"] = std::move(jedges);

  return doc.dump();
}

}  // namespace benh
