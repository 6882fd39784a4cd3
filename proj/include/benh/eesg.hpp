#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "benh/corpus.hpp"

namespace benh {

// Edge type key. Function-function edges come in matched pairs: every call
// edge has a reversed be-called edge, every address-pre a reversed
// address-post, and co-use edges are symmetric. String-use edges run from
// the string node to the function node only.
enum EdgeType : uint8_t {
  kEdgeCall = 0,
  kEdgeBeCalled = 1,
  kEdgeAddrPre = 2,
  kEdgeAddrPost = 3,
  kEdgeDataCoUse = 4,
  kEdgeStringUse = 5,
};
inline constexpr int kNumEdgeTypes = 6;

enum class NodeKind : uint8_t { Function, String };

struct EesgNode {
  std::string node_id;
  NodeKind kind;
  uint32_t depth;  // hop distance at first discovery; target is 0
};

struct EesgEdge {
  uint32_t src;  // index into Eesg::nodes
  uint32_t dst;
  uint8_t etype;

  friend bool operator==(const EesgEdge&, const EesgEdge&) = default;
};

struct Eesg {
  std::string target;
  std::vector<EesgNode> nodes;  // nodes[0] is the target
  std::vector<EesgEdge> edges;  // deduplicated on (src, dst, etype)
  uint32_t md = 0;

  const EesgNode& node(uint32_t i) const { return nodes[i]; }
};

struct EesgOptions {
  // Hub guard: at most this many co-use partners are expanded per function,
  // truncated by ascending function id.
  uint32_t couse_cap = 256;
  // Also add function -> string edges (off: string nodes keep in-degree 0).
  bool su_bidirectional = false;
  // Edge types dropped at construction time (ablations).
  std::array<bool, kNumEdgeTypes> masked{};

  bool any_masked() const {
    for (bool m : masked)
      if (m) return true;
    return false;
  }
};

// Frontier expansion around `target` for md rounds; md = 0 yields the
// single-node graph. String nodes are recorded but never expanded.
Eesg build_eesg(const RelationIndex& idx, const std::string& target, uint32_t md,
                const EesgOptions& opts = {});

struct EesgStats {
  size_t node_count = 0;
  std::array<size_t, kNumEdgeTypes> edges_by_type{};
  uint32_t max_depth = 0;
};

EesgStats eesg_stats(const Eesg& g);

// Diff-stable debug dump: {target, nodes:[{id,kind,depth}], edges:[[src,dst,etype]]}
// with nodes sorted by id and edges sorted lexicographically.
std::string eesg_to_json(const Eesg& g);

}  // namespace benh
