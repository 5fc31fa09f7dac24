#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <queue>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "atlas/cdr.hpp"
#include "atlas/config.hpp"
#include "atlas/core.hpp"
#include "atlas/encounter.hpp"

namespace atlas {

// Undirected communication graph over user identifiers. Vertex indices follow
// the canonical (bytewise) order of the names; adjacency lists are sorted.
class CommGraph {
 public:
  CommGraph() = default;

  // `names` must be sorted unique; `edges` holds (a_idx, b_idx) with a < b.
  static CommGraph from_indexed(std::vector<std::string> names,
                                const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
    CommGraph g;
    g.names_ = std::move(names);
    g.adj_.assign(g.names_.size(), {});
    for (auto [a, b] : edges) {
      g.adj_[a].push_back(b);
      g.adj_[b].push_back(a);
    }
    for (auto& nbrs : g.adj_) std::sort(nbrs.begin(), nbrs.end());
    g.index_.reserve(g.names_.size());
    for (std::uint32_t i = 0; i < g.names_.size(); ++i) g.index_.emplace(g.names_[i], i);
    g.edge_count_ = edges.size();
    return g;
  }

  std::size_t vertex_count() const { return names_.size(); }
  std::size_t edge_count() const { return edge_count_; }

  bool contains(std::string_view id) const { return index_.find(id) != index_.end(); }

  std::optional<std::uint32_t> index_of(std::string_view id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& vertex_name(std::uint32_t idx) const { return names_[idx]; }

  std::size_t degree(std::string_view id) const {
    auto idx = index_of(id);
    if (!idx) fail("comm graph: unknown user " + std::string(id));
    return adj_[*idx].size();
  }

  std::size_t degree(std::uint32_t idx) const { return adj_[idx].size(); }

  bool has_edge(std::string_view a, std::string_view b) const {
    auto ia = index_of(a);
    auto ib = index_of(b);
    if (!ia || !ib) return false;
    return std::binary_search(adj_[*ia].begin(), adj_[*ia].end(), *ib);
  }

  const std::vector<std::uint32_t>& neighbors(std::uint32_t idx) const {
    return adj_[idx];
  }

  template <typename Fn>  // fn(a_idx, b_idx) once per undirected edge, a < b
  void for_each_edge(Fn&& fn) const {
    for (std::uint32_t a = 0; a < adj_.size(); ++a)
      for (std::uint32_t b : adj_[a])
        if (a < b) fn(a, b);
  }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t, detail::StringHash, detail::StringEq>
      index_;
  std::vector<std::vector<std::uint32_t>> adj_;
  std::size_t edge_count_ = 0;
};

// Incremental graph assembly for streaming inputs; semantics match
// build_comm_graph over the same contact pairs.
class CommGraphBuilder {
 public:
  void add_contact(std::string_view caller, std::string_view callee) {
    if (caller == callee) return;
    std::uint32_t a = intern(caller);
    std::uint32_t b = intern(callee);
    if (a > b) std::swap(a, b);
    edges_.insert((std::uint64_t(a) << 32) | b);
  }

  CommGraph build() const {
    // Re-rank so vertex indices follow canonical name order.
    std::vector<std::uint32_t> order(names_.size());
    for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::uint32_t x, std::uint32_t y) {
      return names_[x] < names_[y];
    });
    std::vector<std::uint32_t> rank(names_.size());
    std::vector<std::string> sorted_names(names_.size());
    for (std::uint32_t r = 0; r < order.size(); ++r) {
      rank[order[r]] = r;
      sorted_names[r] = names_[order[r]];
    }
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    edges.reserve(edges_.size());
    for (std::uint64_t packed : edges_) {
      std::uint32_t a = rank[std::uint32_t(packed >> 32)];
      std::uint32_t b = rank[std::uint32_t(packed & 0xffffffffu)];
      if (a > b) std::swap(a, b);
      edges.emplace_back(a, b);
    }
    return CommGraph::from_indexed(std::move(sorted_names), edges);
  }

 private:
  std::uint32_t intern(std::string_view s) {
    auto it = index_.find(s);
    if (it != index_.end()) return it->second;
    std::uint32_t idx = static_cast<std::uint32_t>(names_.size());
    names_.emplace_back(s);
    index_.emplace(names_.back(), idx);
    return idx;
  }

  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t, detail::StringHash, detail::StringEq>
      index_;
  std::unordered_set<std::uint64_t> edges_;
};

/// One undirected edge per distinct contacted pair, regardless of call count
/// or direction. Every caller and callee becomes a vertex.
inline CommGraph build_comm_graph(std::span<const CallRecord> records) {
  CommGraphBuilder builder;
  for (const CallRecord& r : records) builder.add_contact(r.caller_id, r.callee_id);
  return builder.build();
}

struct DegreeFilterResult {
  CommGraph graph;
  std::vector<std::string> removed;  // sorted
};

/// Removes every vertex whose degree on the input graph exceeds max_degree,
/// along with incident edges. Single pass on original degrees; no cascade.
inline DegreeFilterResult filter_high_degree(const CommGraph& graph,
                                             std::int64_t max_degree) {
  if (max_degree < 1) fail("filter_high_degree: max_degree must be >= 1");
  const std::uint32_t n = static_cast<std::uint32_t>(graph.vertex_count());
  std::vector<bool> keep(n, true);
  DegreeFilterResult result;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (static_cast<std::int64_t>(graph.degree(i)) > max_degree) {
      keep[i] = false;
      result.removed.push_back(graph.vertex_name(i));
    }
  }
  std::vector<std::uint32_t> remap(n, 0);
  std::vector<std::string> names;
  names.reserve(n - result.removed.size());
  for (std::uint32_t i = 0; i < n; ++i) {
    if (keep[i]) {
      remap[i] = static_cast<std::uint32_t>(names.size());
      names.push_back(graph.vertex_name(i));
    }
  }
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  graph.for_each_edge([&](std::uint32_t a, std::uint32_t b) {
    if (keep[a] && keep[b]) edges.emplace_back(remap[a], remap[b]);
  });
  result.graph = CommGraph::from_indexed(std::move(names), edges);
  return result;
}

// Hop count on the communication graph, or disconnected.
class SocialDistance {
 public:
  static SocialDistance hops(std::int32_t h) {
    if (h < 0) fail("social distance: negative hop count");
    return SocialDistance(h);
  }
  static SocialDistance disconnected() { return SocialDistance(-1); }

  bool is_connected() const { return hops_ >= 0; }
  std::int32_t hop_count() const {
    if (!is_connected()) fail("social distance: disconnected pair has no hop count");
    return hops_;
  }

  friend bool operator==(const SocialDistance&, const SocialDistance&) = default;

 private:
  explicit SocialDistance(std::int32_t h) : hops_(h) {}
  std::int32_t hops_;
};

/// Shortest-path hop count via breadth-first traversal. Both users must be
/// vertices of the graph.
inline SocialDistance social_distance(const CommGraph& graph, const PairKey& pair) {
  auto src = graph.index_of(pair.user_a);
  auto dst = graph.index_of(pair.user_b);
  if (!src) fail("social_distance: unknown user " + pair.user_a);
  if (!dst) fail("social_distance: unknown user " + pair.user_b);
  if (*src == *dst) return SocialDistance::hops(0);
  std::vector<std::int32_t> dist(graph.vertex_count(), -1);
  std::queue<std::uint32_t> frontier;
  dist[*src] = 0;
  frontier.push(*src);
  while (!frontier.empty()) {
    std::uint32_t v = frontier.front();
    frontier.pop();
    for (std::uint32_t w : graph.neighbors(v)) {
      if (dist[w] >= 0) continue;
      dist[w] = dist[v] + 1;
      if (w == *dst) return SocialDistance::hops(dist[w]);
      frontier.push(w);
    }
  }
  return SocialDistance::disconnected();
}

// A pair that repeatedly co-locates but has no direct communication tie.
// social_distance stays empty until filled by a distance pass.
struct FamiliarStrangerPair {
  PairKey pair;
  std::int64_t encounter_count = 0;
  std::optional<SocialDistance> social_distance;
};

/// Retains pairs with count >= 1 where both members are vertices of the
/// (already degree-filtered) graph, no edge joins them, and neither member was
/// removed by the degree filter. Output sorted by pair.
inline std::vector<FamiliarStrangerPair> familiar_stranger_pairs(
    const std::map<PairKey, std::int64_t>& counts, const CommGraph& graph,
    std::span<const std::string> removed = {}) {
  std::unordered_set<std::string_view> removed_set(removed.begin(), removed.end());
  std::vector<FamiliarStrangerPair> out;
  for (const auto& [pair, count] : counts) {
    if (count < 1) continue;
    if (removed_set.contains(pair.user_a) || removed_set.contains(pair.user_b))
      continue;
    if (!graph.contains(pair.user_a) || !graph.contains(pair.user_b)) continue;
    if (graph.has_edge(pair.user_a, pair.user_b)) continue;
    out.push_back(FamiliarStrangerPair{pair, count, std::nullopt});
  }
  return out;
}

/// Fills social_distance for every pair, grouping queries by source vertex so
/// one traversal serves many targets. Returns the number of disconnected
/// pairs. Grouping never changes any distance.
inline std::size_t fill_social_distances(std::vector<FamiliarStrangerPair>& pairs,
                                         const CommGraph& graph) {
  // source index -> (target index, output slot)
  std::map<std::uint32_t, std::vector<std::pair<std::uint32_t, std::size_t>>> by_source;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto a = graph.index_of(pairs[i].pair.user_a);
    auto b = graph.index_of(pairs[i].pair.user_b);
    if (!a) fail("social_distance: unknown user " + pairs[i].pair.user_a);
    if (!b) fail("social_distance: unknown user " + pairs[i].pair.user_b);
    by_source[*a].emplace_back(*b, i);
  }

  std::vector<std::uint32_t> stamp(graph.vertex_count(), 0);
  std::vector<std::int32_t> dist(graph.vertex_count(), 0);
  std::uint32_t epoch = 0;
  std::size_t disconnected = 0;

  for (auto& [src, targets] : by_source) {
    ++epoch;
    std::unordered_map<std::uint32_t, std::vector<std::size_t>> want;
    for (auto [t, slot] : targets) want[t].push_back(slot);
    std::size_t remaining = want.size();

    std::queue<std::uint32_t> frontier;
    stamp[src] = epoch;
    dist[src] = 0;
    frontier.push(src);
    auto resolve = [&](std::uint32_t v) {
      auto it = want.find(v);
      if (it == want.end()) return;
      for (std::size_t slot : it->second)
        pairs[slot].social_distance = SocialDistance::hops(dist[v]);
      want.erase(it);
      --remaining;
    };
    resolve(src);
    while (!frontier.empty() && remaining > 0) {
      std::uint32_t v = frontier.front();
      frontier.pop();
      for (std::uint32_t w : graph.neighbors(v)) {
        if (stamp[w] == epoch) continue;
        stamp[w] = epoch;
        dist[w] = dist[v] + 1;
        resolve(w);
        frontier.push(w);
      }
    }
    for (const auto& [t, slots] : want) {
      for (std::size_t slot : slots) {
        pairs[slot].social_distance = SocialDistance::disconnected();
        ++disconnected;
      }
    }
  }
  return disconnected;
}

struct DistanceCurveRow {
  std::int64_t bucket_lo = 0;
  std::int64_t bucket_hi = 0;
  std::int64_t pair_count = 0;
  std::optional<double> mean_distance;  // over connected pairs; empty if none
  double disconnected_fraction = 0.0;
};

struct DistanceCurve {
  std::vector<DistanceCurveRow> rows;
};

/// Buckets pairs by encounter count. Disconnected pairs are excluded from the
/// mean and reported as a fraction. Pairs without a filled distance are
/// resolved against `graph` first. Buckets that catch no pairs are dropped.
inline DistanceCurve distance_curve(std::span<const FamiliarStrangerPair> pairs,
                                    const CommGraph& graph,
                                    const BucketSpec& bucketing) {
  bucketing.validate();
  DistanceCurve curve;
  if (pairs.empty()) return curve;

  std::vector<FamiliarStrangerPair> scratch;
  std::span<const FamiliarStrangerPair> resolved = pairs;
  if (std::any_of(pairs.begin(), pairs.end(),
                  [](const auto& p) { return !p.social_distance.has_value(); })) {
    scratch.assign(pairs.begin(), pairs.end());
    fill_social_distances(scratch, graph);
    resolved = scratch;
  }

  struct Acc {
    std::int64_t pairs = 0;
    std::int64_t connected = 0;
    std::int64_t disconnected = 0;
    double hop_sum = 0.0;
  };
  std::vector<Acc> acc(bucketing.ranges.size());
  for (const auto& p : resolved) {
    int b = bucketing.bucket_of(p.encounter_count);
    if (b < 0)
      fail("distance_curve: encounter count " + csv::format(p.encounter_count) +
           " not covered by bucket spec " + bucketing.to_string());
    Acc& a = acc[b];
    ++a.pairs;
    if (p.social_distance->is_connected()) {
      ++a.connected;
      a.hop_sum += p.social_distance->hop_count();
    } else {
      ++a.disconnected;
    }
  }
  for (std::size_t b = 0; b < acc.size(); ++b) {
    if (acc[b].pairs == 0) continue;
    DistanceCurveRow row;
    row.bucket_lo = bucketing.ranges[b].first;
    row.bucket_hi = bucketing.ranges[b].second;
    row.pair_count = acc[b].pairs;
    if (acc[b].connected > 0)
      row.mean_distance = acc[b].hop_sum / static_cast<double>(acc[b].connected);
    row.disconnected_fraction =
        static_cast<double>(acc[b].disconnected) / static_cast<double>(acc[b].pairs);
    curve.rows.push_back(row);
  }
  return curve;
}

// distance_curve.csv: bucket_lo,bucket_hi,pair_count,mean_distance,disconnected_fraction
// An open-ended bucket_hi prints as "inf"; an undefined mean prints empty.
inline void write_distance_curve_csv(std::ostream& os, const DistanceCurve& curve) {
  os << "bucket_lo,bucket_hi,pair_count,mean_distance,disconnected_fraction\n";
  for (const auto& row : curve.rows) {
    os << row.bucket_lo << ',';
    if (row.bucket_hi == BucketSpec::unbounded())
      os << "inf";
    else
      os << row.bucket_hi;
    os << ',' << row.pair_count << ',';
    if (row.mean_distance) os << csv::format(*row.mean_distance);
    os << ',' << csv::format(row.disconnected_fraction) << '\n';
  }
}

}  // namespace atlas
