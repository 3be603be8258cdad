#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "srbrcnn/conllu.hpp"
#include "srbrcnn/rng.hpp"

namespace srbrcnn {

enum class Traversal { up, down };

inline const char* traversal_str(Traversal t) { return t == Traversal::up ? "up" : "down"; }

struct SdpEdge {
  std::string deprel;
  Traversal traversal = Traversal::up;

  bool operator==(const SdpEdge&) const = default;
};

struct SdpPath {
  std::vector<size_t> word_indices;  // 1-based token indices along the path
  std::vector<std::string> words;
  std::vector<SdpEdge> edges;  // edges[i] joins words[i] and words[i+1]

  size_t length() const { return words.size(); }
  bool operator==(const SdpPath&) const = default;
};

inline size_t lca(const DependencyTree& t, size_t a, size_t b) {
  std::vector<size_t> depth = t.depths();
  auto parent = [&](size_t i) { return t.at(i).head; };
  while (a != b) {
    if (depth[a] >= depth[b])
      a = parent(a);
    else
      b = parent(b);
  }
  return a;
}

// Shortest dependency path between two tokens: climb from e1 to the lowest
// common ancestor, then descend to e2. Each edge carries the deprel of the
// lower endpoint and the travel direction seen from e1.
inline SdpPath extract_sdp(const DependencyTree& t, size_t e1, size_t e2) {
  if (e1 == 0 || e1 > t.size() || e2 == 0 || e2 > t.size())
    throw DataError(strf("path endpoints %zu, %zu out of range (tree has %zu tokens)", e1, e2,
                         t.size()));
  if (e1 == e2) throw DataError(strf("degenerate pair: both endpoints are token %zu", e1));
  size_t meet = lca(t, e1, e2);
  std::vector<size_t> up;  // e1 .. meet
  for (size_t i = e1; i != meet; i = t.at(i).head) up.push_back(i);
  up.push_back(meet);
  std::vector<size_t> down;  // e2 .. meet, reversed below
  for (size_t i = e2; i != meet; i = t.at(i).head) down.push_back(i);

  SdpPath p;
  for (size_t i : up) p.word_indices.push_back(i);
  for (size_t k = down.size(); k-- > 0;) p.word_indices.push_back(down[k]);
  for (size_t i : p.word_indices) p.words.push_back(t.at(i).form);
  for (size_t k = 0; k + 1 < up.size(); ++k)
    p.edges.push_back({t.at(up[k]).deprel, Traversal::up});
  for (size_t k = down.size(); k-- > 0;)
    p.edges.push_back({t.at(down[k]).deprel, Traversal::down});
  return p;
}

inline SdpPath reverse_path(const SdpPath& p) {
  SdpPath r;
  r.word_indices.assign(p.word_indices.rbegin(), p.word_indices.rend());
  r.words.assign(p.words.rbegin(), p.words.rend());
  for (size_t k = p.edges.size(); k-- > 0;) {
    SdpEdge e = p.edges[k];
    e.traversal = e.traversal == Traversal::up ? Traversal::down : Traversal::up;
    r.edges.push_back(std::move(e));
  }
  return r;
}

// Checks that a path really walks tree edges with the traversals it claims.
inline bool path_is_consistent(const DependencyTree& t, const SdpPath& p) {
  if (p.words.size() != p.word_indices.size()) return false;
  if (p.edges.size() + 1 != p.word_indices.size()) return false;
  for (size_t k = 0; k < p.edges.size(); ++k) {
    size_t a = p.word_indices[k], b = p.word_indices[k + 1];
    const SdpEdge& e = p.edges[k];
    size_t lower = e.traversal == Traversal::up ? a : b;
    size_t upper = e.traversal == Traversal::up ? b : a;
    if (t.at(lower).head != upper) return false;
    if (t.at(lower).deprel != e.deprel) return false;
  }
  return true;
}

inline constexpr const char* kSrcutDeprel = "SRCUT";
inline constexpr const char* kPunctUpos = "PUNCT";
inline constexpr const char* kAdpUpos = "ADP";

enum class CutKind { punctuation, random_nodes, preposition };

struct CutStrategy {
  CutKind kind = CutKind::punctuation;
  double cut_ratio = 0.15;  // random_nodes only
  uint64_t seed = 0;        // random_nodes only
};

inline std::string cut_kind_str(CutKind k) {
  switch (k) {
    case CutKind::punctuation: return "punctuation";
    case CutKind::random_nodes: return "random";
    default: return "preposition";
  }
}

inline CutKind cut_kind_from(const std::string& s) {
  if (s == "punctuation") return CutKind::punctuation;
  if (s == "random") return CutKind::random_nodes;
  if (s == "preposition") return CutKind::preposition;
  throw DataError("unknown cut strategy: " + s);
}

namespace detail {

// Punctuation segments: a token's segment id is the number of PUNCT tokens
// strictly before it, so punctuation marks open a new segment for what
// follows them.
inline std::vector<size_t> punct_segments(const DependencyTree& t) {
  std::vector<size_t> seg(t.size() + 1, 0);
  size_t count = 0;
  for (size_t i = 1; i <= t.size(); ++i) {
    seg[i] = count;
    if (t.at(i).upos == kPunctUpos) ++count;
  }
  return seg;
}

}  // namespace detail

// Picks the nodes whose subtrees get detached. The root is never picked,
// nor is anything in `exclude` (callers pass the entity heads).
inline std::vector<size_t> select_cut_nodes(const DependencyTree& t, const CutStrategy& s,
                                            const std::set<size_t>& exclude = {}) {
  size_t root = t.root();
  std::vector<size_t> cuts;
  auto eligible = [&](size_t i) { return i != root && !exclude.count(i); };
  switch (s.kind) {
    case CutKind::punctuation: {
      std::vector<size_t> seg = detail::punct_segments(t);
      for (size_t i = 1; i <= t.size(); ++i)
        if (eligible(i) && seg[i] != seg[t.at(i).head]) cuts.push_back(i);
      break;
    }
    case CutKind::random_nodes: {
      std::vector<size_t> pool;
      for (size_t i = 1; i <= t.size(); ++i)
        if (eligible(i)) pool.push_back(i);
      size_t want = static_cast<size_t>(s.cut_ratio * static_cast<double>(t.size() - 1));
      want = std::min(want, pool.size());
      auto rng = make_rng(derive_seed(s.seed, {seed_scope::kCutNodes}));
      cuts = sample_without_replacement(pool, want, rng);
      std::sort(cuts.begin(), cuts.end());
      break;
    }
    case CutKind::preposition: {
      for (size_t i = 1; i <= t.size(); ++i)
        if (eligible(i) && t.at(i).upos == kAdpUpos && t.subtree_size(i) >= 2)
          cuts.push_back(i);
      break;
    }
  }
  return cuts;
}

// Detach each cut node's subtree and hang it directly under the root with a
// synthetic deprel. Everything below a cut node rides along unchanged.
inline DependencyTree flatten(const DependencyTree& t, const std::vector<size_t>& cuts) {
  size_t root = t.root();
  DependencyTree out = t;
  for (size_t c : cuts) {
    if (c == 0 || c > t.size()) throw DataError(strf("cut node %zu out of range", c));
    if (c == root) throw DataError("cannot cut the root");
    out.tokens[c - 1].head = root;
    out.tokens[c - 1].deprel = kSrcutDeprel;
  }
  return out;
}

inline SdpPath sr_sdp(const DependencyTree& t, const CutStrategy& s, size_t e1, size_t e2) {
  std::vector<size_t> cuts = select_cut_nodes(t, s, {e1, e2});
  return extract_sdp(flatten(t, cuts), e1, e2);
}

inline SdpPath path_for(const DependencyTree& t, const std::optional<CutStrategy>& s, size_t e1,
                        size_t e2) {
  return s ? sr_sdp(t, *s, e1, e2) : extract_sdp(t, e1, e2);
}

inline std::string path_to_json_line(const std::string& sent_id, const std::string& strategy,
                                     const SdpPath& p) {
  nlohmann::ordered_json j{{"sent_id", sent_id}, {"strategy", strategy}};
  j["words"] = p.words;
  std::vector<std::string> deprels, traversals;
  for (const SdpEdge& e : p.edges) {
    deprels.push_back(e.deprel);
    traversals.push_back(traversal_str(e.traversal));
  }
  j["deprels"] = std::move(deprels);
  j["traversals"] = std::move(traversals);
  return j.dump();
}

}  // namespace srbrcnn
