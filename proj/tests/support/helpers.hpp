#pragma once

// Shared fixtures and independent oracles for the test suite. Oracles here
// deliberately use a different algorithm than the library (BFS instead of
// LCA walks, naive loops instead of tape ops) so agreement means something.

#include <algorithm>
#include <deque>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "srbrcnn/srbrcnn.hpp"

namespace srbrcnn::testing {

struct Tok {
  std::string form;
  size_t head = 0;
  std::string deprel = "dep";
  std::string upos = "NOUN";
};

inline DependencyTree make_tree(const std::vector<Tok>& toks) {
  DependencyTree t;
  for (size_t i = 0; i < toks.size(); ++i)
    t.tokens.push_back({i + 1, toks[i].form, toks[i].upos, toks[i].head, toks[i].deprel});
  return t;
}

// Seven-token tree: a heads b and c, c heads d and e, e heads f and g.
// The entity pair (b, g) has plain path b-a-c-e-g; cutting e lifts its
// subtree to the root and shortens the path to b-a-e-g.
inline DependencyTree fig2_tree() {
  return make_tree({{"a", 0, "root", "VERB"},
                    {"b", 1, "nsubj", "NOUN"},
                    {"c", 1, "obj", "NOUN"},
                    {"d", 3, "det", "DET"},
                    {"e", 3, "case", "ADP"},
                    {"f", 5, "det", "DET"},
                    {"g", 5, "obl", "NOUN"}});
}

inline RelationInstance make_instance(DependencyTree tree, Span e1, Span e2,
                                      std::string label = "Located",
                                      Direction dir = Direction::e1_to_e2,
                                      std::string sent_id = "t#1") {
  RelationInstance inst;
  inst.sent_id = std::move(sent_id);
  inst.sentence = std::move(tree);
  inst.e1 = {e1, "E"};
  inst.e2 = {e2, "E"};
  inst.label = std::move(label);
  inst.direction = inst.label == kOtherLabel ? Direction::none : dir;
  return inst;
}

inline RelationInstance fig2_instance() {
  return make_instance(fig2_tree(), {2, 2}, {7, 7}, "Located", Direction::e1_to_e2, "fig2#s1");
}

// Random valid tree over n tokens. Attachment to an earlier node guarantees
// acyclicity; the label permutation then hides that ordering so roots and
// heads land anywhere in index space.
inline DependencyTree random_tree(std::mt19937_64& rng, size_t n) {
  static const char* kUpos[] = {"NOUN", "VERB", "ADP", "DET", "PUNCT"};
  static const char* kRel[] = {"nsubj", "obj", "case", "det", "punct", "obl", "nmod"};
  std::vector<size_t> head(n + 1, 0);
  for (size_t i = 2; i <= n; ++i) head[i] = 1 + uniform_index(rng, i - 1);
  std::vector<size_t> label(n + 1, 0);
  for (size_t i = 1; i <= n; ++i) label[i] = i;
  if (n > 1) {
    std::vector<size_t> tail(label.begin() + 1, label.end());
    shuffle_in_place(tail, rng);
    std::copy(tail.begin(), tail.end(), label.begin() + 1);
  }
  std::vector<Tok> toks(n);
  for (size_t i = 1; i <= n; ++i) {
    Tok& t = toks[label[i] - 1];
    t.form = strf("w%zu", label[i]);
    t.head = head[i] == 0 ? 0 : label[head[i]];
    t.upos = kUpos[uniform_index(rng, 5)];
    t.deprel = head[i] == 0 ? "root" : kRel[uniform_index(rng, 7)];
  }
  return make_tree(toks);
}

// Unique tree path between two nodes via breadth-first search on the
// undirected edge set. Handles a == b (single-node path).
inline std::vector<size_t> bfs_path(const DependencyTree& t, size_t a, size_t b) {
  size_t n = t.tokens.size();
  std::vector<std::vector<size_t>> adj(n + 1);
  for (const Token& tok : t.tokens) {
    if (tok.head == 0) continue;
    adj[tok.head].push_back(tok.index);
    adj[tok.index].push_back(tok.head);
  }
  std::vector<size_t> prev(n + 1, 0);
  std::vector<char> seen(n + 1, 0);
  std::deque<size_t> q{a};
  seen[a] = 1;
  while (!q.empty()) {
    size_t u = q.front();
    q.pop_front();
    if (u == b) break;
    for (size_t v : adj[u]) {
      if (seen[v]) continue;
      seen[v] = 1;
      prev[v] = u;
      q.push_back(v);
    }
  }
  std::vector<size_t> path;
  for (size_t u = b; u != a; u = prev[u]) path.push_back(u);
  path.push_back(a);
  std::reverse(path.begin(), path.end());
  return path;
}

// Ancestor-set meet point, the textbook quadratic method.
inline size_t lca_oracle(const DependencyTree& t, size_t a, size_t b) {
  std::set<size_t> anc;
  for (size_t u = a;; u = t.at(u).head) {
    anc.insert(u);
    if (t.at(u).head == 0) break;
  }
  for (size_t u = b;; u = t.at(u).head) {
    if (anc.count(u)) return u;
    if (t.at(u).head == 0) break;
  }
  return 0;
}

inline std::multiset<std::string> form_multiset(const DependencyTree& t) {
  std::multiset<std::string> m;
  for (const Token& tok : t.tokens) m.insert(tok.form);
  return m;
}

// Separable classification fixture: every instance is a five-token chain
// e1 <- filler <- cue -> filler -> e2 whose center cue word uniquely names
// the (relation, direction) combination, so a small model can memorize it.
inline std::vector<RelationInstance> overfit_fixture() {
  static const char* kLabels[] = {"Alpha", "Beta", "Gamma", "Delta"};
  static const char* kFill[][2] = {{"fa", "fb"}, {"fc", "fd"}, {"fe", "ff"}};
  std::vector<RelationInstance> out;
  for (size_t i = 0; i < 20; ++i) {
    size_t combo = i % 8;
    const char* label = kLabels[combo / 2];
    Direction dir = combo % 2 == 0 ? Direction::e1_to_e2 : Direction::e2_to_e1;
    const char* const* fill = kFill[i / 8];
    std::string cue = strf("cue%zu", combo);
    DependencyTree tree = make_tree({{"left", 2, "dep"},
                                     {fill[0], 3, "pre"},
                                     {cue, 0, "root", "VERB"},
                                     {fill[1], 3, "post"},
                                     {"right", 4, "dep"}});
    out.push_back(make_instance(std::move(tree), {1, 1}, {5, 5}, label, dir,
                                strf("syn%zu#s1", i)));
  }
  return out;
}

// Fixture for the strategy comparison: trees shaped like fig2_tree so a
// preposition cut strictly shortens every entity path.
inline std::vector<RelationInstance> prep_rich_fixture(size_t count) {
  std::vector<RelationInstance> out;
  static const char* kLabels[] = {"Located", "Use"};
  for (size_t i = 0; i < count; ++i) {
    DependencyTree tree = make_tree({{strf("v%zu", i), 0, "root", "VERB"},
                                     {"anna", 1, "nsubj", "NOUN"},
                                     {strf("n%zu", i % 3), 1, "obj", "NOUN"},
                                     {"the", 3, "det", "DET"},
                                     {"in", 3, "case", "ADP"},
                                     {"the", 5, "det", "DET"},
                                     {strf("p%zu", i % 4), 5, "obl", "NOUN"}});
    out.push_back(make_instance(std::move(tree), {2, 2}, {7, 7}, kLabels[i % 2],
                                Direction::e1_to_e2, strf("prep%zu#s1", i)));
  }
  return out;
}

}  // namespace srbrcnn::testing
