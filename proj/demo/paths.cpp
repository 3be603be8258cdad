// Walkthrough of path extraction and structure regularization on a small
// hand-built sentence. Builds the tree in code so it runs from anywhere.

#include <cstdio>
#include <string>
#include <vector>

#include <srbrcnn/srbrcnn.hpp>

using namespace srbrcnn;

namespace {

DependencyTree example_tree() {
  // a heads b and c, c heads d and e, e heads f and g
  DependencyTree t;
  struct Row {
    const char* form;
    const char* upos;
    size_t head;
    const char* deprel;
  };
  const Row rows[] = {{"a", "VERB", 0, "root"}, {"b", "NOUN", 1, "nsubj"},
                      {"c", "NOUN", 1, "obj"},  {"d", "DET", 3, "det"},
                      {"e", "ADP", 3, "case"},  {"f", "DET", 5, "det"},
                      {"g", "NOUN", 5, "obl"}};
  size_t i = 1;
  for (const Row& r : rows) {
    t.tokens.push_back({i++, r.form, r.upos, r.head, r.deprel});
  }
  return t;
}

void print_path(const char* title, const SdpPath& p) {
  std::printf("%-24s", title);
  for (size_t i = 0; i < p.words.size(); ++i) {
    if (i > 0) {
      const SdpEdge& e = p.edges[i - 1];
      std::printf(" %s(%s)%s", e.traversal == Traversal::up ? "<-" : "", e.deprel.c_str(),
                  e.traversal == Traversal::down ? "->" : "");
    }
    std::printf(" %s", p.words[i].c_str());
  }
  std::printf("\n");
}

}  // namespace

int main() {
  DependencyTree t = example_tree();

  std::printf("tokens (index form upos head deprel):\n");
  for (const Token& tok : t.tokens)
    std::printf("  %zu %s %s %zu %s\n", tok.index, tok.form.c_str(), tok.upos.c_str(), tok.head,
                tok.deprel.c_str());
  if (auto v = validate_tree(t))
    std::printf("invalid tree: %s\n", v->what.c_str());
  else
    std::printf("tree is valid, root is token %zu\n\n", t.root());

  size_t e1 = 2, e2 = 7;  // the entity pair (b, g)
  print_path("plain path:", extract_sdp(t, e1, e2));

  const CutStrategy strategies[] = {
      {CutKind::preposition, 0.15, 0},
      {CutKind::punctuation, 0.15, 0},
      {CutKind::random_nodes, 0.4, 7},
  };
  for (const CutStrategy& s : strategies) {
    std::vector<size_t> cuts = select_cut_nodes(t, s, {e1, e2});
    std::printf("\nstrategy %s cuts:", cut_kind_str(s.kind).c_str());
    if (cuts.empty()) std::printf(" (none)");
    for (size_t c : cuts) std::printf(" %s", t.at(c).form.c_str());
    std::printf("\n");
    print_path("regularized path:", sr_sdp(t, s, e1, e2));
  }

  SdpPath back = reverse_path(extract_sdp(t, e1, e2));
  std::printf("\n");
  print_path("reversed plain path:", back);
  return 0;
}
