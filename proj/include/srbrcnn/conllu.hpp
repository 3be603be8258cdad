#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "srbrcnn/common.hpp"

namespace srbrcnn {

// index and head are 1-based; head 0 marks the root token.
struct Token {
  size_t index = 0;
  std::string form;
  std::string upos;
  size_t head = 0;
  std::string deprel;
};

struct DependencyTree {
  std::vector<Token> tokens;

  size_t size() const { return tokens.size(); }
  const Token& at(size_t idx1) const { return tokens[idx1 - 1]; }
  Token& at(size_t idx1) { return tokens[idx1 - 1]; }

  // First token with head 0; 0 when there is none.
  size_t root() const {
    for (const Token& t : tokens)
      if (t.head == 0) return t.index;
    return 0;
  }

  // Adjacency by head link, 1-based; [0] is unused.
  std::vector<std::vector<size_t>> children() const {
    std::vector<std::vector<size_t>> ch(tokens.size() + 1);
    for (const Token& t : tokens)
      if (t.head != 0) ch[t.head].push_back(t.index);
    return ch;
  }

  // Distance to root per token (root = 0); requires a valid tree.
  std::vector<size_t> depths() const {
    std::vector<size_t> d(tokens.size() + 1, 0);
    std::vector<size_t> order{root()};
    auto ch = children();
    for (size_t i = 0; i < order.size(); ++i) {
      for (size_t c : ch[order[i]]) {
        d[c] = d[order[i]] + 1;
        order.push_back(c);
      }
    }
    return d;
  }

  size_t depth() const {
    size_t mx = 0;
    for (size_t d : depths()) mx = std::max(mx, d);
    return mx;
  }

  // Token count of the subtree rooted at idx, including idx itself.
  size_t subtree_size(size_t idx) const {
    auto ch = children();
    size_t n = 0;
    std::vector<size_t> stack{idx};
    while (!stack.empty()) {
      size_t u = stack.back();
      stack.pop_back();
      ++n;
      for (size_t c : ch[u]) stack.push_back(c);
    }
    return n;
  }
};

struct Sentence {
  std::string id;
  DependencyTree tree;
};

namespace detail {
inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  size_t start = 0;
  while (true) {
    size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      cols.push_back(line.substr(start));
      break;
    }
    cols.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return cols;
}

inline bool parse_size(const std::string& s, size_t& out) {
  if (s.empty()) return false;
  size_t v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
    v = v * 10 + static_cast<size_t>(c - '0');
  }
  out = v;
  return true;
}
}  // namespace detail

// Blank-line separated sentence blocks in the 10-column CoNLL-U layout.
// Multi-word token ranges ("1-2") and empty nodes ("1.1") are skipped.
// Sentences without a "# sent_id = ..." comment get "s<ordinal>".
inline std::vector<Sentence> parse_conllu(const std::string& text) {
  std::vector<Sentence> out;
  Sentence cur;
  size_t next_index = 1;
  size_t line_no = 0;
  auto flush = [&]() {
    if (!cur.tree.tokens.empty()) {
      if (cur.id.empty()) cur.id = "s" + std::to_string(out.size() + 1);
      out.push_back(std::move(cur));
    }
    cur = Sentence{};
    next_index = 1;
  };

  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    if (line[0] == '#') {
      const std::string key = "# sent_id";
      if (line.compare(0, key.size(), key) == 0) {
        size_t eq = line.find('=');
        if (eq != std::string::npos) {
          size_t b = line.find_first_not_of(' ', eq + 1);
          cur.id = b == std::string::npos ? "" : line.substr(b);
        }
      }
      continue;
    }
    auto cols = detail::split_tabs(line);
    if (cols.size() != 10)
      throw ParseError(strf("expected 10 tab-separated columns, found %zu", cols.size()),
                       line_no);
    // MWT ranges and empty nodes carry non-integer IDs; they are not tree nodes.
    if (cols[0].find('-') != std::string::npos || cols[0].find('.') != std::string::npos)
      continue;
    Token tok;
    if (!detail::parse_size(cols[0], tok.index))
      throw ParseError("non-integer ID column '" + cols[0] + "'", line_no);
    if (tok.index != next_index)
      throw ParseError(strf("ID %zu out of sequence, expected %zu", tok.index, next_index),
                       line_no);
    ++next_index;
    tok.form = cols[1];
    tok.upos = cols[3];
    if (!detail::parse_size(cols[6], tok.head))
      throw ParseError("non-integer HEAD column '" + cols[6] + "'", line_no);
    tok.deprel = cols[7];
    cur.tree.tokens.push_back(std::move(tok));
  }
  flush();
  return out;
}

inline std::vector<Sentence> parse_conllu_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open CoNLL-U file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_conllu(ss.str());
}

inline std::string serialize_conllu(const std::vector<Sentence>& sentences) {
  std::string out;
  for (const Sentence& s : sentences) {
    out += "# sent_id = " + s.id + "\n";
    for (const Token& t : s.tree.tokens) {
      out += strf("%zu\t%s\t_\t%s\t_\t_\t%zu\t%s\t_\t_\n", t.index, t.form.c_str(),
                  t.upos.c_str(), t.head, t.deprel.c_str());
    }
    out += "\n";
  }
  return out;
}

struct TreeViolation {
  std::string what;
  size_t token_index = 0;  // 0 when the violation is not tied to one token
};

// nullopt when all DependencyTree invariants hold; otherwise the first
// violated invariant and the offending token.
inline std::optional<TreeViolation> validate_tree(const DependencyTree& t) {
  size_t n = t.size();
  if (n == 0) return TreeViolation{"empty tree", 0};
  size_t root = 0;
  for (const Token& tok : t.tokens) {
    if (tok.head > n) return TreeViolation{"head out of range", tok.index};
    if (tok.head == tok.index) return TreeViolation{"self-loop", tok.index};
    if (tok.deprel.empty()) return TreeViolation{"empty deprel", tok.index};
    if (tok.head == 0) {
      if (root != 0) return TreeViolation{"multiple roots", tok.index};
      root = tok.index;
    }
  }
  if (root == 0) return TreeViolation{"no root", 0};
  // Chase head links; every token must reach the root without revisiting.
  std::vector<uint8_t> state(n + 1, 0);  // 0 unvisited, 1 on path, 2 done
  state[root] = 2;
  for (size_t start = 1; start <= n; ++start) {
    size_t u = start;
    std::vector<size_t> path;
    while (state[u] == 0) {
      state[u] = 1;
      path.push_back(u);
      u = t.at(u).head;
      if (state[u] == 1) return TreeViolation{"cycle", start};
    }
    for (size_t p : path) state[p] = 2;
  }
  return std::nullopt;
}

// 1-based inclusive token range.
struct Span {
  size_t start = 0;
  size_t end = 0;
  size_t length() const { return end >= start ? end - start + 1 : 0; }
  bool contains(size_t i) const { return i >= start && i <= end; }
};

// The single token representing a (possibly multi-word) mention: the leftmost
// token whose head lies outside the span.
inline size_t resolve_entity_head(const DependencyTree& t, Span span) {
  if (span.start == 0 || span.end < span.start || span.end > t.size())
    throw DataError(strf("invalid entity span [%zu, %zu] in a %zu-token sentence", span.start,
                         span.end, t.size()));
  for (size_t i = span.start; i <= span.end; ++i) {
    if (!span.contains(t.at(i).head)) return i;
  }
  // Unreachable for well-formed trees: the shallowest token's head is outside.
  return span.start;
}

}  // namespace srbrcnn
