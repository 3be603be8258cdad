#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "srbrcnn/instances.hpp"
#include "srbrcnn/labels.hpp"
#include "srbrcnn/layers.hpp"
#include "srbrcnn/sdp.hpp"
#include "srbrcnn/tape.hpp"

namespace srbrcnn {

struct Vocab {
  std::vector<std::string> items;
  std::unordered_map<std::string, size_t> index;

  size_t add(const std::string& s) {
    auto [it, fresh] = index.emplace(s, items.size());
    if (fresh) items.push_back(s);
    return it->second;
  }
  std::optional<size_t> find(const std::string& s) const {
    auto it = index.find(s);
    if (it == index.end()) return std::nullopt;
    return it->second;
  }
  size_t size() const { return items.size(); }

  static Vocab from_items(const std::vector<std::string>& items) {
    Vocab v;
    for (const std::string& s : items) v.add(s);
    if (v.items.size() != items.size()) throw DataError("duplicate vocabulary entry");
    return v;
  }
  bool operator==(const Vocab& o) const { return items == o.items; }
};

inline constexpr const char* kUnkWord = "UNK";

inline std::string rel_token(const std::string& deprel, Traversal tr) {
  return deprel + "/" + traversal_str(tr);
}

// Word index 0 is the unknown word; relation indices 0..3 are reserved for
// the unknown deprel and the synthetic cut deprel in both travel directions,
// so those rows exist no matter what the training paths contained.
inline Vocab make_word_vocab() {
  Vocab v;
  v.add(kUnkWord);
  return v;
}

inline Vocab make_rel_vocab() {
  Vocab v;
  v.add(rel_token(kUnkWord, Traversal::up));
  v.add(rel_token(kUnkWord, Traversal::down));
  v.add(rel_token(kSrcutDeprel, Traversal::up));
  v.add(rel_token(kSrcutDeprel, Traversal::down));
  return v;
}

inline size_t word_row(const Vocab& v, const std::string& form) {
  return v.find(form).value_or(0);
}

inline size_t rel_row(const Vocab& v, const SdpEdge& e) {
  if (auto i = v.find(rel_token(e.deprel, e.traversal))) return *i;
  return e.traversal == Traversal::up ? 0 : 1;
}

// Vocabulary from the training paths. Each edge registers both orientations
// because the backward pass walks every path in reverse.
inline std::pair<Vocab, Vocab> build_vocabs(const std::vector<RelationInstance>& instances,
                                            const std::optional<CutStrategy>& strategy) {
  Vocab words = make_word_vocab();
  Vocab rels = make_rel_vocab();
  for (const RelationInstance& inst : instances) {
    SdpPath p = path_for(inst.sentence, strategy, inst.e1_head(), inst.e2_head());
    for (const std::string& w : p.words) words.add(w);
    for (const SdpEdge& e : p.edges) {
      rels.add(rel_token(e.deprel, Traversal::up));
      rels.add(rel_token(e.deprel, Traversal::down));
    }
  }
  return {std::move(words), std::move(rels)};
}

// Every learnable tensor. The two embedding tables come first, then the four
// LSTM directions, then the convolution and the three classifiers.
struct ParamSet {
  Tensor word_table, rel_table;
  LstmDirParams word_fwd, word_bwd, rel_fwd, rel_bwd;
  Tensor w_con, b_con;
  Tensor w_fine_fwd, b_fine_fwd;
  Tensor w_fine_bwd, b_fine_bwd;
  Tensor w_coarse, b_coarse;

  template <class F>
  void for_each(F&& f) {
    f("word_table", word_table);
    f("rel_table", rel_table);
    f("word_fwd.wx", word_fwd.wx);
    f("word_fwd.wh", word_fwd.wh);
    f("word_fwd.b", word_fwd.b);
    f("word_bwd.wx", word_bwd.wx);
    f("word_bwd.wh", word_bwd.wh);
    f("word_bwd.b", word_bwd.b);
    f("rel_fwd.wx", rel_fwd.wx);
    f("rel_fwd.wh", rel_fwd.wh);
    f("rel_fwd.b", rel_fwd.b);
    f("rel_bwd.wx", rel_bwd.wx);
    f("rel_bwd.wh", rel_bwd.wh);
    f("rel_bwd.b", rel_bwd.b);
    f("w_con", w_con);
    f("b_con", b_con);
    f("w_fine_fwd", w_fine_fwd);
    f("b_fine_fwd", b_fine_fwd);
    f("w_fine_bwd", w_fine_bwd);
    f("b_fine_bwd", b_fine_bwd);
    f("w_coarse", w_coarse);
    f("b_coarse", b_coarse);
  }
  template <class F>
  void for_each(F&& f) const {
    const_cast<ParamSet*>(this)->for_each(
        [&](const char* n, Tensor& t) { f(n, static_cast<const Tensor&>(t)); });
  }

  // The weight matrices that carry the L2 penalty. Biases and the embedding
  // tables are exempt.
  template <class F>
  void for_each_weight(F&& f) {
    for (LstmDirParams* l : {&word_fwd, &word_bwd, &rel_fwd, &rel_bwd}) {
      f(l->wx);
      f(l->wh);
    }
    f(w_con);
    f(w_fine_fwd);
    f(w_fine_bwd);
    f(w_coarse);
  }

  ParamSet zeros_like() const {
    ParamSet z;
    std::vector<Tensor*> dst;
    z.for_each([&](const char*, Tensor& t) { dst.push_back(&t); });
    size_t i = 0;
    for_each([&](const char*, const Tensor& t) { *dst[i++] = Tensor::zeros(t.shape); });
    return z;
  }

  void set_zero() {
    for_each([](const char*, Tensor& t) { t.fill(0.0); });
  }

  void add_scaled(const ParamSet& o, double factor) {
    std::vector<const Tensor*> src;
    o.for_each([&](const char*, const Tensor& t) { src.push_back(&t); });
    size_t i = 0;
    for_each([&](const char*, Tensor& t) { t.add_scaled(*src[i++], factor); });
  }

  void scale(double factor) {
    for_each([&](const char*, Tensor& t) {
      for (double& v : t.data) v *= factor;
    });
  }
};

using Gradients = ParamSet;

struct ModelParams {
  LabelSchema schema;
  Vocab word_vocab, rel_vocab;
  size_t word_dim = 200;
  size_t rel_dim = 50;
  size_t conv_dim = 200;
  double alpha = 0.5;
  std::optional<CutStrategy> strategy;
  ParamSet p;

  // Hidden size per LSTM direction equals the channel's embedding size, so
  // each bidirectional state is twice that and the convolution reads
  // [h_a (+) h_ab (+) h_b].
  size_t conv_input_dim() const { return 4 * word_dim + 2 * rel_dim; }

  static ModelParams shaped(LabelSchema schema, Vocab word_vocab, Vocab rel_vocab,
                            size_t word_dim, size_t rel_dim, size_t conv_dim) {
    if (schema.k() == 0) throw DataError("label schema has no relations");
    if (word_dim == 0 || rel_dim == 0 || conv_dim == 0)
      throw DataError("embedding and convolution dimensions must be positive");
    ModelParams m;
    m.schema = std::move(schema);
    m.word_vocab = std::move(word_vocab);
    m.rel_vocab = std::move(rel_vocab);
    m.word_dim = word_dim;
    m.rel_dim = rel_dim;
    m.conv_dim = conv_dim;
    m.p.word_table = Tensor::zeros({m.word_vocab.size(), word_dim});
    m.p.rel_table = Tensor::zeros({m.rel_vocab.size(), rel_dim});
    m.p.word_fwd = LstmDirParams::zeros(word_dim, word_dim);
    m.p.word_bwd = LstmDirParams::zeros(word_dim, word_dim);
    m.p.rel_fwd = LstmDirParams::zeros(rel_dim, rel_dim);
    m.p.rel_bwd = LstmDirParams::zeros(rel_dim, rel_dim);
    m.p.w_con = Tensor::zeros({conv_dim, m.conv_input_dim()});
    m.p.b_con = Tensor::zeros({conv_dim});
    size_t fine = m.schema.directed_count();
    size_t coarse = m.schema.coarse_count();
    m.p.w_fine_fwd = Tensor::zeros({fine, conv_dim});
    m.p.b_fine_fwd = Tensor::zeros({fine});
    m.p.w_fine_bwd = Tensor::zeros({fine, conv_dim});
    m.p.b_fine_bwd = Tensor::zeros({fine});
    m.p.w_coarse = Tensor::zeros({coarse, 2 * conv_dim});
    m.p.b_coarse = Tensor::zeros({coarse});
    return m;
  }

  // Weights uniform in [-0.08, 0.08], embeddings uniform in [-0.05, 0.05],
  // biases zero. Both draws run in the fixed for_each order.
  void init(uint64_t seed) {
    auto wrng = make_rng(derive_seed(seed, {seed_scope::kParamInit}));
    p.for_each_weight([&](Tensor& w) { w = Tensor::uniform(w.shape, wrng, -0.08, 0.08); });
    auto erng = make_rng(derive_seed(seed, {seed_scope::kEmbeddingInit}));
    p.word_table = Tensor::uniform(p.word_table.shape, erng, -0.05, 0.05);
    p.rel_table = Tensor::uniform(p.rel_table.shape, erng, -0.05, 0.05);
  }
};

enum class RunMode { train, eval };

// Parameters bound onto one tape. `grads` may be null for inference; the
// trunk (embeddings, both channel BiLSTMs, convolution) is bound once and
// shared by the two directional passes.
struct BoundModel {
  const ModelParams* params = nullptr;
  Gradients* grads = nullptr;
  LstmDirRefs word_fwd, word_bwd, rel_fwd, rel_bwd;
  Var w_con, b_con;
  Var w_fine_fwd, b_fine_fwd;
  Var w_fine_bwd, b_fine_bwd;
  Var w_coarse, b_coarse;

  static BoundModel bind(Tape& t, const ModelParams& m, Gradients* g) {
    BoundModel b;
    b.params = &m;
    b.grads = g;
    b.word_fwd = bind_lstm(t, m.p.word_fwd, g ? &g->word_fwd : nullptr);
    b.word_bwd = bind_lstm(t, m.p.word_bwd, g ? &g->word_bwd : nullptr);
    b.rel_fwd = bind_lstm(t, m.p.rel_fwd, g ? &g->rel_fwd : nullptr);
    b.rel_bwd = bind_lstm(t, m.p.rel_bwd, g ? &g->rel_bwd : nullptr);
    b.w_con = t.param(m.p.w_con, g ? &g->w_con : nullptr);
    b.b_con = t.param(m.p.b_con, g ? &g->b_con : nullptr);
    b.w_fine_fwd = t.param(m.p.w_fine_fwd, g ? &g->w_fine_fwd : nullptr);
    b.b_fine_fwd = t.param(m.p.b_fine_fwd, g ? &g->b_fine_fwd : nullptr);
    b.w_fine_bwd = t.param(m.p.w_fine_bwd, g ? &g->w_fine_bwd : nullptr);
    b.b_fine_bwd = t.param(m.p.b_fine_bwd, g ? &g->b_fine_bwd : nullptr);
    b.w_coarse = t.param(m.p.w_coarse, g ? &g->w_coarse : nullptr);
    b.b_coarse = t.param(m.p.b_coarse, g ? &g->b_coarse : nullptr);
    return b;
  }

  std::vector<Var> l2_weights() const {
    return {word_fwd.wx, word_fwd.wh, word_bwd.wx, word_bwd.wh, rel_fwd.wx, rel_fwd.wh,
            rel_bwd.wx,  rel_bwd.wh,  w_con,       w_fine_fwd,  w_fine_bwd, w_coarse};
  }
};

struct PathEmbedding {
  std::vector<Var> words;
  std::vector<Var> rels;
};

// Embedding lookups for one path, with inverted dropout on the embeddings in
// train mode. `salt` keeps every dropout mask in the instance distinct.
inline PathEmbedding embed_path(Tape& t, const BoundModel& m, const SdpPath& path, RunMode mode,
                                double keep_prob, uint64_t dropout_seed, uint64_t& salt) {
  PathEmbedding e;
  bool training = mode == RunMode::train;
  Tensor* wsink = m.grads ? &m.grads->word_table : nullptr;
  Tensor* rsink = m.grads ? &m.grads->rel_table : nullptr;
  for (const std::string& w : path.words) {
    Var v = t.lookup(m.params->p.word_table, wsink, word_row(m.params->word_vocab, w));
    e.words.push_back(
        t.dropout(v, keep_prob, derive_seed(dropout_seed, {seed_scope::kDropout, salt++}),
                  training));
  }
  for (const SdpEdge& edge : path.edges) {
    Var v = t.lookup(m.params->p.rel_table, rsink, rel_row(m.params->rel_vocab, edge));
    e.rels.push_back(
        t.dropout(v, keep_prob, derive_seed(dropout_seed, {seed_scope::kDropout, salt++}),
                  training));
  }
  return e;
}

struct RcnnOut {
  Var pooled;
  Var logits;
};

// One directional pass: both channels through their BiLSTMs, a convolution
// unit per edge, max pooling, then the fine-grained classifier.
inline RcnnOut rcnn_forward(Tape& t, const BoundModel& m, const PathEmbedding& e, Var w_fine,
                            Var b_fine) {
  auto wstates = bilstm(t, e.words, m.word_fwd, m.word_bwd);
  auto rstates = bilstm(t, e.rels, m.rel_fwd, m.rel_bwd);
  std::vector<Var> h_word, h_rel;
  h_word.reserve(wstates.size());
  for (auto& [f, b] : wstates) h_word.push_back(t.concat(f, b));
  h_rel.reserve(rstates.size());
  for (auto& [f, b] : rstates) h_rel.push_back(t.concat(f, b));
  std::vector<Var> conv;
  for (size_t i = 0; i + 1 < h_word.size(); ++i)
    conv.push_back(conv_unit(t, h_word[i], h_rel[i], h_word[i + 1], m.w_con, m.b_con));
  RcnnOut out;
  out.pooled = t.max_pool(conv);
  out.logits = t.affine(out.pooled, w_fine, b_fine);
  return out;
}

struct ForwardOut {
  SdpPath path;
  Var fine_fwd, fine_bwd, coarse;
};

// Both directional passes over the instance's path plus the coarse
// classifier over the concatenated pooled vectors.
inline ForwardOut brcnn_forward(Tape& t, const BoundModel& m, const RelationInstance& inst,
                                RunMode mode, double keep_prob, uint64_t dropout_seed) {
  ForwardOut out;
  out.path = path_for(inst.sentence, m.params->strategy, inst.e1_head(), inst.e2_head());
  SdpPath rev = reverse_path(out.path);
  uint64_t salt = 0;
  PathEmbedding ef = embed_path(t, m, out.path, mode, keep_prob, dropout_seed, salt);
  PathEmbedding eb = embed_path(t, m, rev, mode, keep_prob, dropout_seed, salt);
  RcnnOut f = rcnn_forward(t, m, ef, m.w_fine_fwd, m.b_fine_fwd);
  RcnnOut b = rcnn_forward(t, m, eb, m.w_fine_bwd, m.b_fine_bwd);
  out.fine_fwd = f.logits;
  out.fine_bwd = b.logits;
  out.coarse = t.affine(t.concat(f.pooled, b.pooled), m.w_coarse, m.b_coarse);
  return out;
}

struct LossOut {
  Var loss;
  Tensor probs_fwd, probs_bwd, probs_coarse;
};

// Sum of the three cross-entropies plus the L2 penalty. The backward pass
// is trained on the direction-swapped target.
inline LossOut brcnn_loss(Tape& t, const BoundModel& m, const ForwardOut& f,
                          const std::string& label, Direction dir, double lambda) {
  const LabelSchema& schema = m.params->schema;
  size_t tgt_fwd = schema.directed_index(label, dir);
  size_t tgt_bwd = schema.z_index(tgt_fwd);
  size_t tgt_coarse = schema.coarse_index(label);
  auto [pf, lf] = t.softmax_xent(f.fine_fwd, tgt_fwd);
  auto [pb, lb] = t.softmax_xent(f.fine_bwd, tgt_bwd);
  auto [pc, lc] = t.softmax_xent(f.coarse, tgt_coarse);
  std::vector<Var> weights = m.l2_weights();
  Var parts[4] = {lf, lb, lc, t.l2_penalty(weights, lambda)};
  return {t.sum(parts), std::move(pf), std::move(pb), std::move(pc)};
}

// Blend of the forward distribution and the direction-swapped backward
// distribution.
inline Tensor decode_scores(const Tensor& probs_fwd, const Tensor& probs_bwd, double alpha) {
  Tensor zb = z_map(probs_bwd);
  if (!probs_fwd.same_shape(zb))
    throw NumericError(strf("decode: forward %s and backward %s disagree",
                            probs_fwd.shape_str().c_str(), zb.shape_str().c_str()));
  Tensor s = Tensor::zeros(probs_fwd.shape);
  for (size_t i = 0; i < s.size(); ++i)
    s.at(i) = alpha * probs_fwd.at(i) + (1.0 - alpha) * zb.at(i);
  return s;
}

struct Prediction {
  size_t directed = 0;
  size_t coarse = 0;
  std::string label;
  Direction direction = Direction::none;
  Tensor scores;         // blended directed distribution
  Tensor coarse_scores;  // coarse distribution
};

inline Prediction decode(const Tensor& probs_fwd, const Tensor& probs_bwd,
                         const Tensor& probs_coarse, const LabelSchema& schema, double alpha) {
  Prediction pred;
  pred.scores = decode_scores(probs_fwd, probs_bwd, alpha);
  pred.directed = argmax(pred.scores);
  pred.coarse = argmax(probs_coarse);
  pred.coarse_scores = probs_coarse;
  auto [label, d] = schema.directed_label(pred.directed);
  pred.label = std::move(label);
  pred.direction = d;
  return pred;
}

inline Prediction predict_instance(const ModelParams& m, const RelationInstance& inst) {
  Tape t;
  BoundModel bm = BoundModel::bind(t, m, nullptr);
  ForwardOut f = brcnn_forward(t, bm, inst, RunMode::eval, 1.0, 0);
  return decode(softmax(t.value(f.fine_fwd)), softmax(t.value(f.fine_bwd)),
                softmax(t.value(f.coarse)), m.schema, m.alpha);
}

}  // namespace srbrcnn
