#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "srbrcnn/checkpoint.hpp"
#include "srbrcnn/metrics.hpp"
#include "srbrcnn/model.hpp"

namespace srbrcnn {

// Running second-moment accumulators for the update rule that rescales each
// gradient by the ratio of the two RMS terms.
struct AdaDeltaState {
  ParamSet eg2, edx2;
  double rho = 0.95;
  double eps = 1e-6;

  static AdaDeltaState init(const ParamSet& shape, double rho, double eps) {
    AdaDeltaState s;
    s.eg2 = shape.zeros_like();
    s.edx2 = shape.zeros_like();
    s.rho = rho;
    s.eps = eps;
    return s;
  }
};

// One tensor update. The step uses the previous accumulated update RMS, then
// folds the fresh step into it.
inline void adadelta_tensor_step(Tensor& x, const Tensor& g, Tensor& eg2, Tensor& edx2,
                                 double rho, double eps) {
  for (size_t i = 0; i < x.size(); ++i) {
    double gi = g.at(i);
    eg2.at(i) = rho * eg2.at(i) + (1.0 - rho) * gi * gi;
    double dx = -std::sqrt(edx2.at(i) + eps) / std::sqrt(eg2.at(i) + eps) * gi;
    edx2.at(i) = rho * edx2.at(i) + (1.0 - rho) * dx * dx;
    x.at(i) += dx;
  }
}

inline void adadelta_step(ParamSet& params, const Gradients& grads, AdaDeltaState& st) {
  std::vector<const Tensor*> gs;
  grads.for_each([&](const char*, const Tensor& t) { gs.push_back(&t); });
  std::vector<Tensor*> e1s, e2s;
  st.eg2.for_each([&](const char*, Tensor& t) { e1s.push_back(&t); });
  st.edx2.for_each([&](const char*, Tensor& t) { e2s.push_back(&t); });
  size_t i = 0;
  params.for_each([&](const char* name, Tensor& x) {
    if (!x.same_shape(*gs[i]))
      throw NumericError(strf("adadelta: gradient shape mismatch for %s", name));
    adadelta_tensor_step(x, *gs[i], *e1s[i], *e2s[i], st.rho, st.eps);
    ++i;
  });
}

struct TrainConfig {
  size_t epochs = 50;
  size_t batch_size = 16;
  size_t patience = 10;
  double lambda = 1e-4;
  double keep_prob = 0.5;
  double rho = 0.95;
  double eps = 1e-6;
  double alpha = 0.5;
  uint64_t seed = 0;
  std::optional<CutStrategy> strategy;
  size_t word_dim = 200;
  size_t rel_dim = 50;
  size_t conv_dim = 0;  // 0 means same as word_dim
  std::string embeddings_path;
  bool timing = true;

  size_t effective_conv_dim() const { return conv_dim == 0 ? word_dim : conv_dim; }
};

// Pretrained vectors in plain word2vec text format: a "count dim" header,
// then one word and its values per line. Words absent from the file keep
// their random initialization; file words outside the vocabulary are
// ignored.
inline Tensor load_word_vectors(const std::string& path, const Vocab& vocab, size_t dim,
                                uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open word vectors: " + path);
  auto rng = make_rng(derive_seed(seed, {seed_scope::kEmbeddingInit}));
  Tensor table = Tensor::uniform({vocab.size(), dim}, rng, -0.05, 0.05);

  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty word vector file", 1);
  std::istringstream head(line);
  size_t count = 0, file_dim = 0;
  if (!(head >> count >> file_dim)) throw ParseError("malformed word vector header", 1);
  if (file_dim != dim)
    throw DataError(strf("word vectors have dimension %zu, model expects %zu", file_dim, dim));

  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) throw ParseError("malformed word vector line", line_no);
    std::vector<double> vals(dim);
    for (size_t d = 0; d < dim; ++d)
      if (!(ls >> vals[d]))
        throw ParseError(strf("word \"%s\" has fewer than %zu values", word.c_str(), dim),
                         line_no);
    double extra;
    if (ls >> extra)
      throw ParseError(strf("word \"%s\" has more than %zu values", word.c_str(), dim), line_no);
    if (auto row = vocab.find(word))
      std::copy(vals.begin(), vals.end(), table.data.begin() + *row * dim);
  }
  return table;
}

// One pass over the training set in a seed- and epoch-determined order.
// Batch gradients are averaged over the instances that produced a loss;
// instances with unusable paths are skipped, and a pass where every single
// instance failed is an error.
inline double train_epoch(ModelParams& m, const std::vector<RelationInstance>& train,
                          const TrainConfig& cfg, AdaDeltaState& st, size_t epoch) {
  if (train.empty()) throw DataError("training set is empty");
  std::vector<size_t> order(train.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto rng = make_rng(derive_seed(cfg.seed, {seed_scope::kShuffle, epoch}));
  shuffle_in_place(order, rng);

  double loss_sum = 0.0;
  size_t ok = 0;
  for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
    size_t stop = std::min(start + cfg.batch_size, order.size());
    Gradients acc = m.p.zeros_like();
    size_t batch_ok = 0;
    for (size_t k = start; k < stop; ++k) {
      const RelationInstance& inst = train[order[k]];
      uint64_t dseed = derive_seed(cfg.seed, {seed_scope::kDropout, epoch, order[k]});
      try {
        Tape t;
        BoundModel bm = BoundModel::bind(t, m, &acc);
        ForwardOut f = brcnn_forward(t, bm, inst, RunMode::train, cfg.keep_prob, dseed);
        LossOut l = brcnn_loss(t, bm, f, inst.label, inst.direction, cfg.lambda);
        t.backward(l.loss);
        loss_sum += t.value(l.loss).at(0);
        ++batch_ok;
      } catch (const DataError&) {
        // unusable instance (e.g. both entities share a head token)
      }
    }
    if (batch_ok == 0) continue;
    acc.scale(1.0 / static_cast<double>(batch_ok));
    adadelta_step(m.p, acc, st);
    ok += batch_ok;
  }
  if (ok == 0) throw DataError("no training instance produced a usable path");
  return loss_sum / static_cast<double>(ok);
}

struct EarlyStopper {
  size_t patience = 10;
  double best = -std::numeric_limits<double>::infinity();
  size_t since_best = 0;

  // True when `value` strictly improves on the best seen so far.
  bool update(double value) {
    if (value > best) {
      best = value;
      since_best = 0;
      return true;
    }
    ++since_best;
    return false;
  }
  bool should_stop() const { return since_best >= patience; }
};

struct EpochLog {
  size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  double dev_macro_f1 = 0.0;
  double seconds = 0.0;
};

struct FitResult {
  ModelParams best;
  size_t best_epoch = 0;
  double best_dev_f1 = 0.0;
  std::vector<EpochLog> log;
};

inline std::string render_log_row(const EpochLog& e) {
  return strf("%zu,%.6f,%.6f,%.3f\n", e.epoch, e.mean_loss, e.dev_macro_f1, e.seconds);
}

inline std::string render_training_log(const std::vector<EpochLog>& log) {
  std::string out = "epoch,mean_loss,dev_macro_f1,seconds\n";
  for (const EpochLog& e : log) out += render_log_row(e);
  return out;
}

using EpochSink = std::function<void(const EpochLog&, const ModelParams&)>;

// Full training run: derive the schema and vocabularies from the training
// split, initialize, then epochs with dev-set early stopping. The model with
// the best dev macro F1 wins; the first epoch always sets a baseline.
inline FitResult fit(const std::vector<RelationInstance>& train,
                     const std::vector<RelationInstance>& dev, const TrainConfig& cfg,
                     const EpochSink& sink = {}) {
  if (cfg.epochs == 0) throw DataError("epochs must be positive");
  if (cfg.batch_size == 0) throw DataError("batch size must be positive");
  if (train.empty()) throw DataError("training split is empty");
  if (dev.empty()) throw DataError("dev split is empty");
  LabelSchema schema = LabelSchema::from_instances(train);
  auto [words, rels] = build_vocabs(train, cfg.strategy);
  ModelParams m = ModelParams::shaped(std::move(schema), std::move(words), std::move(rels),
                                      cfg.word_dim, cfg.rel_dim, cfg.effective_conv_dim());
  m.alpha = cfg.alpha;
  m.strategy = cfg.strategy;
  m.init(cfg.seed);
  if (!cfg.embeddings_path.empty())
    m.p.word_table = load_word_vectors(cfg.embeddings_path, m.word_vocab, m.word_dim, cfg.seed);

  AdaDeltaState st = AdaDeltaState::init(m.p, cfg.rho, cfg.eps);
  EarlyStopper stopper{cfg.patience};
  FitResult r;
  for (size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    double mean_loss = train_epoch(m, train, cfg, st, epoch);
    double dev_f1 = evaluate_model(m, dev).macro_f1;
    std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    EpochLog e{epoch, mean_loss, dev_f1, cfg.timing ? dt.count() : 0.0};
    r.log.push_back(e);
    if (stopper.update(dev_f1)) {
      r.best = m;
      r.best_epoch = epoch;
      r.best_dev_f1 = dev_f1;
    }
    if (sink) sink(e, m);
    if (stopper.should_stop()) break;
  }
  return r;
}

// Training run with artifacts: streams training_log.csv, saves a checkpoint
// per epoch plus the best model as best.ckpt under out_dir.
inline FitResult run_training(const std::vector<RelationInstance>& train,
                              const std::vector<RelationInstance>& dev, const TrainConfig& cfg,
                              const std::string& out_dir, std::ostream* progress = nullptr) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::string log_path = (fs::path(out_dir) / "training_log.csv").string();
  std::ofstream log(log_path, std::ios::binary);
  if (!log) throw DataError(strf("cannot write %s", log_path.c_str()));
  log << "epoch,mean_loss,dev_macro_f1,seconds\n";
  EpochSink sink = [&](const EpochLog& e, const ModelParams& m) {
    log << render_log_row(e);
    log.flush();
    save_checkpoint_file((fs::path(out_dir) / strf("epoch_%zu.ckpt", e.epoch)).string(), m);
    if (progress)
      *progress << strf("epoch %zu  loss %.6f  dev_f1 %.6f\n", e.epoch, e.mean_loss,
                        e.dev_macro_f1);
  };
  FitResult r = fit(train, dev, cfg, sink);
  save_checkpoint_file((fs::path(out_dir) / "best.ckpt").string(), r.best);
  return r;
}

}  // namespace srbrcnn
