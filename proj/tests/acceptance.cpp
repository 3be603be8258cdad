// Acceptance gate: eight self-contained checks over the shipped library,
// one line of output each, plus an optional corpus comparison that prints
// SKIP when no corpus directory is supplied. Exits nonzero on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "srbrcnn/ablation.hpp"
#include "srbrcnn/srbrcnn.hpp"
#include "support/helpers.hpp"

using namespace srbrcnn;
using namespace srbrcnn::testing;

namespace {

int failures = 0;

void report(int n, bool pass, const std::string& note) {
  std::printf("criterion %d: %s (%s)\n", n, pass ? "PASS" : "FAIL", note.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 1. Path extraction agrees with breadth-first search on the undirected
//    edge set, for every ordered node pair of 500 random trees.
void criterion1() {
  auto t0 = std::chrono::steady_clock::now();
  auto rng = make_rng(101);
  size_t pairs = 0, mismatches = 0;
  for (int it = 0; it < 500; ++it) {
    size_t n = 2 + uniform_index(rng, 11);
    DependencyTree t = random_tree(rng, n);
    for (size_t a = 1; a <= n; ++a)
      for (size_t b = 1; b <= n; ++b) {
        if (a == b) continue;
        ++pairs;
        if (extract_sdp(t, a, b).word_indices != bfs_path(t, a, b)) ++mismatches;
      }
  }
  double secs = seconds_since(t0);
  report(1, mismatches == 0 && secs < 10.0,
         strf("%zu ordered pairs over 500 trees, %zu mismatches, %.2f s", pairs, mismatches,
              secs));
}

// 2. The seven-token fixture reproduces both the plain path b-a-c-e-g and,
//    once token e is cut, the shortened path b-a-e-g over a tree that still
//    validates.
void criterion2() {
  std::vector<Sentence> sents = parse_conllu_file(SRBRCNN_DATA_DIR "/fig2.conllu");
  bool ok = sents.size() == 1;
  const DependencyTree& t = sents.at(0).tree;

  SdpPath plain = extract_sdp(t, 2, 7);
  ok = ok && plain.words == std::vector<std::string>{"b", "a", "c", "e", "g"};
  ok = ok && plain.edges.size() == 4;
  ok = ok && plain.edges[0] == SdpEdge{"nsubj", Traversal::up};
  ok = ok && plain.edges[1] == SdpEdge{"obj", Traversal::down};
  ok = ok && plain.edges[2] == SdpEdge{"case", Traversal::down};
  ok = ok && plain.edges[3] == SdpEdge{"obl", Traversal::down};

  DependencyTree flat = flatten(t, {5});
  ok = ok && !validate_tree(flat).has_value();

  SdpPath sr = extract_sdp(flat, 2, 7);
  ok = ok && sr.words == std::vector<std::string>{"b", "a", "e", "g"};
  ok = ok && sr.edges.size() == 3;
  ok = ok && sr.edges[0] == SdpEdge{"nsubj", Traversal::up};
  ok = ok && sr.edges[1] == SdpEdge{kSrcutDeprel, Traversal::down};
  ok = ok && sr.edges[2] == SdpEdge{"obl", Traversal::down};

  // the preposition strategy picks the same cut on this tree
  CutStrategy prep;
  prep.kind = CutKind::preposition;
  ok = ok && sr_sdp(t, prep, 2, 7) == sr;

  report(2, ok, "plain b-a-c-e-g, cut {e} gives b-a-e-g, flattened tree validates");
}

// 3. Central finite differences confirm every analytic gradient, primitive
//    by primitive and through the whole objective on a three-edge path.
void criterion3() {
  auto t0 = std::chrono::steady_clock::now();
  GradSuiteResult res = run_gradcheck_suite(2024, 1e-4, 1e-4);
  double worst = 0.0;
  size_t coords = 0;
  for (const auto& [name, rep] : res.checks) {
    worst = std::max(worst, rep.max_rel_err);
    coords += rep.coords;
  }
  double secs = seconds_since(t0);
  report(3, res.pass && secs < 60.0,
         strf("%zu checks, %zu coordinates, max rel err %.3e, %.2f s", res.checks.size(),
              coords, worst, secs));
}

// 4. A zero-initialized model with nine relations yields exactly the
//    uniform-softmax loss 2 ln 19 + ln 10.
void criterion4() {
  LabelSchema schema = LabelSchema::from_labels(
      {"R1", "R2", "R3", "R4", "R5", "R6", "R7", "R8", "R9"});
  RelationInstance inst = make_instance(fig2_tree(), {2, 2}, {7, 7}, "R5");
  auto [words, rels] = build_vocabs({inst}, std::nullopt);
  ModelParams m = ModelParams::shaped(schema, words, rels, 8, 4, 8);

  Tape t;
  BoundModel bm = BoundModel::bind(t, m, nullptr);
  ForwardOut f = brcnn_forward(t, bm, inst, RunMode::eval, 1.0, 0);
  LossOut lo = brcnn_loss(t, bm, f, inst.label, inst.direction, 0.0);
  double loss = t.value(lo.loss).at(0);
  double expected = 2.0 * std::log(19.0) + std::log(10.0);
  double diff = std::abs(loss - expected);
  report(4, diff < 1e-9, strf("loss %.12f vs 2 ln 19 + ln 10, abs diff %.3e", loss, diff));
}

// 5. Direction-swap algebra: the swap map is an involution, alpha = 1
//    decoding is the forward argmax, and when both directions agree the
//    decision cannot depend on alpha.
void criterion5() {
  auto rng = make_rng(909);
  LabelSchema schema = LabelSchema::from_labels({"A", "B", "C"});
  size_t bad = 0;
  const double alphas[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  for (int it = 0; it < 1000; ++it) {
    size_t k = 1 + uniform_index(rng, 6);
    Tensor v = Tensor::zeros({2 * k + 1});
    double sum = 0.0;
    for (size_t i = 0; i < v.size(); ++i) {
      v.at(i) = 1e-3 + static_cast<double>(uniform_index(rng, 1000));
      sum += v.at(i);
    }
    for (size_t i = 0; i < v.size(); ++i) v.at(i) /= sum;
    Tensor vv = z_map(z_map(v));
    for (size_t i = 0; i < v.size(); ++i)
      if (vv.at(i) != v.at(i)) ++bad;

    auto random_dist = [&](size_t len) {
      Tensor d = Tensor::zeros({len});
      double s = 0.0;
      for (size_t i = 0; i < len; ++i) {
        d.at(i) = 1e-3 + static_cast<double>(uniform_index(rng, 1000));
        s += d.at(i);
      }
      for (size_t i = 0; i < len; ++i) d.at(i) /= s;
      return d;
    };
    Tensor pf = random_dist(schema.directed_count());
    Tensor pb = random_dist(schema.directed_count());
    Tensor pc = random_dist(schema.coarse_count());
    if (decode(pf, pb, pc, schema, 1.0).directed != argmax(pf)) ++bad;

    Tensor agree_bwd = z_map(pf);
    size_t want = argmax(pf);
    for (double a : alphas)
      if (decode(pf, agree_bwd, pc, schema, a).directed != want) ++bad;
  }
  report(5, bad == 0, strf("1000 rounds of involution, argmax and agreement checks, %zu failures",
                           bad));
}

// 6. The model memorizes a 20-instance fixture whose center token names the
//    class: accuracy at least 95% and the mean loss at least halved by
//    epoch 50.
void criterion6() {
  auto t0 = std::chrono::steady_clock::now();
  std::vector<RelationInstance> data = overfit_fixture();
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.patience = 1000;
  cfg.batch_size = 2;
  cfg.word_dim = 16;
  cfg.rel_dim = 8;
  cfg.keep_prob = 1.0;
  cfg.lambda = 0.0;
  cfg.seed = 9;
  cfg.timing = false;
  FitResult r = fit(data, data, cfg);
  MetricsReport rep = evaluate_model(r.best, data);
  double acc = static_cast<double>(rep.correct) / static_cast<double>(rep.total);
  double first = r.log.at(0).mean_loss;
  double at50 = r.log.at(49).mean_loss;
  double secs = seconds_since(t0);
  bool ok = acc >= 0.95 && at50 <= 0.5 * first && secs < 120.0;
  report(6, ok,
         strf("train accuracy %.2f, mean loss %.4f at epoch 1 vs %.4f at epoch 50, %.1f s", acc,
              first, at50, secs));
}

// 7. Two training runs with the same seed leave byte-identical best
//    checkpoints and logs behind.
void criterion7() {
  namespace fs = std::filesystem;
  std::vector<RelationInstance> all = overfit_fixture();
  std::vector<RelationInstance> train(all.begin(), all.begin() + 16);
  std::vector<RelationInstance> dev(all.begin() + 16, all.end());
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 4;
  cfg.word_dim = 6;
  cfg.rel_dim = 4;
  cfg.keep_prob = 0.5;
  cfg.seed = 7;
  cfg.timing = false;

  fs::path base = fs::temp_directory_path() / strf("srbrcnn_accept_%d", ::getpid());
  fs::remove_all(base);
  fs::path a = base / "run_a";
  fs::path b = base / "run_b";
  run_training(train, dev, cfg, a.string());
  run_training(train, dev, cfg, b.string());
  bool ckpt_eq = slurp(a / "best.ckpt") == slurp(b / "best.ckpt");
  bool log_eq = slurp(a / "training_log.csv") == slurp(b / "training_log.csv");
  bool nonempty = !slurp(a / "best.ckpt").empty() && !slurp(a / "training_log.csv").empty();
  fs::remove_all(base);
  report(7, ckpt_eq && log_eq && nonempty,
         strf("best checkpoints byte-equal: %s, logs byte-equal: %s", ckpt_eq ? "yes" : "no",
              log_eq ? "yes" : "no"));
}

// 8. Flattening 500 random trees under random admissible cut sets keeps the
//    token multiset, rewrites only the cut nodes, never deepens a token,
//    and always yields a valid tree.
void criterion8() {
  auto rng = make_rng(808);
  size_t bad = 0;
  for (int it = 0; it < 500; ++it) {
    size_t n = 2 + uniform_index(rng, 11);
    DependencyTree t = random_tree(rng, n);
    size_t root = t.root();
    std::vector<size_t> cuts;
    std::vector<char> is_cut(n + 1, 0);
    for (size_t i = 1; i <= n; ++i)
      if (i != root && uniform_index(rng, 10) < 3) {
        cuts.push_back(i);
        is_cut[i] = 1;
      }
    DependencyTree flat = flatten(t, cuts);

    bool ok = form_multiset(flat) == form_multiset(t);
    for (size_t i = 1; i <= n && ok; ++i) {
      if (is_cut[i])
        ok = flat.at(i).head == root && flat.at(i).deprel == kSrcutDeprel;
      else
        ok = flat.at(i).head == t.at(i).head && flat.at(i).deprel == t.at(i).deprel;
    }
    if (ok) {
      std::vector<size_t> before = t.depths();
      std::vector<size_t> after = flat.depths();
      for (size_t i = 1; i <= n && ok; ++i) ok = after[i] <= before[i];
    }
    ok = ok && !validate_tree(flat).has_value();
    if (!ok) ++bad;
  }
  report(8, bad == 0, strf("500 trees with random cut sets, %zu invariant failures", bad));
}

// 9. Optional corpus comparison: with a real corpus supplied, training with
//    the preposition strategy must beat training with none on dev macro F1
//    under an otherwise shared configuration.
void criterion9() {
  const char* dir = std::getenv("SRBRCNN_CORPUS_DIR");
  if (dir == nullptr) {
    std::printf(
        "criterion 9: SKIP (corpus not supplied; set SRBRCNN_CORPUS_DIR to a directory with "
        "corpus.conllu and instances.jsonl)\n");
    return;
  }
  namespace fs = std::filesystem;
  fs::path root(dir);
  std::vector<Sentence> sents = parse_conllu_file((root / "corpus.conllu").string());
  std::vector<InstanceRecord> recs =
      parse_instance_jsonl(read_text_file((root / "instances.jsonl").string()));
  std::vector<RelationInstance> insts = build_instances(sents, recs);

  std::set<std::string> articles;
  for (const RelationInstance& inst : insts) articles.insert(article_id_of(inst.sent_id));
  size_t n_art = articles.size();
  SplitCounts counts;
  counts.dev = std::max<size_t>(1, n_art / 10);
  counts.test = std::max<size_t>(1, n_art / 10);
  counts.train = n_art - counts.dev - counts.test;
  auto split = split_by_article(insts, counts, 9);

  TrainConfig cfg;
  cfg.epochs = 25;
  cfg.patience = 5;
  cfg.word_dim = 50;
  cfg.rel_dim = 25;
  cfg.seed = 9;
  cfg.timing = false;
  FitResult plain = fit(split[0], split[1], cfg);
  cfg.strategy = CutStrategy{CutKind::preposition, 0.15, 0};
  FitResult prep = fit(split[0], split[1], cfg);
  report(9, prep.best_dev_f1 > plain.best_dev_f1,
         strf("dev macro F1 %.4f with preposition cuts vs %.4f without", prep.best_dev_f1,
              plain.best_dev_f1));
}

}  // namespace

int main() {
  struct Step {
    int n;
    void (*fn)();
  };
  const Step steps[] = {{1, criterion1}, {2, criterion2}, {3, criterion3},
                        {4, criterion4}, {5, criterion5}, {6, criterion6},
                        {7, criterion7}, {8, criterion8}, {9, criterion9}};
  for (const Step& s : steps) {
    try {
      s.fn();
    } catch (const std::exception& e) {
      report(s.n, false, strf("unexpected exception: %s", e.what()));
    }
  }
  if (failures == 0) {
    std::printf("acceptance: all criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criteria failed\n", failures);
  return 1;
}
