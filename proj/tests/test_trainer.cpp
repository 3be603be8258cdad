#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "support/helpers.hpp"

using namespace srbrcnn;
using namespace srbrcnn::testing;
using Catch::Approx;

namespace {

namespace fs = std::filesystem;

// Unique scratch directory per test run.
fs::path scratch_dir() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() /
                 strf("srbrcnn-test-%lu", static_cast<unsigned long>(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string write_scratch(const std::string& name, const std::string& content) {
  fs::path p = scratch_dir() / name;
  std::ofstream out(p, std::ios::binary);
  out << content;
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TrainConfig small_config(uint64_t seed) {
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 4;
  cfg.patience = 10;
  cfg.word_dim = 6;
  cfg.rel_dim = 4;
  cfg.seed = seed;
  cfg.timing = false;
  return cfg;
}

bool same_params(const ParamSet& a, const ParamSet& b) {
  std::vector<const Tensor*> xs, ys;
  a.for_each([&](const char*, const Tensor& t) { xs.push_back(&t); });
  b.for_each([&](const char*, const Tensor& t) { ys.push_back(&t); });
  for (size_t i = 0; i < xs.size(); ++i)
    if (xs[i]->shape != ys[i]->shape || xs[i]->data != ys[i]->data) return false;
  return true;
}

}  // namespace

TEST_CASE("update rule follows a hand-computed scalar trace", "[trainer]") {
  Tensor x = Tensor::scalar(1.0);
  Tensor eg2 = Tensor::scalar(0.0), edx2 = Tensor::scalar(0.0);
  double rho = 0.9, eps = 1e-6;

  adadelta_tensor_step(x, Tensor::scalar(1.0), eg2, edx2, rho, eps);
  CHECK(x.at(0) == Approx(0.9968377381511013).margin(1e-15));
  CHECK(eg2.at(0) == Approx(0.1).margin(1e-15));
  CHECK(edx2.at(0) == Approx(9.999900000999991e-07).margin(1e-18));

  adadelta_tensor_step(x, Tensor::scalar(-0.5), eg2, edx2, rho, eps);
  CHECK(x.at(0) == Approx(0.998922868013095).margin(1e-15));
  CHECK(eg2.at(0) == Approx(0.115).margin(1e-15));

  adadelta_tensor_step(x, Tensor::scalar(0.25), eg2, edx2, rho, eps);
  CHECK(x.at(0) == Approx(0.9977697928978158).margin(1e-15));
  CHECK(eg2.at(0) == Approx(0.10975).margin(1e-15));
  CHECK(edx2.at(0) == Approx(1.3342491109526323e-06).margin(1e-18));
}

TEST_CASE("first step only sees the fresh gradient", "[trainer]") {
  double rho = 0.95, eps = 1e-6, g = 0.7;
  Tensor x = Tensor::scalar(2.0);
  Tensor eg2 = Tensor::scalar(0.0), edx2 = Tensor::scalar(0.0);
  adadelta_tensor_step(x, Tensor::scalar(g), eg2, edx2, rho, eps);
  double want_dx = -std::sqrt(eps) / std::sqrt((1 - rho) * g * g + eps) * g;
  CHECK(x.at(0) == Approx(2.0 + want_dx).margin(1e-15));
  CHECK(eg2.at(0) == Approx((1 - rho) * g * g).margin(1e-15));
  CHECK(edx2.at(0) == Approx((1 - rho) * want_dx * want_dx).margin(1e-18));
}

TEST_CASE("zero gradient leaves parameters alone and decays accumulators", "[trainer]") {
  Tensor x = Tensor::scalar(1.5);
  Tensor eg2 = Tensor::scalar(0.2), edx2 = Tensor::scalar(0.1);
  adadelta_tensor_step(x, Tensor::scalar(0.0), eg2, edx2, 0.9, 1e-6);
  CHECK(x.at(0) == 1.5);
  CHECK(eg2.at(0) == Approx(0.18).margin(1e-15));
  CHECK(edx2.at(0) == Approx(0.09).margin(1e-15));
}

TEST_CASE("updates oppose the gradient and keep accumulators non-negative",
          "[trainer][property]") {
  auto rng = make_rng(307);
  Tensor x = Tensor::scalar(0.0);
  Tensor eg2 = Tensor::scalar(0.0), edx2 = Tensor::scalar(0.0);
  for (size_t step = 0; step < 10; ++step) {
    double g = uniform_in(rng, -2.0, 2.0);
    double before = x.at(0);
    adadelta_tensor_step(x, Tensor::scalar(g), eg2, edx2, 0.95, 1e-6);
    REQUIRE(eg2.at(0) >= 0.0);
    REQUIRE(edx2.at(0) >= 0.0);
    if (g > 0) REQUIRE(x.at(0) < before);
    if (g < 0) REQUIRE(x.at(0) > before);
  }
}

TEST_CASE("whole-model step walks tensors in lockstep", "[trainer]") {
  std::vector<RelationInstance> insts{fig2_instance()};
  auto [words, rels] = build_vocabs(insts, std::nullopt);
  ModelParams m = ModelParams::shaped(LabelSchema{{"A"}}, words, rels, 4, 3, 4);
  m.init(11);
  AdaDeltaState st = AdaDeltaState::init(m.p, 0.95, 1e-6);

  SECTION("all-zero gradients are a no-op on the parameters") {
    st.eg2.word_table.fill(0.5);
    ParamSet before = m.p;
    Gradients zero = m.p.zeros_like();
    adadelta_step(m.p, zero, st);
    CHECK(same_params(m.p, before));
    CHECK(st.eg2.word_table.at(0) == Approx(0.95 * 0.5).margin(1e-15));
  }
  SECTION("shape mismatch is reported") {
    Gradients bad = m.p.zeros_like();
    bad.w_con = Tensor::zeros({1});
    CHECK_THROWS_AS(adadelta_step(m.p, bad, st), NumericError);
  }
  SECTION("a real gradient moves the parameters") {
    Gradients g = m.p.zeros_like();
    g.w_con.fill(0.3);
    ParamSet before = m.p;
    adadelta_step(m.p, g, st);
    CHECK_FALSE(same_params(m.p, before));
    CHECK(m.p.word_table.data == before.word_table.data);  // untouched tensors stay put
  }
}

TEST_CASE("a training epoch is a pure function of model, data and seed", "[trainer]") {
  auto insts = overfit_fixture();
  std::vector<RelationInstance> train(insts.begin(), insts.begin() + 8);
  TrainConfig cfg = small_config(21);
  auto run = [&]() {
    LabelSchema schema = LabelSchema::from_instances(train);
    auto [words, rels] = build_vocabs(train, cfg.strategy);
    ModelParams m = ModelParams::shaped(schema, words, rels, cfg.word_dim, cfg.rel_dim,
                                        cfg.effective_conv_dim());
    m.init(cfg.seed);
    AdaDeltaState st = AdaDeltaState::init(m.p, cfg.rho, cfg.eps);
    double loss = train_epoch(m, train, cfg, st, 1);
    return std::pair{loss, std::move(m)};
  };
  auto [loss1, m1] = run();
  auto [loss2, m2] = run();
  CHECK(loss1 == loss2);
  CHECK(same_params(m1.p, m2.p));
  CHECK(loss1 > 0.0);
}

TEST_CASE("unusable instances are skipped, an all-failed epoch is an error", "[trainer]") {
  auto insts = overfit_fixture();
  std::vector<RelationInstance> train(insts.begin(), insts.begin() + 4);
  RelationInstance alien = train[0];
  alien.label = "Zed";  // not in the model's schema
  LabelSchema schema = LabelSchema::from_instances(train);
  auto [words, rels] = build_vocabs(train, std::nullopt);
  ModelParams m = ModelParams::shaped(schema, words, rels, 6, 4, 6);
  m.init(5);
  AdaDeltaState st = AdaDeltaState::init(m.p, 0.95, 1e-6);
  TrainConfig cfg = small_config(5);

  std::vector<RelationInstance> mixed = train;
  mixed.push_back(alien);
  CHECK_NOTHROW(train_epoch(m, mixed, cfg, st, 1));

  std::vector<RelationInstance> all_bad{alien, alien};
  CHECK_THROWS_AS(train_epoch(m, all_bad, cfg, st, 2), DataError);
  CHECK_THROWS_AS(train_epoch(m, {}, cfg, st, 3), DataError);
}

TEST_CASE("early stopping waits for strict improvement", "[trainer]") {
  EarlyStopper st{1};
  CHECK(st.update(0.5));
  CHECK_FALSE(st.should_stop());
  CHECK_FALSE(st.update(0.5));  // a tie is not an improvement
  CHECK(st.should_stop());

  SECTION("patience counts epochs since the best") {
    EarlyStopper s2{2};
    CHECK(s2.update(0.3));
    CHECK_FALSE(s2.update(0.2));
    CHECK_FALSE(s2.should_stop());
    CHECK_FALSE(s2.update(0.25));
    CHECK(s2.should_stop());
    CHECK(s2.best == 0.3);
  }
}

TEST_CASE("training stops after patience exhausts", "[trainer]") {
  auto insts = overfit_fixture();
  std::vector<RelationInstance> train(insts.begin(), insts.begin() + 8);
  std::vector<RelationInstance> dev(insts.begin() + 8, insts.begin() + 12);
  TrainConfig cfg = small_config(31);
  cfg.epochs = 10;
  cfg.patience = 1;
  FitResult r = fit(train, dev, cfg);
  // the first epoch always sets the baseline; with flat dev F1 the run ends
  // one epoch later
  CHECK(r.log.size() < 10);
  CHECK(r.best_epoch >= 1);
  CHECK(r.best_dev_f1 == r.log[r.best_epoch - 1].dev_macro_f1);
  double best_seen = -1.0;
  for (const EpochLog& e : r.log) best_seen = std::max(best_seen, e.dev_macro_f1);
  CHECK(r.best_dev_f1 == best_seen);
}

TEST_CASE("whole training runs are bit-reproducible", "[trainer]") {
  auto insts = overfit_fixture();
  std::vector<RelationInstance> train(insts.begin(), insts.begin() + 10);
  std::vector<RelationInstance> dev(insts.begin() + 10, insts.begin() + 14);
  TrainConfig cfg = small_config(41);
  FitResult a = fit(train, dev, cfg);
  FitResult b = fit(train, dev, cfg);
  CHECK(same_params(a.best.p, b.best.p));
  CHECK(render_training_log(a.log) == render_training_log(b.log));
  std::stringstream ca, cb;
  save_checkpoint(ca, a.best);
  save_checkpoint(cb, b.best);
  CHECK(ca.str() == cb.str());
  REQUIRE(a.log.size() == b.log.size());
  for (size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].epoch == i + 1);
    CHECK(a.log[i].mean_loss == b.log[i].mean_loss);
    CHECK(a.log[i].seconds == 0.0);  // timing disabled
  }

  SECTION("empty splits are rejected") {
    CHECK_THROWS_AS(fit({}, dev, cfg), DataError);
    CHECK_THROWS_AS(fit(train, {}, cfg), DataError);
  }
}

TEST_CASE("training with artifacts writes a log and checkpoints", "[trainer]") {
  auto insts = overfit_fixture();
  std::vector<RelationInstance> train(insts.begin(), insts.begin() + 10);
  std::vector<RelationInstance> dev(insts.begin() + 10, insts.begin() + 14);
  TrainConfig cfg = small_config(47);
  std::string d1 = (scratch_dir() / "run1").string();
  std::string d2 = (scratch_dir() / "run2").string();
  FitResult r = run_training(train, dev, cfg, d1);
  run_training(train, dev, cfg, d2);

  CHECK(fs::exists(fs::path(d1) / "best.ckpt"));
  CHECK(fs::exists(fs::path(d1) / "training_log.csv"));
  for (size_t e = 1; e <= r.log.size(); ++e)
    CHECK(fs::exists(fs::path(d1) / strf("epoch_%zu.ckpt", e)));

  CHECK(slurp(d1 + "/best.ckpt") == slurp(d2 + "/best.ckpt"));
  CHECK(slurp(d1 + "/training_log.csv") == slurp(d2 + "/training_log.csv"));
  CHECK(slurp(d1 + "/training_log.csv") == render_training_log(r.log));

  ModelParams best = load_checkpoint_file(d1 + "/best.ckpt");
  CHECK(same_params(best.p, r.best.p));
}

TEST_CASE("mean loss falls when memorizing a small fixture", "[trainer]") {
  auto train = overfit_fixture();
  LabelSchema schema = LabelSchema::from_instances(train);
  auto [words, rels] = build_vocabs(train, std::nullopt);
  ModelParams m = ModelParams::shaped(schema, words, rels, 8, 4, 8);
  m.init(3);
  AdaDeltaState st = AdaDeltaState::init(m.p, 0.95, 1e-6);
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.keep_prob = 1.0;
  cfg.lambda = 0.0;
  cfg.word_dim = 8;
  cfg.rel_dim = 4;
  cfg.seed = 3;
  double first = 0.0, last = 0.0;
  for (size_t epoch = 1; epoch <= 30; ++epoch) {
    double l = train_epoch(m, train, cfg, st, epoch);
    if (epoch == 1) first = l;
    last = l;
  }
  CHECK(last < first);
}

TEST_CASE("pretrained vectors override only covered rows", "[trainer]") {
  Vocab vocab;
  vocab.add(kUnkWord);
  vocab.add("lives");
  vocab.add("house");

  SECTION("full coverage restores exact rows") {
    std::string path = write_scratch("full.vec",
                                     "2 3\n"
                                     "lives 1.5 -2.0 0.25\n"
                                     "house 0.5 0.125 -1.0\n");
    Tensor table = load_word_vectors(path, vocab, 3, 7);
    CHECK(table.at(1, 0) == 1.5);
    CHECK(table.at(1, 1) == -2.0);
    CHECK(table.at(1, 2) == 0.25);
    CHECK(table.at(2, 0) == 0.5);
    CHECK(table.at(2, 2) == -1.0);
    for (size_t c = 0; c < 3; ++c) {
      CHECK(table.at(0, c) >= -0.05);  // unknown row keeps its random draw
      CHECK(table.at(0, c) <= 0.05);
    }
  }
  SECTION("uncovered rows keep the seeded initialization") {
    std::string path = write_scratch("half.vec", "1 3\nlives 1.5 -2.0 0.25\n");
    Tensor table = load_word_vectors(path, vocab, 3, 7);
    CHECK(table.at(1, 0) == 1.5);
    auto rng = make_rng(derive_seed(7, {seed_scope::kEmbeddingInit}));
    Tensor base = Tensor::uniform({3, 3}, rng, -0.05, 0.05);
    for (size_t c = 0; c < 3; ++c) {
      CHECK(table.at(0, c) == base.at(0, c));
      CHECK(table.at(2, c) == base.at(2, c));
    }
  }
  SECTION("file words outside the vocabulary are ignored") {
    std::string path = write_scratch("extra.vec", "1 3\nzebra 1 2 3\n");
    Tensor table = load_word_vectors(path, vocab, 3, 7);
    for (double v : table.data) {
      CHECK(v >= -0.05);
      CHECK(v <= 0.05);
    }
  }
  SECTION("dimension mismatch is rejected") {
    std::string path = write_scratch("dim.vec", "1 4\nlives 1 2 3 4\n");
    CHECK_THROWS_AS(load_word_vectors(path, vocab, 3, 7), DataError);
  }
  SECTION("short and long lines carry their line number") {
    std::string path = write_scratch("short.vec", "2 3\nlives 1 2 3\nhouse 1 2\n");
    try {
      load_word_vectors(path, vocab, 3, 7);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line == 3);
    }
    std::string path2 = write_scratch("long.vec", "1 3\nlives 1 2 3 4\n");
    CHECK_THROWS_AS(load_word_vectors(path2, vocab, 3, 7), ParseError);
  }
  SECTION("empty vocabulary yields an empty table") {
    std::string path = write_scratch("any.vec", "1 3\nlives 1 2 3\n");
    Tensor table = load_word_vectors(path, Vocab{}, 3, 7);
    CHECK(table.shape == std::vector<size_t>{0, 3});
    CHECK(table.size() == 0);
  }
  SECTION("missing file is an error") {
    CHECK_THROWS_AS(load_word_vectors("/no/such/file.vec", vocab, 3, 7), DataError);
  }
}
