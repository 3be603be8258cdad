// Minimal in-memory training run: a synthetic relation set whose center
// token names the class, a short fit, and a look at one prediction.

#include <cstdio>
#include <string>
#include <vector>

#include <srbrcnn/srbrcnn.hpp>

using namespace srbrcnn;

namespace {

std::vector<RelationInstance> synthetic_set() {
  const char* labels[] = {"Located", "Use"};
  std::vector<RelationInstance> out;
  for (size_t i = 0; i < 16; ++i) {
    size_t combo = i % 4;
    RelationInstance inst;
    inst.sent_id = strf("demo%zu#s1", i);
    std::string cue = strf("cue%zu", combo);
    DependencyTree t;
    t.tokens = {{1, "left", "NOUN", 2, "dep"},
                {2, strf("f%zu", i % 2), "NOUN", 3, "pre"},
                {3, cue, "VERB", 0, "root"},
                {4, strf("g%zu", i % 3), "NOUN", 3, "post"},
                {5, "right", "NOUN", 4, "dep"}};
    inst.sentence = std::move(t);
    inst.e1 = {{1, 1}, "E"};
    inst.e2 = {{5, 5}, "E"};
    inst.label = labels[combo / 2];
    inst.direction = combo % 2 == 0 ? Direction::e1_to_e2 : Direction::e2_to_e1;
    out.push_back(std::move(inst));
  }
  return out;
}

}  // namespace

int main() {
  std::vector<RelationInstance> data = synthetic_set();

  TrainConfig cfg;
  cfg.epochs = 150;
  cfg.batch_size = 2;
  cfg.patience = 150;
  cfg.word_dim = 16;
  cfg.rel_dim = 8;
  cfg.keep_prob = 1.0;
  cfg.lambda = 0.0;
  cfg.seed = 13;
  cfg.timing = false;

  std::printf("fitting %zu instances, dims %zu/%zu, %zu epochs\n\n", data.size(), cfg.word_dim,
              cfg.rel_dim, cfg.epochs);
  FitResult r = fit(data, data, cfg);
  for (const EpochLog& e : r.log)
    if (e.epoch == 1 || e.epoch % 25 == 0)
      std::printf("epoch %3zu  mean loss %.4f  dev macro F1 %.4f\n", e.epoch, e.mean_loss,
                  e.dev_macro_f1);
  std::printf("\nbest epoch %zu with dev macro F1 %.4f\n\n", r.best_epoch, r.best_dev_f1);

  std::fputs(render_text(evaluate_model(r.best, data)).c_str(), stdout);

  const RelationInstance& probe = data[1];
  Prediction p = predict_instance(r.best, probe);
  std::printf("\nprobe %s: gold %s/%s, predicted %s", probe.sent_id.c_str(),
              probe.label.c_str(), direction_str(probe.direction).c_str(), p.label.c_str());
  if (p.direction != Direction::none) std::printf("/%s", direction_str(p.direction).c_str());
  std::printf(" with blended score %.3f\n", p.scores.at(p.directed));
  return 0;
}
