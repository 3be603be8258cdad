#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <srbrcnn/srbrcnn.hpp>

namespace fs = std::filesystem;
using namespace srbrcnn;

namespace {

std::optional<CutStrategy> strategy_from(const std::string& name, double ratio, uint64_t seed) {
  if (name == "none") return std::nullopt;
  CutStrategy s;
  s.kind = cut_kind_from(name);
  s.cut_ratio = ratio;
  s.seed = seed;
  return s;
}

std::vector<std::string> tag_set_from(const std::string& spec) {
  if (spec.empty() || spec == "open") return {};
  if (spec == "corpus") return corpus_relation_tags();
  std::vector<std::string> tags;
  std::string cur;
  for (char c : spec) {
    if (c == ',') {
      if (!cur.empty()) tags.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) tags.push_back(cur);
  return tags;
}

SplitCounts split_counts_from(const std::string& spec, size_t n_articles) {
  std::vector<double> parts;
  std::string cur;
  auto flush = [&] {
    if (cur.empty()) throw DataError("bad --split value: " + spec);
    parts.push_back(std::stod(cur));
    cur.clear();
  };
  for (char c : spec) {
    if (c == ',')
      flush();
    else
      cur += c;
  }
  flush();
  if (parts.size() != 3) throw DataError("--split needs three comma-separated numbers");
  double sum = parts[0] + parts[1] + parts[2];
  bool integral = true;
  for (double p : parts) integral = integral && p == std::floor(p);
  SplitCounts counts;
  if (integral && static_cast<size_t>(sum) == n_articles) {
    counts.train = static_cast<size_t>(parts[0]);
    counts.dev = static_cast<size_t>(parts[1]);
    counts.test = static_cast<size_t>(parts[2]);
  } else {
    // ratios: train and dev round down, test takes the remainder
    double nd = static_cast<double>(n_articles);
    counts.train = static_cast<size_t>(parts[0] / sum * nd);
    counts.dev = static_cast<size_t>(parts[1] / sum * nd);
    counts.test = n_articles - counts.train - counts.dev;
  }
  return counts;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << text;
}

struct TrainFlags {
  TrainConfig cfg;
  std::string strategy_name = "none";
  double cut_ratio = 0.15;
  bool no_timing = false;

  void finish() {
    cfg.strategy = strategy_from(strategy_name, cut_ratio, cfg.seed);
    cfg.timing = !no_timing;
  }
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--strategy", f.strategy_name,
                  "cut strategy: none, punctuation, random, preposition")
      ->check(CLI::IsMember({"none", "punctuation", "random", "preposition"}));
  cmd->add_option("--cut-ratio", f.cut_ratio, "node fraction for the random strategy");
  cmd->add_option("--epochs", f.cfg.epochs, "maximum training epochs");
  cmd->add_option("--batch", f.cfg.batch_size, "batch size");
  cmd->add_option("--patience", f.cfg.patience, "epochs without dev improvement before stopping");
  cmd->add_option("--lambda", f.cfg.lambda, "L2 penalty weight");
  cmd->add_option("--keep-prob", f.cfg.keep_prob, "embedding dropout keep probability");
  cmd->add_option("--rho", f.cfg.rho, "decay rate of the squared-gradient averages");
  cmd->add_option("--eps", f.cfg.eps, "numerical floor inside the update rule");
  cmd->add_option("--alpha", f.cfg.alpha, "decoding blend weight for the forward pass");
  cmd->add_option("--seed", f.cfg.seed, "master random seed");
  cmd->add_option("--word-dim", f.cfg.word_dim, "word embedding and word LSTM size");
  cmd->add_option("--rel-dim", f.cfg.rel_dim, "relation embedding and relation LSTM size");
  cmd->add_option("--conv-dim", f.cfg.conv_dim, "convolution output size (0: same as --word-dim)");
  cmd->add_option("--embeddings", f.cfg.embeddings_path, "pretrained word vectors, text format");
  cmd->add_flag("--no-timing", f.no_timing, "write 0.000 in the seconds column of the log");
}

int cmd_preprocess(const std::string& conllu_path, const std::string& instances_path,
                   const std::string& out_dir, const std::string& split_spec,
                   const std::string& tags_spec, uint64_t seed) {
  std::vector<Sentence> sentences = parse_conllu_file(conllu_path);
  std::vector<InstanceRecord> records = parse_instance_jsonl(read_text_file(instances_path));
  std::vector<RelationInstance> instances =
      build_instances(sentences, records, tag_set_from(tags_spec));
  fs::create_directories(out_dir);
  if (split_spec.empty()) {
    write_store_file(out_dir + "/instances.jsonl", instances);
    std::printf("wrote %zu instances from %zu sentences to %s/instances.jsonl\n",
                instances.size(), sentences.size(), out_dir.c_str());
    return 0;
  }
  std::set<std::string> articles;
  for (const RelationInstance& inst : instances) articles.insert(article_id_of(inst.sent_id));
  SplitCounts counts = split_counts_from(split_spec, articles.size());
  auto parts = split_by_article(instances, counts, seed);
  const char* names[3] = {"train", "dev", "test"};
  for (size_t i = 0; i < 3; ++i)
    write_store_file(out_dir + "/" + names[i] + ".jsonl", parts[i]);
  std::printf("split %zu instances over %zu articles: train %zu, dev %zu, test %zu\n",
              instances.size(), articles.size(), parts[0].size(), parts[1].size(),
              parts[2].size());
  return 0;
}

int cmd_sdp(const std::string& store_path, const std::string& strategy_name, double cut_ratio,
            uint64_t seed, const std::string& out_path) {
  std::vector<RelationInstance> instances = read_store_file(store_path);
  std::optional<CutStrategy> strategy = strategy_from(strategy_name, cut_ratio, seed);
  std::string out;
  size_t emitted = 0;
  for (const RelationInstance& inst : instances) {
    try {
      SdpPath p = path_for(inst.sentence, strategy, inst.e1_head(), inst.e2_head());
      out += path_to_json_line(inst.sent_id, strategy_name, p);
      out += '\n';
      ++emitted;
    } catch (const DataError& e) {
      std::fprintf(stderr, "skipping %s: %s\n", inst.sent_id.c_str(), e.what());
    }
  }
  if (emitted == 0) throw DataError("no instance produced a path");
  if (out_path.empty())
    std::fputs(out.c_str(), stdout);
  else
    write_text_file(out_path, out);
  return 0;
}

int cmd_train(const std::string& train_path, const std::string& dev_path,
              const std::string& out_dir, TrainFlags& flags) {
  flags.finish();
  std::vector<RelationInstance> train_set = read_store_file(train_path);
  std::vector<RelationInstance> dev_set = read_store_file(dev_path);
  FitResult r = run_training(train_set, dev_set, flags.cfg, out_dir, &std::cout);
  std::printf("best epoch %zu with dev macro F1 %.6f; model in %s/best.ckpt\n", r.best_epoch,
              r.best_dev_f1, out_dir.c_str());
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& split_path, bool csv,
             double alpha, bool alpha_set) {
  ModelParams m = load_checkpoint_file(ckpt_path);
  if (alpha_set) m.alpha = alpha;
  std::vector<RelationInstance> data = read_store_file(split_path);
  MetricsReport r = evaluate_model(m, data);
  std::fputs((csv ? render_csv(r) : render_text(r)).c_str(), stdout);
  return 0;
}

int cmd_predict(const std::string& ckpt_path, const std::string& in_path,
                const std::string& out_path) {
  ModelParams m = load_checkpoint_file(ckpt_path);
  std::vector<RelationInstance> data = read_store_file(in_path);
  std::string out;
  for (const RelationInstance& inst : data) {
    Prediction p = predict_instance(m, inst);
    nlohmann::ordered_json j{{"sent_id", inst.sent_id}, {"label", p.label}};
    if (p.direction == Direction::none)
      j["direction"] = nullptr;
    else
      j["direction"] = direction_str(p.direction);
    j["directed"] = p.directed;
    j["coarse"] = p.coarse;
    j["scores"] = p.scores.data;
    out += j.dump();
    out += '\n';
  }
  if (out_path.empty())
    std::fputs(out.c_str(), stdout);
  else
    write_text_file(out_path, out);
  return 0;
}

int cmd_gradcheck(uint64_t seed, double step, double tol) {
  GradSuiteResult r = run_gradcheck_suite(seed, step, tol);
  std::fputs(render_gradsuite(r).c_str(), stdout);
  if (!r.pass) throw NumericError("gradient check failed");
  return 0;
}

int cmd_ablate(const std::string& train_path, const std::string& dev_path,
               const std::string& test_path, const std::string& strategies_spec, bool csv,
               TrainFlags& flags) {
  flags.finish();
  std::vector<RelationInstance> train_set = read_store_file(train_path);
  std::vector<RelationInstance> dev_set = read_store_file(dev_path);
  std::vector<RelationInstance> test_set = read_store_file(test_path);
  std::vector<std::optional<CutStrategy>> strategies;
  for (const std::string& name : tag_set_from(strategies_spec))
    strategies.push_back(strategy_from(name, flags.cut_ratio, flags.cfg.seed));
  if (strategies.empty()) throw DataError("--strategies lists no strategy");
  std::vector<AblationRow> rows = ablate(train_set, dev_set, test_set, strategies, flags.cfg);
  std::fputs((csv ? render_ablation_csv(rows) : render_ablation_text(rows)).c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"relation classifier over regularized dependency paths"};
  app.require_subcommand(1);

  auto* pre = app.add_subcommand("preprocess", "join trees with entity annotations");
  std::string pre_conllu, pre_instances, pre_out, pre_split, pre_tags;
  uint64_t pre_seed = 0;
  pre->add_option("--conllu", pre_conllu, "dependency trees, CoNLL-U")->required();
  pre->add_option("--instances", pre_instances, "entity pair annotations, JSONL")->required();
  pre->add_option("--out", pre_out, "output directory")->required();
  pre->add_option("--split", pre_split, "train,dev,test article counts or ratios");
  pre->add_option("--tags", pre_tags, "allowed labels: open, corpus, or a comma list");
  pre->add_option("--seed", pre_seed, "shuffle seed for the article split");

  auto* sdp = app.add_subcommand("sdp", "emit dependency paths as JSONL");
  std::string sdp_store, sdp_strategy = "none", sdp_out;
  double sdp_ratio = 0.15;
  uint64_t sdp_seed = 0;
  sdp->add_option("--instances", sdp_store, "instance store, JSONL")->required();
  sdp->add_option("--strategy", sdp_strategy, "none, punctuation, random, preposition")
      ->check(CLI::IsMember({"none", "punctuation", "random", "preposition"}));
  sdp->add_option("--cut-ratio", sdp_ratio, "node fraction for the random strategy");
  sdp->add_option("--seed", sdp_seed, "seed for the random strategy");
  sdp->add_option("--out", sdp_out, "output file (default stdout)");

  auto* train = app.add_subcommand("train", "fit a model");
  std::string train_train, train_dev, train_out;
  TrainFlags train_flags;
  train->add_option("--train", train_train, "training instance store")->required();
  train->add_option("--dev", train_dev, "development instance store")->required();
  train->add_option("--out", train_out, "output directory for checkpoints and the log")
      ->required();
  add_train_flags(train, train_flags);

  auto* eval = app.add_subcommand("eval", "score a checkpoint on a split");
  std::string eval_ckpt, eval_split;
  bool eval_csv = false;
  double eval_alpha = 0.5;
  eval->add_option("--ckpt", eval_ckpt, "model checkpoint")->required();
  eval->add_option("--split", eval_split, "instance store to score")->required();
  eval->add_flag("--csv", eval_csv, "write the report as CSV");
  auto* eval_alpha_opt = eval->add_option("--alpha", eval_alpha, "override the stored blend");

  auto* predict = app.add_subcommand("predict", "write per-instance predictions");
  std::string pred_ckpt, pred_in, pred_out;
  predict->add_option("--ckpt", pred_ckpt, "model checkpoint")->required();
  predict->add_option("--in", pred_in, "instance store")->required();
  predict->add_option("--out", pred_out, "output file (default stdout)");

  auto* grad = app.add_subcommand("gradcheck", "finite-difference check of all gradients");
  uint64_t grad_seed = 1;
  double grad_step = 1e-5, grad_tol = 1e-6;
  grad->add_option("--seed", grad_seed, "seed for the random test points");
  grad->add_option("--step", grad_step, "finite-difference step");
  grad->add_option("--tol", grad_tol, "maximum accepted relative error");

  auto* ablate_cmd = app.add_subcommand("ablate", "compare cut strategies");
  std::string ab_train, ab_dev, ab_test, ab_strategies = "none,punctuation,random,preposition";
  bool ab_csv = false;
  TrainFlags ab_flags;
  ablate_cmd->add_option("--train", ab_train, "training instance store")->required();
  ablate_cmd->add_option("--dev", ab_dev, "development instance store")->required();
  ablate_cmd->add_option("--test", ab_test, "test instance store")->required();
  ablate_cmd->add_option("--strategies", ab_strategies, "comma list of strategies to compare");
  ablate_cmd->add_flag("--csv", ab_csv, "write the table as CSV");
  add_train_flags(ablate_cmd, ab_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*pre) return cmd_preprocess(pre_conllu, pre_instances, pre_out, pre_split, pre_tags,
                                    pre_seed);
    if (*sdp) return cmd_sdp(sdp_store, sdp_strategy, sdp_ratio, sdp_seed, sdp_out);
    if (*train) return cmd_train(train_train, train_dev, train_out, train_flags);
    if (*eval) return cmd_eval(eval_ckpt, eval_split, eval_csv, eval_alpha,
                               eval_alpha_opt->count() > 0);
    if (*predict) return cmd_predict(pred_ckpt, pred_in, pred_out);
    if (*grad) return cmd_gradcheck(grad_seed, grad_step, grad_tol);
    if (*ablate_cmd) return cmd_ablate(ab_train, ab_dev, ab_test, ab_strategies, ab_csv,
                                       ab_flags);
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 3;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return 1;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
