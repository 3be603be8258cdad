#pragma once

#include <optional>
#include <string>
#include <vector>

#include "srbrcnn/metrics.hpp"
#include "srbrcnn/trainer.hpp"

namespace srbrcnn {

struct AblationRow {
  std::string strategy_name;
  double test_macro_f1 = 0.0;
  double mean_sdp_len = 0.0;  // plain path length in words
  double mean_sr_len = 0.0;   // path length after the strategy's cuts
};

inline std::string strategy_name_of(const std::optional<CutStrategy>& s) {
  return s ? cut_kind_str(s->kind) : "none";
}

inline double mean_path_length(const std::vector<RelationInstance>& data,
                               const std::optional<CutStrategy>& s) {
  double sum = 0.0;
  size_t n = 0;
  for (const RelationInstance& inst : data) {
    try {
      sum += static_cast<double>(path_for(inst.sentence, s, inst.e1_head(), inst.e2_head())
                                     .length());
      ++n;
    } catch (const DataError&) {
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

// Trains one model per strategy under otherwise identical settings and
// scores each on the held-out test split.
inline std::vector<AblationRow> ablate(const std::vector<RelationInstance>& train,
                                       const std::vector<RelationInstance>& dev,
                                       const std::vector<RelationInstance>& test,
                                       const std::vector<std::optional<CutStrategy>>& strategies,
                                       const TrainConfig& base) {
  std::vector<AblationRow> rows;
  for (const std::optional<CutStrategy>& s : strategies) {
    TrainConfig cfg = base;
    cfg.strategy = s;
    FitResult fitted = fit(train, dev, cfg);
    AblationRow row;
    row.strategy_name = strategy_name_of(s);
    row.test_macro_f1 = evaluate_model(fitted.best, test).macro_f1;
    row.mean_sdp_len = mean_path_length(test, std::nullopt);
    row.mean_sr_len = mean_path_length(test, s);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string render_ablation_text(const std::vector<AblationRow>& rows) {
  std::string out = strf("%-14s %14s %10s %12s\n", "strategy", "test_macro_f1", "mean_path",
                         "mean_sr_path");
  for (const AblationRow& r : rows)
    out += strf("%-14s %14.4f %10.2f %12.2f\n", r.strategy_name.c_str(), r.test_macro_f1,
                r.mean_sdp_len, r.mean_sr_len);
  return out;
}

inline std::string render_ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out = "strategy,test_macro_f1,mean_path,mean_sr_path\n";
  for (const AblationRow& r : rows)
    out += strf("%s,%.6f,%.6f,%.6f\n", r.strategy_name.c_str(), r.test_macro_f1, r.mean_sdp_len,
                r.mean_sr_len);
  return out;
}

}  // namespace srbrcnn
