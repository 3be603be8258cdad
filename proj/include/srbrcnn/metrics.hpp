#pragma once

#include <string>
#include <vector>

#include "srbrcnn/labels.hpp"
#include "srbrcnn/model.hpp"

namespace srbrcnn {

struct ClassScore {
  std::string name;
  size_t tp = 0, fp = 0, fn = 0, support = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

struct MetricsReport {
  std::vector<ClassScore> per_relation;  // Other first, then the K relations
  double macro_f1 = 0.0;
  double micro_precision = 0.0, micro_recall = 0.0, micro_f1 = 0.0;
  size_t total = 0, correct = 0;
  std::vector<std::vector<size_t>> confusion;  // row gold, column predicted
  std::vector<size_t> directed_support;
};

namespace detail {

inline void finish_scores(ClassScore& c) {
  c.precision = c.tp + c.fp == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  c.recall = c.tp + c.fn == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  c.f1 = c.precision + c.recall == 0.0 ? 0.0
                                       : 2.0 * c.precision * c.recall / (c.precision + c.recall);
}

}  // namespace detail

// Direction-sensitive scoring over directed class indices. A prediction
// counts as a true positive only when relation and direction both match;
// the right relation with the wrong direction is a false positive and a
// false negative for that relation at once. Macro F1 averages over the K
// relations, never over Other.
inline MetricsReport prf1(const std::vector<size_t>& pred, const std::vector<size_t>& gold,
                          const LabelSchema& schema) {
  if (pred.size() != gold.size())
    throw DataError(strf("prf1: %zu predictions against %zu gold labels", pred.size(),
                         gold.size()));
  size_t n_dir = schema.directed_count();
  MetricsReport r;
  r.total = pred.size();
  r.confusion.assign(n_dir, std::vector<size_t>(n_dir, 0));
  r.directed_support.assign(n_dir, 0);

  auto rel_of = [&](size_t directed) {
    return directed == 0 ? SIZE_MAX : (directed - 1) / 2;
  };

  r.per_relation.resize(schema.k() + 1);
  r.per_relation[0].name = kOtherLabel;
  for (size_t k = 0; k < schema.k(); ++k) r.per_relation[k + 1].name = schema.relations[k];

  for (size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] >= n_dir || gold[i] >= n_dir)
      throw DataError(strf("prf1: class index out of range at position %zu", i));
    r.confusion[gold[i]][pred[i]] += 1;
    r.directed_support[gold[i]] += 1;
    if (pred[i] == gold[i]) r.correct += 1;

    size_t grel = rel_of(gold[i]);
    size_t prel = rel_of(pred[i]);
    if (gold[i] == 0) {
      r.per_relation[0].support += 1;
      if (pred[i] == 0)
        r.per_relation[0].tp += 1;
      else
        r.per_relation[0].fn += 1;
    } else {
      r.per_relation[grel + 1].support += 1;
      if (pred[i] == gold[i])
        r.per_relation[grel + 1].tp += 1;
      else
        r.per_relation[grel + 1].fn += 1;
    }
    if (pred[i] != gold[i]) {
      if (pred[i] == 0)
        r.per_relation[0].fp += 1;
      else
        r.per_relation[prel + 1].fp += 1;
    }
  }

  for (ClassScore& c : r.per_relation) detail::finish_scores(c);

  size_t tp = 0, fp = 0, fn = 0;
  double f1_sum = 0.0;
  for (size_t k = 1; k <= schema.k(); ++k) {
    tp += r.per_relation[k].tp;
    fp += r.per_relation[k].fp;
    fn += r.per_relation[k].fn;
    f1_sum += r.per_relation[k].f1;
  }
  r.macro_f1 = schema.k() == 0 ? 0.0 : f1_sum / static_cast<double>(schema.k());
  r.micro_precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  r.micro_recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  r.micro_f1 = r.micro_precision + r.micro_recall == 0.0
                   ? 0.0
                   : 2.0 * r.micro_precision * r.micro_recall /
                         (r.micro_precision + r.micro_recall);
  return r;
}

inline std::string render_text(const MetricsReport& r) {
  std::string out = strf("%-20s %9s %9s %9s %9s\n", "class", "P", "R", "F1", "support");
  for (const ClassScore& c : r.per_relation)
    out += strf("%-20s %9.4f %9.4f %9.4f %9zu\n", c.name.c_str(), c.precision, c.recall, c.f1,
                c.support);
  out += strf("macro F1 %.6f\n", r.macro_f1);
  out += strf("micro P %.6f R %.6f F1 %.6f\n", r.micro_precision, r.micro_recall, r.micro_f1);
  out += strf("accuracy %.6f (%zu/%zu)\n", r.total == 0 ? 0.0
                                                        : static_cast<double>(r.correct) /
                                                              static_cast<double>(r.total),
              r.correct, r.total);
  return out;
}

inline std::string render_csv(const MetricsReport& r) {
  std::string out = "class,tp,fp,fn,precision,recall,f1,support\n";
  for (const ClassScore& c : r.per_relation)
    out += strf("%s,%zu,%zu,%zu,%.6f,%.6f,%.6f,%zu\n", c.name.c_str(), c.tp, c.fp, c.fn,
                c.precision, c.recall, c.f1, c.support);
  out += strf("macro,,,,,,%.6f,%zu\n", r.macro_f1, r.total);
  out += strf("micro,,,,%.6f,%.6f,%.6f,%zu\n", r.micro_precision, r.micro_recall, r.micro_f1,
              r.total);
  return out;
}

inline std::vector<size_t> gold_directed(const std::vector<RelationInstance>& data,
                                         const LabelSchema& schema) {
  std::vector<size_t> out;
  out.reserve(data.size());
  for (const RelationInstance& inst : data)
    out.push_back(schema.directed_index(inst.label, inst.direction));
  return out;
}

inline MetricsReport evaluate_model(const ModelParams& m,
                                    const std::vector<RelationInstance>& data) {
  std::vector<size_t> pred, gold;
  pred.reserve(data.size());
  for (const RelationInstance& inst : data) pred.push_back(predict_instance(m, inst).directed);
  return prf1(pred, gold_directed(data, m.schema), m.schema);
}

}  // namespace srbrcnn
