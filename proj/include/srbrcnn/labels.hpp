#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "srbrcnn/instances.hpp"
#include "srbrcnn/tensor.hpp"

namespace srbrcnn {

// Directed label layout over K relations: index 0 is Other, then each
// relation r contributes 2r+1 (e1 to e2) and 2r+2 (e2 to e1). The coarse
// layout drops direction: 0 is Other, relation r sits at r+1.
struct LabelSchema {
  std::vector<std::string> relations;  // K names, Other excluded

  size_t k() const { return relations.size(); }
  size_t directed_count() const { return 2 * k() + 1; }
  size_t coarse_count() const { return k() + 1; }

  size_t relation_index(const std::string& label) const {
    auto it = std::find(relations.begin(), relations.end(), label);
    if (it == relations.end()) throw DataError("unknown relation label: " + label);
    return static_cast<size_t>(it - relations.begin());
  }

  size_t directed_index(const std::string& label, Direction d) const {
    if (label == kOtherLabel) {
      if (d != Direction::none) throw DataError("\"Other\" carries no direction");
      return 0;
    }
    if (d == Direction::none) throw DataError("label " + label + " needs a direction");
    size_t r = relation_index(label);
    return d == Direction::e1_to_e2 ? 2 * r + 1 : 2 * r + 2;
  }

  size_t coarse_index(const std::string& label) const {
    return label == kOtherLabel ? 0 : relation_index(label) + 1;
  }

  std::pair<std::string, Direction> directed_label(size_t idx) const {
    if (idx >= directed_count()) throw DataError(strf("directed index %zu out of range", idx));
    if (idx == 0) return {kOtherLabel, Direction::none};
    size_t r = (idx - 1) / 2;
    return {relations[r], idx % 2 == 1 ? Direction::e1_to_e2 : Direction::e2_to_e1};
  }

  std::string directed_name(size_t idx) const {
    auto [label, d] = directed_label(idx);
    if (d == Direction::none) return label;
    return label + ":" + direction_str(d);
  }

  // Index permutation induced by swapping the entity order: Other is fixed,
  // the two directions of each relation trade places. An involution.
  size_t z_index(size_t idx) const {
    if (idx >= directed_count()) throw DataError(strf("directed index %zu out of range", idx));
    if (idx == 0) return 0;
    return idx % 2 == 1 ? idx + 1 : idx - 1;
  }

  static LabelSchema from_labels(const std::vector<std::string>& labels) {
    std::set<std::string> uniq(labels.begin(), labels.end());
    uniq.erase(kOtherLabel);
    LabelSchema s;
    s.relations.assign(uniq.begin(), uniq.end());
    return s;
  }

  static LabelSchema from_instances(const std::vector<RelationInstance>& instances) {
    std::vector<std::string> labels;
    labels.reserve(instances.size());
    for (const RelationInstance& inst : instances) labels.push_back(inst.label);
    return from_labels(labels);
  }

  bool operator==(const LabelSchema&) const = default;
};

// Applies the direction swap to a distribution (or any per-class vector)
// over the directed label space.
inline Tensor z_map(const Tensor& v) {
  if (v.rank() != 1 || v.size() % 2 == 0)
    throw NumericError("z_map needs a vector of odd length, got " + v.shape_str());
  Tensor out = v;
  for (size_t i = 1; i + 1 < v.size(); i += 2) {
    out.data[i] = v.data[i + 1];
    out.data[i + 1] = v.data[i];
  }
  return out;
}

}  // namespace srbrcnn
