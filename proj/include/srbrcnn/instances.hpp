#pragma once

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "srbrcnn/conllu.hpp"
#include "srbrcnn/rng.hpp"

namespace srbrcnn {

enum class Direction { e1_to_e2, e2_to_e1, none };

inline std::string direction_str(Direction d) {
  switch (d) {
    case Direction::e1_to_e2: return "12";
    case Direction::e2_to_e1: return "21";
    default: return "null";
  }
}

struct EntityMention {
  Span span;
  std::string type;
};

struct RelationInstance {
  std::string sent_id;
  DependencyTree sentence;
  EntityMention e1, e2;
  std::string label;
  Direction direction = Direction::none;

  size_t e1_head() const { return resolve_entity_head(sentence, e1.span); }
  size_t e2_head() const { return resolve_entity_head(sentence, e2.span); }
};

inline constexpr const char* kOtherLabel = "Other";

// The nine relation tags of the literature corpus this model targets.
inline const std::vector<std::string>& corpus_relation_tags() {
  static const std::vector<std::string> tags = {
      "Located", "Part-Whole", "Family", "General-Special", "Social",
      "Ownership", "Use", "Create", "Near"};
  return tags;
}

namespace detail {

inline nlohmann::json parse_json_line(const std::string& line, size_t line_no) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded()) throw ParseError("invalid JSON", line_no);
  if (!j.is_object()) throw ParseError("expected a JSON object", line_no);
  return j;
}

inline EntityMention entity_from_json(const nlohmann::json& j, const char* key, size_t line_no) {
  if (!j.contains(key) || !j[key].is_object())
    throw ParseError(strf("missing entity object \"%s\"", key), line_no);
  const nlohmann::json& e = j[key];
  if (!e.contains("start") || !e.contains("end"))
    throw ParseError(strf("entity \"%s\" needs integer start/end", key), line_no);
  EntityMention m;
  m.span.start = e["start"].get<size_t>();
  m.span.end = e["end"].get<size_t>();
  m.type = e.value("type", "");
  return m;
}

inline Direction direction_from_json(const nlohmann::json& j, size_t line_no) {
  if (!j.contains("direction") || j["direction"].is_null()) return Direction::none;
  std::string d = j["direction"].get<std::string>();
  if (d == "12") return Direction::e1_to_e2;
  if (d == "21") return Direction::e2_to_e1;
  throw ParseError("direction must be \"12\", \"21\" or null, got \"" + d + "\"", line_no);
}

inline nlohmann::ordered_json entity_to_json(const EntityMention& m) {
  return {{"start", m.span.start}, {"end", m.span.end}, {"type", m.type}};
}

}  // namespace detail

// Sidecar record before it is joined with its sentence.
struct InstanceRecord {
  std::string sent_id;
  EntityMention e1, e2;
  std::string label;
  Direction direction = Direction::none;
  size_t line = 0;
};

inline std::vector<InstanceRecord> parse_instance_jsonl(const std::string& text) {
  std::vector<InstanceRecord> out;
  std::istringstream in(text);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    nlohmann::json j = detail::parse_json_line(line, line_no);
    InstanceRecord r;
    if (!j.contains("sent_id")) throw ParseError("missing \"sent_id\"", line_no);
    r.sent_id = j["sent_id"].get<std::string>();
    r.e1 = detail::entity_from_json(j, "e1", line_no);
    r.e2 = detail::entity_from_json(j, "e2", line_no);
    if (!j.contains("label")) throw ParseError("missing \"label\"", line_no);
    r.label = j["label"].get<std::string>();
    r.direction = detail::direction_from_json(j, line_no);
    r.line = line_no;
    out.push_back(std::move(r));
  }
  return out;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Join sidecar records with their sentences and enforce every instance
// invariant. `allowed_tags` empty means the label set is open.
inline std::vector<RelationInstance> build_instances(
    const std::vector<Sentence>& sentences, const std::vector<InstanceRecord>& records,
    const std::vector<std::string>& allowed_tags = {}) {
  std::unordered_map<std::string, const Sentence*> by_id;
  for (const Sentence& s : sentences) {
    if (!by_id.emplace(s.id, &s).second)
      throw DataError("duplicate sent_id in CoNLL-U input: " + s.id);
    if (auto v = validate_tree(s.tree))
      throw DataError(strf("sentence %s: invalid tree (%s at token %zu)", s.id.c_str(),
                           v->what.c_str(), v->token_index));
  }
  std::vector<RelationInstance> out;
  out.reserve(records.size());
  for (const InstanceRecord& r : records) {
    auto ctx = [&](const std::string& msg) {
      return DataError(strf("instance line %zu (%s): %s", r.line, r.sent_id.c_str(),
                            msg.c_str()));
    };
    auto it = by_id.find(r.sent_id);
    if (it == by_id.end()) throw ctx("unknown sent_id");
    const DependencyTree& tree = it->second->tree;
    for (const EntityMention* m : {&r.e1, &r.e2}) {
      if (m->span.start == 0 || m->span.end < m->span.start || m->span.end > tree.size())
        throw ctx(strf("entity span [%zu, %zu] out of bounds", m->span.start, m->span.end));
    }
    if (r.e1.span.start <= r.e2.span.end && r.e2.span.start <= r.e1.span.end)
      throw ctx("entity spans overlap");
    if (r.label == kOtherLabel && r.direction != Direction::none)
      throw ctx("label \"Other\" requires a null direction");
    if (r.label != kOtherLabel && r.direction == Direction::none)
      throw ctx("non-\"Other\" label requires a direction");
    if (!allowed_tags.empty() && r.label != kOtherLabel &&
        std::find(allowed_tags.begin(), allowed_tags.end(), r.label) == allowed_tags.end())
      throw ctx("label \"" + r.label + "\" not in the allowed tag set");
    RelationInstance inst;
    inst.sent_id = r.sent_id;
    inst.sentence = tree;
    inst.e1 = r.e1;
    inst.e2 = r.e2;
    inst.label = r.label;
    inst.direction = r.direction;
    out.push_back(std::move(inst));
  }
  return out;
}

// Self-contained instance store: one JSON object per line carrying the
// sentence tokens next to the instance so downstream commands need no joins.
inline std::string write_store(const std::vector<RelationInstance>& instances) {
  std::string out;
  for (const RelationInstance& inst : instances) {
    nlohmann::ordered_json toks = nlohmann::ordered_json::array();
    for (const Token& t : inst.sentence.tokens)
      toks.push_back({{"form", t.form}, {"upos", t.upos}, {"head", t.head},
                      {"deprel", t.deprel}});
    nlohmann::ordered_json j{{"sent_id", inst.sent_id},
                             {"tokens", std::move(toks)},
                             {"e1", detail::entity_to_json(inst.e1)},
                             {"e2", detail::entity_to_json(inst.e2)},
                             {"label", inst.label}};
    if (inst.direction == Direction::none)
      j["direction"] = nullptr;
    else
      j["direction"] = direction_str(inst.direction);
    out += j.dump();
    out += '\n';
  }
  return out;
}

inline void write_store_file(const std::string& path,
                             const std::vector<RelationInstance>& instances) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << write_store(instances);
}

inline std::vector<RelationInstance> read_store(const std::string& text) {
  std::vector<RelationInstance> out;
  std::istringstream in(text);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    nlohmann::json j = detail::parse_json_line(line, line_no);
    RelationInstance inst;
    if (!j.contains("sent_id") || !j.contains("tokens") || !j["tokens"].is_array())
      throw ParseError("store line needs \"sent_id\" and a \"tokens\" array", line_no);
    inst.sent_id = j["sent_id"].get<std::string>();
    size_t idx = 0;
    for (const nlohmann::json& tj : j["tokens"]) {
      Token t;
      t.index = ++idx;
      t.form = tj.at("form").get<std::string>();
      t.upos = tj.value("upos", "_");
      t.head = tj.at("head").get<size_t>();
      t.deprel = tj.at("deprel").get<std::string>();
      inst.sentence.tokens.push_back(std::move(t));
    }
    inst.e1 = detail::entity_from_json(j, "e1", line_no);
    inst.e2 = detail::entity_from_json(j, "e2", line_no);
    inst.label = j.at("label").get<std::string>();
    inst.direction = detail::direction_from_json(j, line_no);
    if (auto v = validate_tree(inst.sentence))
      throw ParseError(strf("invalid tree (%s at token %zu)", v->what.c_str(), v->token_index),
                       line_no);
    out.push_back(std::move(inst));
  }
  return out;
}

inline std::vector<RelationInstance> read_store_file(const std::string& path) {
  return read_store(read_text_file(path));
}

// Article id = sent_id prefix before the first '#', the whole id otherwise.
inline std::string article_id_of(const std::string& sent_id) {
  size_t h = sent_id.find('#');
  return h == std::string::npos ? sent_id : sent_id.substr(0, h);
}

struct SplitCounts {
  size_t train = 0, dev = 0, test = 0;
};

// Article-level split: whole articles land in one part, never individual
// sentences, so no sentence leaks across parts. Articles are shuffled by
// seed, then dealt by count.
inline std::array<std::vector<RelationInstance>, 3> split_by_article(
    const std::vector<RelationInstance>& instances, SplitCounts counts, uint64_t seed) {
  std::map<std::string, std::vector<const RelationInstance*>> articles;
  for (const RelationInstance& inst : instances)
    articles[article_id_of(inst.sent_id)].push_back(&inst);
  std::vector<std::string> ids;
  for (const auto& [id, _] : articles) ids.push_back(id);
  if (counts.train + counts.dev + counts.test != ids.size())
    throw DataError(strf("split counts %zu+%zu+%zu do not cover %zu articles", counts.train,
                         counts.dev, counts.test, ids.size()));
  auto rng = make_rng(derive_seed(seed, {seed_scope::kSplit}));
  shuffle_in_place(ids, rng);
  std::array<std::vector<RelationInstance>, 3> out;
  size_t pos = 0;
  size_t limits[3] = {counts.train, counts.dev, counts.test};
  for (size_t part = 0; part < 3; ++part) {
    for (size_t k = 0; k < limits[part]; ++k, ++pos)
      for (const RelationInstance* p : articles[ids[pos]]) out[part].push_back(*p);
  }
  return out;
}

}  // namespace srbrcnn
