#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "srbrcnn/model.hpp"

namespace srbrcnn {

inline constexpr char kCheckpointMagic[4] = {'S', 'R', 'B', 'R'};
inline constexpr uint32_t kCheckpointVersion = 1;

namespace detail {

inline void write_u32(std::ostream& out, uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

inline void write_u64(std::ostream& out, uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

inline void write_f64(std::ostream& out, double v) {
  write_u64(out, std::bit_cast<uint64_t>(v));
}

inline uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw DataError("checkpoint truncated");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

inline uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw DataError("checkpoint truncated");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

inline double read_f64(std::istream& in) { return std::bit_cast<double>(read_u64(in)); }

inline nlohmann::ordered_json strategy_to_json(const std::optional<CutStrategy>& s) {
  if (!s) return nullptr;
  return {{"kind", cut_kind_str(s->kind)}, {"cut_ratio", s->cut_ratio}, {"seed", s->seed}};
}

inline std::optional<CutStrategy> strategy_from_json(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  CutStrategy s;
  s.kind = cut_kind_from(j.at("kind").get<std::string>());
  s.cut_ratio = j.at("cut_ratio").get<double>();
  s.seed = j.at("seed").get<uint64_t>();
  return s;
}

}  // namespace detail

// Layout: magic "SRBR", version, length-prefixed JSON header (schema, both
// vocabularies, dimensions, blend weight, cut strategy), then each tensor as
// length-prefixed name, rank, dims and raw doubles. All integers and doubles
// are little-endian, so the bytes are identical across writes of the same
// model.
inline void save_checkpoint(std::ostream& out, const ModelParams& m) {
  out.write(kCheckpointMagic, 4);
  detail::write_u32(out, kCheckpointVersion);
  nlohmann::ordered_json header{{"relations", m.schema.relations},
                                {"word_vocab", m.word_vocab.items},
                                {"rel_vocab", m.rel_vocab.items},
                                {"word_dim", m.word_dim},
                                {"rel_dim", m.rel_dim},
                                {"conv_dim", m.conv_dim},
                                {"alpha", m.alpha},
                                {"strategy", detail::strategy_to_json(m.strategy)}};
  std::string hs = header.dump();
  detail::write_u32(out, static_cast<uint32_t>(hs.size()));
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));

  uint32_t count = 0;
  m.p.for_each([&](const char*, const Tensor&) { ++count; });
  detail::write_u32(out, count);
  m.p.for_each([&](const char* name, const Tensor& t) {
    std::string n = name;
    detail::write_u32(out, static_cast<uint32_t>(n.size()));
    out.write(n.data(), static_cast<std::streamsize>(n.size()));
    detail::write_u32(out, static_cast<uint32_t>(t.rank()));
    for (size_t d : t.shape) detail::write_u64(out, d);
    for (double v : t.data) detail::write_f64(out, v);
  });
  if (!out) throw DataError("checkpoint write failed");
}

inline void save_checkpoint_file(const std::string& path, const ModelParams& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  save_checkpoint(out, m);
}

inline ModelParams load_checkpoint(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kCheckpointMagic))
    throw DataError("not a checkpoint (bad magic)");
  uint32_t version = detail::read_u32(in);
  if (version != kCheckpointVersion)
    throw DataError(strf("unsupported checkpoint version %u", version));
  uint32_t hlen = detail::read_u32(in);
  std::string hs(hlen, '\0');
  if (!in.read(hs.data(), hlen)) throw DataError("checkpoint truncated");
  nlohmann::json header = nlohmann::json::parse(hs, nullptr, false);
  if (header.is_discarded()) throw DataError("checkpoint header is not valid JSON");

  LabelSchema schema{header.at("relations").get<std::vector<std::string>>()};
  Vocab words = Vocab::from_items(header.at("word_vocab").get<std::vector<std::string>>());
  Vocab rels = Vocab::from_items(header.at("rel_vocab").get<std::vector<std::string>>());
  ModelParams m = ModelParams::shaped(std::move(schema), std::move(words), std::move(rels),
                                      header.at("word_dim").get<size_t>(),
                                      header.at("rel_dim").get<size_t>(),
                                      header.at("conv_dim").get<size_t>());
  m.alpha = header.at("alpha").get<double>();
  m.strategy = detail::strategy_from_json(header.at("strategy"));

  std::unordered_map<std::string, Tensor*> slots;
  m.p.for_each([&](const char* name, Tensor& t) { slots[name] = &t; });
  uint32_t count = detail::read_u32(in);
  if (count != slots.size())
    throw DataError(strf("checkpoint holds %u tensors, expected %zu", count, slots.size()));
  for (uint32_t k = 0; k < count; ++k) {
    uint32_t nlen = detail::read_u32(in);
    std::string name(nlen, '\0');
    if (!in.read(name.data(), nlen)) throw DataError("checkpoint truncated");
    auto it = slots.find(name);
    if (it == slots.end()) throw DataError("unexpected tensor in checkpoint: " + name);
    uint32_t rank = detail::read_u32(in);
    std::vector<size_t> shape(rank);
    for (uint32_t d = 0; d < rank; ++d) shape[d] = detail::read_u64(in);
    Tensor& dst = *it->second;
    if (shape != dst.shape)
      throw DataError(strf("tensor %s has shape mismatch against the header", name.c_str()));
    for (double& v : dst.data) v = detail::read_f64(in);
  }
  return m;
}

inline ModelParams load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  return load_checkpoint(in);
}

}  // namespace srbrcnn
