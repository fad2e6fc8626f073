#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <json.hpp>

#include "paae/error.hpp"
#include "paae/models/arch.hpp"
#include "paae/models/model.hpp"

namespace paae {

// Checkpoint layout (all integers little-endian):
//   8 bytes   magic "PAAECKPT"
//   u32       format version
//   u64       header length L
//   L bytes   UTF-8 JSON header (architecture, genes, pathways, tensor shapes)
//   f64 × N   tensor values in for_each_tensor order, IEEE-754 bit patterns
inline constexpr char kCheckpointMagic[8] = {'P', 'A', 'A', 'E', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline nlohmann::json to_json(const ArchitectureConfig& a) {
  nlohmann::json j;
  j["kind"] = to_string(a.kind);
  j["pathway_hidden_sizes"] = a.pathway_hidden_sizes;
  j["encoder_layer_sizes"] = a.encoder_layer_sizes;
  j["decoder_hidden_sizes"] = a.decoder_hidden_sizes ? nlohmann::json(*a.decoder_hidden_sizes)
                                                     : nlohmann::json(nullptr);
  j["dropout_rate"] = a.dropout_rate;
  j["beta"] = a.beta;
  j["schedule"] = to_string(a.schedule);
  j["ts"] = a.ts;
  j["te"] = a.te;
  return j;
}

inline ArchitectureConfig architecture_from_json(const nlohmann::json& j) {
  try {
    ArchitectureConfig a;
    a.kind = parse_model_kind(j.at("kind").get<std::string>());
    a.pathway_hidden_sizes = j.at("pathway_hidden_sizes").get<std::vector<std::size_t>>();
    a.encoder_layer_sizes = j.at("encoder_layer_sizes").get<std::vector<std::size_t>>();
    if (!j.at("decoder_hidden_sizes").is_null())
      a.decoder_hidden_sizes = j.at("decoder_hidden_sizes").get<std::vector<std::size_t>>();
    a.dropout_rate = j.at("dropout_rate").get<double>();
    a.beta = j.at("beta").get<double>();
    a.schedule = parse_schedule_kind(j.at("schedule").get<std::string>());
    a.ts = j.at("ts").get<std::size_t>();
    a.te = j.at("te").get<std::size_t>();
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("architecture: ") + e.what());
  }
}

namespace detail {

template <class T>
void put_le(std::string& buf, T v) {
  static_assert(std::is_unsigned_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i)
    buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

template <class T>
T get_le(const std::string& buf, std::size_t& pos) {
  if (pos + sizeof(T) > buf.size()) throw ParseError("checkpoint truncated");
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    v |= static_cast<T>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
  pos += sizeof(T);
  return v;
}

}  // namespace detail

inline std::string serialize_checkpoint(const Model& model) {
  nlohmann::json header;
  header["format"] = "paae-checkpoint";
  header["architecture"] = to_json(model.arch);
  header["gene_count"] = model.gene_count;
  header["gene_names"] = model.gene_names;
  nlohmann::json pathways = nlohmann::json::array();
  for (const auto& m : model.masks)
    pathways.push_back({{"name", m.name}, {"columns", m.columns}});
  header["pathways"] = pathways;
  nlohmann::json shapes = nlohmann::json::array();
  for_each_tensor(model.params,
                  [&](const Matrix& t) { shapes.push_back({t.rows(), t.cols()}); });
  header["tensors"] = shapes;
  header["layers"] = {
      {"pathway_encoder_depth",
       model.params.pathway_encoders.empty() ? 0 : model.params.pathway_encoders[0].size()},
      {"encoder_depth", model.params.encoder.size()},
      {"decoder_depth", model.params.decoder.size()}};

  const std::string text = header.dump();
  std::string buf(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::put_le<std::uint32_t>(buf, kCheckpointVersion);
  detail::put_le<std::uint64_t>(buf, text.size());
  buf += text;
  for_each_tensor(model.params, [&](const Matrix& t) {
    for (double v : t.values()) detail::put_le<std::uint64_t>(buf, std::bit_cast<std::uint64_t>(v));
  });
  return buf;
}

inline Model deserialize_checkpoint(const std::string& buf) {
  if (buf.size() < sizeof(kCheckpointMagic) ||
      std::memcmp(buf.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0)
    throw ParseError("not a checkpoint file (bad magic)");
  std::size_t pos = sizeof(kCheckpointMagic);
  const auto version = detail::get_le<std::uint32_t>(buf, pos);
  if (version != kCheckpointVersion)
    throw ParseError("unsupported checkpoint version " + std::to_string(version));
  const auto len = detail::get_le<std::uint64_t>(buf, pos);
  if (pos + len > buf.size()) throw ParseError("checkpoint header truncated");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(buf.substr(pos, len));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint header: ") + e.what());
  }
  pos += len;

  Model model;
  try {
    model.arch = architecture_from_json(header.at("architecture"));
    model.gene_count = header.at("gene_count").get<std::size_t>();
    model.gene_names = header.at("gene_names").get<std::vector<std::string>>();
    for (const auto& p : header.at("pathways"))
      model.masks.push_back({p.at("name").get<std::string>(),
                             p.at("columns").get<std::vector<std::size_t>>()});
    const auto& layers = header.at("layers");
    const std::size_t pdepth = layers.at("pathway_encoder_depth").get<std::size_t>();
    const std::size_t edepth = layers.at("encoder_depth").get<std::size_t>();
    const std::size_t ddepth = layers.at("decoder_depth").get<std::size_t>();
    model.params.pathway_encoders.assign(model.masks.size(), LayerStack(pdepth));
    model.params.encoder.resize(edepth);
    model.params.decoder.resize(ddepth);
    const auto& shapes = header.at("tensors");
    std::size_t k = 0;
    for_each_tensor(model.params, [&](Matrix& t) {
      if (k >= shapes.size()) throw ParseError("checkpoint tensor list too short");
      const auto rows = shapes[k].at(0).get<std::size_t>();
      const auto cols = shapes[k].at(1).get<std::size_t>();
      std::vector<double> vals(rows * cols);
      for (double& v : vals) v = std::bit_cast<double>(detail::get_le<std::uint64_t>(buf, pos));
      t = Matrix(rows, cols, std::move(vals));
      ++k;
    });
    if (k != shapes.size()) throw ParseError("checkpoint tensor count mismatch");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint header: ") + e.what());
  }
  if (pos != buf.size()) throw ParseError("trailing bytes after checkpoint tensors");
  return model;
}

inline void save_checkpoint(const std::filesystem::path& path, const Model& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  const std::string buf = serialize_checkpoint(model);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw DataError("failed writing " + path.string());
}

inline Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(buf);
}

}  // namespace paae
