#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "paae/error.hpp"

namespace paae {

enum class ModelKind { kAE, kVAE, kPAAE, kPAVAE };
enum class ScheduleKind { kNone, kStep, kSmooth };

inline bool is_variational(ModelKind k) {
  return k == ModelKind::kVAE || k == ModelKind::kPAVAE;
}
inline bool is_pathway(ModelKind k) {
  return k == ModelKind::kPAAE || k == ModelKind::kPAVAE;
}

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::kAE: return "AE";
    case ModelKind::kVAE: return "VAE";
    case ModelKind::kPAAE: return "PAAE";
    case ModelKind::kPAVAE: return "PAVAE";
  }
  return "?";
}

inline ModelKind parse_model_kind(std::string_view s) {
  if (s == "AE" || s == "ae") return ModelKind::kAE;
  if (s == "VAE" || s == "vae") return ModelKind::kVAE;
  if (s == "PAAE" || s == "paae") return ModelKind::kPAAE;
  if (s == "PAVAE" || s == "pavae") return ModelKind::kPAVAE;
  throw ConfigError("unknown model kind '" + std::string(s) +
                    "' (expected AE, VAE, PAAE or PAVAE)");
}

inline std::string to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::kNone: return "none";
    case ScheduleKind::kStep: return "step";
    case ScheduleKind::kSmooth: return "smooth";
  }
  return "?";
}

inline ScheduleKind parse_schedule_kind(std::string_view s) {
  if (s == "none") return ScheduleKind::kNone;
  if (s == "step") return ScheduleKind::kStep;
  if (s == "smooth") return ScheduleKind::kSmooth;
  throw ConfigError("unknown schedule '" + std::string(s) +
                    "' (expected none, step or smooth)");
}

/// Column selection for one pathway encoder.
struct PathwayMask {
  std::string name;
  std::vector<std::size_t> columns;
  friend bool operator==(const PathwayMask&, const PathwayMask&) = default;
};

struct ArchitectureConfig {
  ModelKind kind = ModelKind::kPAAE;
  /// Hidden widths of every pathway encoder; empty means one linear |p|→1 layer.
  std::vector<std::size_t> pathway_hidden_sizes;
  /// Latent encoder widths; the last entry is the latent dimension.
  std::vector<std::size_t> encoder_layer_sizes{128, 64};
  /// Decoder hidden widths. Unset mirrors the encoder. The output layer
  /// (width = gene count) is always appended.
  std::optional<std::vector<std::size_t>> decoder_hidden_sizes;
  double dropout_rate = 0.5;
  double beta = 1.0;
  ScheduleKind schedule = ScheduleKind::kNone;
  std::size_t ts = 32;
  std::size_t te = 160;

  std::size_t latent_dim() const {
    return encoder_layer_sizes.empty() ? 0 : encoder_layer_sizes.back();
  }

  std::vector<std::size_t> resolved_decoder_hidden() const {
    if (decoder_hidden_sizes) return *decoder_hidden_sizes;
    std::vector<std::size_t> mirrored(encoder_layer_sizes.rbegin(),
                                      encoder_layer_sizes.rend());
    if (!mirrored.empty()) mirrored.erase(mirrored.begin());
    return mirrored;
  }

  void validate() const {
    if (encoder_layer_sizes.empty() || latent_dim() == 0)
      throw ConfigError("latent dimension must be >= 1");
    for (std::size_t s : encoder_layer_sizes)
      if (s == 0) throw ConfigError("encoder layer widths must be >= 1");
    for (std::size_t s : pathway_hidden_sizes)
      if (s == 0) throw ConfigError("pathway hidden widths must be >= 1");
    for (std::size_t s : resolved_decoder_hidden())
      if (s == 0) throw ConfigError("decoder layer widths must be >= 1");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
      throw ConfigError("dropout rate must lie in [0, 1)");
    if (!(beta >= 0.0)) throw ConfigError("beta must be >= 0");
    if (schedule == ScheduleKind::kSmooth && te <= ts)
      throw ConfigError("smooth schedule requires Te > Ts");
  }

  friend bool operator==(const ArchitectureConfig&, const ArchitectureConfig&) = default;
};

}  // namespace paae
