#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "paae/core/layers.hpp"
#include "paae/core/matrix.hpp"
#include "paae/core/rng.hpp"
#include "paae/error.hpp"
#include "paae/models/arch.hpp"

namespace paae {

/// Dense layers applied in sequence: ReLU and dropout after every layer but
/// the last, which stays linear.
using LayerStack = std::vector<Dense>;

struct ModelParams {
  std::vector<LayerStack> pathway_encoders;
  LayerStack encoder;
  LayerStack decoder;
  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Visits every weight/bias tensor in a fixed order: pathway encoders,
/// latent encoder, decoder; W before b within a layer.
template <class Params, class F>
void for_each_tensor(Params& params, F&& f) {
  auto visit_stack = [&](auto& stack) {
    for (auto& layer : stack) {
      f(layer.W);
      f(layer.b);
    }
  };
  for (auto& s : params.pathway_encoders) visit_stack(s);
  visit_stack(params.encoder);
  visit_stack(params.decoder);
}

inline std::size_t count_params(const ModelParams& params) {
  std::size_t n = 0;
  for_each_tensor(params, [&](const Matrix& m) { n += m.size(); });
  return n;
}

inline ModelParams zeros_like(const ModelParams& params) {
  ModelParams z = params;
  for_each_tensor(z, [](Matrix& m) { m.fill(0.0); });
  return z;
}

struct Model {
  ArchitectureConfig arch;
  std::size_t gene_count = 0;
  std::vector<std::string> gene_names;
  std::vector<PathwayMask> masks;
  ModelParams params;
  friend bool operator==(const Model&, const Model&) = default;
};

namespace detail {

inline LayerStack build_stack(std::size_t in, const std::vector<std::size_t>& widths,
                              Rng& rng) {
  LayerStack stack;
  stack.reserve(widths.size());
  for (std::size_t w : widths) {
    stack.push_back(Dense::init(in, w, rng));
    in = w;
  }
  return stack;
}

inline void validate_masks(const std::vector<PathwayMask>& masks, std::size_t gene_count) {
  for (const auto& m : masks) {
    if (m.columns.empty())
      throw ConfigError("pathway '" + m.name + "' has no columns");
    std::set<std::size_t> seen;
    for (std::size_t c : m.columns) {
      if (c >= gene_count)
        throw ShapeError("pathway '" + m.name + "' column " + std::to_string(c) +
                         " is outside the gene axis of width " +
                         std::to_string(gene_count));
      if (!seen.insert(c).second)
        throw ConfigError("pathway '" + m.name + "' repeats column " + std::to_string(c));
    }
  }
}

}  // namespace detail

/// Initializes parameters for `arch` over a gene axis of width `gene_count`.
/// Pathway models get one |p_j| → hidden… → 1 encoder per mask; genes outside
/// every mask have no encoder-side weights but are still reconstructed.
inline Model build_model(const ArchitectureConfig& arch, std::size_t gene_count,
                         std::vector<PathwayMask> masks, Rng& rng) {
  arch.validate();
  if (gene_count == 0) throw ConfigError("gene count must be >= 1");
  Model model;
  model.arch = arch;
  model.gene_count = gene_count;

  std::size_t encoder_in = gene_count;
  if (is_pathway(arch.kind)) {
    if (masks.empty())
      throw ConfigError(to_string(arch.kind) + " requires a non-empty pathway set");
    detail::validate_masks(masks, gene_count);
    std::vector<std::size_t> widths = arch.pathway_hidden_sizes;
    widths.push_back(1);
    for (const auto& m : masks)
      model.params.pathway_encoders.push_back(
          detail::build_stack(m.columns.size(), widths, rng));
    encoder_in = masks.size();
    model.masks = std::move(masks);
  }

  std::vector<std::size_t> enc = arch.encoder_layer_sizes;
  if (is_variational(arch.kind)) enc.back() *= 2;
  model.params.encoder = detail::build_stack(encoder_in, enc, rng);

  std::vector<std::size_t> dec = arch.resolved_decoder_hidden();
  dec.push_back(gene_count);
  model.params.decoder = detail::build_stack(arch.latent_dim(), dec, rng);
  return model;
}

/// Cached activations for one LayerStack forward pass.
struct StackCache {
  std::vector<Matrix> inputs;    // input to each layer
  std::vector<Matrix> pre;       // affine output of each hidden layer
  std::vector<Matrix> dropouts;  // dropout multipliers of each hidden layer
};

inline Matrix stack_forward(const LayerStack& stack, const Matrix& x, double dropout_rate,
                            bool training, Rng& rng, StackCache* cache = nullptr) {
  if (stack.empty()) return x;
  if (cache) *cache = StackCache{};
  Matrix h = x;
  for (std::size_t i = 0; i < stack.size(); ++i) {
    if (cache) cache->inputs.push_back(h);
    Matrix pre = affine_forward(h, stack[i].W, stack[i].b);
    if (i + 1 == stack.size()) return pre;
    auto dropped = dropout(relu_forward(pre), dropout_rate, training, rng);
    if (cache) {
      cache->pre.push_back(std::move(pre));
      cache->dropouts.push_back(std::move(dropped.mask));
    }
    h = std::move(dropped.output);
  }
  return h;
}

/// Accumulates parameter gradients into `grads` and returns ∂L/∂input.
inline Matrix stack_backward(const LayerStack& stack, const StackCache& cache,
                             const Matrix& upstream, LayerStack& grads) {
  Matrix g = upstream;
  for (std::size_t i = stack.size(); i-- > 0;) {
    if (i + 1 < stack.size())
      g = relu_backward(cache.pre[i], dropout_backward(cache.dropouts[i], g));
    AffineGrads ag = affine_backward(cache.inputs[i], stack[i].W, g);
    grads[i].W += ag.W;
    grads[i].b += ag.b;
    g = std::move(ag.x);
  }
  return g;
}

struct ForwardOutputs {
  Matrix a;       // pathway activities (pathway models)
  Matrix z;       // latent code (sample for variational models)
  Matrix mu;      // variational models
  Matrix logvar;  // variational models
  Matrix eps;     // reparameterization noise
  Matrix x_hat;
};

struct ForwardCache {
  std::vector<StackCache> pathways;
  StackCache encoder;
  StackCache decoder;
};

/// a = ∥_j E_{p_j}(x[:, p_j]), one column per pathway.
inline Matrix pathway_activity_forward(const Model& model, const Matrix& x, bool training,
                                       Rng& rng, ForwardCache* cache = nullptr) {
  if (!is_pathway(model.arch.kind))
    throw ConfigError(to_string(model.arch.kind) + " has no pathway activity space");
  if (x.cols() != model.gene_count)
    throw ShapeError("pathway_activity_forward: input has " + std::to_string(x.cols()) +
                     " columns, model expects " + std::to_string(model.gene_count));
  Matrix a(x.rows(), model.masks.size());
  if (cache) cache->pathways.assign(model.masks.size(), StackCache{});
  for (std::size_t j = 0; j < model.masks.size(); ++j) {
    Matrix xm = select_columns(x, model.masks[j].columns);
    Matrix aj = stack_forward(model.params.pathway_encoders[j], xm, model.arch.dropout_rate,
                              training, rng, cache ? &cache->pathways[j] : nullptr);
    for (std::size_t r = 0; r < x.rows(); ++r) a(r, j) = aj(r, 0);
  }
  return a;
}

struct EncodeResult {
  Matrix z;       // deterministic models
  Matrix mu;      // variational models
  Matrix logvar;  // variational models
};

/// Latent encoder. Variational heads split the final layer into μ | logσ².
inline EncodeResult encode(const Model& model, const Matrix& input, bool training, Rng& rng,
                           ForwardCache* cache = nullptr) {
  const auto& enc = model.params.encoder;
  if (enc.empty() || input.cols() != enc.front().in())
    throw ShapeError("encode: input has " + std::to_string(input.cols()) +
                     " columns, encoder expects " +
                     std::to_string(enc.empty() ? 0 : enc.front().in()));
  Matrix out = stack_forward(enc, input, model.arch.dropout_rate, training, rng,
                             cache ? &cache->encoder : nullptr);
  EncodeResult r;
  if (is_variational(model.arch.kind)) {
    const std::size_t d = model.arch.latent_dim();
    r.mu = column_block(out, 0, d);
    r.logvar = column_block(out, d, 2 * d);
  } else {
    r.z = std::move(out);
  }
  return r;
}

/// z = μ + exp(logσ²/2)·ε with ε ~ N(0, I). The drawn ε is returned in `eps_out`.
inline Matrix reparameterize(const Matrix& mu, const Matrix& logvar, Rng& rng,
                             Matrix* eps_out = nullptr) {
  if (!mu.same_shape(logvar))
    throw ShapeError("reparameterize: " + mu.shape_string() + " vs " +
                     logvar.shape_string());
  if (!mu.all_finite() || !logvar.all_finite())
    throw NumericError("reparameterize: non-finite μ or logσ²");
  Matrix eps(mu.rows(), mu.cols());
  Matrix z(mu.rows(), mu.cols());
  for (std::size_t i = 0; i < z.size(); ++i) {
    eps[i] = rng.normal();
    z[i] = mu[i] + std::exp(0.5 * logvar[i]) * eps[i];
  }
  if (eps_out) *eps_out = std::move(eps);
  return z;
}

inline Matrix decode(const Model& model, const Matrix& z, bool training, Rng& rng,
                     ForwardCache* cache = nullptr) {
  const auto& dec = model.params.decoder;
  if (dec.empty() || z.cols() != dec.front().in())
    throw ShapeError("decode: latent has " + std::to_string(z.cols()) +
                     " columns, decoder expects " +
                     std::to_string(dec.empty() ? 0 : dec.front().in()));
  return stack_forward(dec, z, model.arch.dropout_rate, training, rng,
                       cache ? &cache->decoder : nullptr);
}

/// Full forward pass. In training mode variational models sample z; at
/// inference dropout is off and z = μ.
inline ForwardOutputs forward(const Model& model, const Matrix& x, bool training, Rng& rng,
                              ForwardCache* cache = nullptr) {
  if (x.cols() != model.gene_count)
    throw ShapeError("forward: input has " + std::to_string(x.cols()) +
                     " columns, model expects " + std::to_string(model.gene_count));
  ForwardOutputs out;
  const Matrix* enc_in = &x;
  if (is_pathway(model.arch.kind)) {
    out.a = pathway_activity_forward(model, x, training, rng, cache);
    enc_in = &out.a;
  }
  EncodeResult e = encode(model, *enc_in, training, rng, cache);
  if (is_variational(model.arch.kind)) {
    out.mu = std::move(e.mu);
    out.logvar = std::move(e.logvar);
    if (training) {
      out.z = reparameterize(out.mu, out.logvar, rng, &out.eps);
    } else {
      out.z = out.mu;
      out.eps = Matrix(out.mu.rows(), out.mu.cols());
    }
  } else {
    out.z = std::move(e.z);
  }
  out.x_hat = decode(model, out.z, training, rng, cache);
  return out;
}

/// Backpropagates ∂L/∂x̂ (and, for variational models, the direct KL terms
/// ∂L/∂μ and ∂L/∂logσ²) through the cached forward pass.
inline ModelParams backward(const Model& model, const ForwardOutputs& out,
                            const ForwardCache& cache, const Matrix& grad_x_hat,
                            const Matrix* grad_mu_direct = nullptr,
                            const Matrix* grad_logvar_direct = nullptr) {
  ModelParams grads = zeros_like(model.params);
  Matrix grad_z =
      stack_backward(model.params.decoder, cache.decoder, grad_x_hat, grads.decoder);

  Matrix grad_enc_out;
  if (is_variational(model.arch.kind)) {
    Matrix g_mu = grad_z;
    Matrix g_lv(grad_z.rows(), grad_z.cols());
    for (std::size_t i = 0; i < g_lv.size(); ++i)
      g_lv[i] = grad_z[i] * 0.5 * std::exp(0.5 * out.logvar[i]) * out.eps[i];
    if (grad_mu_direct) g_mu += *grad_mu_direct;
    if (grad_logvar_direct) g_lv += *grad_logvar_direct;
    grad_enc_out = hconcat(g_mu, g_lv);
  } else {
    grad_enc_out = std::move(grad_z);
  }
  Matrix grad_enc_in =
      stack_backward(model.params.encoder, cache.encoder, grad_enc_out, grads.encoder);

  if (is_pathway(model.arch.kind)) {
    for (std::size_t j = 0; j < model.masks.size(); ++j) {
      Matrix gj(grad_enc_in.rows(), 1);
      for (std::size_t r = 0; r < gj.rows(); ++r) gj(r, 0) = grad_enc_in(r, j);
      stack_backward(model.params.pathway_encoders[j], cache.pathways[j], gj,
                     grads.pathway_encoders[j]);
    }
  }
  return grads;
}

}  // namespace paae
