#include "tokd/model/model.hpp"

#include <cmath>

#include "tokd/numeric/errors.hpp"
#include "tokd/numeric/ops.hpp"
#include "tokd/tokenizer/embed.hpp"
#include "tokd/tokenizer/patch.hpp"

namespace tokd {

namespace {

template <typename T>
Tensor<T> normal_tensor(Shape shape, double std, Rng& rng) {
  Tensor<T> t(std::move(shape));
  for (auto& v : t.values()) v = static_cast<T>(std * rng.normal());
  return t;
}

void check_extent(std::string_view what, std::size_t h, std::size_t w, const ModelConfig& cfg) {
  if (h != cfg.image_height || w != cfg.image_width) {
    throw DimensionError(std::string(what) + " is " + std::to_string(h) + "x" + std::to_string(w) +
                         ", model expects " + std::to_string(cfg.image_height) + "x" +
                         std::to_string(cfg.image_width));
  }
}

}  // namespace

template <typename T>
ModelInputs<T> prepare_inputs(std::span<const SourceView> sources, const PluckerMap& target_rays,
                              const ModelConfig& cfg) {
  cfg.validate();
  if (sources.empty()) throw ArgumentError("forward: at least one source view is required");
  const std::size_t p = cfg.patch, per_view = cfg.tokens_per_view();
  const std::size_t src_width = 9 * p * p;

  ModelInputs<T> in;
  in.source_features = Tensor<T>({sources.size() * per_view, src_width});
  for (std::size_t v = 0; v < sources.size(); ++v) {
    const SourceView& s = sources[v];
    if (s.image.channels() != 3) throw DimensionError("forward: source images must have 3 channels");
    check_extent("source image " + std::to_string(v), s.image.height(), s.image.width(), cfg);
    check_extent("source rays " + std::to_string(v), s.rays.height(), s.rays.width(), cfg);
    const auto img = patchify(s.image.tensor().template cast<T>(), p);
    const auto plk = patchify(s.rays.data.template cast<T>(), p);
    const Tensor<T> feats = source_features(img.patches, plk.patches);
    std::copy(feats.values().begin(), feats.values().end(), in.source_features.data() + v * per_view * src_width);
    for (std::size_t i = 0; i < per_view; ++i) {
      in.delta.push_back(kSourceRole);
      in.view_index.push_back(static_cast<std::int32_t>(v));
    }
  }
  check_extent("target rays", target_rays.height(), target_rays.width(), cfg);
  in.target_rays = patchify(target_rays.data.template cast<T>(), p).patches;
  for (std::size_t i = 0; i < per_view; ++i) {
    in.delta.push_back(kTargetRole);
    in.view_index.push_back(kTargetView);
  }
  return in;
}

template <typename T>
ParamStore<T> init_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  const std::size_t d = cfg.d_model, pp = cfg.patch * cfg.patch;
  ParamStore<T> store;
  auto linear_params = [&](const std::string& name, std::size_t in, std::size_t out) {
    store.add(name + ".weight", normal_tensor<T>({in, out}, 1.0 / std::sqrt(static_cast<double>(in)), rng));
    store.add(name + ".bias", Tensor<T>({out}));
  };
  linear_params("embed.source", 9 * pp, d);
  linear_params("embed.target", 6 * pp, d);
  const BlockDims dims = cfg.block_dims();
  if (cfg.variant != BlockVariant::Plain) register_style_params(store, dims, rng);
  for (std::size_t l = 0; l < cfg.n_layers; ++l) register_block_params(store, l, dims, cfg.variant, rng);
  linear_params("detok", d, 3 * pp);
  return store;
}

template <typename T>
Var<T> forward_graph(ParamBinder<T>& params, const ModelInputs<T>& inputs, const ModelConfig& cfg,
                     std::vector<Var<T>>* features) {
  Graph<T>& g = params.graph();
  const Var<T> src = ops::linear(g.constant(inputs.source_features), params("embed.source.weight"),
                                 std::optional<Var<T>>(params("embed.source.bias")));
  const Var<T> tgt = embed_target(g, inputs.target_rays,
                                  LinearWeights<T>{params("embed.target.weight"), params("embed.target.bias")});
  TokenBatch<T> batch{ops::concat_rows(std::vector<Var<T>>{src, tgt}), inputs.delta, inputs.view_index};
  if (features) features->push_back(batch.tokens);

  std::optional<Var<T>> style;
  if (cfg.variant != BlockVariant::Plain) style = style_vectors(params);
  const BlockDims dims = cfg.block_dims();
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    batch = apply_block(cfg.variant, batch, style, params, l, dims);
    if (features) features->push_back(batch.tokens);
  }

  const std::size_t n_src = inputs.source_features.rows();
  const Var<T> target_tokens = ops::slice_rows(batch.tokens, n_src, batch.size());
  const Var<T> patches = detokenize(target_tokens, LinearWeights<T>{params("detok.weight"), params("detok.bias")});
  return ops::gather(patches, Shape{cfg.image_height, cfg.image_width, 3},
                     unpatchify_source_index(cfg.image_height, cfg.image_width, 3, cfg.patch));
}

template <typename T>
Tensor<T> forward(const ParamStore<T>& params, std::span<const SourceView> sources, const PluckerMap& target_rays,
                  const ModelConfig& cfg) {
  const ModelInputs<T> inputs = prepare_inputs<T>(sources, target_rays, cfg);
  Graph<T> g;
  ParamBinder<T> bind(g, params, false);
  return forward_graph(bind, inputs, cfg).value();
}

template <typename T>
FeatureCapture<T> forward_with_features(const ParamStore<T>& params, std::span<const SourceView> sources,
                                        const PluckerMap& target_rays, const ModelConfig& cfg) {
  const ModelInputs<T> inputs = prepare_inputs<T>(sources, target_rays, cfg);
  Graph<T> g;
  ParamBinder<T> bind(g, params, false);
  std::vector<Var<T>> captured;
  FeatureCapture<T> out;
  out.prediction = forward_graph(bind, inputs, cfg, &captured).value();
  out.embedded = captured.front().value();
  for (std::size_t i = 1; i < captured.size(); ++i) out.layers.push_back(captured[i].value());
  out.delta = inputs.delta;
  return out;
}

template <typename T>
Var<T> loss_graph(Var<T> prediction, const Tensor<T>& target, const ModelConfig& cfg, const PerceptualHook<T>& hook) {
  if (prediction.shape() != target.shape()) {
    throw DimensionError("loss: prediction " + shape_string(prediction.shape()) + " vs target " +
                         shape_string(target.shape()));
  }
  Var<T> total = ops::mse(prediction, target);
  std::optional<Var<T>> perceptual;
  if (hook) {
    perceptual = hook(prediction, target);
  } else if (cfg.perceptual == PerceptualKind::GradientL1) {
    perceptual = ops::gradient_l1(prediction, target);
  }
  if (perceptual && cfg.lambda_perceptual != 0.0) {
    total = ops::add(total, ops::scale(*perceptual, static_cast<T>(cfg.lambda_perceptual)));
  }
  return total;
}

double loss(const Image& prediction, const Image& target, const ModelConfig& cfg) {
  if (!prediction.same_extent(target)) {
    throw DimensionError("loss: prediction " + shape_string(prediction.tensor().shape()) + " vs target " +
                         shape_string(target.tensor().shape()));
  }
  Graph<double> g;
  return loss_graph(g.constant(prediction.tensor()), target.tensor(), cfg).value().item();
}

template <typename T>
LossAndGrad<T> loss_and_gradients(const ParamStore<T>& params, std::span<const SourceView> sources,
                                  const PluckerMap& target_rays, const Image& target, const ModelConfig& cfg,
                                  ParamStore<T>& grads, T weight, const PerceptualHook<T>& hook) {
  const ModelInputs<T> inputs = prepare_inputs<T>(sources, target_rays, cfg);
  Graph<T> g;
  ParamBinder<T> bind(g, params, true);
  const Var<T> pred = forward_graph(bind, inputs, cfg);
  const Var<T> l = loss_graph(pred, target.tensor().template cast<T>(), cfg, hook);
  g.backward(l, Tensor<T>(l.shape(), weight));
  bind.accumulate_grads(grads);
  return LossAndGrad<T>{l.value().item(), pred.value(), g.flops()};
}

template <typename T>
Image to_image(const Tensor<T>& prediction) {
  return Image(prediction.template cast<double>());
}

#define TOKD_INSTANTIATE_MODEL(T)                                                                                  \
  template ModelInputs<T> prepare_inputs(std::span<const SourceView>, const PluckerMap&, const ModelConfig&);      \
  template ParamStore<T> init_params(const ModelConfig&, std::uint64_t);                                           \
  template Var<T> forward_graph(ParamBinder<T>&, const ModelInputs<T>&, const ModelConfig&, std::vector<Var<T>>*); \
  template Tensor<T> forward(const ParamStore<T>&, std::span<const SourceView>, const PluckerMap&,                 \
                             const ModelConfig&);                                                                  \
  template FeatureCapture<T> forward_with_features(const ParamStore<T>&, std::span<const SourceView>,              \
                                                   const PluckerMap&, const ModelConfig&);                         \
  template Var<T> loss_graph(Var<T>, const Tensor<T>&, const ModelConfig&, const PerceptualHook<T>&);              \
  template LossAndGrad<T> loss_and_gradients(const ParamStore<T>&, std::span<const SourceView>, const PluckerMap&, \
                                             const Image&, const ModelConfig&, ParamStore<T>&, T,                  \
                                             const PerceptualHook<T>&);                                            \
  template Image to_image(const Tensor<T>&);

TOKD_INSTANTIATE_MODEL(float)
TOKD_INSTANTIATE_MODEL(double)

#undef TOKD_INSTANTIATE_MODEL

}  // namespace tokd
