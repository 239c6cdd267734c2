#include "tokd/eval/flops.hpp"

#include "tokd/numeric/ops.hpp"

namespace tokd {

namespace {

using u64 = std::uint64_t;

u64 linear_flops(u64 rows, u64 in, u64 out) { return 2 * rows * in * out + rows * out; }

}  // namespace

ModelCost count_params_flops(const ModelConfig& cfg, std::size_t sources) {
  cfg.validate();
  namespace fc = flop_cost;
  const u64 d = cfg.d_model, ds = cfg.style_width(), hid = cfg.ffn_mult * cfg.d_model;
  const u64 pp = cfg.patch * cfg.patch, per_view = cfg.tokens_per_view();
  const u64 n_src = sources * per_view, n = n_src + per_view;
  const u64 heads = cfg.n_heads, dh = d / heads;
  const bool modulated = cfg.variant != BlockVariant::Plain;
  const bool post = cfg.variant == BlockVariant::TokDPlus;

  ModelCost c;
  c.params = linear_params(9 * pp, d) + linear_params(6 * pp, d) + linear_params(d, 3 * pp);
  c.forward_flops = linear_flops(n_src, 9 * pp, d) + linear_flops(per_view, 6 * pp, d) +
                    linear_flops(per_view, d, 3 * pp) + fc::kSigmoid * per_view * 3 * pp;
  if (modulated) {
    c.params += 2 * ds + linear_params(ds, ds);
    c.forward_flops += linear_flops(2, ds, ds);
  }

  const u64 block_params = linear_params(d, 3 * d) + heads + linear_params(d, d) + 2 * d + linear_params(d, hid) +
                           linear_params(hid, d);
  const u64 attention_core =
      heads * (2 * fc::kQkNormalize * n * dh + 2 * n * n * dh + n * n + fc::kSoftmax * n * n + 2 * n * n * dh);
  const u64 block_flops = linear_flops(n, d, 3 * d) + attention_core + linear_flops(n, d, d) + fc::kAdd * n * d +
                          fc::kLayerNorm * n * d + linear_flops(n, d, hid) + fc::kGelu * n * hid +
                          linear_flops(n, hid, d) + fc::kAdd * n * d;
  // A pre site holds scale and shift heads; a post site only a scale head.
  const u64 pre_site_params = 2 * linear_params(ds, d);
  const u64 pre_site_flops = 2 * linear_flops(2, ds, d) + 2 * n * d + 2 * d;
  const u64 post_site_params = linear_params(ds, d);
  const u64 post_site_flops = linear_flops(2, ds, d) + n * d + 2 * d;

  u64 per_layer_params = block_params, per_layer_flops = block_flops;
  if (modulated) {
    per_layer_params += 2 * pre_site_params;
    per_layer_flops += 2 * pre_site_flops;
  }
  if (post) {
    per_layer_params += 2 * post_site_params;
    per_layer_flops += 2 * post_site_flops;
  }
  c.params += cfg.n_layers * per_layer_params;
  c.forward_flops += cfg.n_layers * per_layer_flops;
  return c;
}

}  // namespace tokd
