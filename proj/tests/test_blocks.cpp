#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "tokd/blocks/blocks.hpp"
#include "tokd/numeric/errors.hpp"
#include "tokd/numeric/gradcheck.hpp"
#include "tokd/numeric/ops.hpp"

using namespace tokd;
using tokd::test::random_tensor;

namespace {

BlockDims dims_for(std::size_t d, std::size_t heads) {
  BlockDims dims;
  dims.d_model = d;
  dims.heads = heads;
  dims.ffn_hidden = 4 * d;
  dims.d_style = d;
  dims.n_layers = 2;
  return dims;
}

ParamStore<double> block_store(const BlockDims& dims, BlockVariant v, std::uint64_t seed) {
  ParamStore<double> store;
  Rng rng(seed);
  register_style_params(store, dims, rng);
  register_block_params(store, 0, dims, v, rng);
  return store;
}

/// Overwrites every parameter whose name contains `part` with random values.
void randomize(ParamStore<double>& store, const std::string& part, Rng& rng, double scale = 1.0) {
  for (auto& p : store.entries())
    if (p.name.find(part) != std::string::npos)
      for (auto& v : p.value.values()) v = scale * rng.uniform(-1.0, 1.0);
}

void zero(ParamStore<double>& store, const std::string& part) {
  for (auto& p : store.entries())
    if (p.name.find(part) != std::string::npos) p.value.fill(0.0);
}

std::vector<std::uint8_t> roles(std::size_t n_src, std::size_t n_tgt) {
  std::vector<std::uint8_t> r(n_src, kSourceRole);
  r.insert(r.end(), n_tgt, kTargetRole);
  return r;
}

Tensor<double> run(BlockVariant v, const ParamStore<double>& store, const Tensor<double>& x,
                   const std::vector<std::uint8_t>& delta, const BlockDims& dims) {
  Graph<double> g;
  ParamBinder<double> bind(g, store, false);
  TokenBatch<double> batch{g.constant(x), delta, std::vector<std::int32_t>(delta.size(), 0)};
  std::optional<Var<double>> style;
  if (v != BlockVariant::Plain) style = style_vectors(bind);
  return apply_block(v, batch, style, bind, 0, dims).tokens.value();
}

double gelu_ref(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

}  // namespace

TEST_CASE("variant names") {
  for (auto v : {BlockVariant::Plain, BlockVariant::TokD, BlockVariant::TokDPlus}) CHECK(parse_variant(variant_name(v)) == v);
  CHECK(parse_variant("TokD-Plus") == BlockVariant::TokDPlus);
  CHECK_THROWS_AS(parse_variant("adaln"), ConfigError);
  CHECK(variant_uses_site(BlockVariant::TokD, ModSite::AttnPre));
  CHECK_FALSE(variant_uses_site(BlockVariant::TokD, ModSite::FfnPost));
  CHECK(variant_uses_site(BlockVariant::TokDPlus, ModSite::FfnPost));
  CHECK_FALSE(site_has_shift(ModSite::AttnPost));
  CHECK(block_param_name(3, "ln.gain") == "blocks.3.ln.gain");
}

TEST_CASE("modulate examples") {
  Graph<double> g;
  const std::vector<std::uint8_t> one{0};
  auto x = g.constant(Tensor<double>({1, 3}, {1, -2, 3}));
  auto same = ops::modulate(x, g.constant(Tensor<double>({2, 3}, 0.0)), std::optional(g.constant(Tensor<double>({2, 3}, 0.0))), one);
  CHECK(bitwise_equal(same.value(), x.value()));
  auto dbl = ops::modulate(g.constant(Tensor<double>({1, 1}, 2.0)), g.constant(Tensor<double>({2, 1}, 1.0)), std::optional<Var<double>>{}, one);
  CHECK(dbl.value()[0] == 4.0);

  // unit heads: sigma = mu = style row
  Tensor<double> table({2, 2}, {0.5, 0.0, -0.5, 1.0});
  const std::vector<std::uint8_t> both{0, 1};
  auto y = ops::modulate(g.constant(Tensor<double>({2, 2}, {2, 2, 2, 2})), g.constant(table), std::optional(g.constant(table)), both);
  CHECK(y.value() == Tensor<double>({2, 2}, {3.5, 2.0, 0.5, 5.0}));
  CHECK_THROWS_AS(ops::modulate(x, g.constant(Tensor<double>({2, 4})), std::optional<Var<double>>{}, one), DimensionError);
  const std::vector<std::uint8_t> bad{2};
  CHECK_THROWS_AS(ops::modulate(x, g.constant(Tensor<double>({2, 3})), std::optional<Var<double>>{}, bad), ArgumentError);
}

TEST_CASE("zero branches are the identity") {
  const auto dims = dims_for(8, 2);
  Rng rng(1);
  const auto x = random_tensor({5, 8}, rng);
  for (auto v : {BlockVariant::Plain, BlockVariant::TokD, BlockVariant::TokDPlus}) {
    auto store = block_store(dims, v, 3);
    randomize(store, "mod.", rng);
    zero(store, "attn.out.");
    zero(store, "ffn.fc2.");
    CHECK(bitwise_equal(run(v, store, x, roles(3, 2), dims), x));
  }
}

TEST_CASE("single token plain block against a straight-line reference") {
  const std::size_t d = 4, hidden = 16;
  const auto dims = dims_for(d, 2);
  auto store = block_store(dims, BlockVariant::Plain, 5);
  Rng rng(6);
  randomize(store, "bias", rng, 0.3);
  const auto x = random_tensor({1, d}, rng);
  const auto got = run(BlockVariant::Plain, store, x, roles(1, 0), dims);

  auto W = [&](const char* n) { return store.get(block_param_name(0, n)).value; };
  const auto qkv_w = W("attn.qkv.weight"), qkv_b = W("attn.qkv.bias");
  const auto out_w = W("attn.out.weight"), out_b = W("attn.out.bias");
  const auto g = W("ln.gain"), b = W("ln.bias");
  const auto w1 = W("ffn.fc1.weight"), b1 = W("ffn.fc1.bias"), w2 = W("ffn.fc2.weight"), b2 = W("ffn.fc2.bias");

  double v[d], h[d];
  for (std::size_t j = 0; j < d; ++j) {
    v[j] = qkv_b[2 * d + j];
    for (std::size_t i = 0; i < d; ++i) v[j] += x[i] * qkv_w.at(i, 2 * d + j);
  }
  for (std::size_t j = 0; j < d; ++j) {
    double a = out_b[j];
    for (std::size_t i = 0; i < d; ++i) a += v[i] * out_w.at(i, j);
    h[j] = x[j] + a;
  }
  double mean = 0, var = 0;
  for (double e : h) mean += e / d;
  for (double e : h) var += (e - mean) * (e - mean) / d;
  double n[d], u[hidden];
  for (std::size_t j = 0; j < d; ++j) n[j] = (h[j] - mean) / std::sqrt(var + dims.ln_eps) * g[j] + b[j];
  for (std::size_t k = 0; k < hidden; ++k) {
    u[k] = b1[k];
    for (std::size_t i = 0; i < d; ++i) u[k] += n[i] * w1.at(i, k);
    u[k] = gelu_ref(u[k]);
  }
  for (std::size_t j = 0; j < d; ++j) {
    double o = b2[j];
    for (std::size_t k = 0; k < hidden; ++k) o += u[k] * w2.at(k, j);
    CHECK(got[j] == doctest::Approx(h[j] + o).epsilon(1e-12));
  }
}

TEST_CASE("neutral initialization reduces to the plain block") {
  const auto dims = dims_for(8, 2);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed + 100);
    const auto x = random_tensor({6, 8}, rng);
    auto plus = block_store(dims, BlockVariant::TokDPlus, seed);
    auto tokd = block_store(dims, BlockVariant::TokD, seed);
    auto plain = block_store(dims, BlockVariant::Plain, seed);
    const auto ref = run(BlockVariant::Plain, plain, x, roles(4, 2), dims);
    CHECK(bitwise_equal(run(BlockVariant::TokD, tokd, x, roles(4, 2), dims), ref));
    CHECK(bitwise_equal(run(BlockVariant::TokDPlus, plus, x, roles(4, 2), dims), ref));
  }
}

TEST_CASE("tokd equals tokd-plus with frozen post heads") {
  const auto dims = dims_for(8, 2);
  auto plus = block_store(dims, BlockVariant::TokDPlus, 7);
  auto tokd = block_store(dims, BlockVariant::TokD, 7);
  Rng rng(8);
  randomize(plus, "_pre.", rng);
  for (auto& p : tokd.entries()) p.value = plus.get(p.name).value;
  const auto x = random_tensor({6, 8}, rng);
  CHECK(bitwise_equal(run(BlockVariant::TokD, tokd, x, roles(4, 2), dims),
                      run(BlockVariant::TokDPlus, plus, x, roles(4, 2), dims)));
}

TEST_CASE("source shift leaves target tokens alone with attention zeroed") {
  const auto dims = dims_for(8, 2);
  auto plus = block_store(dims, BlockVariant::TokDPlus, 9);
  auto plain = block_store(dims, BlockVariant::Plain, 9);
  zero(plus, "attn.qkv.");
  zero(plus, "attn.out.");
  zero(plain, "attn.qkv.");
  zero(plain, "attn.out.");
  // source style row nonzero, target style row zero, so only source shifts are large
  auto& embed = plus.get("style.embed").value;
  for (std::size_t c = 0; c < dims.d_style; ++c) embed.at(1, c) = 0.0;
  Rng rng(10);
  randomize(plus, "ffn_pre.shift.weight", rng, 5.0);
  const auto x = random_tensor({4, 8}, rng);
  const auto delta = roles(2, 2);
  const auto got = run(BlockVariant::TokDPlus, plus, x, delta, dims);
  const auto ref = run(BlockVariant::Plain, plain, x, delta, dims);
  for (std::size_t r = 0; r < 4; ++r) {
    double diff = 0;
    for (std::size_t c = 0; c < 8; ++c) diff = std::max(diff, std::abs(got.at(r, c) - ref.at(r, c)));
    if (delta[r] == kSourceRole) CHECK(diff > 1e-3);
    else CHECK(diff < 1e-6);
  }
}

TEST_CASE("swapping a token's role changes its output") {
  const auto dims = dims_for(8, 2);
  for (auto v : {BlockVariant::TokD, BlockVariant::TokDPlus}) {
    auto store = block_store(dims, v, 11);
    zero(store, "attn.qkv.");
    Rng rng(12);
    randomize(store, "mod.", rng);
    const auto x = random_tensor({3, 8}, rng);
    auto a = run(v, store, x, {0, 0, 1}, dims);
    auto b = run(v, store, x, {1, 0, 1}, dims);
    double diff = 0;
    for (std::size_t c = 0; c < 8; ++c) diff = std::max(diff, std::abs(a.at(0, c) - b.at(0, c)));
    CHECK(diff > 1e-3);
  }
}

TEST_CASE("block gradients") {
  const auto dims = dims_for(8, 2);
  Rng rng(13);
  const auto x = random_tensor({4, 8}, rng);
  const auto probe = random_tensor({4, 8}, rng);
  for (auto v : {BlockVariant::Plain, BlockVariant::TokDPlus}) {
    CAPTURE(variant_name(v));
    auto store = block_store(dims, v, 14);
    randomize(store, "mod.", rng, 0.5);
    randomize(store, "bias", rng, 0.2);
    auto rep = grad_check(
        [&](ParamBinder<double>& bind) {
          auto& g = bind.graph();
          TokenBatch<double> batch{g.constant(x), roles(2, 2), std::vector<std::int32_t>(4, 0)};
          std::optional<Var<double>> style;
          if (v != BlockVariant::Plain) style = style_vectors(bind);
          auto y = apply_block(v, batch, style, bind, 0, dims).tokens;
          return ops::sum(ops::mul(y, g.constant(probe)));
        },
        store, 1e-5);
    CAPTURE(store.entries()[rep.worst_param].name);
    CHECK(rep.max_rel_error < 1e-5);
  }
}

TEST_CASE("parameter counts") {
  const auto dims = dims_for(16, 2);
  const auto plain = block_store(dims, BlockVariant::Plain, 0).element_count();
  const auto tokd = block_store(dims, BlockVariant::TokD, 0).element_count();
  const auto plus = block_store(dims, BlockVariant::TokDPlus, 0).element_count();
  const std::size_t head = (dims.d_style + 1) * dims.d_model;
  CHECK(tokd - plain == 4 * head);
  CHECK(plus - tokd == 2 * head);
  CHECK(tokd < plus);
  CHECK_THROWS_AS(block_store(dims_for(10, 3), BlockVariant::Plain, 0), ConfigError);
}
