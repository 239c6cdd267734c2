#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "support.hpp"
#include "tokd/model/checkpoint.hpp"
#include "tokd/model/model.hpp"
#include "tokd/numeric/errors.hpp"
#include "tokd/numeric/gradcheck.hpp"
#include "tokd/numeric/ops.hpp"

using namespace tokd;
using tokd::test::random_views;

namespace {

ModelConfig with_variant(ModelConfig cfg, BlockVariant v) {
  cfg.variant = v;
  return cfg;
}

/// Copies every shared parameter of `from` into `to`.
template <typename T>
void copy_shared(const ParamStore<T>& from, ParamStore<T>& to) {
  for (auto& p : to.entries())
    if (from.contains(p.name)) p.value = from.get(p.name).value;
}

ModelConfig micro() {
  ModelConfig c;
  c.d_model = 4;
  c.n_layers = 1;
  c.n_heads = 1;
  c.patch = 2;
  c.image_height = 2;
  c.image_width = 2;
  c.ffn_mult = 1;
  c.variant = BlockVariant::TokDPlus;
  return c;
}

Checkpoint<float> micro_checkpoint() {
  Checkpoint<float> ck;
  ck.config = micro();
  ck.step = 42;
  ck.rng = Rng::State{7, 3, 99};
  ck.params = init_params<float>(ck.config, 5);
  ck.ema = init_params<float>(ck.config, 6);
  return ck;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config text roundtrip and validation") {
  for (const char* name : {"tiny", "desk", "full"}) {
    auto cfg = ModelConfig::preset(name);
    cfg.variant = BlockVariant::TokD;
    cfg.lambda_perceptual = 0.125;
    CHECK(ModelConfig::from_text(cfg.to_text()) == cfg);
  }
  CHECK(ModelConfig{}.lambda_perceptual == 0.5);
  CHECK(ModelConfig{}.perceptual == PerceptualKind::Off);
  CHECK(ModelConfig::full().d_model == 1024);
  CHECK(ModelConfig::full().n_layers == 24);
  CHECK(ModelConfig::full().patch == 8);
  CHECK_THROWS_AS(ModelConfig::from_text("d_model=10\nn_heads=3\n"), ConfigError);
  CHECK_THROWS_AS(ModelConfig::from_text("image_height=20\n"), ConfigError);
  CHECK_THROWS_AS(ModelConfig::from_text("colour=blue\n"), ConfigError);
  CHECK_THROWS_AS(ModelConfig::from_text("d_model=abc\n"), ConfigError);
  CHECK(ModelConfig::from_text("# comment\n\nvariant = tokd-plus\n").variant == BlockVariant::TokDPlus);
}

TEST_CASE("forward shapes and range") {
  ModelConfig cfg;
  cfg.d_model = 64;
  cfg.n_layers = 2;
  Rng rng(1);
  auto f = random_views(cfg, 2, rng);
  auto in = prepare_inputs<float>(f.sources, f.target, cfg);
  CHECK(in.source_features.rows() == 128);
  CHECK(in.target_rays.rows() == 64);
  CHECK(in.delta.size() == 192);
  CHECK(in.view_index[0] == 0);
  CHECK(in.view_index[64] == 1);
  CHECK(in.view_index[128] == kTargetView);
  auto params = init_params<float>(cfg, 2);
  auto out = forward(params, f.sources, f.target, cfg);
  CHECK(out.shape() == Shape{64, 64, 3});
  for (float v : out.values()) CHECK((v >= 0.0f && v <= 1.0f));
}

TEST_CASE("forward errors") {
  const auto cfg = ModelConfig::tiny();
  Rng rng(2);
  auto f = random_views(cfg, 2, rng);
  auto params = init_params<double>(cfg, 0);
  CHECK_THROWS_AS(forward(params, std::span<const SourceView>(), f.target, cfg), ArgumentError);
  auto bad = f.sources;
  bad[1].image = Image(8, 8, 3);
  CHECK_THROWS_AS(forward(params, bad, f.target, cfg), DimensionError);
  ModelConfig big = cfg;
  big.image_height = big.image_width = 32;
  auto g = random_views(big, 1, rng);
  CHECK_THROWS_AS(forward(params, f.sources, g.target, cfg), DimensionError);
}

TEST_CASE("zero network predicts mid grey") {
  const auto cfg = ModelConfig::tiny();
  Rng rng(3);
  auto f = random_views(cfg, 2, rng);
  auto params = init_params<double>(cfg, 0);
  for (auto& p : params.entries()) p.value.fill(0.0);
  for (double v : forward(params, f.sources, f.target, cfg).values()) CHECK(v == 0.5);
}

TEST_CASE("neutral-init modulated forwards equal the plain forward") {
  const auto base = ModelConfig::tiny();
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Rng rng(seed + 10);
    auto f = random_views(base, 2, rng);
    const auto plain = init_params<float>(base, seed);
    const auto ref = forward(plain, f.sources, f.target, base);
    for (auto v : {BlockVariant::TokD, BlockVariant::TokDPlus}) {
      const auto cfg = with_variant(base, v);
      auto params = init_params<float>(cfg, seed + 100);
      copy_shared(plain, params);
      CHECK(bitwise_equal(forward(params, f.sources, f.target, cfg), ref));
    }
  }
}

TEST_CASE("feature capture does not disturb the prediction") {
  auto cfg = with_variant(ModelConfig::tiny(), BlockVariant::TokDPlus);
  cfg.n_layers = 3;
  Rng rng(4);
  auto f = random_views(cfg, 2, rng);
  const auto params = init_params<double>(cfg, 1);
  const auto cap = forward_with_features(params, f.sources, f.target, cfg);
  CHECK(cap.layers.size() == 3);
  CHECK(bitwise_equal(cap.prediction, forward(params, f.sources, f.target, cfg)));

  // embedder output by hand
  const auto in = prepare_inputs<double>(f.sources, f.target, cfg);
  Graph<double> g;
  auto src = ops::linear(g.constant(in.source_features), g.constant(params.get("embed.source.weight").value),
                         g.constant(params.get("embed.source.bias").value));
  auto tgt = ops::linear(g.constant(in.target_rays), g.constant(params.get("embed.target.weight").value),
                         g.constant(params.get("embed.target.bias").value));
  CHECK(bitwise_equal(cap.embedded, ops::concat_rows(std::vector<Var<double>>{src, tgt}).value()));
  for (const auto& layer : cap.layers) CHECK(layer.shape() == Shape{12, cfg.d_model});
}

TEST_CASE("source order does not matter") {
  auto cfg = with_variant(ModelConfig::tiny(), BlockVariant::TokDPlus);
  Rng rng(5);
  auto f = random_views(cfg, 3, rng);
  auto params = init_params<double>(cfg, 2);
  for (auto& p : params.entries())
    if (p.name.find("mod.") != std::string::npos)
      for (auto& v : p.value.values()) v = 0.1 * rng.normal();
  const auto a = forward(params, f.sources, f.target, cfg);
  std::vector<SourceView> rev(f.sources.rbegin(), f.sources.rend());
  const auto b = forward(params, rev, f.target, cfg);
  for (std::size_t i = 0; i < a.numel(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-12);
}

TEST_CASE("loss examples") {
  ModelConfig cfg;
  Image a(4, 4, 3, 0.0), b(4, 4, 3, 1.0);
  CHECK(loss(a, a, cfg) == 0.0);
  CHECK(loss(a, b, cfg) == 1.0);
  CHECK_THROWS_AS(loss(a, Image(4, 5, 3), cfg), DimensionError);

  Rng rng(6);
  auto x = tokd::test::random_image(8, 8, rng), y = tokd::test::random_image(8, 8, rng);
  CHECK(loss(x, y, cfg) > 0.0);
  cfg.perceptual = PerceptualKind::GradientL1;
  Graph<double> g;
  const double grad_term = ops::gradient_l1(g.constant(x.tensor()), y.tensor()).value().item();
  CHECK(loss(x, y, cfg) == doctest::Approx(loss(x, y, ModelConfig{}) + 0.5 * grad_term));
  CHECK(loss(x, x, cfg) == 0.0);

  PerceptualHook<double> hook = [](Var<double> p, const Tensor<double>&) { return ops::scale(ops::sum(p), 0.0) ; };
  Graph<double> g2;
  auto l = loss_graph(g2.constant(x.tensor()), y.tensor(), ModelConfig{}, hook);
  CHECK(l.value().item() == doctest::Approx(loss(x, y, ModelConfig{})));
}

TEST_CASE("model gradients match finite differences") {
  ModelConfig cfg;
  cfg.d_model = 8;
  cfg.n_layers = 1;
  cfg.n_heads = 2;
  cfg.patch = 4;
  cfg.image_height = cfg.image_width = 8;
  cfg.variant = BlockVariant::TokDPlus;
  cfg.perceptual = PerceptualKind::GradientL1;
  Rng rng(7);
  auto f = random_views(cfg, 2, rng);
  auto params = init_params<double>(cfg, 3);
  for (auto& p : params.entries())
    if (p.name.find("mod.") != std::string::npos || p.name.find("bias") != std::string::npos)
      for (auto& v : p.value.values()) v = 0.2 * rng.normal();
  const auto inputs = prepare_inputs<double>(f.sources, f.target, cfg);
  const auto rep = grad_check(
      [&](ParamBinder<double>& bind) { return loss_graph(forward_graph(bind, inputs, cfg), f.target_image.tensor(), cfg); },
      params, 1e-5);
  CAPTURE(params.entries()[rep.worst_param].name);
  CHECK(rep.max_rel_error < 1e-4);

  // loss_and_gradients agrees with the binder path and honours the weight
  auto g1 = params.zeros_like();
  auto g2 = params.zeros_like();
  auto r1 = loss_and_gradients(params, f.sources, f.target, f.target_image, cfg, g1);
  loss_and_gradients(params, f.sources, f.target, f.target_image, cfg, g2, 0.25);
  CHECK(r1.loss > 0.0);
  CHECK(r1.flops > 0);
  for (std::size_t i = 0; i < g1.size(); ++i)
    for (std::size_t k = 0; k < g1.entries()[i].value.numel(); ++k)
      CHECK(g2.entries()[i].value[k] == doctest::Approx(0.25 * g1.entries()[i].value[k]).epsilon(1e-12));
}

TEST_CASE("parameter layout is deterministic") {
  const auto cfg = with_variant(ModelConfig::tiny(), BlockVariant::TokDPlus);
  const auto a = init_params<float>(cfg, 9), b = init_params<float>(cfg, 9);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.entries()[i].name == b.entries()[i].name);
    CHECK(bitwise_equal(a.entries()[i].value, b.entries()[i].value));
  }
  CHECK(a.entries().front().name == "embed.source.weight");
  CHECK(a.entries().back().name == "detok.bias");
  CHECK(a.get("blocks.0.ln.gain").norm);
  CHECK(a.get("blocks.1.attn.temperature").norm);
  CHECK_FALSE(a.get("blocks.0.mod.attn_pre.scale.weight").norm);
  CHECK_FALSE(a.get("style.embed").norm);
  for (float v : a.get("blocks.1.mod.ffn_post.scale.weight").value.values()) CHECK(v == 0.0f);
  CHECK(a.get("blocks.0.attn.temperature").value[0] == doctest::Approx(std::sqrt(8.0)));
}

TEST_CASE("checkpoint byte layout") {
  const auto ck = micro_checkpoint();
  const std::string bytes = serialize_checkpoint(ck);

  // reference encoder written against the documented layout
  std::string ref;
  auto put = [&ref](const void* p, std::size_t n) { ref.append(static_cast<const char*>(p), n); };
  auto u32 = [&](std::uint32_t v) { unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)}; put(b, 4); };
  auto u64 = [&](std::uint64_t v) { u32(static_cast<std::uint32_t>(v)); u32(static_cast<std::uint32_t>(v >> 32)); };
  put("TOKD0001", 8);
  const std::string text = ck.config.to_text();
  u32(static_cast<std::uint32_t>(text.size()));
  put(text.data(), text.size());
  u64(42);
  u64(7);
  u64(3);
  u64(99);
  auto section = [&](const char* tag, const ParamStore<float>& s) {
    put(tag, 4);
    u32(static_cast<std::uint32_t>(s.size()));
    for (const auto& p : s.entries()) {
      u32(static_cast<std::uint32_t>(p.name.size()));
      put(p.name.data(), p.name.size());
      const unsigned char dtype = 1;
      put(&dtype, 1);
      u32(static_cast<std::uint32_t>(p.value.rank()));
      for (auto e : p.value.shape()) u32(static_cast<std::uint32_t>(e));
      for (float v : p.value.values()) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        u32(bits);
      }
    }
  };
  section("PARM", ck.params);
  section("EMA_", ck.ema);
  section("ADMM", ck.adam_m);
  section("ADMV", ck.adam_v);
  CHECK(bytes == ref);
  CHECK(text.find("variant=tokd-plus\n") != std::string::npos);
}

TEST_CASE("checkpoint golden file") {
  const std::filesystem::path golden = std::filesystem::path(TOKD_TEST_DATA) / "micro_checkpoint.tokd";
  const std::string bytes = serialize_checkpoint(micro_checkpoint());
  if (std::getenv("TOKD_REGEN_GOLDEN")) {
    std::ofstream(golden, std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  const std::string stored = read_file(golden);
  REQUIRE_FALSE(stored.empty());
  CHECK(stored == bytes);
  const auto loaded = load_checkpoint<float>(golden);
  CHECK(loaded.step == 42);
  CHECK(loaded.rng == Rng::State{7, 3, 99});
  CHECK(loaded.config == micro());
  CHECK(serialize_checkpoint(loaded) == stored);
}

TEST_CASE("checkpoint roundtrip and rejection") {
  auto ck = micro_checkpoint();
  ck.adam_m = ck.params.zeros_like();
  ck.adam_v = ck.params.zeros_like();
  const auto dir = tokd::test::temp_dir("ckpt");
  save_checkpoint(ck, dir / "a.tokd");
  const auto back = load_checkpoint<float>(dir / "a.tokd");
  CHECK(serialize_checkpoint(back) == serialize_checkpoint(ck));
  CHECK(back.params.get("blocks.0.ln.gain").norm);
  CHECK_FALSE(std::filesystem::exists(dir / "a.tokd.tmp"));

  const std::string bytes = serialize_checkpoint(ck);
  CHECK_THROWS_AS(deserialize_checkpoint<float>(bytes.substr(0, bytes.size() - 1)), FormatError);
  CHECK_THROWS_AS(deserialize_checkpoint<float>(bytes + "x"), FormatError);
  std::string bad = bytes;
  bad[3] = 'X';
  CHECK_THROWS_AS(deserialize_checkpoint<float>(bad), FormatError);
  CHECK_THROWS_AS(deserialize_checkpoint<double>(bytes), FormatError);
  auto no_ema = ck;
  no_ema.ema = ParamStore<float>();
  CHECK_THROWS_AS(deserialize_checkpoint<float>(serialize_checkpoint(no_ema)), FormatError);
  auto renamed = ck;
  renamed.params.entries()[0].name = "embed.src.weight";
  CHECK_THROWS_AS(deserialize_checkpoint<float>(serialize_checkpoint(renamed)), FormatError);
  CHECK_THROWS_AS(load_checkpoint<float>(dir / "missing.tokd"), IoError);
}
