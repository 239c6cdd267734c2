#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "support.hpp"
#include "tokd/numeric/errors.hpp"
#include "tokd/scenegen/generate.hpp"
#include "tokd/trainer/hyper.hpp"
#include "tokd/trainer/optim.hpp"
#include "tokd/trainer/train.hpp"

using namespace tokd;

namespace {

ParamStore<double> scalar_store(double value, bool norm = false) {
  ParamStore<double> s;
  s.add("w", Tensor<double>({1}, value), norm);
  return s;
}

std::vector<SceneRecord> tiny_data(std::size_t scenes, double fraction = 0.0) {
  GenerationConfig g;
  g.scenes = scenes;
  g.views = 4;
  g.width = g.height = 16;
  g.synthetic_fraction = fraction;
  return generate_dataset(g);
}

TrainHyper tiny_hyper(std::size_t steps) {
  TrainHyper hp = TrainHyper::desk();
  hp.adam.total_steps = steps;
  hp.adam.warmup_steps = steps / 10;
  hp.adam.lr_peak = 3e-3;
  hp.batch = 2;
  hp.log_every = 10;
  hp.checkpoint_every = 10;
  hp.log_scenes = 2;
  return hp;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("learning rate schedule") {
  AdamWHyper hp;
  CHECK(lr_at(0, hp) == 0.0);
  CHECK(lr_at(2500, hp) == 2e-4);
  CHECK(lr_at(1250, hp) == doctest::Approx(1e-4));
  CHECK(lr_at((2500 + 100000) / 2, hp) == doctest::Approx(1e-4));
  CHECK(lr_at(100000, hp) == 0.0);
  CHECK_THROWS_AS(lr_at(100001, hp), ArgumentError);
  double prev = -1.0, best = 0.0;
  std::size_t argmax = 0;
  for (std::size_t s = 0; s <= hp.total_steps; s += 50) {
    const double lr = lr_at(s, hp);
    if (prev >= 0.0) CHECK(std::abs(lr - prev) <= 2e-4 * 50 / 2500 + 1e-15);
    if (lr > best) best = lr, argmax = s;
    prev = lr;
  }
  CHECK(argmax == 2500);
}

TEST_CASE("recipe defaults") {
  const AdamWHyper hp;
  CHECK(hp.lr_peak == 2e-4);
  CHECK(hp.beta1 == 0.9);
  CHECK(hp.beta2 == 0.95);
  CHECK(hp.weight_decay == 0.05);
  CHECK(hp.warmup_steps == 2500);
  CHECK(hp.ema_decay == 0.99);
  const auto full = TrainHyper::full();
  CHECK(full.adam.total_steps == 100000);
  CHECK(full.batch == 64);
  CHECK(full.clip_grad_norm == 0.0);
  const auto desk = TrainHyper::desk();
  CHECK(desk.adam.total_steps == 2000);
  CHECK(desk.batch == 4);
  CHECK(desk.adam.warmup_steps == 100);
  CHECK(desk.clip_grad_norm == 0.0);
}

TEST_CASE("adamw update") {
  AdamWHyper hp;
  hp.weight_decay = 0.0;
  auto p = scalar_store(0.0);
  auto g = scalar_store(1.0);
  auto st = OptimState<double>::init(p, hp);
  adamw_step(p, g, st, 0.1);
  CHECK(p.get("w").value[0] == doctest::Approx(-0.1).epsilon(1e-6));
  CHECK(st.step == 1);

  auto q = scalar_store(0.7);
  auto st2 = OptimState<double>::init(q, hp);
  adamw_step(q, scalar_store(0.0), st2, 0.1);
  CHECK(q.get("w").value[0] == 0.7);

  AdamWHyper decay;
  auto n = scalar_store(2.0, true), w = scalar_store(2.0, false);
  auto sn = OptimState<double>::init(n, decay), sw = OptimState<double>::init(w, decay);
  adamw_step(n, scalar_store(0.0, true), sn, 0.1);
  adamw_step(w, scalar_store(0.0), sw, 0.1);
  CHECK(n.get("w").value[0] == 2.0);
  CHECK(w.get("w").value[0] == doctest::Approx(2.0 * (1.0 - 0.1 * 0.05)));

  auto bad = scalar_store(std::nan(""));
  try {
    adamw_step(w, bad, sw, 0.1);
    FAIL("expected a numeric error");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("'w'") != std::string::npos);
  }
}

TEST_CASE("adamw matches a hand-rolled Adam") {
  AdamWHyper hp;
  hp.weight_decay = 0.0;
  auto p = scalar_store(1.5);
  auto st = OptimState<double>::init(p, hp);
  double x = 1.5, m = 0, v = 0;
  for (int t = 1; t <= 50; ++t) {
    const double grad = 2.0 * x - 1.0;  // d/dx (x^2 - x)
    adamw_step(p, scalar_store(grad), st, 0.05);
    m = 0.9 * m + 0.1 * grad;
    v = 0.95 * v + 0.05 * grad * grad;
    x -= 0.05 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.95, t))) + 1e-8);
    CHECK(std::abs(p.get("w").value[0] - x) < 1e-12);
  }
}

TEST_CASE("ema update") {
  auto s = scalar_store(1.0);
  ema_update(s, scalar_store(0.0), 0.99);
  CHECK(s.get("w").value[0] == doctest::Approx(0.99));
  ema_update(s, scalar_store(3.0), 0.0);
  CHECK(s.get("w").value[0] == 3.0);
  auto shadow = scalar_store(5.0);
  const auto target = scalar_store(1.0);
  for (int n = 1; n <= 200; ++n) {
    ema_update(shadow, target, 0.99);
    CHECK(std::abs(shadow.get("w").value[0] - 1.0) == doctest::Approx(std::pow(0.99, n) * 4.0).epsilon(1e-9));
  }
}

TEST_CASE("config files") {
  const auto rc = RunConfig::from_text(
      "model_preset=tiny\ntrain_preset=desk\nvariant=tokd\nlr_peak=0.003\nbatch=8\nscheme=naive\n# note\n");
  CHECK(rc.model.d_model == 16);
  CHECK(rc.model.variant == BlockVariant::TokD);
  CHECK(rc.train.adam.lr_peak == 0.003);
  CHECK(rc.train.batch == 8);
  CHECK(rc.train.scheme == RoleScheme::Naive);
  const auto again = RunConfig::from_text(rc.to_text());
  CHECK(again.model == rc.model);
  CHECK(again.train == rc.train);
  CHECK_THROWS_AS(RunConfig::from_text("batch=4\nmodel_preset=tiny\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_text("learning_rate=1\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_text("warmup_steps=5000\ntotal_steps=100\n"), ConfigError);
}

TEST_CASE("training lowers the loss and logs both psnr columns") {
  const auto data = tiny_data(2);
  const auto hp = tiny_hyper(60);
  const auto dir = tokd::test::temp_dir("train_log");
  TrainOptions opt;
  opt.out_dir = dir;
  const auto res = train(data, hp, initial_checkpoint<float>(ModelConfig::tiny(), hp), opt);
  REQUIRE(res.log.size() == 6);
  CHECK(res.log.back().loss < res.log.front().loss);
  CHECK(res.log.back().psnr_raw != res.log.back().psnr_ema);
  CHECK(res.checkpoint.step == 60);
  const std::string csv = slurp(dir / "metrics.csv");
  CHECK(csv.starts_with("step,lr,loss,psnr_raw,psnr_ema\n10,"));
  const auto ck = load_checkpoint<float>(dir / "checkpoint.tokd");
  CHECK(ck.step == 60);
  CHECK(serialize_checkpoint(ck) == serialize_checkpoint(res.checkpoint));
}

TEST_CASE("resume reproduces the uninterrupted run") {
  const auto data = tiny_data(3, 0.34);
  const auto hp = tiny_hyper(200);
  const auto cfg = ModelConfig::tiny();
  const auto full = train(data, hp, initial_checkpoint<double>(cfg, hp));

  const auto dir = tokd::test::temp_dir("resume");
  TrainOptions first;
  first.out_dir = dir;
  first.stop_after = 100;
  const auto half = train(data, hp, initial_checkpoint<double>(cfg, hp), first);
  CHECK(half.checkpoint.step == 100);
  const auto resumed = train(data, hp, load_checkpoint<double>(dir / "checkpoint.tokd"));
  CHECK(resumed.log.back().step == 200);
  CHECK(resumed.log.back().loss == full.log.back().loss);
  CHECK(serialize_checkpoint(resumed.checkpoint) == serialize_checkpoint(full.checkpoint));
}

TEST_CASE("non-finite loss aborts and keeps the last checkpoint") {
  auto data = tiny_data(2);
  const auto hp = tiny_hyper(40);
  const auto dir = tokd::test::temp_dir("nan");
  TrainOptions opt;
  opt.out_dir = dir;
  opt.stop_after = 20;
  train(data, hp, initial_checkpoint<float>(ModelConfig::tiny(), hp), opt);
  const std::string before = slurp(dir / "checkpoint.tokd");
  for (auto& rec : data)
    for (auto& v : rec.views) v.image.values()[0] = std::nan("");
  opt.stop_after = 0;
  CHECK_THROWS_AS(train(data, hp, load_checkpoint<float>(dir / "checkpoint.tokd"), opt), NumericError);
  CHECK(slurp(dir / "checkpoint.tokd") == before);
}

TEST_CASE("gradient clipping bounds the update norm") {
  TrainHyper hp = tiny_hyper(10);
  hp.clip_grad_norm = 1e-3;
  CHECK_NOTHROW(hp.validate());
  ParamStore<double> g;
  g.add("a", Tensor<double>({2}, {3.0, 4.0}));
  CHECK(grad_norm(g) == 5.0);
  const auto res = train(tiny_data(2), hp, initial_checkpoint<float>(ModelConfig::tiny(), hp));
  CHECK(res.checkpoint.step == 10);
}
