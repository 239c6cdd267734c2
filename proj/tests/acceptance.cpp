// Acceptance run: one PASS/FAIL line per criterion, exit status 1 when any fails.
//
//   acceptance [--out DIR] [--only 1,2,...] [--steps N] [--seeds N]

#include <CLI11.hpp>
#include <Eigen/Geometry>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>

#include "tokd/datapipe/roles.hpp"
#include "tokd/eval/ablate.hpp"
#include "tokd/eval/flops.hpp"
#include "tokd/eval/metrics.hpp"
#include "tokd/eval/report.hpp"
#include "tokd/geometry/noise_warp.hpp"
#include "tokd/numeric/gradcheck.hpp"
#include "tokd/scenegen/generate.hpp"
#include "tokd/tokenizer/patch.hpp"
#include "tokd/trainer/train.hpp"

namespace fs = std::filesystem;
using namespace tokd;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Image random_image(std::size_t h, std::size_t w, Rng& rng) {
  Image img(h, w, 3);
  for (auto& v : img.values()) v = rng.uniform();
  return img;
}

struct Views {
  std::vector<SourceView> sources;
  PluckerMap target;
  Image target_image;
};

Views random_views(const ModelConfig& cfg, std::size_t k, Rng& rng) {
  const Intrinsics intr = Intrinsics::from_fov(static_cast<int>(cfg.image_width), static_cast<int>(cfg.image_height), 0.9);
  auto pose = [&] {
    return look_at(Vec3(rng.uniform(2.5, 4.0), rng.uniform(-0.5, 1.0), rng.uniform(-1.0, 1.0)),
                   Vec3(rng.uniform(-0.2, 0.2), 0.0, 0.0));
  };
  Views v;
  for (std::size_t i = 0; i < k; ++i)
    v.sources.push_back(SourceView{random_image(cfg.image_height, cfg.image_width, rng), plucker_map(intr, pose())});
  v.target = plucker_map(intr, pose());
  v.target_image = random_image(cfg.image_height, cfg.image_width, rng);
  return v;
}

Outcome neutral_equivalence() {
  const ModelConfig base = ModelConfig::tiny();
  std::size_t equal = 0, total = 0;
  for (std::uint64_t draw = 0; draw < 20; ++draw) {
    Rng rng(draw, 1);
    const Views v = random_views(base, 2, rng);
    const auto plain = init_params<float>(base, draw);
    const auto ref = forward(plain, v.sources, v.target, base);
    for (BlockVariant variant : {BlockVariant::TokD, BlockVariant::TokDPlus}) {
      ModelConfig cfg = base;
      cfg.variant = variant;
      auto params = init_params<float>(cfg, draw + 1000);
      for (auto& p : params.entries())
        if (plain.contains(p.name)) p.value = plain.get(p.name).value;
      equal += bitwise_equal(forward(params, v.sources, v.target, cfg), ref) ? 1 : 0;
      ++total;
    }
  }
  return {equal == total, fmt("%zu/%zu forwards bitwise equal", equal, total)};
}

Outcome gradient_suite() {
  ModelConfig cfg = ModelConfig::tiny();
  cfg.patch = 8;
  cfg.variant = BlockVariant::TokDPlus;
  Rng rng(5);
  const Views v = random_views(cfg, 2, rng);
  auto params = init_params<double>(cfg, 2);
  // open the modulation paths so they are exercised
  for (auto& p : params.entries())
    if (p.name.find("mod.") != std::string::npos)
      for (auto& x : p.value.values()) x = 0.1 * rng.normal();
  const auto inputs = prepare_inputs<double>(v.sources, v.target, cfg);
  const auto rep = grad_check(
      [&](ParamBinder<double>& bind) {
        return loss_graph(forward_graph(bind, inputs, cfg), v.target_image.tensor(), cfg);
      },
      params, 1e-4);
  return {rep.max_rel_error < 1e-4,
          fmt("max rel err %.3e over %zu params (worst %s[%zu]: %.6e vs %.6e)", rep.max_rel_error,
              params.element_count(), params.entries()[rep.worst_param].name.c_str(), rep.worst_index, rep.analytic,
              rep.numeric)};
}

Outcome flop_overhead() {
  ModelConfig cfg = ModelConfig::full();
  cfg.variant = BlockVariant::Plain;
  const ModelCost plain = count_params_flops(cfg, 2);
  cfg.variant = BlockVariant::TokDPlus;
  const ModelCost plus = count_params_flops(cfg, 2);
  const double ratio = static_cast<double>(plus.forward_flops) / static_cast<double>(plain.forward_flops);
  return {ratio >= 1.0 && ratio <= 1.005,
          fmt("%.2f vs %.2f GFLOPs, ratio %.5f", plus.forward_flops * 1e-9, plain.forward_flops * 1e-9, ratio)};
}

struct AblationOutcomes {
  Outcome ordering, clean_target, disentangle;
  double real_seconds = 0, synthetic_seconds = 0;
};

AblationOutcomes ablation(const fs::path& out, std::size_t steps, std::size_t n_seeds) {
  AblationConfig cfg = AblationConfig::desk();
  cfg.train.adam.total_steps = steps;
  cfg.train.adam.warmup_steps = std::min(cfg.train.adam.warmup_steps, steps);
  cfg.train.log_every = std::max<std::size_t>(1, steps / 4);
  cfg.train.checkpoint_every = steps;
  cfg.seeds.clear();
  for (std::uint64_t s = 0; s < n_seeds; ++s) cfg.seeds.push_back(s);
  cfg.out_dir = out / "ablation";

  std::vector<AblationRun> runs;
  auto add = [&](BlockVariant v, DataRegime r) {
    for (std::uint64_t s : cfg.seeds) {
      runs.push_back(run_ablation_cell(cfg, v, r, s));
      const auto& run = runs.back();
      std::fprintf(stderr, "  %s %s seed %llu: psnr %.3f late cosine %.4f (%.0f s)\n",
                   std::string(variant_name(v)).c_str(), std::string(regime_name(r)).c_str(),
                   static_cast<unsigned long long>(s), run.heldout_psnr, run.late_cosine(), run.seconds);
    }
  };
  for (BlockVariant v : {BlockVariant::Plain, BlockVariant::TokD, BlockVariant::TokDPlus}) add(v, DataRegime::RealOnly);
  add(BlockVariant::TokDPlus, DataRegime::NaiveSynthetic);
  add(BlockVariant::TokDPlus, DataRegime::CleanTargetSynthetic);
  {
    std::ofstream os(cfg.out_dir / "ablation.csv");
    os << ablation_csv(runs);
  }

  AblationOutcomes o;
  for (const auto& r : runs) (r.regime == DataRegime::RealOnly ? o.real_seconds : o.synthetic_seconds) += r.seconds;
  const double p = cell_median_psnr(runs, BlockVariant::Plain, DataRegime::RealOnly);
  const double d = cell_median_psnr(runs, BlockVariant::TokD, DataRegime::RealOnly);
  const double dp = cell_median_psnr(runs, BlockVariant::TokDPlus, DataRegime::RealOnly);
  o.ordering = {p <= d && d <= dp && dp - p >= 0.2,
                fmt("median PSNR plain %.3f, tokd %.3f, tokd-plus %.3f (gain %+.3f dB)", p, d, dp, dp - p)};

  const double naive = cell_median_psnr(runs, BlockVariant::TokDPlus, DataRegime::NaiveSynthetic);
  const double clean = cell_median_psnr(runs, BlockVariant::TokDPlus, DataRegime::CleanTargetSynthetic);
  o.clean_target = {clean >= naive + 0.3,
                    fmt("tokd-plus naive %.3f, clean-target %.3f (gain %+.3f dB)", naive, clean, clean - naive)};

  std::size_t lower = 0;
  std::string per_seed;
  bool dumps = true;
  for (std::uint64_t s : cfg.seeds) {
    double cp = 0, cd = 0;
    for (const auto& r : runs) {
      if (r.regime != DataRegime::RealOnly || r.seed != s) continue;
      if (r.variant == BlockVariant::Plain) cp = r.late_cosine();
      if (r.variant == BlockVariant::TokDPlus) cd = r.late_cosine();
    }
    lower += cd < cp ? 1 : 0;
    per_seed += fmt("%s%.3f/%.3f", per_seed.empty() ? "" : " ", cd, cp);
    for (const char* v : {"plain", "tokd-plus"})
      dumps = dumps && fs::exists(cfg.out_dir / "pca" / fmt("%s_real-only_s%llu", v, static_cast<unsigned long long>(s)) /
                                      "layer_0_src.ppm");
  }
  const std::size_t need = (2 * cfg.seeds.size() + 2) / 3;
  o.disentangle = {lower >= need && dumps,
                   fmt("tokd-plus below plain in %zu/%zu seeds (late cosine plus/plain: %s); dumps %s", lower,
                       cfg.seeds.size(), per_seed.c_str(), dumps ? "written" : "missing")};
  return o;
}

Outcome recipe() {
  const TrainHyper hp = TrainHyper::full();
  const AdamWHyper& a = hp.adam;
  bool ok = lr_at(a.warmup_steps, a) == 2e-4 && a.warmup_steps == 2500 && lr_at(a.warmup_steps - 1, a) < 2e-4 &&
            lr_at(a.warmup_steps + 1, a) < 2e-4;
  ok = ok && a.ema_decay == 0.99 && a.beta1 == 0.9 && a.beta2 == 0.95 && a.weight_decay == 0.05;

  // one step with zero gradients: only weight decay moves anything
  ParamStore<double> store;
  Tensor<double> ones({4});
  ones.fill(1.0);
  store.add("w", ones);
  store.add("ln.gain", ones, true);
  ParamStore<double> grads = store.zeros_like();
  auto state = OptimState<double>::init(store, a);
  adamw_step(store, grads, state, 1e-2);
  const bool decayed = store.get("w").value[0] == 1.0 - 1e-2 * 0.05;
  const bool exempt = store.get("ln.gain").value[0] == 1.0;
  return {ok && decayed && exempt,
          fmt("peak lr %.1e at step %zu, betas (%.2f, %.2f), wd %.2f, ema %.2f, norm exempt %s", lr_at(a.warmup_steps, a),
              a.warmup_steps, a.beta1, a.beta2, a.weight_decay, a.ema_decay, exempt ? "yes" : "no")};
}

Outcome noise_warp() {
  const Intrinsics intr = Intrinsics::from_fov(128, 128, 1.0);
  const Rng src(31);
  Tensor<double> n1({128, 128, 1});
  for (std::size_t i = 0; i < n1.numel(); ++i) n1[i] = src.normal_at(i);
  const Pose p1 = look_at(Vec3(0, 0, -4), Vec3::Zero());
  Pose turn;
  turn.rotation = Eigen::AngleAxisd(1.6, Vec3::UnitY()).toRotationMatrix();
  const Pose p2 = compose(p1, turn);

  const auto same = warp_noise(n1, p1, p1, intr, NoiseWarpConfig{}, Rng(5));
  const bool identity = bitwise_equal(same.noise, n1) && same.overlap_count() == n1.numel();

  const auto blend = warp_noise(n1, p1, p2, intr, NoiseWarpConfig{0.5, 4.0, true}, Rng(7));
  double s = 0, ss = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < blend.overlap.size(); ++i) {
    if (blend.overlap[i]) continue;
    s += blend.noise[i];
    ss += blend.noise[i] * blend.noise[i];
    ++n;
  }
  const double mean = s / static_cast<double>(n);
  const double var = (ss - static_cast<double>(n) * mean * mean) / static_cast<double>(n - 1);

  const auto fresh = warp_noise(n1, p1, p2, intr, NoiseWarpConfig{0.0, 4.0, false}, Rng(6));
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  std::size_t m = 0;
  for (std::size_t i = 0; i < fresh.overlap.size(); ++i) {
    if (fresh.overlap[i]) continue;
    const double x = n1[i], y = fresh.noise[i];
    sx += x, sy += y, sxx += x * x, syy += y * y, sxy += x * y;
    ++m;
  }
  const double dm = static_cast<double>(m);
  const double corr = (sxy - sx * sy / dm) / std::sqrt((sxx - sx * sx / dm) * (syy - sy * sy / dm));
  const bool ok = identity && n >= 10000 && var >= 0.9 && var <= 1.1 && m >= 10000 && std::abs(corr) < 0.05;
  return {ok, fmt("identity %s; variance %.4f over %zu pixels; fresh correlation %+.4f over %zu pixels",
                  identity ? "exact" : "broken", var, n, corr, m)};
}

Outcome metric_oracles() {
  const Image grey(16, 16, 3, 0.5), white(16, 16, 3, 1.0);
  const double p = psnr(grey, white);
  Rng rng(3);
  const Image a = random_image(32, 32, rng);
  const double s = ssim(a, a);
  const Tensor<double> img = random_image(256, 256, rng).tensor();
  const bool roundtrip = bitwise_equal(unpatchify(patchify(img, 8)), img);
  return {std::abs(p - 6.0206) <= 1e-3 && s == 1.0 && roundtrip,
          fmt("psnr %.4f dB, ssim(a,a) %.17g, patchify roundtrip %s", p, s, roundtrip ? "bitwise" : "differs")};
}

Outcome overfit(const fs::path& out) {
  GenerationConfig g;
  g.scenes = 1;
  g.views = 3;
  g.width = g.height = 16;
  g.seed = 4;
  const auto data = generate_dataset(g);

  ModelConfig cfg = ModelConfig::tiny();
  cfg.variant = BlockVariant::TokDPlus;
  TrainHyper hp;
  hp.adam.total_steps = 500;
  hp.adam.warmup_steps = 25;
  hp.adam.lr_peak = 3e-3;
  hp.adam.weight_decay = 0.0;
  hp.batch = 3;
  hp.log_every = 50;
  hp.checkpoint_every = 500;
  hp.log_scenes = 1;
  TrainOptions opt;
  opt.out_dir = out / "overfit";
  const auto res = train(data, hp, initial_checkpoint<float>(cfg, hp), opt);

  // every (sources -> target) split of the scene
  double worst = kPsnrCap, sum = 0;
  for (std::size_t t = 0; t < data[0].views.size(); ++t) {
    TrainExample ex;
    ex.scene = &data[0];
    ex.target = t;
    for (std::size_t i = 0; i < data[0].views.size(); ++i)
      if (i != t) ex.sources.push_back(i);
    const ExampleTensors et = example_tensors(ex);
    const double q = psnr(to_image(forward(res.checkpoint.params, et.sources, et.target_rays, cfg)), et.target);
    worst = std::min(worst, q);
    sum += q;
  }
  return {worst > 30.0, fmt("train PSNR after %zu steps: worst view %.2f dB, mean %.2f dB", hp.adam.total_steps, worst,
                            sum / static_cast<double>(data[0].views.size()))};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string out = "acceptance_artifacts";
  std::vector<int> only;
  std::size_t steps = 2000, seeds = 3;
  app.add_option("--out", out, "Artifact directory")->capture_default_str();
  app.add_option("--only", only, "Criteria to run")->delimiter(',');
  app.add_option("--steps", steps, "Ablation training steps")->capture_default_str();
  app.add_option("--seeds", seeds, "Ablation seeds")->capture_default_str();
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(out);
  const std::set<int> selected(only.begin(), only.end());
  auto wanted = [&](int id) { return selected.empty() || selected.contains(id); };

  bool all = true;
  auto report = [&](int id, const char* name, const Outcome& o, double seconds, double limit) {
    const bool pass = o.pass && seconds < limit;
    all = all && pass;
    std::printf("%s %2d %s: %s [%.1f s, limit %.0f s]\n", pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), seconds,
                limit);
    std::fflush(stdout);
  };
  auto timed = [&](int id, const char* name, double limit, const std::function<Outcome()>& fn) {
    if (!wanted(id)) return;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    report(id, name, o, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), limit);
  };

  timed(1, "neutral-init equivalence", 10, neutral_equivalence);
  timed(2, "gradient suite", 60, gradient_suite);
  timed(3, "overhead ratio", 1, flop_overhead);

  if (wanted(4) || wanted(5) || wanted(6)) {
    AblationOutcomes o;
    try {
      o = ablation(out, steps, seeds);
    } catch (const std::exception& e) {
      o.ordering = o.clean_target = o.disentangle = {false, std::string("error: ") + e.what()};
    }
    // 4 and 6 share the real-only runs, 5 uses the synthetic ones
    if (wanted(4)) report(4, "ablation ordering", o.ordering, o.real_seconds, 30 * 60);
    if (wanted(5)) report(5, "clean-target scheme", o.clean_target, o.synthetic_seconds, 45 * 60);
    if (wanted(6)) report(6, "disentanglement", o.disentangle, 0.0, 1);
  }

  timed(7, "recipe constants", 1, recipe);
  timed(8, "noise warp", 10, noise_warp);
  timed(9, "metric oracles", 5, metric_oracles);
  timed(10, "single-scene overfit", 300, [&] { return overfit(out); });
  return all ? 0 : 1;
}
