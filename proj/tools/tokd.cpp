// Batch command line: data generation, training, evaluation, PCA dumps,
// cost counting and the ablation grid.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "tokd/datapipe/roles.hpp"
#include "tokd/eval/ablate.hpp"
#include "tokd/eval/flops.hpp"
#include "tokd/eval/pca.hpp"
#include "tokd/eval/report.hpp"
#include "tokd/numeric/errors.hpp"
#include "tokd/scenegen/generate.hpp"
#include "tokd/trainer/train.hpp"

namespace fs = std::filesystem;
using namespace tokd;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os << text;
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    write_file(out, text);
  }
}

struct GenArgs {
  GenerationConfig gen;
  std::string out;
  std::string components = "all";
  int size = 64;
};

void run_gen(GenArgs& a) {
  a.gen.width = a.gen.height = a.size;
  a.gen.components = parse_components(a.components);
  const auto scenes = generate_dataset(a.gen);
  save_dataset(a.out, scenes);
  std::printf("wrote %zu scenes to %s\n", scenes.size(), a.out.c_str());
}

struct TrainArgs {
  std::string data, out, config, resume;
  std::vector<std::string> overrides;
  std::size_t stop_after = 0;
  bool quiet = false;
};

void run_train(const TrainArgs& a) {
  RunConfig rc;
  if (!a.config.empty()) rc = RunConfig::load(a.config);
  for (const auto& kv : a.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    rc.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  rc.model.validate();
  rc.train.validate();
  const auto data = load_dataset(a.data);
  Checkpoint<float> start;
  if (a.resume.empty()) {
    start = initial_checkpoint<float>(rc.model, rc.train);
  } else {
    start = load_checkpoint<float>(a.resume);
    if (!(start.config == rc.model)) throw ConfigError("resume: checkpoint config differs from the run config");
  }
  fs::create_directories(a.out);
  write_file(fs::path(a.out) / "run.cfg", rc.to_text());
  TrainOptions opt;
  opt.out_dir = a.out;
  opt.stop_after = a.stop_after;
  if (!a.quiet) {
    opt.on_log = [](const MetricsRow& r) {
      std::printf("step %zu lr %.3g loss %.5f psnr_raw %.2f psnr_ema %.2f\n", r.step, r.lr, r.loss, r.psnr_raw,
                  r.psnr_ema);
      std::fflush(stdout);
    };
  }
  const auto res = train(data, rc.train, std::move(start), opt);
  std::printf("finished at step %llu; checkpoint %s\n", static_cast<unsigned long long>(res.checkpoint.step),
              (fs::path(a.out) / "checkpoint.tokd").c_str());
}

struct EvalArgs {
  std::string checkpoint, data, out;
  std::size_t sources = 2;
  bool raw = false;
};

void run_eval(const EvalArgs& a) {
  const auto ckpt = load_checkpoint<float>(a.checkpoint);
  const auto scenes = load_dataset(a.data);
  const auto report = evaluate(a.raw ? ckpt.params : ckpt.ema, ckpt.config, scenes, a.sources);
  emit(a.out, report.to_csv());
}

struct PcaArgs {
  std::string checkpoint, data, out;
  std::size_t scene = 0, sources = 2;
  bool raw = false;
};

void run_pca(const PcaArgs& a) {
  const auto ckpt = load_checkpoint<float>(a.checkpoint);
  const auto scenes = load_dataset(a.data);
  if (a.scene >= scenes.size()) throw ArgumentError("--scene out of range");
  const ExampleTensors ex = example_tensors(evaluation_example(scenes[a.scene], a.sources));
  const auto params = (a.raw ? ckpt.params : ckpt.ema).cast<double>();
  const auto feats = forward_with_features(params, ex.sources, ex.target_rays, ckpt.config);
  const auto dump = pca_dump(feats, ckpt.config, a.out);
  for (std::size_t l = 0; l < dump.cosine.size(); ++l) std::printf("layer %zu cosine %.6f\n", l, dump.cosine[l]);
}

struct BenchArgs {
  std::string preset = "full";
  std::size_t sources = 2;
  std::size_t repeats = 3;
  bool time_forward = false;
};

void run_bench(const BenchArgs& a) {
  std::printf("variant,params,forward_gflops,forward_ms\n");
  for (BlockVariant v : {BlockVariant::Plain, BlockVariant::TokD, BlockVariant::TokDPlus}) {
    ModelConfig cfg = ModelConfig::preset(a.preset);
    cfg.variant = v;
    const ModelCost cost = count_params_flops(cfg, a.sources);
    double ms = 0.0;
    if (a.time_forward) {
      const auto params = init_params<float>(cfg, 0);
      std::vector<SourceView> src;
      const Intrinsics intr = Intrinsics::from_fov(static_cast<int>(cfg.image_width),
                                                   static_cast<int>(cfg.image_height), 0.9);
      for (std::size_t i = 0; i < a.sources; ++i) {
        const Pose pose = look_at(Vec3(4.0, 0.5, 0.5 * static_cast<double>(i)), Vec3::Zero());
        src.push_back(SourceView{Image(cfg.image_height, cfg.image_width, 3, 0.5), plucker_map(intr, pose)});
      }
      const PluckerMap target = plucker_map(intr, look_at(Vec3(4.0, 0.7, 0.2), Vec3::Zero()));
      const auto t0 = std::chrono::steady_clock::now();
      for (std::size_t r = 0; r < a.repeats; ++r) (void)forward(params, src, target, cfg);
      ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count() /
           static_cast<double>(a.repeats);
    }
    std::printf("%s,%llu,%.4f,%.3f\n", std::string(variant_name(v)).c_str(),
                static_cast<unsigned long long>(cost.params), static_cast<double>(cost.forward_flops) * 1e-9, ms);
  }
}

struct AblateArgs {
  std::string out;
  std::size_t steps = 2000, seeds = 3, scenes = 64, heldout = 16, batch = 4;
  std::vector<std::string> variants, regimes;
  bool quiet = false;
};

void run_ablate(const AblateArgs& a) {
  AblationConfig cfg = AblationConfig::desk();
  cfg.train.adam.total_steps = a.steps;
  cfg.train.adam.warmup_steps = std::min(cfg.train.adam.warmup_steps, a.steps);
  cfg.train.batch = a.batch;
  cfg.train.log_every = std::max<std::size_t>(1, a.steps / 4);
  cfg.train.checkpoint_every = a.steps;
  cfg.train_scenes = a.scenes;
  cfg.heldout_scenes = a.heldout;
  cfg.seeds.clear();
  for (std::size_t s = 0; s < a.seeds; ++s) cfg.seeds.push_back(s);
  if (!a.variants.empty()) {
    cfg.variants.clear();
    for (const auto& v : a.variants) cfg.variants.push_back(parse_variant(v));
  }
  if (!a.regimes.empty()) {
    cfg.regimes.clear();
    for (const auto& r : a.regimes) cfg.regimes.push_back(parse_regime(r));
  }
  cfg.out_dir = a.out;
  const auto runs = run_ablation(cfg, [&](const AblationRun& r) {
    if (a.quiet) return;
    std::fprintf(stderr, "%s %s seed %llu: psnr %.3f late cosine %.4f (%.1f s)\n",
                 std::string(variant_name(r.variant)).c_str(), std::string(regime_name(r.regime)).c_str(),
                 static_cast<unsigned long long>(r.seed), r.heldout_psnr, r.late_cosine(), r.seconds);
  });
  const std::string csv = ablation_csv(runs);
  write_file(fs::path(a.out) / "ablation.csv", csv);
  std::cout << csv;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Token-disentangled transformer for novel view synthesis"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen-data", "Render a procedural multi-view dataset");
  g->add_option("--out", gen.out, "Dataset root")->required();
  g->add_option("--scenes", gen.gen.scenes, "Number of scenes")->capture_default_str();
  g->add_option("--seed", gen.gen.seed, "Generation seed")->capture_default_str();
  g->add_option("--views", gen.gen.views, "Views per scene")->capture_default_str();
  g->add_option("--size", gen.size, "Square image size in pixels")->capture_default_str();
  g->add_option("--synthetic-fraction", gen.gen.synthetic_fraction, "Share of synthetic scenes")->capture_default_str();
  g->add_option("--severity", gen.gen.severity, "Artifact severity of generated views")->capture_default_str();
  g->add_option("--components", gen.components, "Artifact components: all, none or a list of block,blur,chroma,noise")
      ->capture_default_str();
  g->add_option("--conditioned", gen.gen.conditioned_views, "Clean views per synthetic scene")->capture_default_str();
  g->add_option("--id-prefix", gen.gen.id_prefix, "Scene directory prefix")->capture_default_str();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a model on a dataset");
  t->add_option("--data", tr.data, "Dataset root")->required();
  t->add_option("--out", tr.out, "Output directory (metrics.csv, checkpoint.tokd)")->required();
  t->add_option("--config", tr.config, "key=value run config");
  t->add_option("--set", tr.overrides, "Override one config key (key=value); repeatable");
  t->add_option("--resume", tr.resume, "Checkpoint to continue from");
  t->add_option("--stop-after", tr.stop_after, "Stop after this many completed steps");
  t->add_flag("--quiet", tr.quiet, "No per-log-step output");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score a checkpoint on a dataset (per-scene CSV plus mean)");
  e->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
  e->add_option("--data", ev.data, "Dataset root")->required();
  e->add_option("--out", ev.out, "CSV path; stdout when omitted");
  e->add_option("--sources", ev.sources, "Source views per example")->capture_default_str();
  e->add_flag("--raw", ev.raw, "Use raw instead of EMA weights");

  PcaArgs pc;
  auto* p = app.add_subcommand("pca", "Per-layer 3-channel PCA of block outputs");
  p->add_option("--checkpoint", pc.checkpoint, "Checkpoint file")->required();
  p->add_option("--data", pc.data, "Dataset root")->required();
  p->add_option("--out", pc.out, "Output directory")->required();
  p->add_option("--scene", pc.scene, "Scene index")->capture_default_str();
  p->add_option("--sources", pc.sources, "Source views")->capture_default_str();
  p->add_flag("--raw", pc.raw, "Use raw instead of EMA weights");

  BenchArgs bn;
  auto* b = app.add_subcommand("bench", "Parameter and FLOP counts per variant, optional forward timing");
  b->add_option("--preset", bn.preset, "Model preset: tiny, desk or full")->capture_default_str();
  b->add_option("--sources", bn.sources, "Source views")->capture_default_str();
  b->add_option("--repeats", bn.repeats, "Timed forward passes")->capture_default_str();
  b->add_flag("--time", bn.time_forward, "Time the forward pass");

  AblateArgs ab;
  auto* a = app.add_subcommand("ablate", "Variant x data-regime grid, median held-out PSNR per cell");
  a->add_option("--out", ab.out, "Output directory")->required();
  a->add_option("--steps", ab.steps, "Training steps per run")->capture_default_str();
  a->add_option("--seeds", ab.seeds, "Seeds per cell")->capture_default_str();
  a->add_option("--scenes", ab.scenes, "Training scenes")->capture_default_str();
  a->add_option("--heldout", ab.heldout, "Held-out scenes")->capture_default_str();
  a->add_option("--batch", ab.batch, "Batch size")->capture_default_str();
  a->add_option("--variants", ab.variants, "Subset of plain, tokd, tokd-plus");
  a->add_option("--regimes", ab.regimes, "Subset of real-only, naive-synthetic, clean-target-synthetic");
  a->add_flag("--quiet", ab.quiet, "No per-run progress");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    std::cerr << "error: " << err.what() << "\n\n";
    const CLI::App* failing = &app;
    for (auto* sub : app.get_subcommands()) failing = sub;
    std::cerr << failing->help();
    return 2;
  }

  try {
    if (*g) run_gen(gen);
    if (*t) run_train(tr);
    if (*e) run_eval(ev);
    if (*p) run_pca(pc);
    if (*b) run_bench(bn);
    if (*a) run_ablate(ab);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
