#include "tokd/trainer/hyper.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "tokd/numeric/errors.hpp"

namespace tokd {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename U>
U parse_number(std::string_view key, std::string_view value) {
  U out{};
  auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    throw ConfigError("bad value for " + std::string(key) + ": '" + std::string(value) + "'");
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

void TrainHyper::validate() const {
  adam.validate();
  if (batch == 0) throw ConfigError("batch must be positive");
  if (sources == 0) throw ConfigError("sources must be positive");
  if (log_every == 0 || checkpoint_every == 0) throw ConfigError("log_every and checkpoint_every must be positive");
  if (!(clip_grad_norm >= 0.0)) throw ConfigError("clip_grad_norm must be >= 0");
}

TrainHyper TrainHyper::full() { return TrainHyper{}; }

TrainHyper TrainHyper::desk() {
  TrainHyper h;
  h.adam.total_steps = 2000;
  h.adam.warmup_steps = 100;
  h.adam.lr_peak = 3e-3;
  h.batch = 4;
  h.log_every = 100;
  h.checkpoint_every = 500;
  return h;
}

TrainHyper TrainHyper::preset(std::string_view name) {
  if (name == "full") return full();
  if (name == "desk") return desk();
  throw ConfigError("unknown training preset '" + std::string(name) + "'");
}

std::string TrainHyper::to_text() const {
  std::ostringstream os;
  os << "lr_peak=" << format_double(adam.lr_peak) << "\n"
     << "beta1=" << format_double(adam.beta1) << "\n"
     << "beta2=" << format_double(adam.beta2) << "\n"
     << "adam_eps=" << format_double(adam.eps) << "\n"
     << "weight_decay=" << format_double(adam.weight_decay) << "\n"
     << "warmup_steps=" << adam.warmup_steps << "\n"
     << "total_steps=" << adam.total_steps << "\n"
     << "ema_decay=" << format_double(adam.ema_decay) << "\n"
     << "batch=" << batch << "\n"
     << "sources=" << sources << "\n"
     << "seed=" << seed << "\n"
     << "scheme=" << scheme_name(scheme) << "\n"
     << "log_every=" << log_every << "\n"
     << "checkpoint_every=" << checkpoint_every << "\n"
     << "log_scenes=" << log_scenes << "\n"
     << "clip_grad_norm=" << format_double(clip_grad_norm) << "\n";
  return os.str();
}

bool TrainHyper::set(std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "lr_peak") adam.lr_peak = parse_number<double>(key, value);
  else if (key == "beta1") adam.beta1 = parse_number<double>(key, value);
  else if (key == "beta2") adam.beta2 = parse_number<double>(key, value);
  else if (key == "adam_eps") adam.eps = parse_number<double>(key, value);
  else if (key == "weight_decay") adam.weight_decay = parse_number<double>(key, value);
  else if (key == "warmup_steps") adam.warmup_steps = parse_number<std::size_t>(key, value);
  else if (key == "total_steps") adam.total_steps = parse_number<std::size_t>(key, value);
  else if (key == "ema_decay") adam.ema_decay = parse_number<double>(key, value);
  else if (key == "batch") batch = parse_number<std::size_t>(key, value);
  else if (key == "sources") sources = parse_number<std::size_t>(key, value);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else if (key == "scheme") scheme = parse_scheme(value);
  else if (key == "log_every") log_every = parse_number<std::size_t>(key, value);
  else if (key == "checkpoint_every") checkpoint_every = parse_number<std::size_t>(key, value);
  else if (key == "log_scenes") log_scenes = parse_number<std::size_t>(key, value);
  else if (key == "clip_grad_norm") clip_grad_norm = parse_number<double>(key, value);
  else return false;
  return true;
}

std::string RunConfig::to_text() const { return model.to_text() + train.to_text(); }

void RunConfig::set(std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "model_preset") {
    model = ModelConfig::preset(value);
  } else if (key == "train_preset") {
    train = TrainHyper::preset(value);
  } else if (!train.set(key, value)) {
    model.set(key, value);
  }
}

RunConfig RunConfig::from_text(std::string_view text) {
  RunConfig cfg;
  std::istringstream is{std::string(text)};
  std::size_t lineno = 0;
  bool seen_key = false;
  for (std::string line; std::getline(is, line);) {
    ++lineno;
    const std::string_view l = trim(line);
    if (l.empty() || l.front() == '#') continue;
    const std::size_t eq = l.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    const std::string_view key = trim(l.substr(0, eq));
    const bool preset = key == "model_preset" || key == "train_preset";
    if (preset && seen_key) {
      throw ConfigError("config line " + std::to_string(lineno) + ": " + std::string(key) + " must precede other keys");
    }
    seen_key = seen_key || !preset;
    cfg.set(key, l.substr(eq + 1));
  }
  cfg.model.validate();
  cfg.train.validate();
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  try {
    return from_text(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace tokd
