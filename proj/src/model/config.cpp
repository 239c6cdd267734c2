#include "tokd/model/config.hpp"

#include <charconv>
#include <sstream>

#include "tokd/numeric/errors.hpp"

namespace tokd {

std::string_view perceptual_name(PerceptualKind kind) {
  return kind == PerceptualKind::GradientL1 ? "gradient-l1" : "off";
}

PerceptualKind parse_perceptual(std::string_view name) {
  if (name == "off") return PerceptualKind::Off;
  if (name == "gradient-l1") return PerceptualKind::GradientL1;
  throw ConfigError("unknown perceptual loss '" + std::string(name) + "'");
}

void ModelConfig::validate() const {
  if (d_model == 0 || n_layers == 0 || n_heads == 0 || patch == 0 || ffn_mult == 0) {
    throw ConfigError("model config: d_model, n_layers, n_heads, patch and ffn_mult must be positive");
  }
  if (d_model % n_heads != 0) {
    throw ConfigError("model config: d_model " + std::to_string(d_model) + " not divisible by n_heads " +
                      std::to_string(n_heads));
  }
  if (image_height == 0 || image_width == 0 || image_height % patch != 0 || image_width % patch != 0) {
    throw ConfigError("model config: image " + std::to_string(image_height) + "x" + std::to_string(image_width) +
                      " not divisible by patch " + std::to_string(patch));
  }
  if (!(lambda_perceptual >= 0.0)) throw ConfigError("model config: lambda_perceptual must be >= 0");
  if (!(ln_eps > 0.0)) throw ConfigError("model config: ln_eps must be > 0");
}

BlockDims ModelConfig::block_dims() const {
  return BlockDims{d_model, n_heads, ffn_mult * d_model, style_width(), n_layers, ln_eps};
}

namespace {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::size_t parse_size(std::string_view key, std::string_view value) {
  std::size_t out = 0;
  auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    throw ConfigError("model config: bad integer for " + std::string(key) + ": '" + std::string(value) + "'");
  }
  return out;
}

double parse_double(std::string_view key, std::string_view value) {
  double out = 0;
  auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    throw ConfigError("model config: bad number for " + std::string(key) + ": '" + std::string(value) + "'");
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string ModelConfig::to_text() const {
  std::ostringstream os;
  os << "d_model=" << d_model << "\n"
     << "n_layers=" << n_layers << "\n"
     << "n_heads=" << n_heads << "\n"
     << "patch=" << patch << "\n"
     << "image_height=" << image_height << "\n"
     << "image_width=" << image_width << "\n"
     << "ffn_mult=" << ffn_mult << "\n"
     << "d_style=" << d_style << "\n"
     << "variant=" << variant_name(variant) << "\n"
     << "lambda_perceptual=" << format_double(lambda_perceptual) << "\n"
     << "perceptual=" << perceptual_name(perceptual) << "\n"
     << "ln_eps=" << format_double(ln_eps) << "\n";
  return os.str();
}

void ModelConfig::set(std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "d_model") d_model = parse_size(key, value);
  else if (key == "n_layers") n_layers = parse_size(key, value);
  else if (key == "n_heads") n_heads = parse_size(key, value);
  else if (key == "patch") patch = parse_size(key, value);
  else if (key == "image_height") image_height = parse_size(key, value);
  else if (key == "image_width") image_width = parse_size(key, value);
  else if (key == "ffn_mult") ffn_mult = parse_size(key, value);
  else if (key == "d_style") d_style = parse_size(key, value);
  else if (key == "variant") variant = parse_variant(value);
  else if (key == "lambda_perceptual") lambda_perceptual = parse_double(key, value);
  else if (key == "perceptual") perceptual = parse_perceptual(value);
  else if (key == "ln_eps") ln_eps = parse_double(key, value);
  else throw ConfigError("model config: unknown key '" + std::string(key) + "'");
}

ModelConfig ModelConfig::from_text(std::string_view text) {
  ModelConfig cfg;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("model config: expected key=value, got '" + std::string(line) + "'");
    cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

ModelConfig ModelConfig::tiny() {
  ModelConfig c;
  c.d_model = 16;
  c.n_layers = 2;
  c.n_heads = 2;
  c.image_height = 16;
  c.image_width = 16;
  return c;
}

ModelConfig ModelConfig::desk() { return ModelConfig{}; }

ModelConfig ModelConfig::full() {
  ModelConfig c;
  c.d_model = 1024;
  c.n_layers = 24;
  c.n_heads = 16;
  c.image_height = 256;
  c.image_width = 256;
  return c;
}

ModelConfig ModelConfig::preset(std::string_view name) {
  if (name == "tiny") return tiny();
  if (name == "desk") return desk();
  if (name == "full") return full();
  throw ConfigError("unknown model preset '" + std::string(name) + "'");
}

}  // namespace tokd
