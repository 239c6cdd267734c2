#include "tokd/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "tokd/model/model.hpp"
#include "tokd/numeric/errors.hpp"

namespace tokd {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kSectionTags[4][5] = {"PARM", "EMA_", "ADMM", "ADMV"};

template <typename T>
constexpr std::uint8_t dtype_code() {
  return sizeof(T) == 4 ? 1 : 2;
}

class Writer {
 public:
  template <typename U>
  void pod(U v) {
    out_.append(reinterpret_cast<const char*>(&v), sizeof v);
  }
  void bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}
  template <typename U>
  U pod(const char* what) {
    U v;
    std::memcpy(&v, need(sizeof v, what), sizeof v);
    return v;
  }
  const char* need(std::size_t n, const char* what) {
    if (in_.size() - pos_ < n) throw FormatError(std::string("checkpoint truncated while reading ") + what);
    const char* p = in_.data() + pos_;
    pos_ += n;
    return p;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::string_view in_;
  std::size_t pos_ = 0;
};

template <typename T>
void write_section(Writer& w, const char* tag, const ParamStore<T>& store) {
  w.bytes(tag, 4);
  w.pod(static_cast<std::uint32_t>(store.size()));
  for (const auto& p : store.entries()) {
    w.pod(static_cast<std::uint32_t>(p.name.size()));
    w.bytes(p.name.data(), p.name.size());
    w.pod(dtype_code<T>());
    w.pod(static_cast<std::uint32_t>(p.value.rank()));
    for (auto e : p.value.shape()) w.pod(static_cast<std::uint32_t>(e));
    w.bytes(p.value.data(), p.value.numel() * sizeof(T));
  }
}

template <typename T>
ParamStore<T> read_section(Reader& r, const char* tag, const ParamStore<T>& layout) {
  const char* got = r.need(4, "section tag");
  if (std::memcmp(got, tag, 4) != 0) {
    throw FormatError(std::string("checkpoint: expected section ") + tag + ", found '" + std::string(got, 4) + "'");
  }
  const auto count = r.pod<std::uint32_t>("section count");
  ParamStore<T> out;
  if (count == 0) return out;
  if (count != layout.size()) {
    throw FormatError("checkpoint section " + std::string(tag) + " has " + std::to_string(count) +
                      " arrays, config implies " + std::to_string(layout.size()));
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = r.pod<std::uint32_t>("name length");
    std::string name(r.need(len, "name"), len);
    const auto& expected = layout.entries()[i];
    if (name != expected.name) {
      throw FormatError("checkpoint section " + std::string(tag) + ": array " + std::to_string(i) + " is '" + name +
                        "', expected '" + expected.name + "'");
    }
    if (r.pod<std::uint8_t>("dtype") != dtype_code<T>()) {
      throw FormatError("checkpoint: array '" + name + "' has the wrong dtype");
    }
    const auto rank = r.pod<std::uint32_t>("rank");
    Shape shape;
    for (std::uint32_t k = 0; k < rank; ++k) shape.push_back(r.pod<std::uint32_t>("extent"));
    if (shape != expected.value.shape()) {
      throw FormatError("checkpoint: array '" + name + "' has shape " + shape_string(shape) + ", expected " +
                        shape_string(expected.value.shape()));
    }
    Tensor<T> value(shape);
    std::memcpy(value.data(), r.need(value.numel() * sizeof(T), "array data"), value.numel() * sizeof(T));
    out.add(name, std::move(value), expected.norm);
  }
  return out;
}

}  // namespace

template <typename T>
std::string serialize_checkpoint(const Checkpoint<T>& ckpt) {
  Writer w;
  w.bytes(kCheckpointMagic, sizeof kCheckpointMagic);
  const std::string cfg = ckpt.config.to_text();
  w.pod(static_cast<std::uint32_t>(cfg.size()));
  w.bytes(cfg.data(), cfg.size());
  w.pod(static_cast<std::uint64_t>(ckpt.step));
  w.pod(static_cast<std::uint64_t>(ckpt.rng.seed));
  w.pod(static_cast<std::uint64_t>(ckpt.rng.stream));
  w.pod(static_cast<std::uint64_t>(ckpt.rng.counter));
  write_section(w, kSectionTags[0], ckpt.params);
  write_section(w, kSectionTags[1], ckpt.ema);
  write_section(w, kSectionTags[2], ckpt.adam_m);
  write_section(w, kSectionTags[3], ckpt.adam_v);
  return w.take();
}

template <typename T>
Checkpoint<T> deserialize_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (std::memcmp(r.need(8, "magic"), kCheckpointMagic, 8) != 0) throw FormatError("not a checkpoint (bad magic)");
  Checkpoint<T> ckpt;
  const auto cfg_len = r.pod<std::uint32_t>("config length");
  try {
    ckpt.config = ModelConfig::from_text(std::string_view(r.need(cfg_len, "config"), cfg_len));
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint config: ") + e.what());
  }
  ckpt.step = r.pod<std::uint64_t>("step");
  ckpt.rng.seed = r.pod<std::uint64_t>("rng seed");
  ckpt.rng.stream = r.pod<std::uint64_t>("rng stream");
  ckpt.rng.counter = r.pod<std::uint64_t>("rng counter");
  const ParamStore<T> layout = init_params<T>(ckpt.config, 0);
  ckpt.params = read_section(r, kSectionTags[0], layout);
  ckpt.ema = read_section(r, kSectionTags[1], layout);
  ckpt.adam_m = read_section(r, kSectionTags[2], layout);
  ckpt.adam_v = read_section(r, kSectionTags[3], layout);
  if (ckpt.params.size() == 0) throw FormatError("checkpoint has no parameters");
  if (ckpt.ema.size() != ckpt.params.size()) throw FormatError("checkpoint: every parameter needs an EMA twin");
  if (!r.done()) throw FormatError("checkpoint has trailing bytes");
  return ckpt;
}

template <typename T>
void save_checkpoint(const Checkpoint<T>& ckpt, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(ckpt);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + tmp.string());
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at " + path.string() + ": " + ec.message());
}

template <typename T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return deserialize_checkpoint<T>(ss.str());
}

template std::string serialize_checkpoint(const Checkpoint<float>&);
template std::string serialize_checkpoint(const Checkpoint<double>&);
template Checkpoint<float> deserialize_checkpoint(std::string_view);
template Checkpoint<double> deserialize_checkpoint(std::string_view);
template void save_checkpoint(const Checkpoint<float>&, const std::filesystem::path&);
template void save_checkpoint(const Checkpoint<double>&, const std::filesystem::path&);
template Checkpoint<float> load_checkpoint(const std::filesystem::path&);
template Checkpoint<double> load_checkpoint(const std::filesystem::path&);

}  // namespace tokd
