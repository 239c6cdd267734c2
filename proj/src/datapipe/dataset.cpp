#include "tokd/datapipe/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "tokd/datapipe/image_io.hpp"
#include "tokd/numeric/errors.hpp"

namespace fs = std::filesystem;

namespace tokd {

std::string_view role_name(ViewRole role) {
  switch (role) {
    case ViewRole::Clean:
      return "clean";
    case ViewRole::Conditioned:
      return "conditioned";
    case ViewRole::Generated:
      return "generated";
  }
  return "?";
}

ViewRole parse_role(std::string_view name) {
  if (name == "clean") return ViewRole::Clean;
  if (name == "conditioned") return ViewRole::Conditioned;
  if (name == "generated") return ViewRole::Generated;
  throw FormatError("unknown view role '" + std::string(name) + "'");
}

namespace {

std::string_view kind_name(SceneKind k) { return k == SceneKind::Synthetic ? "synthetic" : "real"; }

SceneKind parse_kind(std::string_view s) {
  if (s == "real") return SceneKind::Real;
  if (s == "synthetic") return SceneKind::Synthetic;
  throw FormatError("unknown scene kind '" + std::string(s) + "'");
}

std::vector<std::size_t> indices_with(const std::vector<CameraView>& views, ViewRole role) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < views.size(); ++i)
    if (views[i].role == role) out.push_back(i);
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_num(const std::string& s, const fs::path& file) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw FormatError(file.string() + ": bad number '" + s + "'");
  }
  return v;
}

std::string read_text(const fs::path& file) {
  std::ifstream is(file);
  if (!is) throw IoError("cannot open " + file.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream os(file, std::ios::trunc);
  if (!os) throw IoError("cannot write " + file.string());
  os << text;
  if (!os) throw IoError("short write to " + file.string());
}

fs::path view_file(const fs::path& dir, std::size_t k) { return dir / ("view_" + std::to_string(k) + ".ppm"); }

/// Reads `count` whitespace-separated numbers following `keyword` on one line.
std::vector<double> keyword_line(std::istringstream& lines, const std::string& keyword, std::size_t count,
                                 const fs::path& file) {
  std::string line;
  while (std::getline(lines, line) && (line.empty() || line.front() == '#')) {
  }
  std::istringstream ls(line);
  std::string head;
  ls >> head;
  if (head != keyword) throw FormatError(file.string() + ": expected '" + keyword + "', found '" + line + "'");
  std::vector<double> out;
  std::string tok;
  while (ls >> tok) out.push_back(parse_num(tok, file));
  if (out.size() != count) {
    throw FormatError(file.string() + ": '" + keyword + "' needs " + std::to_string(count) + " values, found " +
                      std::to_string(out.size()));
  }
  return out;
}

std::string keyword_word(std::istringstream& lines, const std::string& keyword, const fs::path& file) {
  std::string line;
  while (std::getline(lines, line) && (line.empty() || line.front() == '#')) {
  }
  std::istringstream ls(line);
  std::string head, word;
  ls >> head >> word;
  if (head != keyword || word.empty()) {
    throw FormatError(file.string() + ": expected '" + keyword + " <value>', found '" + line + "'");
  }
  return word;
}

}  // namespace

std::vector<std::size_t> SceneRecord::conditioned_indices() const { return indices_with(views, ViewRole::Conditioned); }
std::vector<std::size_t> SceneRecord::generated_indices() const { return indices_with(views, ViewRole::Generated); }

void SceneRecord::validate() const {
  if (views.size() < 3) throw ValidationError("scene " + id + ": needs at least 3 views");
  if (kind == SceneKind::Synthetic) {
    if (conditioned_indices().empty()) throw ValidationError("scene " + id + ": synthetic scene has no conditioned view");
    if (!indices_with(views, ViewRole::Clean).empty()) {
      throw ValidationError("scene " + id + ": synthetic scene views must be conditioned or generated");
    }
  } else if (indices_with(views, ViewRole::Clean).size() != views.size()) {
    throw ValidationError("scene " + id + ": real scene views must all be clean");
  }
  for (std::size_t k = 0; k < views.size(); ++k) {
    const CameraView& v = views[k];
    try {
      v.pose.validate();
      v.intrinsics.validate();
    } catch (const GeometryError& e) {
      throw ValidationError("scene " + id + " view " + std::to_string(k) + ": " + e.what());
    }
    if (v.image.height() != static_cast<std::size_t>(v.intrinsics.height) ||
        v.image.width() != static_cast<std::size_t>(v.intrinsics.width) || v.image.channels() != 3) {
      throw ValidationError("scene " + id + " view " + std::to_string(k) + ": image size does not match intrinsics");
    }
  }
}

void save_scene(const fs::path& dir, const SceneRecord& rec) {
  rec.validate();
  fs::create_directories(dir);
  std::ostringstream cams;
  cams << "# tokd cameras v1\n";
  cams << "views " << rec.views.size() << "\n";
  for (std::size_t k = 0; k < rec.views.size(); ++k) {
    const CameraView& v = rec.views[k];
    cams << "view " << k << "\n";
    cams << "rotation";
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) cams << " " << num(v.pose.rotation(r, c));
    cams << "\ntranslation";
    for (int r = 0; r < 3; ++r) cams << " " << num(v.pose.translation[r]);
    cams << "\nintrinsics " << num(v.intrinsics.fx) << " " << num(v.intrinsics.fy) << " " << num(v.intrinsics.cx)
         << " " << num(v.intrinsics.cy) << "\n";
    cams << "role " << role_name(v.role) << "\n";
    write_ppm(view_file(dir, k), v.image);
  }
  write_text(dir / "cameras.txt", cams.str());

  std::ostringstream meta;
  meta << "id=" << rec.id << "\n"
       << "kind=" << kind_name(rec.kind) << "\n"
       << "artifact_severity=" << num(rec.artifacts.severity) << "\n"
       << "artifact_components=" << components_to_string(rec.artifacts.components) << "\n"
       << "artifact_seed=" << rec.artifacts.seed << "\n"
       << "view_artifacts=";
  for (std::size_t k = 0; k < rec.views.size(); ++k) meta << (k ? "," : "") << num(rec.views[k].artifact_severity);
  meta << "\n";
  write_text(dir / "meta.txt", meta.str());
}

SceneRecord load_scene(const fs::path& dir) {
  const fs::path cam_file = dir / "cameras.txt", meta_file = dir / "meta.txt";
  std::istringstream cams(read_text(cam_file));
  const auto declared = keyword_line(cams, "views", 1, cam_file)[0];
  if (declared < 0 || declared != std::floor(declared)) throw FormatError(cam_file.string() + ": bad view count");
  const auto n = static_cast<std::size_t>(declared);

  std::size_t image_files = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.starts_with("view_") && entry.path().extension() == ".ppm") ++image_files;
  }
  if (image_files != n) {
    throw FormatError(cam_file.string() + " lists " + std::to_string(n) + " views but " + dir.string() + " holds " +
                      std::to_string(image_files) + " image files");
  }

  SceneRecord rec;
  for (std::size_t k = 0; k < n; ++k) {
    const auto idx = keyword_line(cams, "view", 1, cam_file)[0];
    if (idx != static_cast<double>(k)) throw FormatError(cam_file.string() + ": views out of order at " + std::to_string(k));
    const auto rot = keyword_line(cams, "rotation", 9, cam_file);
    const auto tr = keyword_line(cams, "translation", 3, cam_file);
    const auto in = keyword_line(cams, "intrinsics", 4, cam_file);
    CameraView v;
    v.role = parse_role(keyword_word(cams, "role", cam_file));
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) v.pose.rotation(r, c) = rot[r * 3 + c];
      v.pose.translation[r] = tr[r];
    }
    v.image = read_ppm(view_file(dir, k));
    v.intrinsics = Intrinsics{in[0], in[1], in[2], in[3], static_cast<int>(v.image.width()),
                              static_cast<int>(v.image.height())};
    rec.views.push_back(std::move(v));
  }

  std::map<std::string, std::string> meta;
  std::istringstream ms(read_text(meta_file));
  for (std::string line; std::getline(ms, line);) {
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError(meta_file.string() + ": expected key=value, found '" + line + "'");
    meta[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto field = [&](const std::string& key) -> const std::string& {
    auto it = meta.find(key);
    if (it == meta.end()) throw FormatError(meta_file.string() + ": missing key '" + key + "'");
    return it->second;
  };
  rec.id = field("id");
  rec.kind = parse_kind(field("kind"));
  rec.artifacts.severity = parse_num(field("artifact_severity"), meta_file);
  try {
    rec.artifacts.components = parse_components(field("artifact_components"));
  } catch (const ArgumentError& e) {
    throw FormatError(meta_file.string() + ": " + e.what());
  }
  rec.artifacts.seed = std::stoull(field("artifact_seed"));
  std::istringstream va(field("view_artifacts"));
  std::size_t k = 0;
  for (std::string tok; std::getline(va, tok, ',');) {
    if (k >= rec.views.size()) throw FormatError(meta_file.string() + ": view_artifacts has too many entries");
    rec.views[k++].artifact_severity = parse_num(tok, meta_file);
  }
  if (k != rec.views.size()) throw FormatError(meta_file.string() + ": view_artifacts has too few entries");
  rec.validate();
  return rec;
}

void save_dataset(const fs::path& root, const std::vector<SceneRecord>& scenes) {
  for (const auto& rec : scenes) save_scene(root / "scenes" / rec.id, rec);
}

std::vector<SceneRecord> load_dataset(const fs::path& root) {
  const fs::path scenes_dir = root / "scenes";
  if (!fs::is_directory(scenes_dir)) throw IoError("no scenes directory at " + scenes_dir.string());
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(scenes_dir))
    if (entry.is_directory()) dirs.push_back(entry.path());
  std::sort(dirs.begin(), dirs.end());
  std::vector<SceneRecord> out;
  for (const auto& d : dirs) out.push_back(load_scene(d));
  if (out.empty()) throw DataError("dataset at " + root.string() + " has no scenes");
  return out;
}

}  // namespace tokd
