#pragma once

// Binary little-endian PLY reader/writer for anchor scenes. See
// docs/scene-format.md for the property layout.

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ctxgs/error.hpp"
#include "ctxgs/scene.hpp"

namespace ctxgs {

/// Property names used to locate anchor attributes. Indexed attributes are
/// `<prefix><i>` for i = 0, 1, ...
struct PropertyNames {
  std::string x = "x", y = "y", z = "z";
  std::string feature_prefix = "f_anchor_feat_";
  std::string scaling_prefix = "scale_";
  std::string offset_prefix = "f_offset_";
  std::string mask_prefix = "mask_";

  /// Applies `key=value` overrides; keys are the member names above.
  void set(const std::string& key, const std::string& value) {
    if (key == "x") x = value;
    else if (key == "y") y = value;
    else if (key == "z") z = value;
    else if (key == "feature") feature_prefix = value;
    else if (key == "scaling") scaling_prefix = value;
    else if (key == "offset") offset_prefix = value;
    else if (key == "mask") mask_prefix = value;
    else fail(ErrorKind::Input, "unknown property-map key '" + key + "'");
  }
};

namespace ply {

enum class Type { I8, U8, I16, U16, I32, U32, F32, F64 };

inline std::optional<Type> parse_type(const std::string& t) {
  static const std::map<std::string, Type> kTypes = {
      {"char", Type::I8},    {"int8", Type::I8},     {"uchar", Type::U8},   {"uint8", Type::U8},
      {"short", Type::I16},  {"int16", Type::I16},   {"ushort", Type::U16}, {"uint16", Type::U16},
      {"int", Type::I32},    {"int32", Type::I32},   {"uint", Type::U32},   {"uint32", Type::U32},
      {"float", Type::F32},  {"float32", Type::F32}, {"double", Type::F64}, {"float64", Type::F64}};
  auto it = kTypes.find(t);
  if (it == kTypes.end()) return std::nullopt;
  return it->second;
}

inline std::size_t type_size(Type t) {
  switch (t) {
    case Type::I8: case Type::U8: return 1;
    case Type::I16: case Type::U16: return 2;
    case Type::I32: case Type::U32: case Type::F32: return 4;
    case Type::F64: return 8;
  }
  return 0;
}

template <class T>
T load(const std::uint8_t* p) {
  T v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

inline double read_as_double(Type t, const std::uint8_t* p) {
  switch (t) {
    case Type::I8: return load<std::int8_t>(p);
    case Type::U8: return load<std::uint8_t>(p);
    case Type::I16: return load<std::int16_t>(p);
    case Type::U16: return load<std::uint16_t>(p);
    case Type::I32: return load<std::int32_t>(p);
    case Type::U32: return load<std::uint32_t>(p);
    case Type::F32: return load<float>(p);
    case Type::F64: return load<double>(p);
  }
  return 0;
}

// Float properties are copied bit-for-bit so that NaN payloads and -0.0 survive
// until validation.
inline float read_as_float(Type t, const std::uint8_t* p) {
  if (t == Type::F32) return load<float>(p);
  return static_cast<float>(read_as_double(t, p));
}

struct Property {
  std::string name;
  Type type;
  std::size_t offset;  // byte offset inside one record
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> props;
  std::size_t stride = 0;

  const Property* find(const std::string& n) const {
    for (const auto& p : props)
      if (p.name == n) return &p;
    return nullptr;
  }
};

struct Header {
  std::vector<Element> elements;
  std::size_t data_offset = 0;
};

inline Header parse_header(const std::vector<std::uint8_t>& file, const std::string& path) {
  static constexpr std::string_view kEnd = "end_header\n";
  std::string_view text(reinterpret_cast<const char*>(file.data()), file.size());
  auto end = text.find(kEnd);
  require(text.substr(0, 4) == "ply\n" && end != std::string_view::npos, ErrorKind::Input,
          path + ": not a PLY file");
  Header h;
  h.data_offset = end + kEnd.size();
  std::istringstream in(std::string(text.substr(4, end - 4)));
  std::string line;
  bool format_seen = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw.empty() || kw == "comment" || kw == "obj_info") continue;
    if (kw == "format") {
      std::string fmt, ver;
      ls >> fmt >> ver;
      require(fmt == "binary_little_endian", ErrorKind::Input,
              path + ": unsupported PLY format '" + fmt + "' (need binary_little_endian)");
      format_seen = true;
    } else if (kw == "element") {
      Element e;
      ls >> e.name >> e.count;
      require(!ls.fail(), ErrorKind::Input, path + ": malformed element line");
      h.elements.push_back(std::move(e));
    } else if (kw == "property") {
      require(!h.elements.empty(), ErrorKind::Input, path + ": property before element");
      std::string type, name;
      ls >> type >> name;
      require(type != "list", ErrorKind::Input, path + ": list properties are not supported");
      auto t = parse_type(type);
      require(t.has_value(), ErrorKind::Input, path + ": unknown property type '" + type + "'");
      auto& e = h.elements.back();
      e.props.push_back({name, *t, e.stride});
      e.stride += type_size(*t);
    } else {
      fail(ErrorKind::Input, path + ": unexpected header keyword '" + kw + "'");
    }
  }
  require(format_seen, ErrorKind::Input, path + ": missing format line");
  return h;
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), ErrorKind::Input, "cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary);
  require(f.good(), ErrorKind::Input, "cannot open '" + path.string() + "' for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  require(f.good(), ErrorKind::Input, "write failed for '" + path.string() + "'");
}

}  // namespace ply

/// Parses a scene from PLY bytes. Dimensions are inferred from the indexed
/// property runs; the result is in canonical order.
inline AnchorScene parse_scene(const std::vector<std::uint8_t>& file, const PropertyNames& names = {},
                               const std::string& path = "<memory>") {
  auto header = ply::parse_header(file, path);
  const ply::Element* vertex = nullptr;
  std::size_t offset = header.data_offset;
  for (const auto& e : header.elements) {
    if (e.name == "vertex") {
      vertex = &e;
      break;
    }
    offset += e.count * e.stride;
  }
  require(vertex != nullptr, ErrorKind::Input, path + ": no 'vertex' element");
  require(file.size() >= offset + vertex->count * vertex->stride, ErrorKind::Input,
          path + ": file truncated (" + std::to_string(vertex->count) + " vertices declared)");

  auto need = [&](const std::string& n) {
    const auto* p = vertex->find(n);
    if (!p) fail(ErrorKind::Input, path + ": missing property '" + n + "'");
    return p;
  };
  auto run = [&](const std::string& prefix) {
    std::vector<const ply::Property*> out;
    while (const auto* p = vertex->find(prefix + std::to_string(out.size()))) out.push_back(p);
    return out;
  };

  const ply::Property* pos[3] = {need(names.x), need(names.y), need(names.z)};
  auto feat = run(names.feature_prefix);
  auto scale = run(names.scaling_prefix);
  auto offs = run(names.offset_prefix);
  auto mask = run(names.mask_prefix);
  if (feat.empty()) need(names.feature_prefix + "0");
  if (scale.empty()) need(names.scaling_prefix + "0");
  if (offs.empty()) need(names.offset_prefix + "0");
  require(offs.size() % 3 == 0, ErrorKind::Input,
          path + ": offset property count " + std::to_string(offs.size()) + " is not a multiple of 3");

  SceneConfig cfg;
  cfg.feature_dim = static_cast<std::uint32_t>(feat.size());
  cfg.scaling_dim = static_cast<std::uint32_t>(scale.size());
  cfg.offset_count = static_cast<std::uint32_t>(offs.size() / 3);
  cfg.has_masks = !mask.empty();
  if (cfg.has_masks && mask.size() != cfg.offset_count)
    need(names.mask_prefix + std::to_string(mask.size()));

  std::vector<Anchor> anchors(vertex->count);
  for (std::size_t i = 0; i < vertex->count; ++i) {
    const std::uint8_t* rec = file.data() + offset + i * vertex->stride;
    auto& a = anchors[i];
    auto get = [&](const ply::Property* p) { return ply::read_as_float(p->type, rec + p->offset); };
    for (int d = 0; d < 3; ++d) a.position[d] = get(pos[d]);
    for (auto* p : feat) a.feature.push_back(get(p));
    for (auto* p : scale) a.scaling.push_back(get(p));
    for (auto* p : offs) a.offsets.push_back(get(p));
    for (auto* p : mask) {
      double m = ply::read_as_double(p->type, rec + p->offset);
      require(m == 0.0 || m == 1.0, ErrorKind::Data, path + ": mask value other than 0/1 at anchor " + std::to_string(i));
      a.mask.push_back(static_cast<std::uint8_t>(m));
    }
  }
  return make_scene(cfg, std::move(anchors));
}

inline AnchorScene load_scene(const std::filesystem::path& path, const PropertyNames& names = {}) {
  return parse_scene(ply::read_file(path), names, path.string());
}

/// Serializes with the default property names; float32 attributes, uint8 masks.
inline std::vector<std::uint8_t> serialize_scene(const AnchorScene& s) {
  const auto& c = s.config;
  std::ostringstream h;
  h << "ply\nformat binary_little_endian 1.0\ncomment ctxgs anchor scene\n";
  h << "element vertex " << s.anchors.size() << "\n";
  h << "property float x\nproperty float y\nproperty float z\n";
  for (std::uint32_t i = 0; i < c.feature_dim; ++i) h << "property float f_anchor_feat_" << i << "\n";
  for (std::uint32_t i = 0; i < c.scaling_dim; ++i) h << "property float scale_" << i << "\n";
  for (std::uint32_t i = 0; i < c.offset_values(); ++i) h << "property float f_offset_" << i << "\n";
  if (c.has_masks)
    for (std::uint32_t i = 0; i < c.offset_count; ++i) h << "property uchar mask_" << i << "\n";
  h << "end_header\n";
  const std::string head = h.str();

  std::vector<std::uint8_t> out(head.begin(), head.end());
  const std::size_t stride = 4 * (3 + c.channels()) + (c.has_masks ? c.offset_count : 0);
  out.reserve(out.size() + stride * s.anchors.size());
  auto put = [&](float v) {
    std::uint8_t b[4];
    std::memcpy(b, &v, 4);
    out.insert(out.end(), b, b + 4);
  };
  for (const auto& a : s.anchors) {
    for (float v : a.position) put(v);
    for (float v : a.feature) put(v);
    for (float v : a.scaling) put(v);
    for (float v : a.offsets) put(v);
    out.insert(out.end(), a.mask.begin(), a.mask.end());
  }
  return out;
}

inline void save_scene(const AnchorScene& s, const std::filesystem::path& path) {
  ply::write_file(path, serialize_scene(s));
}

}  // namespace ctxgs
