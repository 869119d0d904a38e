#include "hcnet/fmap.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

namespace hcnet {

namespace {

void put_u16(std::string& s, uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& s, uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& s, uint64_t v) {
  for (int i = 0; i < 8; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint64_t get_le(const std::string& s, size_t off, size_t nbytes) {
  uint64_t v = 0;
  for (size_t i = 0; i < nbytes; ++i)
    v |= static_cast<uint64_t>(static_cast<unsigned char>(s[off + i])) << (8 * i);
  return v;
}

[[noreturn]] void fail(const std::string& what, size_t offset) {
  throw FormatError("FMAP: " + what + " at byte offset " +
                    std::to_string(offset));
}

void need(const std::string& s, size_t off, size_t nbytes, const char* what) {
  if (off + nbytes > s.size()) fail(std::string("truncated ") + what, s.size());
}

}  // namespace

std::string fmap_bytes(const Tensor& t) {
  std::string s;
  s.reserve(16 + t.numel() * dtype_size(t.dtype()));
  s += "FMAP";
  s.push_back(1);  // version
  s.push_back(static_cast<char>(t.dtype()));
  put_u16(s, static_cast<uint16_t>(t.ndim()));
  for (size_t d : t.shape()) {
    if (d > 0xffffffffULL) throw FormatError("FMAP: dim exceeds u32");
    put_u32(s, static_cast<uint32_t>(d));
  }
  for (size_t i = 0; i < t.numel(); ++i) {
    const double v = t[i];
    switch (t.dtype()) {
      case DType::f32: {
        const float f = static_cast<float>(v);
        uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_u32(s, bits);
        break;
      }
      case DType::f64: {
        uint64_t bits;
        std::memcpy(&bits, &v, 8);
        put_u64(s, bits);
        break;
      }
      case DType::u16:
        put_u16(s, static_cast<uint16_t>(v));
        break;
      case DType::u32:
        put_u32(s, static_cast<uint32_t>(v));
        break;
    }
  }
  return s;
}

Tensor fmap_parse(const std::string& s) {
  need(s, 0, 4, "magic");
  if (s.compare(0, 4, "FMAP") != 0) fail("bad magic", 0);
  need(s, 4, 2, "header");
  const uint8_t version = static_cast<uint8_t>(s[4]);
  if (version != 1) fail("unknown version " + std::to_string(version), 4);
  const uint8_t dt = static_cast<uint8_t>(s[5]);
  if (dt > 3) fail("unknown dtype " + std::to_string(dt), 5);
  const DType dtype = static_cast<DType>(dt);
  need(s, 6, 2, "ndim");
  const size_t ndim = get_le(s, 6, 2);
  if (ndim == 0) fail("ndim must be >= 1", 6);
  std::vector<size_t> shape(ndim);
  size_t off = 8;
  for (size_t i = 0; i < ndim; ++i) {
    need(s, off, 4, "dims");
    shape[i] = get_le(s, off, 4);
    if (shape[i] == 0) fail("zero dim", off);
    off += 4;
  }
  size_t numel = 1;
  for (size_t d : shape) numel *= d;
  const size_t esz = dtype_size(dtype);
  need(s, off, numel * esz, "payload");
  if (s.size() != off + numel * esz)
    fail("trailing bytes after payload", off + numel * esz);

  Tensor t(shape, dtype);
  for (size_t i = 0; i < numel; ++i) {
    const uint64_t bits = get_le(s, off + i * esz, esz);
    switch (dtype) {
      case DType::f32: {
        const uint32_t b32 = static_cast<uint32_t>(bits);
        float f;
        std::memcpy(&f, &b32, 4);
        t[i] = static_cast<double>(f);
        break;
      }
      case DType::f64: {
        double v;
        std::memcpy(&v, &bits, 8);
        t[i] = v;
        break;
      }
      case DType::u16:
      case DType::u32:
        t[i] = static_cast<double>(bits);
        break;
    }
  }
  return t;
}

void write_fmap(const Tensor& t, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("FMAP: cannot open for writing: " + path);
  const std::string bytes = fmap_bytes(t);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw FormatError("FMAP: write failed: " + path);
}

Tensor read_fmap(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("FMAP: cannot open for reading: " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)),
                    std::istreambuf_iterator<char>());
  return fmap_parse(bytes);
}

void ParamBundle::save(const std::string& dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json manifest;
  nlohmann::json jp = nlohmann::json::object();
  for (const auto& [name, tensor] : params) {
    const std::string rel = name + ".fmap";
    write_fmap(tensor, (fs::path(dir) / rel).string());
    jp[name] = rel;
  }
  manifest["params"] = jp;
  manifest["scalars"] = scalars;
  manifest["meta"] = meta;
  std::ofstream f(fs::path(dir) / "manifest.json");
  if (!f) throw FormatError("ParamBundle: cannot write manifest in " + dir);
  f << manifest.dump(2) << "\n";
}

ParamBundle ParamBundle::load(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream f(fs::path(dir) / "manifest.json");
  if (!f) throw FormatError("ParamBundle: missing manifest.json in " + dir);
  nlohmann::json manifest;
  try {
    f >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("ParamBundle: bad manifest.json: ") +
                      e.what());
  }
  ParamBundle b;
  const nlohmann::json jp = manifest.value("params", nlohmann::json::object());
  for (const auto& [name, rel] : jp.items()) {
    b.params[name] = read_fmap((fs::path(dir) / rel.get<std::string>()).string());
  }
  const nlohmann::json js = manifest.value("scalars", nlohmann::json::object());
  for (const auto& [name, v] : js.items()) {
    b.scalars[name] = v.get<double>();
  }
  b.meta = manifest.value("meta", nlohmann::json::object());
  return b;
}

const Tensor& ParamBundle::param(const std::string& name) const {
  auto it = params.find(name);
  if (it == params.end())
    throw FormatError("ParamBundle: missing param \"" + name + "\"");
  return it->second;
}

double ParamBundle::scalar(const std::string& name) const {
  auto it = scalars.find(name);
  if (it == scalars.end())
    throw FormatError("ParamBundle: missing scalar \"" + name + "\"");
  return it->second;
}

}  // namespace hcnet
