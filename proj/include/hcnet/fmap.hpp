#pragma once

#include <map>
#include <string>

#include "hcnet/tensor.hpp"
#include "json.hpp"

namespace hcnet {

// FMAP on-disk layout (all little-endian):
//   magic "FMAP" | version u8 = 1 | dtype u8 | ndim u16 | dims ndim x u32 |
//   payload, row-major values of the dtype's width.
void write_fmap(const Tensor& t, const std::string& path);
Tensor read_fmap(const std::string& path);

// In-memory form of the same layout, used by tests and the determinism
// checks; write_fmap is a file dump of these bytes.
std::string fmap_bytes(const Tensor& t);
Tensor fmap_parse(const std::string& bytes);

// Directory of FMAP files plus a manifest.json with keys
// "params" (name -> relative path), "scalars" (name -> number),
// "meta" (free-form).
struct ParamBundle {
  std::map<std::string, Tensor> params;
  std::map<std::string, double> scalars;
  nlohmann::json meta = nlohmann::json::object();

  void save(const std::string& dir) const;
  static ParamBundle load(const std::string& dir);

  const Tensor& param(const std::string& name) const;
  double scalar(const std::string& name) const;
};

}  // namespace hcnet
