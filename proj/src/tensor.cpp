#include "hcnet/tensor.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

namespace hcnet {

size_t dtype_size(DType d) {
  switch (d) {
    case DType::f32:
      return 4;
    case DType::f64:
      return 8;
    case DType::u16:
      return 2;
    case DType::u32:
      return 4;
  }
  throw ValueError("unknown dtype");
}

const char* dtype_name(DType d) {
  switch (d) {
    case DType::f32:
      return "float32";
    case DType::f64:
      return "float64";
    case DType::u16:
      return "uint16";
    case DType::u32:
      return "uint32";
  }
  return "?";
}

static size_t checked_numel(const std::vector<size_t>& shape) {
  if (shape.empty()) throw ShapeError("tensor shape must have >= 1 dim");
  size_t n = 1;
  for (size_t d : shape) {
    if (d == 0) throw ShapeError("tensor dims must be > 0");
    n *= d;
  }
  return n;
}

Tensor::Tensor(std::vector<size_t> shape, DType dtype)
    : shape_(std::move(shape)), dtype_(dtype) {
  data_.assign(checked_numel(shape_), 0.0);
}

Tensor Tensor::zeros(std::vector<size_t> shape, DType dtype) {
  return Tensor(std::move(shape), dtype);
}

Tensor Tensor::full(std::vector<size_t> shape, double value, DType dtype) {
  Tensor t(std::move(shape), dtype);
  for (size_t i = 0; i < t.numel(); ++i) t.data_[i] = value;
  t.quantize();
  return t;
}

Tensor Tensor::from(std::vector<size_t> shape, std::vector<double> values,
                    DType dtype) {
  Tensor t(std::move(shape), dtype);
  if (values.size() != t.numel())
    throw ShapeError("value count does not match shape");
  t.data_ = std::move(values);
  t.quantize();
  return t;
}

Tensor Tensor::identity(size_t n) {
  Tensor t({n, n});
  for (size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

double& Tensor::at(size_t i, size_t j) {
  return data_[i * shape_[1] + j];
}
double Tensor::at(size_t i, size_t j) const {
  return data_[i * shape_[1] + j];
}
double& Tensor::at(size_t i, size_t j, size_t k) {
  return data_[(i * shape_[1] + j) * shape_[2] + k];
}
double Tensor::at(size_t i, size_t j, size_t k) const {
  return data_[(i * shape_[1] + j) * shape_[2] + k];
}
double& Tensor::at(size_t i, size_t j, size_t k, size_t l) {
  return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
}
double Tensor::at(size_t i, size_t j, size_t k, size_t l) const {
  return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
}

void Tensor::quantize() {
  switch (dtype_) {
    case DType::f64:
      return;
    case DType::f32:
      for (double& v : data_) v = static_cast<double>(static_cast<float>(v));
      return;
    case DType::u16:
      for (double& v : data_) {
        double t = std::trunc(v);
        if (t < 0) t = 0;
        if (t > 65535.0) t = 65535.0;
        v = t;
      }
      return;
    case DType::u32:
      for (double& v : data_) {
        double t = std::trunc(v);
        if (t < 0) t = 0;
        if (t > 4294967295.0) t = 4294967295.0;
        v = t;
      }
      return;
  }
}

Tensor Tensor::reshaped(std::vector<size_t> shape) const {
  if (checked_numel(shape) != numel())
    throw ShapeError("reshape changes element count");
  Tensor t = *this;
  t.shape_ = std::move(shape);
  return t;
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape_.size(); ++i)
    os << (i ? "x" : "") << shape_[i];
  os << "]";
  return os.str();
}

static void check_same_shape(const Tensor& a, const Tensor& b,
                             const char* what) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(what) + ": shape mismatch " + a.shape_str() +
                     " vs " + b.shape_str());
}

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  Tensor c = a;
  for (size_t i = 0; i < c.numel(); ++i) c[i] += b[i];
  return c;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  Tensor c = a;
  for (size_t i = 0; i < c.numel(); ++i) c[i] -= b[i];
  return c;
}

Tensor scale(const Tensor& a, double s) {
  Tensor c = a;
  for (size_t i = 0; i < c.numel(); ++i) c[i] *= s;
  return c;
}

double dot_all(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "dot_all");
  double s = 0.0;
  for (size_t i = 0; i < a.numel(); ++i) s += a[i] * b[i];
  return s;
}

double sum_all(const Tensor& a) {
  double s = 0.0;
  for (size_t i = 0; i < a.numel(); ++i) s += a[i];
  return s;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (size_t i = 0; i < a.numel(); ++i)
    m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

uint64_t Rng::next_u64() {
  state_ += 0x9e3779b97f4a7c15ULL;
  uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  double u2 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * 3.14159265358979323846 * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

uint64_t Rng::uniform_int(uint64_t n) {
  if (n == 0) throw ValueError("uniform_int(0)");
  // rejection sampling keeps the draw unbiased
  uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t v = next_u64();
  while (v >= limit) v = next_u64();
  return v % n;
}

Tensor Rng::tensor_uniform(std::vector<size_t> shape, double lo, double hi) {
  Tensor t(std::move(shape));
  for (size_t i = 0; i < t.numel(); ++i) t[i] = uniform(lo, hi);
  return t;
}

Tensor Rng::tensor_normal(std::vector<size_t> shape, double stddev) {
  Tensor t(std::move(shape));
  for (size_t i = 0; i < t.numel(); ++i) t[i] = stddev * normal();
  return t;
}

namespace macs {
namespace {
thread_local uint64_t g_count = 0;
thread_local bool g_enabled = false;
}  // namespace
void enable() { g_enabled = true; }
void disable() { g_enabled = false; }
void reset() { g_count = 0; }
bool enabled() { return g_enabled; }
uint64_t count() { return g_count; }
void add(uint64_t n) {
  if (g_enabled) g_count += n;
}
}  // namespace macs

}  // namespace hcnet
