#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace hcnet {

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValueError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class DType : uint8_t { f32 = 0, f64 = 1, u16 = 2, u32 = 3 };

size_t dtype_size(DType d);
const char* dtype_name(DType d);

// Dense row-major tensor. Values live as double in memory; dtype governs
// on-disk width and construction-time quantization (f32 values are rounded
// through float so file round-trips are bit-exact).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<size_t> shape, DType dtype = DType::f64);

  static Tensor zeros(std::vector<size_t> shape, DType dtype = DType::f64);
  static Tensor full(std::vector<size_t> shape, double value,
                     DType dtype = DType::f64);
  static Tensor from(std::vector<size_t> shape, std::vector<double> values,
                     DType dtype = DType::f64);
  static Tensor identity(size_t n);

  const std::vector<size_t>& shape() const { return shape_; }
  size_t ndim() const { return shape_.size(); }
  size_t numel() const { return data_.size(); }
  size_t dim(size_t i) const { return shape_.at(i); }
  DType dtype() const { return dtype_; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](size_t i) { return data_[i]; }
  double operator[](size_t i) const { return data_[i]; }

  double& at(size_t i, size_t j);
  double at(size_t i, size_t j) const;
  double& at(size_t i, size_t j, size_t k);
  double at(size_t i, size_t j, size_t k) const;
  double& at(size_t i, size_t j, size_t k, size_t l);
  double at(size_t i, size_t j, size_t k, size_t l) const;

  // Quantizes every element to the tensor's dtype (f32 rounds through
  // float, integer dtypes truncate toward zero and clamp to range).
  void quantize();

  Tensor reshaped(std::vector<size_t> shape) const;
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

  std::string shape_str() const;

 private:
  std::vector<size_t> shape_;
  std::vector<double> data_;
  DType dtype_ = DType::f64;
};

// Elementwise helpers used across modules. Shapes must match exactly.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
double dot_all(const Tensor& a, const Tensor& b);  // sum of elementwise product
double sum_all(const Tensor& a);
double max_abs_diff(const Tensor& a, const Tensor& b);

// splitmix64; same seed gives the same stream on every platform.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64();
  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  double normal();                       // standard normal (Box-Muller)
  uint64_t uniform_int(uint64_t n);      // [0, n)

  Tensor tensor_uniform(std::vector<size_t> shape, double lo, double hi);
  Tensor tensor_normal(std::vector<size_t> shape, double stddev = 1.0);

 private:
  uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Thread-local multiply-accumulate counter. matmul and the attention
// kernels report their MAC counts here when enabled; divisions and
// exponentials are not counted (cost-model convention).
namespace macs {
void enable();
void disable();
void reset();
bool enabled();
uint64_t count();
void add(uint64_t n);
}  // namespace macs

}  // namespace hcnet
