#include <filesystem>

#include "doctest.h"
#include "hcnet/fmap.hpp"

using namespace hcnet;

namespace {
std::string tmpdir() {
  auto d = std::filesystem::temp_directory_path() / "hcnet_io_test";
  std::filesystem::create_directories(d);
  return d.string();
}
}  // namespace

TEST_CASE("fmap round-trip all dtypes") {
  const Tensor f32 = Tensor::from({2, 2}, {1, 2, 3, 4}, DType::f32);
  const Tensor f64 = Tensor::from({3}, {0.1, -2.5, 1e300});
  const Tensor u16 = Tensor::from({8, 8}, std::vector<double>(64, 7),
                                  DType::u16);
  const Tensor u32 = Tensor::from({2, 1, 2, 1}, {0, 70000, 5, 4294967295.0},
                                  DType::u32);
  for (const Tensor* t : {&f32, &f64, &u16, &u32}) {
    const std::string bytes = fmap_bytes(*t);
    const Tensor back = fmap_parse(bytes);
    CHECK(back.dtype() == t->dtype());
    CHECK(back.shape() == t->shape());
    CHECK(fmap_bytes(back) == bytes);  // bit-exact
    for (size_t i = 0; i < t->numel(); ++i) CHECK(back[i] == (*t)[i]);
  }
}

TEST_CASE("fmap round-trip property over random shapes/dtypes") {
  Rng rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    const size_t nd = 1 + rng.uniform_int(4);
    std::vector<size_t> shape;
    for (size_t i = 0; i < nd; ++i) shape.push_back(1 + rng.uniform_int(5));
    const DType dt = static_cast<DType>(rng.uniform_int(4));
    Tensor t(shape, dt);
    for (size_t i = 0; i < t.numel(); ++i)
      t[i] = rng.uniform(-100, 100) * ((dt == DType::u16 || dt == DType::u32)
                                           ? 10
                                           : 1);
    t.quantize();
    const std::string bytes = fmap_bytes(t);
    const Tensor back = fmap_parse(bytes);
    CHECK(fmap_bytes(back) == bytes);
  }
}

TEST_CASE("fmap file io") {
  const std::string path = tmpdir() + "/t.fmap";
  const Tensor t = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6}, DType::f32);
  write_fmap(t, path);
  const Tensor back = read_fmap(path);
  CHECK(fmap_bytes(back) == fmap_bytes(t));
}

TEST_CASE("fmap malformed inputs") {
  const Tensor t = Tensor::from({2, 2}, {1, 2, 3, 4}, DType::f32);
  std::string good = fmap_bytes(t);

  CHECK_THROWS_AS(fmap_parse("FNOP" + good.substr(4)), FormatError);
  CHECK_THROWS_AS(fmap_parse(good.substr(0, 10)), FormatError);  // mid-dims
  CHECK_THROWS_AS(fmap_parse(good.substr(0, good.size() - 2)), FormatError);

  std::string bad_dtype = good;
  bad_dtype[5] = 9;
  CHECK_THROWS_AS(fmap_parse(bad_dtype), FormatError);

  std::string bad_version = good;
  bad_version[4] = 2;
  CHECK_THROWS_AS(fmap_parse(bad_version), FormatError);
}

TEST_CASE("param bundle round-trip") {
  const std::string dir = tmpdir() + "/bundle";
  ParamBundle b;
  b.params["piam.w_o"] = Tensor::from({2, 4}, {1, 2, 3, 4, 5, 6, 7, 8});
  b.scalars["piam.alpha"] = 0.25;
  b.meta["note"] = "test";
  b.save(dir);

  const ParamBundle back = ParamBundle::load(dir);
  CHECK(fmap_bytes(back.param("piam.w_o")) == fmap_bytes(b.params["piam.w_o"]));
  CHECK(back.scalar("piam.alpha") == 0.25);
  CHECK_THROWS_AS(back.param("missing"), FormatError);
}
