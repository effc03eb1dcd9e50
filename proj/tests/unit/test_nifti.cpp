#include <cstring>
#include <random>

#include "doctest.h"
#include "promptsim/nifti.hpp"
#include "test_support.hpp"

using namespace promptsim;

namespace {

template <typename T>
T field(const std::vector<char>& b, std::size_t off) {
  T v;
  std::memcpy(&v, b.data() + off, sizeof(T));
  return v;
}

template <typename T>
void put(std::vector<char>& b, std::size_t off, T v) {
  std::memcpy(b.data() + off, &v, sizeof(T));
}

VoxelGrid random_grid(std::mt19937_64& gen, DType t) {
  std::uniform_int_distribution<int> ext(1, 6);
  const Dims d{ext(gen), ext(gen), ext(gen)};
  std::uniform_real_distribution<float> sp(0.1f, 3.0f);
  // float32 pixdim: pick spacings that are exactly representable
  const Spacing s{static_cast<double>(sp(gen)), static_cast<double>(sp(gen)), static_cast<double>(sp(gen))};
  std::vector<float> v(d.voxel_count());
  for (auto& x : v) {
    switch (t) {
      case DType::UInt8: x = static_cast<float>(std::uniform_int_distribution<int>(0, 255)(gen)); break;
      case DType::Int16: x = static_cast<float>(std::uniform_int_distribution<int>(-32768, 32767)(gen)); break;
      case DType::Float32: x = std::uniform_real_distribution<float>(-1e6f, 1e6f)(gen); break;
    }
  }
  return VoxelGrid(d, s, t, std::move(v));
}

std::string parse_field(const std::vector<char>& bytes) {
  try {
    decode_nifti(bytes);
  } catch (const ParseError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST_SUITE("nifti") {
  TEST_CASE("round trip is bit exact for every dtype") {
    std::mt19937_64 gen(2024);
    for (auto t : {DType::UInt8, DType::Int16, DType::Float32}) {
      for (int n = 0; n < 100; ++n) {
        const auto g = random_grid(gen, t);
        const auto back = decode_nifti(encode_nifti(g));
        REQUIRE(back.dtype() == t);
        CHECK(back.dims() == g.dims());
        CHECK(back.spacing() == g.spacing());
        CHECK(std::memcmp(back.data().data(), g.data().data(), g.size() * sizeof(float)) == 0);
      }
    }
  }

  TEST_CASE("3x4x5 float32 grid through a file") {
    testing::TempDir dir("nifti");
    std::mt19937_64 gen(5);
    std::normal_distribution<float> nd;
    std::vector<float> v(60);
    for (auto& x : v) x = nd(gen);
    VoxelGrid g({3, 4, 5}, {0.5, 0.5, 1.0}, DType::Float32, v);
    write_nifti(g, dir / "g.nii");
    CHECK(read_nifti(dir / "g.nii") == g);
  }

  TEST_CASE("2x2x2 uint8 round trip") {
    VoxelGrid g({2, 2, 2}, {1, 1, 1}, DType::UInt8, {0, 1, 2, 3, 4, 5, 6, 255});
    CHECK(decode_nifti(encode_nifti(g)) == g);
  }

  TEST_CASE("non-isotropic spacing is preserved") {
    VoxelGrid g({2, 1, 1}, {0.25, 0.75, 3.5}, DType::Int16, {-7, 9});
    CHECK(decode_nifti(encode_nifti(g)).spacing() == Spacing{0.25, 0.75, 3.5});
  }

  TEST_CASE("1x1x1 file layout") {
    VoxelGrid g({1, 1, 1}, {1, 1, 1}, DType::Float32, {2.5f});
    const auto b = encode_nifti(g);
    REQUIRE(b.size() == 352 + 4);
    CHECK(field<std::int32_t>(b, 0) == 348);
    CHECK(field<std::int16_t>(b, 40) == 3);
    CHECK(field<std::int16_t>(b, 42) == 1);
    CHECK(field<std::int16_t>(b, 44) == 1);
    CHECK(field<std::int16_t>(b, 46) == 1);
    CHECK(field<std::int16_t>(b, 70) == 16);
    CHECK(field<std::int16_t>(b, 72) == 32);
    CHECK(field<float>(b, 80) == 1.0f);
    CHECK(field<float>(b, 108) == 352.0f);
    CHECK(std::memcmp(b.data() + 344, "n+1\0", 4) == 0);
    for (std::size_t n = 348; n < 352; ++n) CHECK(b[n] == 0);
    CHECK(field<float>(b, 352) == 2.5f);
  }

  TEST_CASE("unsupported datatype names the field") {
    auto b = encode_nifti(VoxelGrid({1, 1, 1}, {1, 1, 1}));
    put<std::int16_t>(b, 70, 64);
    put<std::int16_t>(b, 72, 64);
    CHECK(parse_field(b) == "datatype");
  }

  TEST_CASE("malformed headers name the offending field") {
    const auto good = encode_nifti(VoxelGrid({2, 2, 2}, {1, 1, 1}));
    auto bad = good;
    bad[344] = 'x';
    CHECK(parse_field(bad) == "magic");
    bad = good;
    std::memcpy(bad.data() + 344, "ni1\0", 4);
    CHECK(parse_field(bad) == "magic");
    bad = good;
    bad.resize(bad.size() - 1);
    CHECK(parse_field(bad) == "payload");
    bad = good;
    bad.resize(100);
    CHECK(parse_field(bad) == "sizeof_hdr");
    bad = good;
    put<std::int32_t>(bad, 0, 540);
    CHECK(parse_field(bad) == "sizeof_hdr");
    bad = good;
    put<std::int16_t>(bad, 40, 5);
    CHECK(parse_field(bad) == "dim");
    bad = good;
    put<std::int16_t>(bad, 72, 8);
    CHECK(parse_field(bad) == "bitpix");
    bad = good;
    put<float>(bad, 80, 0.0f);
    CHECK(parse_field(bad) == "pixdim");
    bad = good;
    put<float>(bad, 108, 100.0f);
    CHECK(parse_field(bad) == "vox_offset");
  }

  TEST_CASE("4D with a single volume is accepted") {
    auto b = encode_nifti(VoxelGrid({2, 1, 1}, {1, 1, 1}, DType::UInt8, {3, 4}));
    put<std::int16_t>(b, 40, 4);
    put<std::int16_t>(b, 48, 1);
    CHECK(decode_nifti(b).dims() == Dims{2, 1, 1});
    put<std::int16_t>(b, 48, 2);
    CHECK(parse_field(b) == "dim");
  }

  TEST_CASE("missing file is an io error") {
    CHECK_THROWS_AS(read_nifti("/nonexistent/x.nii"), IoError);
  }

  // Fixtures written by nibabel; values documented in tests/data/nifti/README.md.
  TEST_CASE("reference int16 fixture") {
    std::vector<std::string> warnings;
    const auto g = read_nifti(testing::data_dir() / "nifti/ref_int16.nii", &warnings);
    CHECK(g.dtype() == DType::Int16);
    CHECK(g.dims() == Dims{4, 3, 2});
    CHECK(g.spacing().x == static_cast<double>(0.8f));
    CHECK(g.spacing().y == static_cast<double>(0.9f));
    CHECK(g.spacing().z == 2.5);
    CHECK(warnings.size() == 1);
    for (int k = 0; k < 2; ++k)
      for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 4; ++i) CHECK(g.at(i, j, k) == static_cast<float>(i + 10 * j + 100 * k - 50));
  }

  TEST_CASE("reference scaled uint8 fixture") {
    const auto g = read_nifti(testing::data_dir() / "nifti/ref_uint8_scaled.nii");
    CHECK(g.dims() == Dims{3, 2, 2});
    CHECK(g.dtype() == DType::Float32);
    for (int k = 0; k < 2; ++k)
      for (int j = 0; j < 2; ++j)
        for (int i = 0; i < 3; ++i) CHECK(g.at(i, j, k) == 0.5f * static_cast<float>(i + 10 * j + 100 * k) + 10.0f);
  }

  TEST_CASE("reference float32 fixture") {
    const auto g = read_nifti(testing::data_dir() / "nifti/ref_float32.nii");
    CHECK(g.dims() == Dims{2, 2, 2});
    CHECK(g.spacing() == Spacing{1.25, 1.25, 1.25});
    CHECK(g.at(0, 0, 0) == 1.5f);
    CHECK(g.at(1, 1, 1) == -2.25f);
    CHECK(g.at(1, 0, 1) == 3.0e-3f);
    float sum = 0;
    for (float v : g.data()) sum += v != 0.0f;
    CHECK(sum == 3);
  }
}
