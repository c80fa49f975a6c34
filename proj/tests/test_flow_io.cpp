#include <doctest.h>

#include <cstring>
#include <fstream>
#include <random>

#include "core/flow_io.hpp"
#include "test_support.hpp"

using namespace stam;
using test_support::TempDir;

namespace {

std::vector<unsigned char> file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

void write_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

void push_float(std::vector<unsigned char>& bytes, float value) {
  unsigned char buf[4];
  std::memcpy(buf, &value, 4);
  bytes.insert(bytes.end(), buf, buf + 4);
}

void push_i32(std::vector<unsigned char>& bytes, std::int32_t value) {
  unsigned char buf[4];
  std::memcpy(buf, &value, 4);
  bytes.insert(bytes.end(), buf, buf + 4);
}

}  // namespace

TEST_SUITE("flow_io") {

TEST_CASE("read_flo decodes a fixed 2x1 file") {
  TempDir tmp("flo_decode");
  std::vector<unsigned char> bytes;
  push_float(bytes, 202021.25f);
  push_i32(bytes, 2);
  push_i32(bytes, 1);
  push_float(bytes, 1.0f);   // u(0,0)
  push_float(bytes, 0.0f);   // v(0,0)
  push_float(bytes, 0.0f);   // u(1,0)
  push_float(bytes, -1.0f);  // v(1,0)
  write_bytes(tmp / "a.flo", bytes);

  const FlowField f = read_flo(tmp / "a.flo");
  CHECK(f.width == 2);
  CHECK(f.height == 1);
  CHECK(f.u == std::vector<float>{1.0f, 0.0f});
  CHECK(f.v == std::vector<float>{0.0f, -1.0f});
}

TEST_CASE("read_flo rejects a bad magic") {
  TempDir tmp("flo_magic");
  std::vector<unsigned char> bytes;
  push_float(bytes, 0.0f);
  push_i32(bytes, 1);
  push_i32(bytes, 1);
  push_float(bytes, 0.0f);
  push_float(bytes, 0.0f);
  write_bytes(tmp / "bad.flo", bytes);
  CHECK_THROWS_WITH_AS(read_flo(tmp / "bad.flo"), doctest::Contains("magic"), Error);
  try {
    read_flo(tmp / "bad.flo");
  } catch (const Error& e) {
    CHECK(e.code() == Err::bad_magic);
  }
}

TEST_CASE("read_flo rejects truncated payloads") {
  TempDir tmp("flo_trunc");
  std::vector<unsigned char> bytes;
  push_float(bytes, 202021.25f);
  push_i32(bytes, 2);
  push_i32(bytes, 2);
  push_float(bytes, 0.0f);  // payload should be 32 bytes, give 4
  write_bytes(tmp / "short.flo", bytes);
  try {
    read_flo(tmp / "short.flo");
    FAIL("expected Truncated");
  } catch (const Error& e) {
    CHECK(e.code() == Err::truncated);
  }
}

TEST_CASE("read_flo rejects non-finite values") {
  TempDir tmp("flo_nan");
  std::vector<unsigned char> bytes;
  push_float(bytes, 202021.25f);
  push_i32(bytes, 1);
  push_i32(bytes, 1);
  push_float(bytes, std::numeric_limits<float>::quiet_NaN());
  push_float(bytes, 0.0f);
  write_bytes(tmp / "nan.flo", bytes);
  try {
    read_flo(tmp / "nan.flo");
    FAIL("expected NonFinite");
  } catch (const Error& e) {
    CHECK(e.code() == Err::non_finite);
  }
}

TEST_CASE("write_flo emits a 20-byte file for a 1x1 field") {
  TempDir tmp("flo_size");
  FlowField f = test_support::constant_flow(1, 1, 0.0f, 0.0f);
  write_flo(f, tmp / "one.flo");
  CHECK(file_bytes(tmp / "one.flo").size() == 20);
}

TEST_CASE("flo round-trips byte-exactly") {
  TempDir tmp("flo_roundtrip");
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<float> dist(-30.0f, 30.0f);
  FlowField f;
  f.width = 13;
  f.height = 9;
  for (int i = 0; i < 13 * 9; ++i) {
    f.u.push_back(dist(rng));
    f.v.push_back(dist(rng));
  }
  write_flo(f, tmp / "r.flo");
  const auto original = file_bytes(tmp / "r.flo");

  const FlowField g = read_flo(tmp / "r.flo");
  CHECK(g.u == f.u);
  CHECK(g.v == f.v);
  write_flo(g, tmp / "r2.flo");
  CHECK(file_bytes(tmp / "r2.flo") == original);
}

TEST_CASE("write_flo fails on an unwritable path") {
  const FlowField f = test_support::constant_flow(1, 1, 0.0f, 0.0f);
  try {
    write_flo(f, "/nonexistent_dir_zzz/out.flo");
    FAIL("expected IoFailure");
  } catch (const Error& e) {
    CHECK(e.code() == Err::io_failure);
  }
}

TEST_CASE("read_pgm decodes a 2x2 frame") {
  TempDir tmp("pgm_decode");
  std::vector<unsigned char> bytes{'P', '5', '\n', '2', ' ', '2', '\n',
                                   '2', '5', '5', '\n', 0, 255, 128, 64};
  write_bytes(tmp / "a.pgm", bytes);
  const Frame f = read_pgm(tmp / "a.pgm");
  CHECK(f.width == 2);
  CHECK(f.height == 2);
  CHECK(f.intensity == std::vector<std::uint8_t>{0, 255, 128, 64});
}

TEST_CASE("read_pgm accepts header comments") {
  TempDir tmp("pgm_comment");
  const std::string header = "P5\n# a comment\n2 1\n255\n";
  std::vector<unsigned char> bytes(header.begin(), header.end());
  bytes.push_back(7);
  bytes.push_back(9);
  write_bytes(tmp / "c.pgm", bytes);
  const Frame f = read_pgm(tmp / "c.pgm");
  CHECK(f.intensity == std::vector<std::uint8_t>{7, 9});
}

TEST_CASE("read_pgm rejects the ASCII P2 variant") {
  TempDir tmp("pgm_p2");
  const std::string text = "P2\n2 2\n255\n0 1 2 3\n";
  write_bytes(tmp / "a.pgm", std::vector<unsigned char>(text.begin(), text.end()));
  try {
    read_pgm(tmp / "a.pgm");
    FAIL("expected BadHeader");
  } catch (const Error& e) {
    CHECK(e.code() == Err::bad_header);
  }
}

TEST_CASE("read_pgm rejects short payloads") {
  TempDir tmp("pgm_short");
  std::vector<unsigned char> bytes{'P', '5', '\n', '2', ' ', '2', '\n', '2', '5', '5', '\n', 1};
  write_bytes(tmp / "s.pgm", bytes);
  try {
    read_pgm(tmp / "s.pgm");
    FAIL("expected Truncated");
  } catch (const Error& e) {
    CHECK(e.code() == Err::truncated);
  }
}

TEST_CASE("pgm round-trips") {
  TempDir tmp("pgm_roundtrip");
  Frame f;
  f.width = 5;
  f.height = 3;
  for (int i = 0; i < 15; ++i) f.intensity.push_back(static_cast<std::uint8_t>(i * 17));
  write_pgm(f, tmp / "r.pgm");
  const Frame g = read_pgm(tmp / "r.pgm");
  CHECK(g.width == f.width);
  CHECK(g.height == f.height);
  CHECK(g.intensity == f.intensity);
}

TEST_CASE("estimate_flow returns zero for identical frames") {
  Frame a;
  a.width = 16;
  a.height = 12;
  for (int i = 0; i < 16 * 12; ++i) a.intensity.push_back(static_cast<std::uint8_t>(i % 251));
  FlowEstimatorConfig cfg;
  cfg.iterations = 40;
  const FlowField f = estimate_flow(a, a, cfg);
  for (float u : f.u) CHECK(u == 0.0f);
  for (float v : f.v) CHECK(v == 0.0f);
}

TEST_CASE("estimate_flow recovers a rightward unit shift") {
  // Horizontal sinusoid, constant along y, shifted right by one pixel.
  const int w = 64;
  const int h = 32;
  auto sample = [&](int x) {
    return static_cast<std::uint8_t>(
        128.0 + 90.0 * std::sin(2.0 * 3.14159265358979 * x / 16.0));
  };
  Frame prev, next;
  prev.width = next.width = w;
  prev.height = next.height = h;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      prev.intensity.push_back(sample(x));
      next.intensity.push_back(sample(x - 1));
    }

  const FlowField f = estimate_flow(prev, next, {});
  double mean_u = 0.0;
  double mean_v = 0.0;
  int count = 0;
  for (int y = 4; y < h - 4; ++y)
    for (int x = 4; x < w - 4; ++x) {
      mean_u += f.u_at(x, y);
      mean_v += f.v_at(x, y);
      ++count;
    }
  mean_u /= count;
  mean_v /= count;
  CHECK(mean_u > 0.5);
  CHECK(std::abs(mean_v) < 0.1);
}

TEST_CASE("estimate_flow rejects mismatched dimensions") {
  Frame a, b;
  a.width = 4;
  a.height = 4;
  a.intensity.assign(16, 0);
  b.width = 5;
  b.height = 4;
  b.intensity.assign(20, 0);
  try {
    estimate_flow(a, b, {});
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Err::dimension_mismatch);
  }
}

TEST_CASE("estimate_flow is deterministic across thread counts") {
  std::mt19937_64 rng(11);
  Frame a, b;
  a.width = b.width = 32;
  a.height = b.height = 24;
  std::uniform_int_distribution<int> dist(0, 255);
  for (int i = 0; i < 32 * 24; ++i) {
    a.intensity.push_back(static_cast<std::uint8_t>(dist(rng)));
    b.intensity.push_back(static_cast<std::uint8_t>(dist(rng)));
  }
  FlowEstimatorConfig one;
  one.iterations = 25;
  one.threads = 1;
  FlowEstimatorConfig many = one;
  many.threads = 8;
  const FlowField f1 = estimate_flow(a, b, one);
  const FlowField f8 = estimate_flow(a, b, many);
  CHECK(f1.u == f8.u);
  CHECK(f1.v == f8.v);
}

TEST_CASE("estimate_flow output respects the clamp bound") {
  Frame a, b;
  a.width = b.width = 24;
  a.height = b.height = 24;
  // High-contrast checkerboards drive large apparent motion.
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 24; ++x) {
      a.intensity.push_back(((x / 4 + y / 4) % 2) ? 255 : 0);
      b.intensity.push_back(((x / 4 + y / 4 + 1) % 2) ? 255 : 0);
    }
  FlowEstimatorConfig cfg;
  cfg.clamp = 0.25;
  const FlowField f = estimate_flow(a, b, cfg);
  for (float u : f.u) CHECK(std::abs(u) <= 0.25f);
  for (float v : f.v) CHECK(std::abs(v) <= 0.25f);
}

TEST_CASE("clamp_flow bounds both components") {
  FlowField f = test_support::constant_flow(3, 3, 100.0f, -77.0f);
  clamp_flow(f, 32.0f);
  for (float u : f.u) CHECK(u == 32.0f);
  for (float v : f.v) CHECK(v == -32.0f);
}

}  // TEST_SUITE
