#include "core/flow_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "core/parallel.hpp"

namespace stam {

namespace {

// All on-disk multi-byte values are little-endian. The helpers below keep
// the readers/writers correct on any host byte order.

std::uint32_t le32_decode(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void le32_encode(std::uint32_t value, unsigned char* p) {
  p[0] = static_cast<unsigned char>(value & 0xff);
  p[1] = static_cast<unsigned char>((value >> 8) & 0xff);
  p[2] = static_cast<unsigned char>((value >> 16) & 0xff);
  p[3] = static_cast<unsigned char>((value >> 24) & 0xff);
}

float le_float(const unsigned char* p) {
  std::uint32_t bits = le32_decode(p);
  float out;
  std::memcpy(&out, &bits, sizeof(out));
  return out;
}

void put_le_float(float value, unsigned char* p) {
  std::uint32_t bits;
  std::memcpy(&bits, &value, sizeof(bits));
  le32_encode(bits, p);
}

std::vector<unsigned char> read_all_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Err::io_failure, "cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<unsigned char> bytes(static_cast<std::size_t>(size));
  if (size > 0) in.read(reinterpret_cast<char*>(bytes.data()), size);
  if (!in) fail(Err::io_failure, "cannot read " + path.string());
  return bytes;
}

void write_all_bytes(const std::filesystem::path& path,
                     const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Err::io_failure, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) fail(Err::io_failure, "cannot write " + path.string());
}

}  // namespace

void clamp_flow(FlowField& field, float limit) {
  for (float& x : field.u) x = std::clamp(x, -limit, limit);
  for (float& x : field.v) x = std::clamp(x, -limit, limit);
}

FlowField read_flo(const std::filesystem::path& path) {
  const auto bytes = read_all_bytes(path);
  if (bytes.size() < 12) fail(Err::truncated, path.string() + ": shorter than the 12-byte header");
  if (le_float(bytes.data()) != kFloMagic)
    fail(Err::bad_magic, path.string() + ": bad magic, not a .flo file");
  const auto width = static_cast<std::int32_t>(le32_decode(bytes.data() + 4));
  const auto height = static_cast<std::int32_t>(le32_decode(bytes.data() + 8));
  if (width < 1 || height < 1)
    fail(Err::bad_header, path.string() + ": invalid dimensions in header");
  const std::size_t pixels = static_cast<std::size_t>(width) * height;
  if (bytes.size() != 12 + 8 * pixels)
    fail(Err::truncated, path.string() + ": payload size does not match header dimensions");

  FlowField field;
  field.width = width;
  field.height = height;
  field.u.resize(pixels);
  field.v.resize(pixels);
  const unsigned char* p = bytes.data() + 12;
  for (std::size_t i = 0; i < pixels; ++i) {
    field.u[i] = le_float(p);
    field.v[i] = le_float(p + 4);
    p += 8;
    if (!std::isfinite(field.u[i]) || !std::isfinite(field.v[i]))
      fail(Err::non_finite, path.string() + ": NaN/Inf flow value");
  }
  return field;
}

void write_flo(const FlowField& field, const std::filesystem::path& path) {
  const std::size_t pixels = field.pixel_count();
  std::vector<unsigned char> bytes(12 + 8 * pixels);
  put_le_float(kFloMagic, bytes.data());
  le32_encode(static_cast<std::uint32_t>(field.width), bytes.data() + 4);
  le32_encode(static_cast<std::uint32_t>(field.height), bytes.data() + 8);
  unsigned char* p = bytes.data() + 12;
  for (std::size_t i = 0; i < pixels; ++i) {
    put_le_float(field.u[i], p);
    put_le_float(field.v[i], p + 4);
    p += 8;
  }
  write_all_bytes(path, bytes);
}

namespace {

// PGM header token reader: skips whitespace and '#' comment lines.
std::string next_pgm_token(const std::vector<unsigned char>& bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    const char c = static_cast<char>(bytes[pos]);
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      ++pos;
    } else {
      break;
    }
  }
  std::string token;
  while (pos < bytes.size()) {
    const char c = static_cast<char>(bytes[pos]);
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '#') break;
    token.push_back(c);
    ++pos;
  }
  return token;
}

int parse_pgm_int(const std::string& token, const std::filesystem::path& path) {
  if (token.empty()) fail(Err::bad_header, path.string() + ": truncated PGM header");
  for (char c : token)
    if (c < '0' || c > '9') fail(Err::bad_header, path.string() + ": malformed PGM header");
  long value = 0;
  for (char c : token) {
    value = value * 10 + (c - '0');
    if (value > 1 << 30) fail(Err::bad_header, path.string() + ": PGM header value out of range");
  }
  return static_cast<int>(value);
}

}  // namespace

Frame read_pgm(const std::filesystem::path& path) {
  const auto bytes = read_all_bytes(path);
  std::size_t pos = 0;
  if (next_pgm_token(bytes, pos) != "P5")
    fail(Err::bad_header, path.string() + ": not a binary (P5) PGM");
  const int width = parse_pgm_int(next_pgm_token(bytes, pos), path);
  const int height = parse_pgm_int(next_pgm_token(bytes, pos), path);
  const int maxval = parse_pgm_int(next_pgm_token(bytes, pos), path);
  if (width < 1 || height < 1)
    fail(Err::bad_header, path.string() + ": invalid PGM dimensions");
  if (maxval != 255)
    fail(Err::bad_header, path.string() + ": only maxval 255 PGM is supported");
  if (pos >= bytes.size())
    fail(Err::truncated, path.string() + ": missing PGM payload");
  ++pos;  // single whitespace byte after maxval
  const std::size_t pixels = static_cast<std::size_t>(width) * height;
  if (bytes.size() - pos < pixels)
    fail(Err::truncated, path.string() + ": PGM payload shorter than width*height");

  Frame frame;
  frame.width = width;
  frame.height = height;
  frame.intensity.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                         bytes.begin() + static_cast<std::ptrdiff_t>(pos + pixels));
  return frame;
}

void write_pgm(const Frame& frame, const std::filesystem::path& path) {
  std::string header = "P5\n" + std::to_string(frame.width) + " " +
                       std::to_string(frame.height) + "\n255\n";
  std::vector<unsigned char> bytes(header.begin(), header.end());
  bytes.insert(bytes.end(), frame.intensity.begin(), frame.intensity.end());
  write_all_bytes(path, bytes);
}

namespace {

inline double at_clamped(const std::vector<double>& img, int w, int h, int x, int y) {
  x = std::clamp(x, 0, w - 1);
  y = std::clamp(y, 0, h - 1);
  return img[static_cast<std::size_t>(y) * w + x];
}

}  // namespace

FlowField estimate_flow(const Frame& prev, const Frame& next, const FlowEstimatorConfig& cfg) {
  if (prev.width != next.width || prev.height != next.height)
    fail(Err::dimension_mismatch, "estimate_flow: frame dimensions differ");
  const int w = prev.width;
  const int h = prev.height;
  const std::size_t n = prev.pixel_count();

  std::vector<double> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = prev.intensity[i];
  for (std::size_t i = 0; i < n; ++i) b[i] = next.intensity[i];

  // Horn-Schunck derivative estimates averaged over the 2x2x2 cube.
  std::vector<double> ix(n), iy(n), it(n);
  parallel_for(static_cast<std::size_t>(h), cfg.threads, [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < w; ++x) {
      const double dx = 0.25 * (at_clamped(a, w, h, x + 1, y) - at_clamped(a, w, h, x, y) +
                                at_clamped(a, w, h, x + 1, y + 1) - at_clamped(a, w, h, x, y + 1) +
                                at_clamped(b, w, h, x + 1, y) - at_clamped(b, w, h, x, y) +
                                at_clamped(b, w, h, x + 1, y + 1) - at_clamped(b, w, h, x, y + 1));
      const double dy = 0.25 * (at_clamped(a, w, h, x, y + 1) - at_clamped(a, w, h, x, y) +
                                at_clamped(a, w, h, x + 1, y + 1) - at_clamped(a, w, h, x + 1, y) +
                                at_clamped(b, w, h, x, y + 1) - at_clamped(b, w, h, x, y) +
                                at_clamped(b, w, h, x + 1, y + 1) - at_clamped(b, w, h, x + 1, y));
      const double dt = 0.25 * (at_clamped(b, w, h, x, y) - at_clamped(a, w, h, x, y) +
                                at_clamped(b, w, h, x + 1, y) - at_clamped(a, w, h, x + 1, y) +
                                at_clamped(b, w, h, x, y + 1) - at_clamped(a, w, h, x, y + 1) +
                                at_clamped(b, w, h, x + 1, y + 1) - at_clamped(a, w, h, x + 1, y + 1));
      const std::size_t i = row * w + x;
      ix[i] = dx;
      iy[i] = dy;
      it[i] = dt;
    }
  });

  std::vector<double> u(n, 0.0), v(n, 0.0), un(n), vn(n);
  const double alpha2 = cfg.alpha * cfg.alpha;

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    // Jacobi sweep: reads only the previous buffers, so the result does not
    // depend on how rows are distributed over threads.
    parallel_for(static_cast<std::size_t>(h), cfg.threads, [&](std::size_t row) {
      const int y = static_cast<int>(row);
      for (int x = 0; x < w; ++x) {
        const std::size_t i = row * w + x;
        const double ubar =
            (at_clamped(u, w, h, x - 1, y) + at_clamped(u, w, h, x + 1, y) +
             at_clamped(u, w, h, x, y - 1) + at_clamped(u, w, h, x, y + 1)) / 6.0 +
            (at_clamped(u, w, h, x - 1, y - 1) + at_clamped(u, w, h, x + 1, y - 1) +
             at_clamped(u, w, h, x - 1, y + 1) + at_clamped(u, w, h, x + 1, y + 1)) / 12.0;
        const double vbar =
            (at_clamped(v, w, h, x - 1, y) + at_clamped(v, w, h, x + 1, y) +
             at_clamped(v, w, h, x, y - 1) + at_clamped(v, w, h, x, y + 1)) / 6.0 +
            (at_clamped(v, w, h, x - 1, y - 1) + at_clamped(v, w, h, x + 1, y - 1) +
             at_clamped(v, w, h, x - 1, y + 1) + at_clamped(v, w, h, x + 1, y + 1)) / 12.0;
        const double t = (ix[i] * ubar + iy[i] * vbar + it[i]) / (alpha2 + ix[i] * ix[i] + iy[i] * iy[i]);
        un[i] = ubar - ix[i] * t;
        vn[i] = vbar - iy[i] * t;
      }
    });
    u.swap(un);
    v.swap(vn);
  }

  FlowField field;
  field.width = w;
  field.height = h;
  field.u.resize(n);
  field.v.resize(n);
  const float limit = static_cast<float>(cfg.clamp);
  for (std::size_t i = 0; i < n; ++i) {
    field.u[i] = std::clamp(static_cast<float>(u[i]), -limit, limit);
    field.v[i] = std::clamp(static_cast<float>(v[i]), -limit, limit);
  }
  return field;
}

}  // namespace stam
