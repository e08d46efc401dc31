#include "mmv/io.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mmv/types.hpp"

namespace mmv {

namespace {

// SHA-1 over a full in-memory message (FIPS 180-1).  Inputs here are small
// (configs and CSV reports), so no streaming interface is needed.
std::array<std::uint32_t, 5> sha1_digest(std::string_view msg) {
  std::array<std::uint32_t, 5> h = {0x67452301u, 0xEFCDAB89u, 0x98BADCFEu,
                                    0x10325476u, 0xC3D2E1F0u};
  const std::uint64_t total_bits = static_cast<std::uint64_t>(msg.size()) * 8;
  std::string padded(msg);
  padded.push_back('\x80');
  while (padded.size() % 64 != 56) padded.push_back('\0');
  for (int i = 7; i >= 0; --i)
    padded.push_back(static_cast<char>((total_bits >> (8 * i)) & 0xff));

  auto rol = [](std::uint32_t v, int n) {
    return (v << n) | (v >> (32 - n));
  };
  std::uint32_t w[80];
  for (std::size_t off = 0; off < padded.size(); off += 64) {
    for (int t = 0; t < 16; ++t) {
      w[t] = 0;
      for (int b = 0; b < 4; ++b)
        w[t] = (w[t] << 8) |
               static_cast<unsigned char>(padded[off + 4 * t + b]);
    }
    for (int t = 16; t < 80; ++t)
      w[t] = rol(w[t - 3] ^ w[t - 8] ^ w[t - 14] ^ w[t - 16], 1);
    std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4];
    for (int t = 0; t < 80; ++t) {
      std::uint32_t f, k;
      if (t < 20) {
        f = (b & c) | ((~b) & d);
        k = 0x5A827999u;
      } else if (t < 40) {
        f = b ^ c ^ d;
        k = 0x6ED9EBA1u;
      } else if (t < 60) {
        f = (b & c) | (b & d) | (c & d);
        k = 0x8F1BBCDCu;
      } else {
        f = b ^ c ^ d;
        k = 0xCA62C1D6u;
      }
      const std::uint32_t tmp = rol(a, 5) + f + e + k + w[t];
      e = d;
      d = c;
      c = rol(b, 30);
      b = a;
      a = tmp;
    }
    h[0] += a;
    h[1] += b;
    h[2] += c;
    h[3] += d;
    h[4] += e;
  }
  return h;
}

}  // namespace

std::string content_hash(std::string_view bytes) {
  std::string blob = "blob " + std::to_string(bytes.size());
  blob.push_back('\0');
  blob.append(bytes);
  const auto digest = sha1_digest(blob);
  char out[41];
  for (int i = 0; i < 5; ++i)
    std::snprintf(out + 8 * i, 9, "%08x", digest[i]);
  return std::string(out, 40);
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
  if (!out) throw std::runtime_error("short write: " + path);
}

CsvBuilder::CsvBuilder(const std::vector<std::string>& header)
    : width_(header.size()) {
  require(width_ >= 1, "CSV needs at least one column");
  emit(header);
}

void CsvBuilder::add_row(const std::vector<std::string>& cells) {
  require(cells.size() == width_, "CSV row width mismatch");
  emit(cells);
  ++rows_;
}

void CsvBuilder::emit(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) text_.push_back(',');
    const std::string& c = cells[i];
    if (c.find_first_of(",\"\n") == std::string::npos) {
      text_ += c;
    } else {
      text_.push_back('"');
      for (char ch : c) {
        if (ch == '"') text_.push_back('"');
        text_.push_back(ch);
      }
      text_.push_back('"');
    }
  }
  text_.push_back('\n');
}

}  // namespace mmv
