#include "gamkit/io/smap.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "gamkit/errors.hpp"

namespace gamkit::io {

namespace {

void put_u32(std::string& buf, uint32_t v) {
  buf.push_back(char(v & 0xff));
  buf.push_back(char((v >> 8) & 0xff));
  buf.push_back(char((v >> 16) & 0xff));
  buf.push_back(char((v >> 24) & 0xff));
}

uint32_t get_u32(const unsigned char* p) {
  return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 |
         uint32_t(p[3]) << 24;
}

uint8_t method_code(Method m) {
  switch (m) {
    case Method::GAM: return 0;
    case Method::GC: return 1;
    case Method::GCPP: return 2;
  }
  throw ConfigError("bad method enum");
}

Method method_from_code(uint8_t c) {
  switch (c) {
    case 0: return Method::GAM;
    case 1: return Method::GC;
    case 2: return Method::GCPP;
  }
  throw IOError("smap: unknown method code " + std::to_string(int(c)));
}

}  // namespace

void write_smap(const std::string& path, const SaliencyMap<double>& map,
                double score) {
  std::string buf;
  buf.reserve(32 + size_t(map.grid.size()) * 4);
  buf += "SMAP";
  put_u32(buf, 1);
  put_u32(buf, static_cast<uint32_t>(map.grid.rows()));
  put_u32(buf, static_cast<uint32_t>(map.grid.cols()));
  buf.push_back(char(method_code(map.method)));
  put_u32(buf, static_cast<uint32_t>(map.n_layers));
  buf.push_back(char(map.degenerate ? 1 : 0));
  static_assert(sizeof(double) == 8);
  uint64_t bits;
  std::memcpy(&bits, &score, 8);
  for (int i = 0; i < 8; ++i) buf.push_back(char((bits >> (8 * i)) & 0xff));
  for (Eigen::Index r = 0; r < map.grid.rows(); ++r)
    for (Eigen::Index c = 0; c < map.grid.cols(); ++c) {
      const float f = static_cast<float>(map.grid(r, c));
      uint32_t fb;
      std::memcpy(&fb, &f, 4);
      put_u32(buf, fb);
    }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IOError("cannot open '" + path + "' for writing");
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!os) throw IOError("short write to '" + path + "'");
}

SmapData read_smap(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IOError("cannot open '" + path + "'");
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(is)),
                                 std::istreambuf_iterator<char>());
  if (buf.size() < 30 || std::memcmp(buf.data(), "SMAP", 4) != 0)
    throw IOError("'" + path + "' is not an SMAP file");
  const uint32_t version = get_u32(&buf[4]);
  if (version != 1)
    throw IOError("unsupported SMAP version " + std::to_string(version));
  const uint32_t u0 = get_u32(&buf[8]);
  const uint32_t v0 = get_u32(&buf[12]);
  SmapData out;
  out.map.method = method_from_code(buf[16]);
  out.map.n_layers = static_cast<int>(get_u32(&buf[17]));
  out.map.degenerate = buf[21] != 0;
  uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= uint64_t(buf[22 + i]) << (8 * i);
  std::memcpy(&out.score, &bits, 8);
  const size_t need = 30 + size_t(u0) * v0 * 4;
  if (buf.size() != need)
    throw IOError("'" + path + "' truncated: expected " +
                  std::to_string(need) + " bytes, got " +
                  std::to_string(buf.size()));
  out.map.grid.resize(u0, v0);
  size_t at = 30;
  for (uint32_t r = 0; r < u0; ++r)
    for (uint32_t c = 0; c < v0; ++c, at += 4) {
      const uint32_t fb = get_u32(&buf[at]);
      float f;
      std::memcpy(&f, &fb, 4);
      out.map.grid(r, c) = f;
    }
  return out;
}

}  // namespace gamkit::io
