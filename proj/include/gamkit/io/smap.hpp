#pragma once

#include <string>

#include "gamkit/saliency.hpp"

namespace gamkit::io {

// Raw map persistence, format SMAP/1. Header: "SMAP" magic, u32 version,
// u32 u0 (rows), u32 v0 (cols), u8 method, u32 n, u8 degenerate flag,
// f64 score. Payload: row-major float32. Everything little-endian.

struct SmapData {
  SaliencyMap<double> map;
  double score = 0;
};

void write_smap(const std::string& path, const SaliencyMap<double>& map,
                double score);
SmapData read_smap(const std::string& path);

}  // namespace gamkit::io
