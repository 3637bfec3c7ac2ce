#include "gamkit/io/manifest.hpp"

#include <fstream>

#include <json.hpp>

#include "gamkit/errors.hpp"

namespace gamkit::io {

using nlohmann::json;

std::vector<ManifestRecord> read_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IOError("cannot open manifest '" + path + "'");
  std::vector<ManifestRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    // skip blank lines so hand-edited files round-trip
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw InvalidRecord(path + ":" + std::to_string(lineno) +
                          ": bad JSON: " + e.what());
    }
    ManifestRecord r;
    auto fail = [&](const std::string& msg) {
      throw InvalidRecord(path + ":" + std::to_string(lineno) + ": " + msg);
    };
    try {
      if (!j.contains("id") || !j.contains("image_path"))
        fail("missing required id/image_path");
      r.id = j.at("id").get<std::string>();
      r.image_path = j.at("image_path").get<std::string>();
      if (j.contains("label") && !j.at("label").is_null()) {
        const auto& l = j.at("label");
        r.label = l.is_string() ? l.get<std::string>()
                                : std::to_string(l.get<long long>());
      }
      if (j.contains("bbox") && !j.at("bbox").is_null()) {
        const auto& b = j.at("bbox");
        if (!b.is_array() || b.size() != 4)
          fail("bbox must be [x_min,y_min,x_max,y_max]");
        r.bbox = {b[0].get<int>(), b[1].get<int>(), b[2].get<int>(),
                  b[3].get<int>()};
        // max is exclusive, so equality already means an empty box
        if ((*r.bbox)[0] >= (*r.bbox)[2] || (*r.bbox)[1] >= (*r.bbox)[3])
          fail("bbox must have positive area");
      }
      if (j.contains("mask_path") && !j.at("mask_path").is_null())
        r.mask_path = j.at("mask_path").get<std::string>();
      if (j.contains("pair_with") && !j.at("pair_with").is_null())
        r.pair_with = j.at("pair_with").get<std::string>();
    } catch (const InvalidRecord&) {
      throw;
    } catch (const json::exception& e) {
      throw InvalidRecord(path + ":" + std::to_string(lineno) + ": " +
                          e.what());
    }
    out.push_back(std::move(r));
  }
  return out;
}

void write_manifest(const std::string& path,
                    const std::vector<ManifestRecord>& records) {
  std::ofstream os(path);
  if (!os) throw IOError("cannot open '" + path + "' for writing");
  for (const auto& r : records) {
    json j;
    j["id"] = r.id;
    j["image_path"] = r.image_path;
    if (r.label) j["label"] = *r.label;
    if (r.bbox) j["bbox"] = {(*r.bbox)[0], (*r.bbox)[1], (*r.bbox)[2], (*r.bbox)[3]};
    if (r.mask_path) j["mask_path"] = *r.mask_path;
    if (r.pair_with) j["pair_with"] = *r.pair_with;
    os << j.dump() << "\n";
  }
  if (!os) throw IOError("short write to '" + path + "'");
}

}  // namespace gamkit::io
