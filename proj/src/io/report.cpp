#include "gamkit/io/report.hpp"

#include <cstdio>
#include <fstream>

#include "gamkit/errors.hpp"

namespace gamkit::io {

std::string report_csv(const std::vector<ReportRow>& rows) {
  std::string out = "task,method,n,metric,value\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.6f", r.value);
    out += r.task + "," + r.method + "," + std::to_string(r.n) + "," +
           r.metric + "," + buf + "\n";
  }
  return out;
}

void write_report_csv(const std::string& path,
                      const std::vector<ReportRow>& rows) {
  std::ofstream os(path);
  if (!os) throw IOError("cannot open '" + path + "' for writing");
  os << report_csv(rows);
  if (!os) throw IOError("short write to '" + path + "'");
}

}  // namespace gamkit::io
