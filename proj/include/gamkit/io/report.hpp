#pragma once

#include <string>
#include <vector>

namespace gamkit::io {

// One line of the evaluation report CSV: (task, method, n, metric, value).
struct ReportRow {
  std::string task;
  std::string method;
  int n = 1;
  std::string metric;
  double value = 0;
};

std::string report_csv(const std::vector<ReportRow>& rows);
void write_report_csv(const std::string& path,
                      const std::vector<ReportRow>& rows);

}  // namespace gamkit::io
