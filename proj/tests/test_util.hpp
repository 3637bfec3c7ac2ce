#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <gamkit/types.hpp>

namespace testutil {

// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    auto base = std::filesystem::temp_directory_path();
    std::mt19937_64 rng(std::random_device{}());
    for (int attempt = 0; attempt < 64; ++attempt) {
      auto candidate = base / (tag + "-" + std::to_string(rng()));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path_ = candidate;
        return;
      }
    }
    throw std::runtime_error("could not create temp dir for " + tag);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str() const { return path_.string(); }
  std::string file(const std::string& leaf) const {
    return (path_ / leaf).string();
  }

 private:
  std::filesystem::path path_;
};

// Deterministic random tensors for property tests.
inline gamkit::Tensor3<double> random_tensor(std::mt19937_64& rng, int ch,
                                             int rows, int cols, double lo,
                                             double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  gamkit::Tensor3<double> t(ch, rows, cols);
  for (int k = 0; k < ch; ++k)
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) t[k](r, c) = dist(rng);
  return t;
}

inline gamkit::Mat<double> random_grid(std::mt19937_64& rng, int rows, int cols,
                                       double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  gamkit::Mat<double> m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = dist(rng);
  return m;
}

}  // namespace testutil
