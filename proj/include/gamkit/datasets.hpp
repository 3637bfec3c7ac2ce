#pragma once

#include <algorithm>
#include <array>
#include <numeric>
#include <vector>

#include "gamkit/nn/train.hpp"
#include "gamkit/saliency.hpp"

namespace gamkit {

// Synthetic digit corpus: classic 5x7 glyphs upscaled with the same bicubic
// kernel the saliency resizer uses, jittered a couple of pixels and dusted
// with per-sample noise. The noise doubles as a unique signature per image,
// which is what lets a small net memorize permuted labels.

namespace detail {

inline const std::array<const char*, 10>& digit_glyphs() {
  static const std::array<const char*, 10> g = {
      // 7 rows x 5 cols, '#' = ink
      ".###."
      "#...#"
      "#..##"
      "#.#.#"
      "##..#"
      "#...#"
      ".###.",

      "..#.."
      ".##.."
      "..#.."
      "..#.."
      "..#.."
      "..#.."
      ".###.",

      ".###."
      "#...#"
      "....#"
      "...#."
      "..#.."
      ".#..."
      "#####",

      "#####"
      "...#."
      "..#.."
      "...#."
      "....#"
      "#...#"
      ".###.",

      "...#."
      "..##."
      ".#.#."
      "#..#."
      "#####"
      "...#."
      "...#.",

      "#####"
      "#...."
      "####."
      "....#"
      "....#"
      "#...#"
      ".###.",

      "..##."
      ".#..."
      "#...."
      "####."
      "#...#"
      "#...#"
      ".###.",

      "#####"
      "....#"
      "...#."
      "..#.."
      ".#..."
      ".#..."
      ".#...",

      ".###."
      "#...#"
      "#...#"
      ".###."
      "#...#"
      "#...#"
      ".###.",

      ".###."
      "#...#"
      "#...#"
      ".####"
      "....#"
      "...#."
      ".##..",
  };
  return g;
}

template <class S>
Mat<S> glyph_grid(int digit) {
  const char* s = digit_glyphs()[digit];
  Mat<S> m(7, 5);
  for (int r = 0; r < 7; ++r)
    for (int c = 0; c < 5; ++c) m(r, c) = s[r * 5 + c] == '#' ? S(1) : S(0);
  return m;
}

}  // namespace detail

struct DigitSetConfig {
  int per_class = 24;
  int classes = 10;
  int rows = 28, cols = 28;
  int jitter = 2;          // max |offset| in pixels
  double noise_sigma = 0.25;
  double contrast_lo = 0.75, contrast_hi = 1.0;
  uint64_t seed = 1;
};

template <class S>
std::vector<nn::Sample<S>> synth_digits(const DigitSetConfig& cfg) {
  if (cfg.classes < 1 || cfg.classes > 10)
    throw ConfigError("digit classes must be in [1,10]");
  nn::Rng rng(cfg.seed ^ 0x646967ULL);
  // glyph scaled to roughly two thirds of the canvas, aspect preserved
  const int gh = std::max(4, cfg.rows * 2 / 3);
  const int gw = std::max(3, gh * 5 / 7);
  std::vector<nn::Sample<S>> out;
  out.reserve(size_t(cfg.per_class) * cfg.classes);
  for (int d = 0; d < cfg.classes; ++d) {
    Mat<S> big = resize_bicubic(detail::glyph_grid<S>(d), gh, gw)
                     .cwiseMax(S(0))
                     .cwiseMin(S(1));
    for (int i = 0; i < cfg.per_class; ++i) {
      Tensor3<S> img(1, cfg.rows, cfg.cols);
      img.setZero();
      const int base_r = (cfg.rows - gh) / 2;
      const int base_c = (cfg.cols - gw) / 2;
      const int dr = cfg.jitter ? int(rng.below(2 * cfg.jitter + 1)) - cfg.jitter : 0;
      const int dc = cfg.jitter ? int(rng.below(2 * cfg.jitter + 1)) - cfg.jitter : 0;
      const S gain = S(cfg.contrast_lo +
                       (cfg.contrast_hi - cfg.contrast_lo) * rng.uniform());
      for (int r = 0; r < gh; ++r)
        for (int c = 0; c < gw; ++c) {
          const int rr = base_r + dr + r, cc = base_c + dc + c;
          if (rr < 0 || cc < 0 || rr >= cfg.rows || cc >= cfg.cols) continue;
          img[0](rr, cc) = gain * big(r, c);
        }
      if (cfg.noise_sigma > 0)
        for (Eigen::Index p = 0; p < img[0].size(); ++p)
          img[0].data()[p] = std::clamp(
              img[0].data()[p] + S(rng.normal() * cfg.noise_sigma), S(0), S(1));
      out.push_back({std::move(img), d});
    }
  }
  return out;
}

// Shuffle the label column as a whole. Class balance stays intact and about
// (1 - 1/classes) of the samples end up mislabeled.
template <class S>
std::vector<nn::Sample<S>> with_permuted_labels(std::vector<nn::Sample<S>> data,
                                                uint64_t seed) {
  std::vector<int> labels(data.size());
  for (size_t i = 0; i < data.size(); ++i) labels[i] = data[i].label;
  nn::Rng rng(seed ^ 0x7065726dULL);
  for (size_t i = labels.size(); i > 1; --i)
    std::swap(labels[i - 1], labels[rng.below(i)]);
  for (size_t i = 0; i < data.size(); ++i) data[i].label = labels[i];
  return data;
}

// Bounding box of the ink in a digit image: the smallest window holding every
// pixel over the threshold. Used to fabricate localization ground truth.
template <class S>
std::array<int, 4> ink_bbox(const Tensor3<S>& img, S threshold = S(0.35)) {
  int r0 = -1, c0 = -1, r1 = -1, c1 = -1;
  for (int r = 0; r < img.rows(); ++r)
    for (int c = 0; c < img.cols(); ++c)
      if (img[0](r, c) > threshold) {
        if (r0 < 0) { r0 = r1 = r; c0 = c1 = c; }
        r0 = std::min(r0, r); r1 = std::max(r1, r);
        c0 = std::min(c0, c); c1 = std::max(c1, c);
      }
  if (r0 < 0) return {0, 0, 0, 0};
  return {r0, c0, r1, c1};
}

}  // namespace gamkit
