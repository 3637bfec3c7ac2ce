#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gamkit/explain.hpp"
#include "gamkit/nn/train.hpp"

namespace gamkit {

using Mask = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

// Ground truth for localization: a pixel box, a mask, or both. Boxes are
// (x_min, y_min, x_max, y_max) with x the column, min inclusive and max
// exclusive, the same layout dataset manifests use.
struct GroundTruthRegion {
  std::optional<std::array<int, 4>> bbox;
  std::optional<Mask> mask;

  bool empty() const { return !bbox && !mask; }
};

struct BinarizationConfig {
  double threshold = 0.5;
  bool largest_component_only = false;
};

// ---------------------------------------------------------------------------
// Faithfulness: the explanation image and the confidence-drop statistics.

// Hadamard product of every image channel with the saliency grid.
template <class S>
ImageTensor<S> explanation_map(const ImageTensor<S>& image,
                               const SaliencyMap<S>& map) {
  if (map.grid.rows() != image.rows() || map.grid.cols() != image.cols())
    throw ShapeError("explanation_map: saliency grid does not match image");
  Tensor3<S> out(image.channels(), image.rows(), image.cols());
  for (int c = 0; c < image.channels(); ++c)
    out[c] = image.data[c].cwiseProduct(map.grid);
  return ImageTensor<S>(std::move(out), image.normalized);
}

// Average drop in confidence, in percent. Pairs are (Y, O) with Y the
// confidence on the full input and O on the explanation image.
template <class S>
S adp(const std::vector<std::pair<S, S>>& pairs) {
  if (pairs.empty()) throw EmptyInput("adp: no records");
  S acc = S(0);
  for (const auto& [y, o] : pairs) {
    if (!(y > S(0)))
      throw InvalidRecord("adp: non-positive reference confidence");
    acc += std::max(S(0), y - o) / y;
  }
  return S(100) * acc / S(pairs.size());
}

// Percentage of records whose confidence strictly increased.
template <class S>
S pic(const std::vector<std::pair<S, S>>& pairs) {
  if (pairs.empty()) throw EmptyInput("pic: no records");
  Eigen::Index hits = 0;
  for (const auto& [y, o] : pairs)
    if (y < o) ++hits;
  return S(100) * S(hits) / S(pairs.size());
}

// Relative improvement of m2 over m1. For lower-is-better metrics a drop is
// an improvement; for higher-is-better a rise is.
template <class S>
S improvement(S m1, S m2, bool lower_better) {
  if (m1 == S(0)) throw InvalidRecord("improvement: zero baseline");
  return (lower_better ? (m1 - m2) : (m2 - m1)) / m1;
}

// ---------------------------------------------------------------------------
// Localization: binarize, component filtering, boxes and IoU.

template <class S>
Mask binarize_grid(const Mat<S>& grid, double threshold) {
  Mask m(grid.rows(), grid.cols());
  for (Eigen::Index r = 0; r < grid.rows(); ++r)
    for (Eigen::Index c = 0; c < grid.cols(); ++c)
      m(r, c) = static_cast<double>(grid(r, c)) >= threshold ? 1 : 0;
  return m;
}

// Keep only the largest 4-connected foreground component. Ties go to the
// component met first in row-major order, which keeps runs reproducible.
inline Mask largest_component(const Mask& m) {
  Eigen::MatrixXi label = Eigen::MatrixXi::Constant(m.rows(), m.cols(), -1);
  std::vector<long> sizes;
  std::vector<std::pair<int, int>> stack;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (!m(r, c) || label(r, c) >= 0) continue;
      const int id = static_cast<int>(sizes.size());
      sizes.push_back(0);
      stack.push_back({static_cast<int>(r), static_cast<int>(c)});
      label(r, c) = id;
      while (!stack.empty()) {
        auto [i, j] = stack.back();
        stack.pop_back();
        ++sizes[id];
        const int di[4] = {-1, 1, 0, 0}, dj[4] = {0, 0, -1, 1};
        for (int t = 0; t < 4; ++t) {
          const int ni = i + di[t], nj = j + dj[t];
          if (ni < 0 || nj < 0 || ni >= m.rows() || nj >= m.cols()) continue;
          if (!m(ni, nj) || label(ni, nj) >= 0) continue;
          label(ni, nj) = id;
          stack.push_back({ni, nj});
        }
      }
    }
  if (sizes.empty()) return Mask::Zero(m.rows(), m.cols());
  int best = 0;
  for (size_t i = 1; i < sizes.size(); ++i)
    if (sizes[i] > sizes[best]) best = static_cast<int>(i);
  Mask out(m.rows(), m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      out(r, c) = label(r, c) == best ? 1 : 0;
  return out;
}

template <class S>
Mask binarize(const Mat<S>& grid, const BinarizationConfig& cfg) {
  Mask m = binarize_grid(grid, cfg.threshold);
  if (cfg.largest_component_only) m = largest_component(m);
  return m;
}

// Tightest (x_min, y_min, x_max, y_max) box around the foreground, max
// exclusive; nullopt for an empty mask.
inline std::optional<std::array<int, 4>> bbox_from_mask(const Mask& m) {
  int r0 = -1, c0 = -1, r1 = -1, c1 = -1;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (!m(r, c)) continue;
      if (r0 < 0) {
        r0 = r1 = static_cast<int>(r);
        c0 = c1 = static_cast<int>(c);
      } else {
        r0 = std::min(r0, static_cast<int>(r));
        r1 = std::max(r1, static_cast<int>(r));
        c0 = std::min(c0, static_cast<int>(c));
        c1 = std::max(c1, static_cast<int>(c));
      }
    }
  if (r0 < 0) return std::nullopt;
  return std::array<int, 4>{c0, r0, c1 + 1, r1 + 1};
}

inline Mask rasterize_bbox(const std::array<int, 4>& box, int rows, int cols) {
  Mask m = Mask::Zero(rows, cols);
  const int c0 = std::clamp(box[0], 0, cols);
  const int r0 = std::clamp(box[1], 0, rows);
  const int c1 = std::clamp(box[2], 0, cols);
  const int r1 = std::clamp(box[3], 0, rows);
  for (int r = r0; r < r1; ++r)
    for (int c = c0; c < c1; ++c) m(r, c) = 1;
  return m;
}

// Intersection-over-union of two masks; an empty union scores 0.
inline double iou_masks(const Mask& a, const Mask& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError("iou: mask shape mismatch");
  long inter = 0, uni = 0;
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      const bool pa = a(r, c) != 0, pb = b(r, c) != 0;
      inter += pa && pb;
      uni += pa || pb;
    }
  return uni == 0 ? 0.0 : double(inter) / double(uni);
}

// IoU against ground truth. A mask annotation wins over a box when both are
// present; boxes are rasterized to the prediction's resolution.
inline double iou_against(const Mask& pred, const GroundTruthRegion& gt) {
  if (gt.mask) return iou_masks(pred, *gt.mask);
  if (gt.bbox)
    return iou_masks(pred, rasterize_bbox(*gt.bbox, static_cast<int>(pred.rows()),
                                          static_cast<int>(pred.cols())));
  throw InvalidRecord("iou: record has no ground truth region");
}

// Sweep thresholds 0.01..0.99 and keep the one maximizing mean IoU over the
// provided (map, ground truth) pairs. Ties resolve to the smaller threshold.
template <class S>
std::pair<double, double> select_threshold(
    const std::vector<Mat<S>>& grids, const std::vector<GroundTruthRegion>& gts,
    bool largest_component_only = false) {
  if (grids.empty() || grids.size() != gts.size())
    throw EmptyInput("select_threshold: need matching maps and ground truth");
  double best_theta = 0.01, best_iou = -1.0;
  for (int i = 1; i <= 99; ++i) {
    const double theta = double(i) / 100.0;
    double acc = 0.0;
    for (size_t r = 0; r < grids.size(); ++r) {
      Mask m = binarize_grid(grids[r], theta);
      if (largest_component_only) m = largest_component(m);
      acc += iou_against(m, gts[r]);
    }
    const double mean = acc / double(grids.size());
    if (mean > best_iou) {
      best_iou = mean;
      best_theta = theta;
    }
  }
  return {best_theta, best_iou};
}

// Linear-interpolated percentile of a sample, matching the common numeric
// library convention: rank = p/100 * (n-1) on the sorted values.
inline double percentile_linear(std::vector<double> v, double p) {
  if (v.empty()) throw EmptyInput("percentile of empty sample");
  std::sort(v.begin(), v.end());
  const double rank = p / 100.0 * double(v.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(rank));
  const double frac = rank - double(lo);
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] + (v[lo + 1] - v[lo]) * frac;
}

// Indices of records whose object area falls strictly below the percentile
// cutoff of the area distribution.
inline std::vector<size_t> small_object_subset(const std::vector<double>& areas,
                                               double percentile) {
  const double cutoff = percentile_linear(areas, percentile);
  std::vector<size_t> keep;
  for (size_t i = 0; i < areas.size(); ++i)
    if (areas[i] < cutoff) keep.push_back(i);
  return keep;
}

inline double region_area(const GroundTruthRegion& gt) {
  if (gt.mask) {
    long n = 0;
    for (Eigen::Index r = 0; r < gt.mask->rows(); ++r)
      for (Eigen::Index c = 0; c < gt.mask->cols(); ++c) n += (*gt.mask)(r, c) != 0;
    return double(n);
  }
  if (gt.bbox) {
    const auto& b = *gt.bbox;
    return double(b[2] - b[0]) * double(b[3] - b[1]);
  }
  throw InvalidRecord("record has no ground truth region");
}

// ---------------------------------------------------------------------------
// Per-record evaluation driver.

template <class S>
struct EvalItem {
  std::string id;
  ImageTensor<S> image;
  ScoreSpec<S> spec;
  std::optional<int> prob_class;  // when set, Y/O are softmax probabilities
  std::optional<GroundTruthRegion> gt;
};

struct EvalRecord {
  std::string id;
  bool ok = false;         // the evaluation itself ran
  bool filtered = false;   // Y <= 0: excluded from ADP/PIC, counted apart
  std::string error;
  double y = 0, o = 0;     // reference / explanation confidence
  double drop = 0;         // max(0, y-o)/y
  bool increased = false;  // y < o
  std::optional<double> iou;
};

template <class S>
struct EvalOutput {
  EvalRecord record;
  SaliencyMap<S> map;
};

// Confidence of one already-captured forward pass under the item's target:
// softmax probability for class targets, raw score otherwise.
template <class S>
S item_confidence(const Capture<S>& cap, const EvalItem<S>& item,
                  const ScoreSpec<S>& resolved, int tap) {
  if (item.prob_class) {
    Vec<S> p = nn::softmax(cap.logits);
    return p[*item.prob_class];
  }
  return score(cap.trace.embed_values[tap], resolved);
}

template <class S>
struct PairEvalOutput {
  EvalRecord record;
  SaliencyMap<S> map_a, map_b;
};

// Similarity pairs: each image is explained against the other's original
// embedding, both are masked by their own map, and Y/O are the pair scores
// before and after masking.
template <class S>
PairEvalOutput<S> evaluate_pair(const nn::Model<S>& model,
                                const std::string& id,
                                const ImageTensor<S>& xa,
                                const ImageTensor<S>& xb, ScoreKind kind,
                                Method method, int n) {
  PairEvalOutput<S> out;
  out.record.id = id;
  try {
    Capture<S> ca = forward_capture(model, xa);
    Capture<S> cb = forward_capture(model, xb);
    auto make_spec = [&](const Embedding<S>& ref) {
      return kind == ScoreKind::Cosine ? ScoreSpec<S>::cosine(ref)
                                       : ScoreSpec<S>::dot(ref);
    };
    const ScoreSpec<S> spec_a = make_spec(cb.embedding);
    const ScoreSpec<S> spec_b = make_spec(ca.embedding);
    const S y = score(ca.embedding, spec_a);
    auto ea = explain(model, xa, method, n, spec_a);
    auto eb = explain(model, xb, method, n, spec_b);
    out.map_a = ea.map;
    out.map_b = eb.map;
    Capture<S> ma = forward_capture(model, explanation_map(xa, ea.map));
    Capture<S> mb = forward_capture(model, explanation_map(xb, eb.map));
    const S o = score(ma.embedding, make_spec(mb.embedding));
    out.record.y = static_cast<double>(y);
    out.record.o = static_cast<double>(o);
    out.record.ok = true;
    if (!(y > S(0))) {
      out.record.filtered = true;
    } else {
      out.record.drop =
          std::max(0.0, out.record.y - out.record.o) / out.record.y;
      out.record.increased = out.record.y < out.record.o;
    }
  } catch (const Error& e) {
    out.record.ok = false;
    out.record.error = e.what();
  }
  return out;
}

template <class S>
EvalOutput<S> evaluate_item(const nn::Model<S>& model, const EvalItem<S>& item,
                            Method method, int n) {
  EvalOutput<S> out;
  out.record.id = item.id;
  try {
    auto expl = explain(model, item.image, method, n, item.spec);
    out.map = expl.map;
    const ScoreSpec<S> resolved = resolve_score_spec(model, item.spec);
    const int tap = effective_tap(model, item.spec.kind);
    Capture<S> cap0 = forward_capture(model, item.image);
    ImageTensor<S> masked = explanation_map(item.image, expl.map);
    Capture<S> cap1 = forward_capture(model, masked);
    const S y = item_confidence(cap0, item, resolved, tap);
    const S o = item_confidence(cap1, item, resolved, tap);
    out.record.y = static_cast<double>(y);
    out.record.o = static_cast<double>(o);
    out.record.ok = true;
    if (!(y > S(0))) {
      out.record.filtered = true;
    } else {
      out.record.drop =
          std::max(0.0, out.record.y - out.record.o) / out.record.y;
      out.record.increased = out.record.y < out.record.o;
    }
  } catch (const Error& e) {
    out.record.ok = false;
    out.record.error = e.what();
  }
  return out;
}

}  // namespace gamkit
