#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "gamkit/types.hpp"

namespace gamkit {

enum class Method { GAM, GC, GCPP };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::GAM: return "gam";
    case Method::GC: return "gc";
    case Method::GCPP: return "gcpp";
  }
  return "?";
}

inline Method method_from_name(const std::string& s) {
  if (s == "gam") return Method::GAM;
  if (s == "gc") return Method::GC;
  if (s == "gcpp") return Method::GCPP;
  throw ConfigError("unknown method '" + s + "' (expected gam, gc or gcpp)");
}

// Pixel relevance grid in [0,1] at the input image resolution. `degenerate`
// marks maps whose pre-normalization values were all equal; those are returned
// as all-zeros so a downstream binarization yields no detection.
template <class S>
struct SaliencyMap {
  Mat<S> grid;
  Method method = Method::GAM;
  int n_layers = 1;
  bool degenerate = false;
};

using SaliencyMapd = SaliencyMap<double>;

// Channel-weighted activation sum split by the sign of the pooled-gradient
// coefficients: total = neg + pos entrywise.
template <class S>
struct GradDecomposition {
  Mat<S> total;
  Mat<S> neg;
  Mat<S> pos;
};

template <class S>
struct GcppCoefficients {
  std::vector<Mat<S>> beta;  // per-channel pixel coefficients
  Vec<S> alpha_gc;           // pooled gradients, kept for diagnostics
};

template <class S>
struct GcppResult {
  SaliencyMap<S> map;
  GcppCoefficients<S> coefficients;
  bool overflow = false;
};

// ---------------------------------------------------------------------------
// Elementwise / grid primitives

template <class D>
Mat<typename D::Scalar> relu_clamp(const Eigen::MatrixBase<D>& g) {
  using S = typename D::Scalar;
  return g.cwiseMax(S(0));
}

// (g - min) / (max - min). A constant grid has no spread to normalize; it
// comes back as all-zeros with the degenerate flag set.
template <class D>
std::pair<Mat<typename D::Scalar>, bool> normalize_minmax(
    const Eigen::MatrixBase<D>& g) {
  using S = typename D::Scalar;
  const S lo = g.minCoeff();
  const S hi = g.maxCoeff();
  if (hi > lo) {
    Mat<S> out = (g.array() - lo) / (hi - lo);
    return {std::move(out), false};
  }
  return {Mat<S>::Zero(g.rows(), g.cols()), true};
}

namespace detail {

// Keys cubic convolution kernel, A = -0.75 (the convention used by the
// common GPU/CPU resizers), evaluated at offset t in [0,1).
template <class S>
inline void cubic_weights(S t, S w[4]) {
  const S A = S(-0.75);
  auto k1 = [&](S x) { return ((A + 2) * x - (A + 3)) * x * x + 1; };
  auto k2 = [&](S x) { return ((A * x - 5 * A) * x + 8 * A) * x - 4 * A; };
  w[0] = k2(t + 1);
  w[1] = k1(t);
  w[2] = k1(1 - t);
  w[3] = k2(2 - t);
}

// Dense 1-D resampling operator (out_n x in_n), half-pixel centers, borders
// clamped by folding out-of-range tap weights onto the edge samples.
template <class S>
Mat<S> cubic_operator(int in_n, int out_n) {
  Mat<S> W = Mat<S>::Zero(out_n, in_n);
  const S scale = S(in_n) / S(out_n);
  for (int o = 0; o < out_n; ++o) {
    const S src = scale * (S(o) + S(0.5)) - S(0.5);
    const S fl = std::floor(src);
    const int i0 = static_cast<int>(fl);
    S w[4];
    cubic_weights(src - fl, w);
    for (int t = 0; t < 4; ++t) {
      const int i = std::clamp(i0 - 1 + t, 0, in_n - 1);
      W(o, i) += w[t];
    }
  }
  return W;
}

}  // namespace detail

// Separable bicubic resampling to out_rows x out_cols. Overshoot outside the
// source range is expected and left for the min-max normalization to absorb.
template <class S>
Mat<S> resize_bicubic(const Mat<S>& src, int out_rows, int out_cols) {
  if (src.rows() < 1 || src.cols() < 1)
    throw ShapeError("resize_bicubic: empty source grid");
  if (out_rows < 1 || out_cols < 1)
    throw ShapeError("resize_bicubic: target must be positive");
  const Mat<S> wr = detail::cubic_operator<S>(static_cast<int>(src.rows()), out_rows);
  const Mat<S> wc = detail::cubic_operator<S>(static_cast<int>(src.cols()), out_cols);
  return wr * src * wc.transpose();
}

// ---------------------------------------------------------------------------
// Per-layer maps

// Sum over channels of relu(h) .* relu(g), resized to the image grid and
// min-max normalized. Negative gradient entries are zeroed before the product
// so they cannot mask positively contributing pixels on other channels.
template <class S>
SaliencyMap<S> gam_layer_map(const Tensor3<S>& h, const Tensor3<S>& g,
                             int out_rows, int out_cols) {
  if (!h.sameShape(g))
    throw ShapeError("gam_layer_map: activation/gradient shape mismatch");
  if (h.channels() < 1) throw ShapeError("gam_layer_map: no channels");
  Mat<S> acc = Mat<S>::Zero(h.rows(), h.cols());
  for (int k = 0; k < h.channels(); ++k)
    acc.noalias() += relu_clamp(h[k]).cwiseProduct(relu_clamp(g[k]));
  auto [grid, degenerate] = normalize_minmax(resize_bicubic(acc, out_rows, out_cols));
  return {std::move(grid), Method::GAM, 1, degenerate};
}

// Mean of the per-layer maps. The inputs are already normalized per layer, so
// the mean stays in [0,1]; no second normalization is applied.
template <class S>
SaliencyMap<S> gam_aggregate(const std::vector<SaliencyMap<S>>& maps) {
  if (maps.empty()) throw EmptyInput("gam_aggregate: no maps");
  Mat<S> acc = maps[0].grid;
  bool all_degenerate = maps[0].degenerate;
  for (size_t i = 1; i < maps.size(); ++i) {
    if (maps[i].grid.rows() != acc.rows() || maps[i].grid.cols() != acc.cols())
      throw ShapeError("gam_aggregate: map shape mismatch");
    acc += maps[i].grid;
    all_degenerate = all_degenerate && maps[i].degenerate;
  }
  acc /= S(maps.size());
  return {std::move(acc), maps[0].method, static_cast<int>(maps.size()),
          all_degenerate};
}

// Pooled-gradient weighted activation sum, relu, resize, normalize. Also
// reports the split of the weighted sum into negative- and nonnegative-
// coefficient channel groups; a pixel where the negative group outweighs the
// positive one is zeroed by the relu regardless of how strongly it supports
// the score.
template <class S>
std::pair<SaliencyMap<S>, GradDecomposition<S>> grad_cam(const Tensor3<S>& h,
                                                         const Tensor3<S>& g,
                                                         int out_rows,
                                                         int out_cols) {
  if (!h.sameShape(g))
    throw ShapeError("grad_cam: activation/gradient shape mismatch");
  if (h.channels() < 1) throw ShapeError("grad_cam: no channels");
  GradDecomposition<S> dec;
  dec.total = Mat<S>::Zero(h.rows(), h.cols());
  dec.neg = Mat<S>::Zero(h.rows(), h.cols());
  dec.pos = Mat<S>::Zero(h.rows(), h.cols());
  for (int k = 0; k < h.channels(); ++k) {
    const S alpha = g[k].mean();
    if (alpha < S(0))
      dec.neg.noalias() += alpha * h[k];
    else
      dec.pos.noalias() += alpha * h[k];
  }
  dec.total = dec.neg + dec.pos;
  auto [grid, degenerate] =
      normalize_minmax(resize_bicubic(Mat<S>(relu_clamp(dec.total)), out_rows, out_cols));
  SaliencyMap<S> map{std::move(grid), Method::GC, 1, degenerate};
  return {std::move(map), std::move(dec)};
}

// Pixel coefficients from the second and third derivatives of exp(s) with the
// common exp(s) factor cancelled:
//
//   beta_ij = g_ij^2 / (2 g_ij^2 + (sum_ab h_ab) * g_ij^3)
//
// The cancellation keeps the arithmetic finite even when exp(s) itself would
// overflow; that regime is detected and reported through the overflow flag.
// Channel weights are sum_ij beta .* relu(g), matching the method this
// formulation originates from. A pixel whose denominator is exactly zero
// contributes nothing (the g -> 0 limit).
template <class S>
GcppResult<S> grad_campp(const Tensor3<S>& h, const Tensor3<S>& g, S s_value,
                         int out_rows, int out_cols) {
  if (!h.sameShape(g))
    throw ShapeError("grad_campp: activation/gradient shape mismatch");
  if (h.channels() < 1) throw ShapeError("grad_campp: no channels");

  GcppResult<S> res;
  res.overflow = !std::isfinite(std::exp(static_cast<double>(s_value)));
  res.coefficients.beta.reserve(h.channels());
  res.coefficients.alpha_gc.resize(h.channels());

  Mat<S> raw = Mat<S>::Zero(h.rows(), h.cols());
  for (int k = 0; k < h.channels(); ++k) {
    res.coefficients.alpha_gc[k] = g[k].mean();
    const S hsum = h[k].sum();
    Mat<S> beta(h.rows(), h.cols());
    for (int i = 0; i < h.rows(); ++i)
      for (int j = 0; j < h.cols(); ++j) {
        const S gij = g[k](i, j);
        const S g2 = gij * gij;
        const S den = 2 * g2 + hsum * g2 * gij;
        beta(i, j) = (den == S(0)) ? S(0) : g2 / den;
      }
    const S w = beta.cwiseProduct(relu_clamp(g[k])).sum();
    raw.noalias() += w * h[k];
    res.coefficients.beta.push_back(std::move(beta));
  }
  auto [grid, degenerate] =
      normalize_minmax(resize_bicubic(Mat<S>(relu_clamp(raw)), out_rows, out_cols));
  res.map = {std::move(grid), Method::GCPP, 1, degenerate};
  return res;
}

}  // namespace gamkit
