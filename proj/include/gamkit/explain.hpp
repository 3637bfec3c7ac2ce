#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "gamkit/backend.hpp"
#include "gamkit/saliency.hpp"

namespace gamkit {

template <class S>
struct LayerMapSet {
  std::vector<std::pair<LayerId, SaliencyMap<S>>> maps;
};

template <class S>
struct Explanation {
  SaliencyMap<S> map;
  LayerMapSet<S> layer_maps;  // one entry per aggregated layer
  std::optional<GradDecomposition<S>> decomposition;  // populated for gc
  std::optional<GcppCoefficients<S>> coefficients;    // populated for gcpp
  bool overflow = false;  // gcpp exp(score) overflow diagnostic
  S score_value = S(0);
  Embedding<S> embedding;
};

// Full pipeline for one image: capture, score, backprop, build the map at
// input resolution. `n` trailing layers are mapped individually and averaged;
// for gc/gc++ the diagnostic extras (decomposition, coefficients) come from
// the deepest layer.
template <class S>
Explanation<S> explain(const nn::Model<S>& model, const ImageTensor<S>& image,
                       Method method, int n, const ScoreSpec<S>& spec) {
  Capture<S> cap = forward_capture(model, image);
  GradCapture<S> grad = backward_capture(model, cap, spec);
  const int L = static_cast<int>(cap.activations.entries.size());
  const int H = image.rows(), W = image.cols();
  if (n < 1 || n > L)
    throw ConfigError("layer count n=" + std::to_string(n) + " outside [1," +
                      std::to_string(L) + "]");

  Explanation<S> out;
  out.score_value = grad.score_value;
  out.embedding = grad.embedding;

  std::vector<SaliencyMap<S>> maps;
  maps.reserve(n);
  for (int l = L - n + 1; l <= L; ++l) {
    const auto& [id, h] = cap.activations.entries[l - 1];
    const Tensor3<S>& g = *grad.gradients.find(l);
    SaliencyMap<S> m;
    switch (method) {
      case Method::GAM:
        m = gam_layer_map(h, g, H, W);
        break;
      case Method::GC: {
        auto [map, dec] = grad_cam(h, g, H, W);
        m = std::move(map);
        if (l == L) out.decomposition = std::move(dec);
        break;
      }
      case Method::GCPP: {
        auto res = grad_campp(h, g, grad.score_value, H, W);
        m = std::move(res.map);
        out.overflow = out.overflow || res.overflow;
        if (l == L) out.coefficients = std::move(res.coefficients);
        break;
      }
    }
    out.layer_maps.maps.emplace_back(id, m);
    maps.push_back(std::move(m));
  }
  out.map = gam_aggregate(maps);
  return out;
}

}  // namespace gamkit
