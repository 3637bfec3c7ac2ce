#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gamkit/nn/model.hpp"
#include "gamkit/scoring.hpp"
#include "gamkit/types.hpp"

namespace gamkit {

// Everything one forward pass yields: block activations h^l for l = 1..L,
// the embedding at the model's declared tap, and the classifier logits.
template <class S>
struct Capture {
  ActivationStack<S> activations;
  Embedding<S> embedding;
  Vec<S> logits;
  nn::ForwardTrace<S> trace;
};

template <class S>
struct GradCapture {
  GradientStack<S> gradients;  // d score / d h^l, same layer order
  S score_value = S(0);
  Embedding<S> embedding;  // the f_x the score was evaluated on
  ScoreSpec<S> spec;       // resolved form (class weights materialized)
};

template <class S>
std::vector<LayerId> list_layers(const nn::Model<S>& model) {
  if (model.blocks.empty())
    throw UnsupportedModel("arch '" + model.arch +
                           "' has no capturable convolutional blocks");
  std::vector<LayerId> out;
  out.reserve(model.blocks.size());
  for (size_t b = 0; b < model.blocks.size(); ++b)
    out.push_back({static_cast<int>(b) + 1, model.blocks[b].name});
  return out;
}

template <class S>
Capture<S> forward_capture(const nn::Model<S>& model,
                           const ImageTensor<S>& image) {
  if (model.blocks.empty())
    throw UnsupportedModel("arch '" + model.arch +
                           "' has no capturable convolutional blocks");
  image.validate();
  Capture<S> cap;
  cap.trace = model.forward(image.data);
  for (size_t b = 0; b < model.blocks.size(); ++b)
    cap.activations.entries.emplace_back(
        LayerId{static_cast<int>(b) + 1, model.blocks[b].name},
        cap.trace.blocks[b].out);
  cap.embedding = cap.trace.embed_values[model.embed_tap];
  cap.logits = cap.trace.logits;
  return cap;
}

// Which embed-chain position the score reads from: the classifier input for
// logit scores, the model's declared embedding tap for similarity scores.
template <class S>
int effective_tap(const nn::Model<S>& model, ScoreKind kind) {
  return kind == ScoreKind::ClassLogit ? model.last_tap() : model.embed_tap;
}

template <class S>
int resolve_class_index(const nn::Model<S>& model, const std::string& label) {
  for (size_t i = 0; i < model.class_names.size(); ++i)
    if (model.class_names[i] == label) return static_cast<int>(i);
  throw UnknownClass("class '" + label + "' not in model head");
}

// Materialize class weights from the classifier row and sanity-check the
// reference dimension against the tap the score will read.
template <class S>
ScoreSpec<S> resolve_score_spec(const nn::Model<S>& model,
                                const ScoreSpec<S>& spec) {
  ScoreSpec<S> r = spec;
  const int tap = effective_tap(model, spec.kind);
  const Eigen::Index dim = [&] {
    // embed op output dims are fixed by construction; probe via a dry run of
    // the shapes: gap -> channels of last block, dense -> out_dim, etc.
    // Simplest reliable source: run the chain sizes forward.
    Eigen::Index ch = model.blocks.empty() ? model.in_ch
                                           : model.blocks.back().conv.out_ch;
    Eigen::Index rows = model.in_rows, cols = model.in_cols;
    for (const auto& b : model.blocks) {
      rows = b.conv.out_rows(static_cast<int>(rows));
      cols = b.conv.out_cols(static_cast<int>(cols));
      if (b.pool) {
        rows /= 2;
        cols /= 2;
      }
    }
    Eigen::Index d = 0;
    for (int i = 0; i <= tap; ++i) {
      switch (model.embed[i].kind) {
        case nn::EmbedOp<S>::Kind::Gap: d = ch; break;
        case nn::EmbedOp<S>::Kind::Flatten: d = ch * rows * cols; break;
        case nn::EmbedOp<S>::Kind::Dense: d = model.embed[i].dense.out_dim(); break;
        case nn::EmbedOp<S>::Kind::Relu: break;
      }
    }
    return d;
  }();

  if (spec.kind == ScoreKind::ClassLogit) {
    if (spec.class_index) {
      if (!model.classifier)
        throw UnsupportedModel("model has no classification head");
      const int idx = *spec.class_index;
      if (idx < 0 || idx >= model.classifier->out_dim())
        throw UnknownClass("class index " + std::to_string(idx) +
                           " outside model head of size " +
                           std::to_string(model.classifier->out_dim()));
      r.class_weights = model.classifier->weight.row(idx).transpose();
      r.bias = model.classifier->bias[idx];
    }
    if (!r.class_weights)
      throw ConfigError("logit score needs class weights or a class index");
    if (r.class_weights->size() != dim)
      throw ShapeError("class weight length " +
                       std::to_string(r.class_weights->size()) +
                       " does not match embedding dim " + std::to_string(dim));
  } else {
    if (!r.reference_embedding)
      throw ConfigError("similarity score needs a reference embedding");
    if (r.reference_embedding->size() != dim)
      throw ShapeError("reference embedding length " +
                       std::to_string(r.reference_embedding->size()) +
                       " does not match embedding dim " + std::to_string(dim));
  }
  return r;
}

template <class S>
GradCapture<S> backward_capture(const nn::Model<S>& model,
                                const Capture<S>& cap,
                                const ScoreSpec<S>& spec) {
  GradCapture<S> out;
  out.spec = resolve_score_spec(model, spec);
  const int tap = effective_tap(model, spec.kind);
  out.embedding = cap.trace.embed_values[tap];
  out.score_value = score(out.embedding, out.spec);
  if (!std::isfinite(static_cast<double>(out.score_value)))
    throw NonFiniteScore("score evaluated to a non-finite value");
  Vec<S> dtap = score_gradient_at_embedding(out.embedding, out.spec);
  if (!dtap.allFinite())
    throw NonFiniteScore("score gradient is non-finite at the embedding");
  auto grads = model.backward_blocks(cap.trace, dtap, tap);
  for (size_t b = 0; b < grads.size(); ++b) {
    if (!grads[b].allFinite())
      throw NonFiniteScore("score gradient is non-finite at layer " +
                           model.blocks[b].name);
    out.gradients.entries.emplace_back(
        LayerId{static_cast<int>(b) + 1, model.blocks[b].name},
        std::move(grads[b]));
  }
  return out;
}

template <class S>
GradCapture<S> backward_capture(const nn::Model<S>& model,
                                const ImageTensor<S>& image,
                                const ScoreSpec<S>& spec) {
  return backward_capture(model, forward_capture(model, image), spec);
}

// ---------------------------------------------------------------------------
// Central-difference probes of d score / d h^l. Probes whose relu sign
// pattern changes between the +delta and -delta suffix runs straddle a kink
// and are flagged non-smooth; callers should only judge the smooth ones.

template <class S>
struct FdProbe {
  int ch = 0, row = 0, col = 0;
  S analytic = S(0);
  S numeric = S(0);
  bool smooth = true;
};

template <class S>
std::vector<FdProbe<S>> fd_gradient_probes(const nn::Model<S>& model,
                                           const Capture<S>& cap,
                                           const GradCapture<S>& grad,
                                           int layer_index, int count,
                                           uint64_t seed, S delta) {
  const Tensor3<S>* h0 = cap.activations.find(layer_index);
  const Tensor3<S>* g0 = grad.gradients.find(layer_index);
  if (!h0 || !g0)
    throw UnknownLayer("layer index " + std::to_string(layer_index) +
                       " not captured");
  const int tap = effective_tap(model, grad.spec.kind);
  nn::Rng rng(seed ^ 0xfd0b35ULL);
  std::vector<FdProbe<S>> probes;
  probes.reserve(count);
  for (int i = 0; i < count; ++i) {
    FdProbe<S> p;
    p.ch = static_cast<int>(rng.below(h0->channels()));
    p.row = static_cast<int>(rng.below(h0->rows()));
    p.col = static_cast<int>(rng.below(h0->cols()));
    Tensor3<S> hp = *h0, hm = *h0;
    hp[p.ch](p.row, p.col) += delta;
    hm[p.ch](p.row, p.col) -= delta;
    auto rp = model.forward_suffix(layer_index - 1, hp, tap);
    auto rm = model.forward_suffix(layer_index - 1, hm, tap);
    p.smooth = rp.relu_pattern == rm.relu_pattern;
    const S sp = score(rp.tap_value, grad.spec);
    const S sm = score(rm.tap_value, grad.spec);
    p.numeric = (sp - sm) / (S(2) * delta);
    p.analytic = (*g0)[p.ch](p.row, p.col);
    probes.push_back(p);
  }
  return probes;
}

}  // namespace gamkit
