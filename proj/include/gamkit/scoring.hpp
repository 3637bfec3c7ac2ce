#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "gamkit/types.hpp"

namespace gamkit {

enum class ScoreKind { ClassLogit, Dot, Cosine };

inline const char* score_kind_name(ScoreKind k) {
  switch (k) {
    case ScoreKind::ClassLogit: return "logit";
    case ScoreKind::Dot: return "dot";
    case ScoreKind::Cosine: return "cosine";
  }
  return "?";
}

inline ScoreKind score_kind_from_name(const std::string& s) {
  if (s == "logit") return ScoreKind::ClassLogit;
  if (s == "dot") return ScoreKind::Dot;
  if (s == "cosine") return ScoreKind::Cosine;
  throw ConfigError("unknown score kind '" + s + "' (expected logit, dot or cosine)");
}

// What to differentiate: a class logit against an explicit weight vector (or a
// class index resolved against the model head), or a similarity against a
// reference embedding.
template <class S>
struct ScoreSpec {
  ScoreKind kind = ScoreKind::Dot;
  std::optional<Vec<S>> class_weights;  // with optional bias below
  S bias = S(0);
  std::optional<int> class_index;
  std::optional<Vec<S>> reference_embedding;

  static ScoreSpec logit(Vec<S> w, S b = S(0)) {
    ScoreSpec spec;
    spec.kind = ScoreKind::ClassLogit;
    spec.class_weights = std::move(w);
    spec.bias = b;
    return spec;
  }
  static ScoreSpec logit_class(int index) {
    ScoreSpec spec;
    spec.kind = ScoreKind::ClassLogit;
    spec.class_index = index;
    return spec;
  }
  static ScoreSpec dot(Vec<S> reference) {
    ScoreSpec spec;
    spec.kind = ScoreKind::Dot;
    spec.reference_embedding = std::move(reference);
    return spec;
  }
  static ScoreSpec cosine(Vec<S> reference) {
    ScoreSpec spec;
    spec.kind = ScoreKind::Cosine;
    spec.reference_embedding = std::move(reference);
    return spec;
  }

  // True once class_index has been resolved (or was never needed).
  bool resolved() const {
    switch (kind) {
      case ScoreKind::ClassLogit:
        return class_weights.has_value() != class_index.has_value();
      case ScoreKind::Dot:
      case ScoreKind::Cosine:
        return reference_embedding.has_value();
    }
    return false;
  }
};

using ScoreSpecd = ScoreSpec<double>;

template <class S>
S score(const Embedding<S>& fx, const ScoreSpec<S>& spec) {
  switch (spec.kind) {
    case ScoreKind::ClassLogit: {
      if (!spec.class_weights)
        throw ConfigError("score: class weights not resolved");
      if (spec.class_weights->size() != fx.size())
        throw ShapeError("score: class weight / embedding length mismatch");
      return spec.class_weights->dot(fx) + spec.bias;
    }
    case ScoreKind::Dot: {
      const Vec<S>& fy = spec.reference_embedding.value();
      if (fy.size() != fx.size())
        throw ShapeError("score: reference / embedding length mismatch");
      return fx.dot(fy);
    }
    case ScoreKind::Cosine: {
      const Vec<S>& fy = spec.reference_embedding.value();
      if (fy.size() != fx.size())
        throw ShapeError("score: reference / embedding length mismatch");
      const S nx = fx.norm();
      const S ny = fy.norm();
      if (nx == S(0) || ny == S(0))
        throw DegenerateEmbedding("cosine score over a zero-norm embedding");
      return fx.dot(fy) / (nx * ny);
    }
  }
  throw ConfigError("score: bad kind");
}

// d cosine(fx, fy) / d fx = fy / (|fx||fy|)  -  cos * fx / |fx|^2.
// Both terms are entrywise nonnegative for nonnegative embeddings, so the
// difference can go negative even then.
template <class S>
Vec<S> cosine_gradient_analytic(const Embedding<S>& fx, const Embedding<S>& fy) {
  if (fx.size() != fy.size())
    throw ShapeError("cosine_gradient_analytic: length mismatch");
  const S nx = fx.norm();
  const S ny = fy.norm();
  if (nx == S(0) || ny == S(0))
    throw DegenerateEmbedding("cosine gradient over a zero-norm embedding");
  const S c = fx.dot(fy) / (nx * ny);
  return fy / (nx * ny) - c * fx / (nx * nx);
}

// d s / d fx for any spec; the starting point of every backward pass.
template <class S>
Vec<S> score_gradient_at_embedding(const Embedding<S>& fx,
                                   const ScoreSpec<S>& spec) {
  switch (spec.kind) {
    case ScoreKind::ClassLogit:
      if (!spec.class_weights)
        throw ConfigError("score gradient: class weights not resolved");
      return *spec.class_weights;  // bias drops out
    case ScoreKind::Dot:
      return spec.reference_embedding.value();
    case ScoreKind::Cosine:
      return cosine_gradient_analytic(fx, spec.reference_embedding.value());
  }
  throw ConfigError("score gradient: bad kind");
}

}  // namespace gamkit
