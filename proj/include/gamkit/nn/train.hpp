#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "gamkit/nn/model.hpp"

namespace gamkit::nn {

template <class S>
Vec<S> softmax(const Vec<S>& z) {
  const S m = z.maxCoeff();
  Vec<S> e = (z.array() - m).exp();
  return e / e.sum();
}

// Cross-entropy loss and its gradient at the logits, in one pass.
template <class S>
S softmax_xent(const Vec<S>& logits, int label, Vec<S>& dlogits) {
  Vec<S> p = softmax(logits);
  dlogits = p;
  dlogits[label] -= S(1);
  return -std::log(std::max(p[label], S(1e-30)));
}

template <class S>
struct Adam {
  S lr = S(1e-3), beta1 = S(0.9), beta2 = S(0.999), eps = S(1e-8);
  std::vector<Vec<S>> m, v;
  long t = 0;

  void step(std::vector<ParamView<S>>& ps) {
    if (m.empty()) {
      m.resize(ps.size());
      v.resize(ps.size());
      for (size_t i = 0; i < ps.size(); ++i) {
        m[i] = Vec<S>::Zero(ps[i].size);
        v[i] = Vec<S>::Zero(ps[i].size);
      }
    }
    ++t;
    const S bc1 = S(1) - std::pow(beta1, S(t));
    const S bc2 = S(1) - std::pow(beta2, S(t));
    for (size_t i = 0; i < ps.size(); ++i) {
      auto& p = ps[i];
      for (Eigen::Index j = 0; j < p.size; ++j) {
        const S g = p.grad[j];
        m[i][j] = beta1 * m[i][j] + (S(1) - beta1) * g;
        v[i][j] = beta2 * v[i][j] + (S(1) - beta2) * g * g;
        p.value[j] -= lr * (m[i][j] / bc1) / (std::sqrt(v[i][j] / bc2) + eps);
      }
    }
  }
};

template <class S>
struct Sample {
  Tensor3<S> image;
  int label = 0;
};

using Sampled = Sample<double>;

template <class S>
struct TrainConfig {
  S lr = S(1e-3);
  int batch = 16;
  int max_epochs = 60;
  double target_accuracy = 0.95;
  uint64_t seed = 0;
};

template <class S>
double accuracy(Model<S>& model, const std::vector<Sample<S>>& data) {
  int hit = 0;
  for (const auto& s : data) {
    auto tr = model.forward(s.image);
    Eigen::Index pred;
    tr.logits.maxCoeff(&pred);
    if (static_cast<int>(pred) == s.label) ++hit;
  }
  return data.empty() ? 0.0 : double(hit) / double(data.size());
}

// Minibatch Adam until the training accuracy target is reached. Throws
// TrainingBudgetExceeded if max_epochs pass without getting there.
template <class S>
double train_until(Model<S>& model, const std::vector<Sample<S>>& data,
                   const TrainConfig<S>& cfg) {
  if (data.empty()) throw EmptyInput("empty training set");
  Adam<S> opt;
  opt.lr = cfg.lr;
  Rng rng(cfg.seed ^ 0x7261696eULL);
  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), size_t(0));
  auto ps = model.params();

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    // Fisher-Yates with our own rng so runs are reproducible across stdlibs
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.below(i)]);
    for (size_t at = 0; at < order.size(); at += cfg.batch) {
      model.zero_grad();
      const size_t hi = std::min(at + cfg.batch, order.size());
      for (size_t i = at; i < hi; ++i) {
        const auto& s = data[order[i]];
        auto tr = model.forward(s.image, /*keep_cols=*/true);
        Vec<S> dlogits;
        softmax_xent(tr.logits, s.label, dlogits);
        dlogits /= S(hi - at);
        model.backward_train(tr, dlogits);
      }
      opt.step(ps);
    }
    const double acc = accuracy(model, data);
    if (acc >= cfg.target_accuracy) return acc;
  }
  throw TrainingBudgetExceeded(
      "training accuracy target " + std::to_string(cfg.target_accuracy) +
      " not reached within " + std::to_string(cfg.max_epochs) + " epochs");
}

}  // namespace gamkit::nn
