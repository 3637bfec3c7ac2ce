#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "gamkit/explain.hpp"

namespace gamkit {

// Spearman rank correlation between two flattened grids, with average ranks
// on ties. A degenerate (constant) grid correlates 0 with anything; a flat
// map carries no ordering to compare.
template <class S>
double map_rank_correlation(const Mat<S>& a, const Mat<S>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError("map_rank_correlation: grid shape mismatch");
  const Eigen::Index n = a.size();
  if (n < 2) return 0.0;
  if (a.maxCoeff() == a.minCoeff() || b.maxCoeff() == b.minCoeff()) return 0.0;

  auto ranks = [n](const Mat<S>& m) {
    std::vector<Eigen::Index> idx(n);
    std::iota(idx.begin(), idx.end(), Eigen::Index(0));
    std::sort(idx.begin(), idx.end(), [&](Eigen::Index x, Eigen::Index y) {
      return m.data()[x] < m.data()[y];
    });
    std::vector<double> r(n);
    Eigen::Index i = 0;
    while (i < n) {
      Eigen::Index j = i;
      while (j + 1 < n && m.data()[idx[j + 1]] == m.data()[idx[i]]) ++j;
      const double avg = 0.5 * double(i + j) + 1.0;  // 1-based average rank
      for (Eigen::Index k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };

  const auto ra = ranks(a), rb = ranks(b);
  double ma = 0, mb = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= double(n);
  mb /= double(n);
  double cov = 0, va = 0, vb = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double da = ra[i] - ma, db = rb[i] - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va == 0.0 || vb == 0.0) return 0.0;
  return cov / std::sqrt(va * vb);
}

template <class S>
double map_rank_correlation(const SaliencyMap<S>& a, const SaliencyMap<S>& b) {
  if (a.degenerate || b.degenerate) return 0.0;
  return map_rank_correlation(a.grid, b.grid);
}

// ---------------------------------------------------------------------------

struct SanityThresholds {
  double tau_self = 0.99;  // reproducing the same model must correlate above
  double tau_cross = 0.5;  // the randomized run must fall below
};

struct SanityReport {
  std::string test;  // "parameter_randomization" or "data_randomization"
  Method method = Method::GAM;
  int n = 1;
  int images = 0;
  double self_similarity = 0;   // two runs on the intact model
  double cross_similarity = 0;  // intact vs randomized
  SanityThresholds thresholds;
  bool pass = false;
};

template <class S>
struct SanityProbe {
  ImageTensor<S> image;
  ScoreSpec<S> spec;
};

// Mean per-probe correlation between maps from two models, plus the
// determinism control of re-running the first model against itself.
template <class S>
std::pair<double, double> compare_model_maps(
    const nn::Model<S>& model_a, const nn::Model<S>& model_b,
    const std::vector<SanityProbe<S>>& probes, Method method, int n) {
  if (probes.empty()) throw EmptyInput("sanity comparison needs probe images");
  double self_acc = 0, cross_acc = 0;
  for (const auto& p : probes) {
    auto ea1 = explain(model_a, p.image, method, n, p.spec);
    auto ea2 = explain(model_a, p.image, method, n, p.spec);
    auto eb = explain(model_b, p.image, method, n, p.spec);
    self_acc += map_rank_correlation(ea1.map, ea2.map);
    cross_acc += map_rank_correlation(ea1.map, eb.map);
  }
  const double k = double(probes.size());
  return {self_acc / k, cross_acc / k};
}

// Parameter randomization, full-cascade variant: re-initialize every weight
// of a copy of the trained model and demand the maps lose their ordering.
template <class S>
SanityReport parameter_randomization_test(const nn::Model<S>& trained,
                                          const std::vector<SanityProbe<S>>& probes,
                                          Method method, int n,
                                          uint64_t reinit_seed,
                                          SanityThresholds thr = {}) {
  if (probes.size() < 20)
    throw ConfigError("parameter randomization needs at least 20 images, got " +
                      std::to_string(probes.size()));
  nn::Model<S> randomized = trained;
  randomized.init_random(reinit_seed);
  SanityReport rep;
  rep.test = "parameter_randomization";
  rep.method = method;
  rep.n = n;
  rep.images = static_cast<int>(probes.size());
  std::tie(rep.self_similarity, rep.cross_similarity) =
      compare_model_maps(trained, randomized, probes, method, n);
  rep.thresholds = thr;
  rep.pass = rep.self_similarity > thr.tau_self &&
             rep.cross_similarity < thr.tau_cross;
  return rep;
}

// Data randomization: the caller trains one model on true labels and one on
// permuted labels; maps from the two must disagree.
template <class S>
SanityReport data_randomization_test(const nn::Model<S>& model_true,
                                     const nn::Model<S>& model_permuted,
                                     const std::vector<SanityProbe<S>>& probes,
                                     Method method, int n,
                                     SanityThresholds thr = {}) {
  SanityReport rep;
  rep.test = "data_randomization";
  rep.method = method;
  rep.n = n;
  rep.images = static_cast<int>(probes.size());
  std::tie(rep.self_similarity, rep.cross_similarity) =
      compare_model_maps(model_true, model_permuted, probes, method, n);
  rep.thresholds = thr;
  rep.pass = rep.self_similarity > thr.tau_self &&
             rep.cross_similarity < thr.tau_cross;
  return rep;
}

}  // namespace gamkit
