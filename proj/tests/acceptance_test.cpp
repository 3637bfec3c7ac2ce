// Acceptance gate. Each criterion prints exactly one status line; the doctest
// assertions after the line make ctest fail when a criterion does. Criterion 9
// is directional-only and reports WARN instead of FAIL when the desk-scale
// proxy does not match the expected direction.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <gamkit/backend.hpp>
#include <gamkit/datasets.hpp>
#include <gamkit/explain.hpp>
#include <gamkit/io/image.hpp>
#include <gamkit/metrics.hpp>
#include <gamkit/saliency.hpp>
#include <gamkit/sanity.hpp>

#include "test_util.hpp"

using namespace gamkit;
using Clock = std::chrono::steady_clock;

namespace {

double secs_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(int idx, const char* status, const std::string& detail) {
  std::string line = "[criterion " + std::to_string(idx) + "] " + status;
  if (!detail.empty()) line += "  (" + detail + ")";
  std::printf("%s\n", line.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

// ---------------------------------------------------------------------------
// Independent re-implementations used as oracles. These deliberately avoid the
// library's code paths: per-pixel gather instead of operator matrices, a
// piecewise |x| kernel instead of precomputed offset weights, scalar loops
// instead of Eigen expressions.

double keys_kernel(double x) {
  const double A = -0.75;
  x = std::abs(x);
  if (x <= 1.0) return ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((A * x - 5.0 * A) * x + 8.0 * A) * x - 4.0 * A;
  return 0.0;
}

Matd oracle_resize(const Matd& src, int out_rows, int out_cols) {
  const int in_r = static_cast<int>(src.rows());
  const int in_c = static_cast<int>(src.cols());
  Matd out(out_rows, out_cols);
  for (int r = 0; r < out_rows; ++r) {
    const double sr = (r + 0.5) * double(in_r) / out_rows - 0.5;
    const int fr = static_cast<int>(std::floor(sr));
    for (int c = 0; c < out_cols; ++c) {
      const double sc = (c + 0.5) * double(in_c) / out_cols - 0.5;
      const int fc = static_cast<int>(std::floor(sc));
      double acc = 0.0;
      for (int i = -1; i <= 2; ++i)
        for (int j = -1; j <= 2; ++j) {
          const int rr = std::clamp(fr + i, 0, in_r - 1);
          const int cc = std::clamp(fc + j, 0, in_c - 1);
          acc += keys_kernel(sr - (fr + i)) * keys_kernel(sc - (fc + j)) *
                 src(rr, cc);
        }
      out(r, c) = acc;
    }
  }
  return out;
}

struct OracleMap {
  Matd grid;
  bool degenerate = false;
};

OracleMap oracle_gam(const Tensor3<double>& h, const Tensor3<double>& g,
                     int out_rows, int out_cols) {
  Matd acc = Matd::Zero(h.rows(), h.cols());
  for (int k = 0; k < h.channels(); ++k)
    for (int r = 0; r < h.rows(); ++r)
      for (int c = 0; c < h.cols(); ++c)
        acc(r, c) += std::max(h[k](r, c), 0.0) * std::max(g[k](r, c), 0.0);
  Matd rs = oracle_resize(acc, out_rows, out_cols);
  double lo = rs(0, 0), hi = rs(0, 0);
  for (int r = 0; r < out_rows; ++r)
    for (int c = 0; c < out_cols; ++c) {
      lo = std::min(lo, rs(r, c));
      hi = std::max(hi, rs(r, c));
    }
  OracleMap out;
  if (hi > lo) {
    out.grid = Matd(out_rows, out_cols);
    for (int r = 0; r < out_rows; ++r)
      for (int c = 0; c < out_cols; ++c) out.grid(r, c) = (rs(r, c) - lo) / (hi - lo);
  } else {
    out.grid = Matd::Zero(out_rows, out_cols);
    out.degenerate = true;
  }
  return out;
}

// Trained desk-scale model shared by criteria 8 and 9 (training it twice
// would double the slowest part of the gate).
std::optional<nn::Model<double>> g_trained;

std::string slurp_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

// ---------------------------------------------------------------------------

TEST_CASE("criterion 1: layer map and aggregate match a direct oracle") {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  auto dim = [&](int hi) { return 1 + static_cast<int>(rng() % hi); };

  double max_err = 0.0, max_agg_err = 0.0;
  bool flags_agree = true;
  for (int it = 0; it < 1000; ++it) {
    // Sources start at 2x2: a constant nonzero 1x1 source resizes to an
    // analytically constant map whose min-max normalization amplifies rounding
    // noise to full range, so no two implementations can agree there.
    const int ch = dim(4), rows = 1 + dim(5), cols = 1 + dim(5);
    const int R = dim(16), C = dim(16);
    Tensor3<double> h(ch, rows, cols), g(ch, rows, cols);
    for (int k = 0; k < ch; ++k)
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
          h[k](r, c) = val(rng);
          g[k](r, c) = val(rng);
        }
    auto lib = gam_layer_map(h, g, R, C);
    auto orc = oracle_gam(h, g, R, C);
    max_err = std::max(max_err, (lib.grid - orc.grid).cwiseAbs().maxCoeff());
    flags_agree = flags_agree && lib.degenerate == orc.degenerate;

    // Aggregate a few same-shape maps every iteration and compare against a
    // plain scalar-loop mean of the per-layer grids.
    if (it % 5 == 0) {
      const int n = 2 + static_cast<int>(rng() % 3);
      std::vector<SaliencyMap<double>> maps{lib};
      for (int m = 1; m < n; ++m) {
        Tensor3<double> h2(ch, rows, cols), g2(ch, rows, cols);
        for (int k = 0; k < ch; ++k)
          for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) {
              h2[k](r, c) = val(rng);
              g2[k](r, c) = val(rng);
            }
        maps.push_back(gam_layer_map(h2, g2, R, C));
      }
      auto agg = gam_aggregate(maps);
      for (int r = 0; r < R; ++r)
        for (int c = 0; c < C; ++c) {
          double mean = 0.0;
          for (const auto& m : maps) mean += m.grid(r, c);
          mean /= double(n);
          max_agg_err = std::max(max_agg_err, std::abs(agg.grid(r, c) - mean));
        }
      flags_agree = flags_agree && agg.n_layers == n;
    }
  }
  const double dt = secs_since(t0);
  const bool ok = max_err <= 1e-6 && max_agg_err <= 1e-6 && flags_agree && dt < 10.0;
  report(1, ok ? "PASS" : "FAIL",
         fmt("1000 random stacks: layer-map err %.2e, aggregate err %.2e, %.1fs",
             max_err, max_agg_err, dt));
  CHECK(max_err <= 1e-6);
  CHECK(max_agg_err <= 1e-6);
  CHECK(flags_agree);
  CHECK(dt < 10.0);
}

TEST_CASE("criterion 2: captured gradients match central differences") {
  const auto t0 = Clock::now();
  auto model = nn::build_model<double>("toycnn");
  model.init_random(1234);
  std::mt19937_64 rng(55);
  ImageTensor<double> img(testutil::random_tensor(rng, 1, 8, 8, 0.0, 1.0), true);
  auto cap = forward_capture(model, img);
  auto grad = backward_capture(model, cap, ScoreSpec<double>::logit_class(3));

  int smooth = 0, total = 0;
  double max_rel = 0.0;
  for (int layer : {2, 1}) {
    auto probes = fd_gradient_probes(model, cap, grad, layer, 64, 7u + layer, 1e-5);
    for (const auto& p : probes) {
      ++total;
      if (!p.smooth) continue;  // straddles a relu kink; the FD slope is junk
      ++smooth;
      max_rel = std::max(max_rel, std::abs(p.analytic - p.numeric) /
                                      std::max(std::abs(p.analytic), 1e-6));
    }
  }
  const double dt = secs_since(t0);
  const bool ok = smooth >= 64 && max_rel < 1e-3 && dt < 30.0;
  report(2, ok ? "PASS" : "FAIL",
         fmt("toycnn: %d smooth probes of %d, max rel err %.2e, %.1fs", smooth,
             total, max_rel, dt));
  CHECK(smooth >= 64);
  CHECK(max_rel < 1e-3);
  CHECK(dt < 30.0);
}

TEST_CASE("criterion 3: dot-score gradients at the deepest layer stay nonnegative") {
  auto model = nn::build_model<double>("toycnn");
  model.init_random(77);
  std::mt19937_64 rng(78);
  // Reference embedding from a forward pass: relu + gap makes it nonnegative,
  // which is the regime the nonnegativity argument applies to.
  ImageTensor<double> ref(testutil::random_tensor(rng, 1, 8, 8, 0.0, 1.0), true);
  const Vec<double> fy = forward_capture(model, ref).embedding;
  REQUIRE(fy.minCoeff() >= 0.0);

  double gmin = 0.0;
  for (int i = 0; i < 100; ++i) {
    ImageTensor<double> x(testutil::random_tensor(rng, 1, 8, 8, 0.0, 1.0), true);
    auto grad = backward_capture(model, x, ScoreSpec<double>::dot(fy));
    const Tensor3<double>& deepest = grad.gradients.entries.back().second;
    for (int k = 0; k < deepest.channels(); ++k)
      gmin = std::min(gmin, deepest[k].minCoeff());
  }
  const bool ok = gmin >= -1e-9;
  report(3, ok ? "PASS" : "FAIL",
         fmt("min deepest-layer gradient entry %.2e over 100 inputs", gmin));
  CHECK(gmin >= -1e-9);
}

TEST_CASE("criterion 4: cosine gradient matches the closed form and goes negative") {
  std::mt19937_64 rng(404);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double max_rel_closed = 0.0, max_rel_fd = 0.0;
  int negative_pairs = 0;
  for (int i = 0; i < 100; ++i) {
    const int dim = 3 + i % 14;
    // Strictly positive embeddings: any negative gradient entry below can only
    // come from the subtracted projection term.
    Vec<double> fx(dim), fy(dim);
    for (int j = 0; j < dim; ++j) {
      fx[j] = std::abs(gauss(rng)) + 0.05;
      fy[j] = std::abs(gauss(rng)) + 0.05;
    }
    const auto spec = ScoreSpec<double>::cosine(fy);
    const Vec<double> lib = score_gradient_at_embedding(fx, spec);

    // Direct quotient-rule evaluation, all scalar arithmetic.
    double nx2 = 0.0, ny2 = 0.0, dot = 0.0;
    for (int j = 0; j < dim; ++j) {
      nx2 += fx[j] * fx[j];
      ny2 += fy[j] * fy[j];
      dot += fx[j] * fy[j];
    }
    const double nx = std::sqrt(nx2), ny = std::sqrt(ny2);
    const double cosv = dot / (nx * ny);
    for (int j = 0; j < dim; ++j) {
      const double mine = fy[j] / (nx * ny) - cosv * fx[j] / nx2;
      max_rel_closed =
          std::max(max_rel_closed,
                   std::abs(lib[j] - mine) / std::max(std::abs(mine), 1e-9));
      // Central difference on the score itself as a second, dumber witness.
      const double delta = 1e-6 * std::max(1.0, std::abs(fx[j]));
      Vec<double> xp = fx, xm = fx;
      xp[j] += delta;
      xm[j] -= delta;
      const double num = (score(xp, spec) - score(xm, spec)) / (2.0 * delta);
      max_rel_fd = std::max(
          max_rel_fd, std::abs(lib[j] - num) / std::max(std::abs(lib[j]), 1e-6));
    }
    if (lib.minCoeff() < 0.0) ++negative_pairs;
  }
  const bool ok = max_rel_closed <= 1e-6 && max_rel_fd <= 1e-4 && negative_pairs > 0;
  report(4, ok ? "PASS" : "FAIL",
         fmt("closed-form rel err %.2e, fd rel err %.2e, negative entries in "
             "%d/100 pairs",
             max_rel_closed, max_rel_fd, negative_pairs));
  CHECK(max_rel_closed <= 1e-6);
  CHECK(max_rel_fd <= 1e-4);
  CHECK(negative_pairs > 0);
}

TEST_CASE("criterion 5: the masking fixture blanks gc exactly while gam keeps it") {
  // Channel A supports the target pixel (activation 1, gradient 1); channel B
  // has a strongly negative pooled gradient over a larger activation there.
  Tensor3<double> h(2, 3, 3), g(2, 3, 3);
  h[0].setZero();
  h[1].setZero();
  g[0].setZero();
  g[1].setZero();
  h[0](1, 1) = 1.0;
  g[0](1, 1) = 1.0;   // pooled weight +1/9
  h[1](1, 1) = 2.0;
  g[1](1, 1) = -9.0;  // pooled weight -1: weighted sum 1/9 - 2 < 0
  h[0](2, 2) = 1.0;   // keeps the gc map from collapsing to a constant
  g[0](2, 2) = 1.0;

  auto [gc_map, dec] = grad_cam(h, g, 3, 3);
  auto gam_map = gam_layer_map(h, g, 3, 3);
  const bool ok = dec.total(1, 1) < 0.0 && gc_map.grid(1, 1) == 0.0 &&
                  gam_map.grid(1, 1) > 0.0 && !gc_map.degenerate;
  report(5, ok ? "PASS" : "FAIL",
         fmt("gc intensity %.1f at the conflicted pixel, gam %.3f",
             gc_map.grid(1, 1), gam_map.grid(1, 1)));
  CHECK(dec.total(1, 1) < 0.0);
  CHECK(gc_map.grid(1, 1) == 0.0);
  CHECK(gam_map.grid(1, 1) > 0.0);
  CHECK_FALSE(gc_map.degenerate);
}

TEST_CASE("criterion 6: gc++ flags the exp overflow regime and stays finite") {
  std::mt19937_64 rng(606);
  auto h = testutil::random_tensor(rng, 3, 4, 4, 0.0, 2.0);
  auto g = testutil::random_tensor(rng, 3, 4, 4, -1.0, 1.0);

  auto below = grad_campp(h, g, 709.0, 8, 8);
  bool ok = !below.overflow;
  bool maps_match = true;
  for (double s : {710.0, 800.0, 1e6}) {
    auto res = grad_campp(h, g, s, 8, 8);
    ok = ok && res.overflow && res.map.grid.allFinite() &&
         res.map.grid.minCoeff() >= 0.0 && res.map.grid.maxCoeff() <= 1.0;
    // The exp factor cancels out of the coefficients, so the map itself must
    // not depend on the score magnitude at all.
    maps_match = maps_match && (res.map.grid - below.map.grid).cwiseAbs().maxCoeff() == 0.0;
  }
  ok = ok && maps_match;
  report(6, ok ? "PASS" : "FAIL",
         fmt("no flag at s=709, flag at s>=710; maps finite in [0,1] and "
             "identical across s"));
  CHECK(ok);
}

TEST_CASE("criterion 7: metric fixtures are exact and the threshold sweep is optimal") {
  using P = std::vector<std::pair<double, double>>;
  bool ok = true;

  ok = ok && adp(P{{10.0, 5.0}}) == 50.0;
  ok = ok && adp(P{{10.0, 12.0}, {10.0, 10.0}}) == 0.0;
  ok = ok && adp(P{{10.0, 5.0}, {20.0, 30.0}}) == 25.0;
  ok = ok && pic(P{{1.0, 2.0}, {1.0, 3.0}}) == 100.0;
  ok = ok && pic(P{{5.0, 5.0}, {7.0, 7.0}}) == 0.0;
  ok = ok && pic(P{{1.0, 2.0}, {1.0, 0.0}, {1.0, 3.0}, {1.0, 1.0}}) == 50.0;

  const std::array<int, 4> a{0, 0, 2, 2}, b{1, 0, 3, 2}, c{2, 2, 3, 3}, d{0, 0, 1, 1};
  ok = ok && iou_masks(rasterize_bbox(a, 3, 4), rasterize_bbox(a, 3, 4)) == 1.0;
  ok = ok && iou_masks(rasterize_bbox(d, 4, 4), rasterize_bbox(c, 4, 4)) == 0.0;
  ok = ok && iou_masks(rasterize_bbox(a, 2, 3), rasterize_bbox(b, 2, 3)) == 1.0 / 3.0;

  // Indicator maps: every threshold binarizes them back to the ground truth,
  // so the sweep must fall back to the smallest theta.
  GroundTruthRegion gt_a, gt_b;
  gt_a.bbox = std::array<int, 4>{1, 1, 3, 3};
  gt_b.bbox = std::array<int, 4>{0, 2, 2, 4};
  std::vector<Matd> ind(2, Matd::Zero(4, 4));
  for (int r = 1; r < 3; ++r)
    for (int c = 1; c < 3; ++c) ind[0](r, c) = 1.0;
  for (int r = 2; r < 4; ++r)
    for (int c = 0; c < 2; ++c) ind[1](r, c) = 1.0;
  auto tie = select_threshold<double>(ind, {gt_a, gt_b});
  ok = ok && tie.first == 0.01 && tie.second == 1.0;

  // Two-level map where exactly theta = 0.50 recovers the box: the 0.49 ring
  // floods the prediction below it and everything above erases the box.
  Matd two = Matd::Zero(8, 8);
  for (int r = 1; r < 6; ++r)
    for (int c = 1; c < 6; ++c) two(r, c) = 0.49;
  for (int r = 2; r < 5; ++r)
    for (int c = 2; c < 5; ++c) two(r, c) = 0.50;
  GroundTruthRegion gt_two;
  gt_two.bbox = std::array<int, 4>{2, 2, 5, 5};
  auto picked = select_threshold<double>({two}, {gt_two});
  ok = ok && picked.first == 0.50 && picked.second == 1.0;

  // Exhaustive re-scan with independent binarization and pixel counting.
  double best_theta = 0.0, best_iou = -1.0;
  for (int i = 1; i <= 99; ++i) {
    const double theta = double(i) / 100.0;
    long inter = 0, uni = 0;
    for (int r = 0; r < 8; ++r)
      for (int c = 0; c < 8; ++c) {
        const bool pred = two(r, c) >= theta;
        const bool gt = r >= 2 && r < 5 && c >= 2 && c < 5;
        inter += pred && gt;
        uni += pred || gt;
      }
    const double v = uni == 0 ? 0.0 : double(inter) / double(uni);
    if (v > best_iou) {
      best_iou = v;
      best_theta = theta;
    }
  }
  ok = ok && picked.first == best_theta && picked.second == best_iou;

  // Degenerate all-zero map: flat zero IoU, tie-break again.
  auto flat = select_threshold<double>({Matd::Zero(8, 8)}, {gt_two});
  ok = ok && flat.first == 0.01 && flat.second == 0.0;

  report(7, ok ? "PASS" : "FAIL",
         fmt("adp/pic/iou fixtures exact; sweep picked theta=%.2f iou=%.2f, "
             "re-scan agrees",
             picked.first, picked.second));
  CHECK(ok);
}

TEST_CASE("criterion 8: randomization sanity tests pass at desk scale") {
  const auto t0 = Clock::now();
  try {
    DigitSetConfig dc;
    dc.per_class = 40;
    dc.seed = 8;
    const auto data = synth_digits<double>(dc);

    auto model_true = nn::build_model<double>("lenet");
    model_true.init_random(8);
    nn::TrainConfig<double> tc;
    tc.lr = 2e-3;
    tc.batch = 16;
    tc.max_epochs = 200;
    tc.target_accuracy = 0.99;
    tc.seed = 10;
    const double acc = nn::train_until(model_true, data, tc);

    const auto perm = with_permuted_labels(data, 24);
    auto model_perm = nn::build_model<double>("lenet");
    model_perm.init_random(108);
    nn::TrainConfig<double> tp = tc;
    tp.max_epochs = 400;
    tp.target_accuracy = 0.95;  // memorization, not generalization
    tp.seed = 14;
    const double acc_perm = nn::train_until(model_perm, perm, tp);

    std::vector<SanityProbe<double>> probes;
    const int total = static_cast<int>(data.size());
    const int count = 24, stride = total / count;
    for (int i = 0; i < count; ++i) {
      const auto& s = data[(i * stride) % total];
      probes.push_back({ImageTensor<double>(s.image, true),
                        ScoreSpec<double>::logit_class(s.label)});
    }
    const auto rp =
        parameter_randomization_test(model_true, probes, Method::GAM, 1, 30u);
    const auto rd =
        data_randomization_test(model_true, model_perm, probes, Method::GAM, 1);

    const double dt = secs_since(t0);
    const bool ok = rp.pass && rd.pass && dt < 900.0;
    report(8, ok ? "PASS" : "FAIL",
           fmt("acc %.3f / permuted %.3f; param self=%.3f cross=%.3f, data "
               "self=%.3f cross=%.3f, %.0fs",
               acc, acc_perm, rp.self_similarity, rp.cross_similarity,
               rd.self_similarity, rd.cross_similarity, dt));
    CHECK(rp.pass);
    CHECK(rd.pass);
    CHECK(dt < 900.0);
    g_trained = std::move(model_true);
  } catch (const std::exception& e) {
    report(8, "FAIL", fmt("exception: %s", e.what()));
    CHECK_MESSAGE(false, e.what());
  }
}

TEST_CASE("criterion 9: deeper aggregation does not hurt adp (soft, desk proxy)") {
  // No pretrained DenseNet/ResNet is available in this environment, so the
  // directional check runs on the trained desk model instead. It only warns on
  // mismatch: a 100-image sample of a small synthetic model is not strong
  // evidence either way.
  if (!g_trained) {
    report(9, "WARN", "no trained desk model (criterion 8 did not finish)");
    return;
  }
  try {
    DigitSetConfig ec;
    ec.per_class = 10;
    ec.seed = 9;
    const auto eval = synth_digits<double>(ec);
    std::array<double, 3> adp_for_n{0.0, 0.0, 0.0};
    for (int n : {1, 2}) {
      std::vector<std::pair<double, double>> pairs;
      for (const auto& s : eval) {
        EvalItem<double> item;
        item.id = "probe";
        item.image = ImageTensor<double>(s.image, true);
        item.spec = ScoreSpec<double>::logit_class(s.label);
        item.prob_class = s.label;
        auto out = evaluate_item(*g_trained, item, Method::GAM, n);
        if (out.record.ok && !out.record.filtered)
          pairs.push_back({out.record.y, out.record.o});
      }
      REQUIRE(pairs.size() >= 90);
      adp_for_n[n] = adp(pairs);
    }
    const bool ok = adp_for_n[2] <= adp_for_n[1];
    report(9, ok ? "PASS" : "WARN",
           fmt("desk proxy, 100 images: adp n=2 %.2f vs n=1 %.2f%s", adp_for_n[2],
               adp_for_n[1],
               ok ? "" : " (direction not reproduced at this sample size)"));
    CHECK(true);  // soft criterion: never fails the gate
  } catch (const std::exception& e) {
    report(9, "WARN", fmt("proxy evaluation failed: %s", e.what()));
  }
}

TEST_CASE("criterion 10: the explain command is byte-deterministic") {
  testutil::TempDir td("gamkit-accept");
  auto model = nn::build_model<double>("lenet");
  model.init_random(5);
  nn::save_weights(model, td.file("w.gwts"));

  DigitSetConfig dc;
  dc.per_class = 1;
  dc.seed = 12;
  const auto sample = synth_digits<double>(dc).front();
  io::write_png_gray(td.file("digit.png"), sample.image[0]);

  std::filesystem::create_directories(td.path() / "a");
  std::filesystem::create_directories(td.path() / "b");
  const std::string base = std::string(GAMKIT_BIN_PATH) + " explain " +
                           td.file("digit.png") + " --model lenet --weights " +
                           td.file("w.gwts") +
                           " --method gam --n 1 --score logit --class " +
                           std::to_string(sample.label) + " --seed 7 --out ";
  const int rc_a = std::system((base + td.file("a") + " > /dev/null 2>&1").c_str());
  const int rc_b = std::system((base + td.file("b") + " > /dev/null 2>&1").c_str());
  REQUIRE(rc_a == 0);
  REQUIRE(rc_b == 0);

  const std::string smap_a = slurp_bytes(td.file("a") + "/digit-gam-n1.smap");
  const std::string smap_b = slurp_bytes(td.file("b") + "/digit-gam-n1.smap");
  const std::string png_a = slurp_bytes(td.file("a") + "/digit-gam-n1.png");
  const std::string png_b = slurp_bytes(td.file("b") + "/digit-gam-n1.png");
  const bool ok = !smap_a.empty() && smap_a == smap_b && png_a == png_b;
  report(10, ok ? "PASS" : "FAIL",
         fmt("two runs, smap %zu bytes byte-identical, overlay png too",
             smap_a.size()));
  CHECK(!smap_a.empty());
  CHECK(smap_a == smap_b);
  CHECK(png_a == png_b);
}
