#include <cstdio>
#include <filesystem>

#include "cli_internal.hpp"
#include "gamkit/datasets.hpp"
#include "gamkit/metrics.hpp"

namespace gamkit::cli {

namespace fs = std::filesystem;

namespace {

std::string img_name(const std::string& split, int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%04d.png", split.c_str(), i);
  return buf;
}

// 3x3 box blur with clamped borders; knocks the per-pixel noise down enough
// that thresholding recovers the glyph as one solid component.
Eigen::MatrixXd box3(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) {
      double acc = 0;
      int cnt = 0;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || cc < 0 || rr >= m.rows() || cc >= m.cols()) continue;
          acc += m(rr, cc);
          ++cnt;
        }
      out(r, c) = acc / cnt;
    }
  return out;
}

}  // namespace

// Generate the synthetic digit corpus this toolkit demos on: a training
// split with labels, an eval split with ink bounding boxes, a paired split
// for similarity runs, and weights trained on the training split.
int cmd_fixtures(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  const std::string img_dir = join_path(cfg.out_dir, "images");
  fs::create_directories(img_dir);

  DigitSetConfig train_cfg;
  train_cfg.per_class = cfg.per_class;
  train_cfg.seed = cfg.seed + 1;
  auto train_set = synth_digits<double>(train_cfg);

  DigitSetConfig eval_cfg;
  eval_cfg.per_class = 3;
  eval_cfg.seed = cfg.seed + 2;
  auto eval_set = synth_digits<double>(eval_cfg);

  std::vector<io::ManifestRecord> train_recs, eval_recs, pair_recs;
  for (size_t i = 0; i < train_set.size(); ++i) {
    const std::string name = img_name("train", static_cast<int>(i));
    io::write_png_gray(join_path(img_dir, name), train_set[i].image[0]);
    io::ManifestRecord r;
    r.id = "train" + std::to_string(i);
    r.image_path = "images/" + name;
    r.label = std::to_string(train_set[i].label);
    train_recs.push_back(r);
  }
  for (size_t i = 0; i < eval_set.size(); ++i) {
    const std::string name = img_name("eval", static_cast<int>(i));
    io::write_png_gray(join_path(img_dir, name), eval_set[i].image[0]);
    io::ManifestRecord r;
    r.id = "eval" + std::to_string(i);
    r.image_path = "images/" + name;
    r.label = std::to_string(eval_set[i].label);
    // the glyph is the one big component; thresholding alone would also pick
    // up stray noise pixels
    const Mask ink =
        largest_component(binarize_grid(box3(eval_set[i].image[0]), 0.35));
    r.bbox = bbox_from_mask(ink).value_or(std::array<int, 4>{0, 0, 1, 1});
    eval_recs.push_back(r);

  }
  // one same-class pair per digit for similarity runs: the first eval image
  // of the class scored against the second
  for (size_t i = 0; i + 1 < eval_recs.size(); ++i) {
    if (eval_set[i].label != eval_set[i + 1].label) continue;
    if (!pair_recs.empty() &&
        *eval_recs[i].label == *pair_recs.back().label)
      continue;
    io::ManifestRecord a = eval_recs[i];
    a.pair_with = eval_recs[i + 1].id;
    pair_recs.push_back(a);
    pair_recs.push_back(eval_recs[i + 1]);
  }

  io::write_manifest(join_path(cfg.out_dir, "train_manifest.jsonl"),
                     train_recs);
  io::write_manifest(join_path(cfg.out_dir, "eval_manifest.jsonl"), eval_recs);
  io::write_manifest(join_path(cfg.out_dir, "pairs_manifest.jsonl"),
                     pair_recs);

  // train demo weights on the training split, reusing the sanity cache
  RunConfig tcfg = cfg;
  tcfg.dataset = join_path(cfg.out_dir, "train_manifest.jsonl");
  const std::string dir = cache_dir();
  fs::create_directories(dir);
  const std::string cached = join_path(
      dir, train_cache_key(tcfg, train_set, false));
  nn::Modeld model;
  if (fs::exists(cached)) {
    std::fprintf(stderr, "using cached weights %s\n", cached.c_str());
    model = nn::load_weights<double>(cached);
  } else {
    model = nn::build_model<double>(cfg.arch);
    model.init_random(cfg.seed + 1);
    nn::TrainConfig<double> tc;
    tc.lr = cfg.train_lr;
    tc.batch = cfg.train_batch;
    tc.max_epochs = cfg.train_epochs;
    tc.target_accuracy = cfg.train_target;
    tc.seed = cfg.seed + 3;
    const double acc = nn::train_until(model, train_set, tc);
    std::fprintf(stderr, "train accuracy %.3f\n", acc);
    nn::save_weights(model, cached);
  }
  const std::string wpath = join_path(cfg.out_dir, "weights.gwts");
  nn::save_weights(model, wpath);

  std::printf("wrote %zu train / %zu eval images, manifests and %s\n",
              train_set.size(), eval_set.size(), wpath.c_str());
  return kExitOk;
}

}  // namespace gamkit::cli
