#include <cstdio>
#include <filesystem>
#include <fstream>

#include "cli_internal.hpp"
#include "gamkit/datasets.hpp"
#include "gamkit/render.hpp"

namespace gamkit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct LabeledSet {
  std::vector<nn::Sample<double>> samples;
  std::vector<int> labels;
};

LabeledSet load_dataset(const RunConfig& cfg, const nn::Modeld& proto) {
  if (cfg.dataset.empty())
    throw ConfigError("sanity needs --dataset <manifest>");
  if (!fs::exists(cfg.dataset))
    throw ConfigError("dataset manifest '" + cfg.dataset + "' does not exist");
  auto manifest = io::read_manifest(cfg.dataset);
  if (manifest.empty()) throw EmptyInput("dataset manifest is empty");
  const std::string mdir = fs::path(cfg.dataset).parent_path().string();
  LabeledSet set;
  for (const auto& rec : manifest) {
    if (!rec.label)
      throw InvalidRecord("dataset record '" + rec.id + "' has no label");
    const std::string p = fs::path(rec.image_path).is_absolute()
                              ? rec.image_path
                              : join_path(mdir, rec.image_path);
    ImageTensor<double> img = load_input(p, proto, nullptr);
    const int cls = resolve_class_index(proto, *rec.label);
    set.samples.push_back({img.data, cls});
    set.labels.push_back(cls);
  }
  return set;
}

// Train (or fetch from the cache) a model for this dataset + budget.
nn::Modeld trained_model(const RunConfig& cfg, const LabeledSet& set,
                         bool permuted) {
  const std::string dir = cache_dir();
  fs::create_directories(dir);
  const std::string path =
      join_path(dir, train_cache_key(cfg, set.samples, permuted));
  if (fs::exists(path)) {
    std::fprintf(stderr, "using cached weights %s\n", path.c_str());
    return nn::load_weights<double>(path);
  }
  nn::Modeld model = nn::build_model<double>(cfg.arch);
  model.init_random(cfg.seed + (permuted ? 101 : 1));
  nn::TrainConfig<double> tc;
  tc.lr = cfg.train_lr;
  tc.batch = cfg.train_batch;
  tc.max_epochs = cfg.train_epochs;
  tc.target_accuracy = cfg.train_target;
  tc.seed = cfg.seed + (permuted ? 7 : 3);
  const auto& data = permuted
                         ? with_permuted_labels(set.samples, cfg.seed + 17)
                         : set.samples;
  const double acc = nn::train_until(model, data, tc);
  std::fprintf(stderr, "%s labels: train accuracy %.3f\n",
               permuted ? "permuted" : "true", acc);
  nn::save_weights(model, path);
  return model;
}

Matd hcat_rgb(const Tensor3<double>& a, const Tensor3<double>& b, int ch) {
  Matd out(a.rows(), a.cols() + 2 + b.cols());
  out.setOnes();
  out.block(0, 0, a.rows(), a.cols()) = a[ch];
  out.block(0, a.cols() + 2, b.rows(), b.cols()) = b[ch];
  return out;
}

}  // namespace

int cmd_sanity(const RunConfig& cfg) {
  if (cfg.sanity_test != "param" && cfg.sanity_test != "data")
    throw ConfigError("--test must be param or data");
  const Method method = method_from_name(cfg.methods.front());
  const int n = cfg.ns.front();

  nn::Modeld proto = nn::build_model<double>(cfg.arch);
  LabeledSet set = load_dataset(cfg, proto);

  // stride through the manifest so the probes cover all classes even when
  // the file is sorted by label
  std::vector<SanityProbe<double>> probes;
  const int total = static_cast<int>(set.samples.size());
  const int count = std::min<int>(cfg.probe_images, total);
  const int stride = count > 0 ? std::max(1, total / count) : 1;
  for (int i = 0; i < count; ++i) {
    const auto& s = set.samples[(i * stride) % total];
    probes.push_back({ImageTensor<double>(s.image, true),
                      ScoreSpec<double>::logit_class(s.label)});
  }

  nn::Modeld model_a =
      cfg.weights.empty() ? trained_model(cfg, set, /*permuted=*/false)
                          : nn::load_weights<double>(cfg.weights);

  SanityReport rep;
  nn::Modeld model_b;  // the counterpart model, for the overlay strip
  if (cfg.sanity_test == "param") {
    rep = parameter_randomization_test(model_a, probes, method, n,
                                       cfg.seed + 23, cfg.sanity_thresholds);
    model_b = model_a;
    model_b.init_random(cfg.seed + 23);
  } else {
    model_b = trained_model(cfg, set, /*permuted=*/true);
    rep = data_randomization_test(model_a, model_b, probes, method, n,
                                  cfg.sanity_thresholds);
  }

  fs::create_directories(cfg.out_dir);
  std::ofstream os(join_path(cfg.out_dir, "sanity_report.json"));
  if (!os) throw IOError("cannot write sanity_report.json");
  os << sanity_report_json(rep).dump(2) << "\n";

  // side-by-side overlays for the first few probes: intact | randomized
  const int n_render = std::min<int>(4, static_cast<int>(probes.size()));
  for (int i = 0; i < n_render; ++i) {
    auto ea = explain(model_a, probes[i].image, method, n, probes[i].spec);
    auto eb = explain(model_b, probes[i].image, method, n, probes[i].spec);
    auto ov_a = overlay(probes[i].image.data, ea.map.grid, cfg.colormap,
                        cfg.alpha);
    auto ov_b = overlay(probes[i].image.data, eb.map.grid, cfg.colormap,
                        cfg.alpha);
    Tensor3<double> strip(3, ov_a.rows(), ov_a.cols() + 2 + ov_b.cols());
    for (int ch = 0; ch < 3; ++ch) strip[ch] = hcat_rgb(ov_a, ov_b, ch);
    io::write_png_rgb(join_path(cfg.out_dir,
                                "sanity_" + cfg.sanity_test + "_" +
                                    std::to_string(i) + ".png"),
                      strip);
  }

  std::printf("%s: self=%.4f cross=%.4f -> %s\n", rep.test.c_str(),
              rep.self_similarity, rep.cross_similarity,
              rep.pass ? "pass" : "FAIL");
  return rep.pass ? kExitOk : kExitPartial;
}

}  // namespace gamkit::cli
