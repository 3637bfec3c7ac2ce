#include <cstdlib>
#include <cstring>
#include <filesystem>

#include "cli_internal.hpp"
#include "gamkit/saliency.hpp"

namespace gamkit::cli {

namespace fs = std::filesystem;

std::string cache_dir() {
  if (const char* env = std::getenv("GAMKIT_CACHE"); env && *env)
    return env;
  return ".gamkit-cache";
}

std::string join_path(const std::string& dir, const std::string& leaf) {
  return (fs::path(dir) / leaf).string();
}

std::string stem_of(const std::string& path) {
  return fs::path(path).stem().string();
}

nn::Modeld load_model_for_run(const RunConfig& cfg) {
  if (cfg.weights.empty())
    throw ConfigError("--weights is required (train one with the sanity or "
                      "fixtures command first)");
  nn::Modeld model = nn::load_weights<double>(cfg.weights);
  if (!cfg.arch.empty() && cfg.arch != model.arch)
    throw ConfigError("--model " + cfg.arch + " does not match weight file (" +
                      model.arch + ")");
  if (!cfg.embedding_point.empty())
    model.embed_tap = model.tap_index(cfg.embedding_point);
  return model;
}

int usable_layers(const nn::Modeld& model, const RunConfig& cfg) {
  if (cfg.blocks.empty()) return static_cast<int>(model.blocks.size());
  const size_t k = cfg.blocks.size();
  if (k > model.blocks.size())
    throw ConfigError("more blocks listed than the model has");
  const size_t off = model.blocks.size() - k;
  for (size_t i = 0; i < k; ++i)
    if (model.blocks[off + i].name != cfg.blocks[i])
      throw ConfigError(
          "blocks must name a trailing subset of the model's blocks; '" +
          cfg.blocks[i] + "' does not match '" + model.blocks[off + i].name +
          "'");
  return static_cast<int>(k);
}

ImageTensor<double> load_input(const std::string& path,
                               const nn::Modeld& model, nlohmann::json* prep) {
  Tensor3<double> raw = io::read_png(path);
  nlohmann::json j;
  j["source"] = path;
  j["source_shape"] = {raw.channels(), raw.rows(), raw.cols()};

  Tensor3<double> ch;
  if (raw.channels() == model.in_ch) {
    ch = std::move(raw);
  } else if (model.in_ch == 1) {
    ch = Tensor3<double>(1, raw.rows(), raw.cols());
    ch[0].setZero();
    for (int c = 0; c < raw.channels(); ++c) ch[0] += raw[c];
    ch[0] /= double(raw.channels());
    j["channel_adapt"] = "luminance_average";
  } else if (raw.channels() == 1) {
    ch = Tensor3<double>(model.in_ch, raw.rows(), raw.cols());
    for (int c = 0; c < model.in_ch; ++c) ch[c] = raw[0];
    j["channel_adapt"] = "replicate";
  } else {
    throw InputShapeError("cannot adapt " + std::to_string(raw.channels()) +
                          "-channel image to " + std::to_string(model.in_ch) +
                          " channels");
  }

  if (ch.rows() != model.in_rows || ch.cols() != model.in_cols) {
    Tensor3<double> rs(ch.channels(), model.in_rows, model.in_cols);
    for (int c = 0; c < ch.channels(); ++c)
      rs[c] = resize_bicubic(ch[c], model.in_rows, model.in_cols)
                  .cwiseMax(0.0)
                  .cwiseMin(1.0);
    ch = std::move(rs);
    j["resize"] = "bicubic";
  }
  j["input_shape"] = {ch.channels(), ch.rows(), ch.cols()};
  j["range"] = "[0,1]";
  if (prep) *prep = std::move(j);
  return ImageTensor<double>(std::move(ch), /*normalized=*/true);
}

nlohmann::json sanity_report_json(const SanityReport& rep) {
  nlohmann::json j;
  j["test"] = rep.test;
  j["method"] = method_name(rep.method);
  j["n"] = rep.n;
  j["images"] = rep.images;
  j["self_similarity"] = rep.self_similarity;
  j["cross_similarity"] = rep.cross_similarity;
  j["tau_self"] = rep.thresholds.tau_self;
  j["tau_cross"] = rep.thresholds.tau_cross;
  j["pass"] = rep.pass;
  return j;
}

std::string train_cache_key(const RunConfig& cfg,
                            const std::vector<nn::Sampled>& data,
                            bool permuted) {
  // FNV-1a over everything that shapes the trained weights
  uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 1099511628211ULL;
    }
  };
  for (char c : cfg.arch) mix(uint64_t(c));
  mix(data.size());
  for (const auto& s : data) {
    mix(uint64_t(s.label));
    for (const auto& chan : s.image.chan)
      for (Eigen::Index i = 0; i < chan.size(); ++i) {
        uint64_t bits;
        std::memcpy(&bits, &chan.data()[i], sizeof bits);
        mix(bits);
      }
  }
  mix(cfg.seed);
  mix(uint64_t(cfg.train_epochs));
  mix(uint64_t(cfg.train_batch));
  mix(uint64_t(cfg.train_lr * 1e9));
  mix(uint64_t(cfg.train_target * 1e6));
  mix(permuted ? 2 : 1);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return cfg.arch + "-" + buf + ".gwts";
}

GroundTruthRegion region_from_record(const io::ManifestRecord& rec,
                                     const std::string& manifest_dir) {
  GroundTruthRegion gt;
  // manifest boxes already use the region layout: x,y,x,y with exclusive max
  if (rec.bbox) gt.bbox = *rec.bbox;
  if (rec.mask_path) {
    const std::string p = fs::path(*rec.mask_path).is_absolute()
                              ? *rec.mask_path
                              : join_path(manifest_dir, *rec.mask_path);
    Tensor3<double> m = io::read_png(p);
    Mask mask(m.rows(), m.cols());
    for (int r = 0; r < m.rows(); ++r)
      for (int c = 0; c < m.cols(); ++c) mask(r, c) = m[0](r, c) >= 0.5 ? 1 : 0;
    gt.mask = std::move(mask);
  }
  return gt;
}

}  // namespace gamkit::cli
