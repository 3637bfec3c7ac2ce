#include <fstream>
#include <functional>

#include <CLI11.hpp>
#include <json.hpp>

#include "cli_internal.hpp"

namespace gamkit::cli {

using nlohmann::json;

namespace {

template <class T>
void take(const json& j, const char* key, T& into) {
  if (j.contains(key) && !j.at(key).is_null()) into = j.at(key).get<T>();
}

// string-or-array convenience: "gam" and ["gam","gc"] both work
void take_list(const json& j, const char* key, std::vector<std::string>& into) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  if (j.at(key).is_string())
    into = {j.at(key).get<std::string>()};
  else
    into = j.at(key).get<std::vector<std::string>>();
}

void take_int_list(const json& j, const char* key, std::vector<int>& into) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  if (j.at(key).is_number())
    into = {j.at(key).get<int>()};
  else
    into = j.at(key).get<std::vector<int>>();
}

}  // namespace

void load_config_file(const std::string& path, RunConfig& cfg) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  if (j.contains("model")) {
    const auto& m = j.at("model");
    take(m, "backbone", cfg.arch);
    take(m, "weights", cfg.weights);
    take(m, "embedding_point", cfg.embedding_point);
    take_list(m, "blocks", cfg.blocks);
  }
  take_list(j, "method", cfg.methods);
  take_int_list(j, "n", cfg.ns);
  if (j.contains("score")) {
    const auto& s = j.at("score");
    if (s.is_string()) {
      cfg.score = s.get<std::string>();
    } else {
      take(s, "kind", cfg.score);
      take(s, "class", cfg.class_label);
      take(s, "reference", cfg.reference);
    }
  }
  take(j, "image", cfg.image);
  take(j, "manifest", cfg.manifest);
  take(j, "dataset", cfg.dataset);
  take(j, "out", cfg.out_dir);
  take(j, "seed", cfg.seed);
  take(j, "workers", cfg.workers);
  if (j.contains("thresholds")) {
    const auto& t = j.at("thresholds");
    take(t, "binarize", cfg.threshold);
    take(t, "auto", cfg.auto_threshold);
    take(t, "small_percentile", cfg.small_percentile);
    take(t, "region_rule", cfg.region_rule);
    take(t, "tau_self", cfg.sanity_thresholds.tau_self);
    take(t, "tau_cross", cfg.sanity_thresholds.tau_cross);
  }
  if (j.contains("render")) {
    const auto& r = j.at("render");
    take(r, "alpha", cfg.alpha);
    take(r, "colormap", cfg.colormap);
  }
  if (j.contains("sanity")) {
    const auto& s = j.at("sanity");
    take(s, "test", cfg.sanity_test);
    take(s, "probes", cfg.probe_images);
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    take(t, "epochs", cfg.train_epochs);
    take(t, "lr", cfg.train_lr);
    take(t, "batch", cfg.train_batch);
    take(t, "target_accuracy", cfg.train_target);
    take(t, "per_class", cfg.per_class);
  }
}

namespace {

// Flags shared by every subcommand.
void add_common_flags(CLI::App* sub, RunConfig& cfg, std::string& config_path) {
  sub->add_option("--config", config_path, "JSON run config; flags override");
  sub->add_option("--model", cfg.arch, "backbone architecture name");
  sub->add_option("--weights", cfg.weights, "GWTS weight file");
  sub->add_option("--embedding-point", cfg.embedding_point,
                  "embedding tap name");
  sub->add_option("--block", cfg.blocks,
                  "restrict to a trailing subset of blocks (repeatable)");
  sub->add_option("--method", cfg.methods, "gam, gc or gcpp (repeatable)")
      ->check(CLI::IsMember({"gam", "gc", "gcpp"}));
  sub->add_option("--n", cfg.ns, "layers to aggregate (repeatable)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--score", cfg.score, "logit, dot or cosine")
      ->check(CLI::IsMember({"logit", "dot", "cosine"}));
  sub->add_option("--out", cfg.out_dir, "output directory");
  sub->add_option("--seed", cfg.seed, "run seed");
}

int dispatch(const std::function<int(const RunConfig&)>& fn,
             const RunConfig& cfg) {
  try {
    return fn(cfg);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kExitConfig;
  }
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"saliency explanations for CNN embeddings: gradient-activation"
               " maps, grad-cam and grad-cam++ under one scoring interface"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_path;

  // the config file must land before flag values do: pre-scan for --config
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--config") {
      try {
        load_config_file(argv[i + 1], cfg);
      } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
      }
      break;
    }

  auto* explain = app.add_subcommand("explain", "saliency map for one image "
                                                "(or an image pair)");
  add_common_flags(explain, cfg, config_path);
  explain->add_option("image", cfg.image, "input PNG");
  explain->add_option("--class", cfg.class_label,
                      "target class for logit scores (default: predicted)");
  explain->add_option("--reference", cfg.reference,
                      "second image for similarity scores");
  explain->add_option("--alpha", cfg.alpha, "overlay blend weight")
      ->check(CLI::Range(0.0, 1.0));
  explain->add_option("--colormap", cfg.colormap, "viridis or inferno");

  auto* evaluate = app.add_subcommand("evaluate",
                                      "faithfulness/localization report over "
                                      "a dataset manifest");
  add_common_flags(evaluate, cfg, config_path);
  evaluate->add_option("--manifest", cfg.manifest, "JSON-lines dataset");
  evaluate->add_option("--workers", cfg.workers, "parallel image workers")
      ->check(CLI::PositiveNumber);
  evaluate->add_option("--threshold", cfg.threshold,
                       "fixed binarization threshold");
  evaluate->add_flag("--auto-threshold", cfg.auto_threshold,
                     "pick the threshold maximizing mean IoU");
  evaluate->add_option("--small-percentile", cfg.small_percentile,
                       "also report IoU on objects below this area percentile");
  evaluate->add_option("--region-rule", cfg.region_rule,
                       "largest | all | auto (largest for boxes)")
      ->check(CLI::IsMember({"auto", "largest", "all"}));

  auto* sanity = app.add_subcommand("sanity",
                                    "parameter/data randomization checks");
  add_common_flags(sanity, cfg, config_path);
  sanity->add_option("--test", cfg.sanity_test, "param or data")
      ->check(CLI::IsMember({"param", "data"}));
  sanity->add_option("--dataset", cfg.dataset, "training manifest");
  sanity->add_option("--probes", cfg.probe_images, "probe image count");
  sanity->add_option("--epochs", cfg.train_epochs, "training epoch budget");
  sanity->add_option("--lr", cfg.train_lr, "training learning rate");
  sanity->add_option("--batch", cfg.train_batch, "training batch size");
  sanity->add_option("--target", cfg.train_target,
                     "training accuracy target");
  sanity->add_option("--tau-self", cfg.sanity_thresholds.tau_self,
                     "self-similarity pass threshold");
  sanity->add_option("--tau-cross", cfg.sanity_thresholds.tau_cross,
                     "cross-similarity fail threshold");

  auto* fixtures = app.add_subcommand("fixtures",
                                      "generate the synthetic digit corpus "
                                      "and train demo weights");
  add_common_flags(fixtures, cfg, config_path);
  fixtures->add_option("--per-class", cfg.per_class, "images per digit");
  fixtures->add_option("--epochs", cfg.train_epochs, "training epoch budget");
  fixtures->add_option("--lr", cfg.train_lr, "training learning rate");
  fixtures->add_option("--batch", cfg.train_batch, "training batch size");
  fixtures->add_option("--target", cfg.train_target,
                       "training accuracy target");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  if (explain->parsed()) return dispatch(cmd_explain, cfg);
  if (evaluate->parsed()) return dispatch(cmd_evaluate, cfg);
  if (sanity->parsed()) return dispatch(cmd_sanity, cfg);
  if (fixtures->parsed()) return dispatch(cmd_fixtures, cfg);
  return kExitConfig;
}

}  // namespace gamkit::cli
