#include <cstdio>
#include <filesystem>
#include <fstream>

#include "cli_internal.hpp"
#include "gamkit/explain.hpp"
#include "gamkit/io/smap.hpp"
#include "gamkit/render.hpp"

namespace gamkit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Target {
  ScoreSpec<double> spec;
  json describe;  // score block of the sidecar
};

// One image explained for one (method, n): smap + overlay + sidecar.
bool emit_one(const nn::Modeld& model, const RunConfig& cfg,
              const ImageTensor<double>& x, const json& prep,
              const Target& target, Method method, int n,
              const std::string& stem) {
  Explanation<double> expl = explain(model, x, method, n, target.spec);

  const std::string base =
      join_path(cfg.out_dir, stem + "-" + method_name(method) + "-n" +
                                 std::to_string(n));
  io::write_smap(base + ".smap", expl.map, expl.score_value);
  io::write_png_rgb(base + ".png",
                    overlay(x.data, expl.map.grid, cfg.colormap, cfg.alpha));

  json side;
  side["method"] = method_name(method);
  side["n"] = n;
  side["score"] = target.describe;
  side["score_value"] = expl.score_value;
  side["degenerate"] = expl.map.degenerate;
  if (method == Method::GCPP) side["overflow"] = expl.overflow;
  side["preprocessing"] = prep;
  side["seed"] = cfg.seed;
  std::ofstream os(base + ".json");
  if (!os) throw IOError("cannot open '" + base + ".json' for writing");
  os << side.dump(2) << "\n";

  if (expl.overflow)
    std::fprintf(stderr, "warning: %s exp(score) overflowed for %s; the map "
                         "uses the cancelled form\n",
                 method_name(method), stem.c_str());
  if (expl.map.degenerate)
    std::fprintf(stderr, "warning: degenerate (constant) map for %s\n",
                 stem.c_str());
  return expl.overflow;
}

}  // namespace

int cmd_explain(const RunConfig& cfg) {
  if (cfg.image.empty()) throw ConfigError("explain needs an input image");
  nn::Modeld model = load_model_for_run(cfg);
  const int max_n = usable_layers(model, cfg);
  for (int n : cfg.ns)
    if (n < 1 || n > max_n)
      throw ConfigError("n=" + std::to_string(n) + " outside [1," +
                        std::to_string(max_n) + "]");

  fs::create_directories(cfg.out_dir);
  json prep;
  ImageTensor<double> x = load_input(cfg.image, model, &prep);
  const ScoreKind kind = score_kind_from_name(cfg.score);

  bool any_overflow = false;
  if (kind == ScoreKind::ClassLogit) {
    int cls;
    if (cfg.class_label.empty()) {
      Capture<double> cap = forward_capture(model, x);
      Eigen::Index pred;
      cap.logits.maxCoeff(&pred);
      cls = static_cast<int>(pred);
    } else {
      cls = resolve_class_index(model, cfg.class_label);
    }
    Target t;
    t.spec = ScoreSpec<double>::logit_class(cls);
    t.describe = {{"kind", "logit"}, {"class", model.class_names[cls]}};
    for (const auto& mname : cfg.methods)
      for (int n : cfg.ns)
        any_overflow |= emit_one(model, cfg, x, prep, t,
                                 method_from_name(mname), n,
                                 stem_of(cfg.image));
  } else {
    if (cfg.reference.empty())
      throw ConfigError("similarity scores need --reference <image>");
    json prep_ref;
    ImageTensor<double> xr = load_input(cfg.reference, model, &prep_ref);
    Capture<double> cap_x = forward_capture(model, x);
    Capture<double> cap_r = forward_capture(model, xr);
    auto make = [&](const Embedding<double>& ref) {
      return kind == ScoreKind::Cosine ? ScoreSpec<double>::cosine(ref)
                                       : ScoreSpec<double>::dot(ref);
    };

    std::string stem_a = stem_of(cfg.image);
    std::string stem_b = stem_of(cfg.reference);
    if (stem_b == stem_a) stem_b += "_ref";

    Target ta;
    ta.spec = make(cap_r.embedding);
    ta.describe = {{"kind", cfg.score}, {"reference", cfg.reference}};
    Target tb;
    tb.spec = make(cap_x.embedding);
    tb.describe = {{"kind", cfg.score}, {"reference", cfg.image}};

    for (const auto& mname : cfg.methods)
      for (int n : cfg.ns) {
        const Method m = method_from_name(mname);
        any_overflow |= emit_one(model, cfg, x, prep, ta, m, n, stem_a);
        any_overflow |= emit_one(model, cfg, xr, prep_ref, tb, m, n, stem_b);
      }
  }
  if (any_overflow)
    std::fprintf(stderr, "summary: gc++ overflow flagged on at least one map\n");
  return kExitOk;
}

}  // namespace gamkit::cli
