#pragma once

// Shared plumbing used by the cli command implementations. Not installed.

#include <json.hpp>

#include "gamkit/cli.hpp"
#include "gamkit/io/image.hpp"
#include "gamkit/io/manifest.hpp"
#include "gamkit/metrics.hpp"
#include "gamkit/nn/model.hpp"

namespace gamkit::cli {

// Load the weight file named by the config and apply embedding-point and
// block-subset overrides. Arch flag, when set, must agree with the file.
nn::Modeld load_model_for_run(const RunConfig& cfg);

// PNG -> model-shaped [0,1] tensor. Channel count is adapted (luminance
// average down, replication up) and sizes are matched with the same bicubic
// kernel the saliency resizer uses. `prep` records what was done.
ImageTensor<double> load_input(const std::string& path,
                               const nn::Modeld& model, nlohmann::json* prep);

// Validate that cfg.blocks is a trailing subset of the model's block names;
// returns the largest usable n.
int usable_layers(const nn::Modeld& model, const RunConfig& cfg);

std::string stem_of(const std::string& path);

nlohmann::json sanity_report_json(const SanityReport& rep);

// Deterministic cache key for a trained model; hashes the pixels too so a
// changed dataset never reuses stale weights.
std::string train_cache_key(const RunConfig& cfg,
                            const std::vector<nn::Sampled>& data,
                            bool permuted);

GroundTruthRegion region_from_record(const io::ManifestRecord& rec,
                                     const std::string& manifest_dir);

std::string join_path(const std::string& dir, const std::string& leaf);

}  // namespace gamkit::cli
