#pragma once

#include <string>
#include <vector>

#include "gamkit/sanity.hpp"
#include "gamkit/scoring.hpp"

namespace gamkit::cli {

// Exit codes: 0 success, 1 configuration/usage error, 2 partial failures
// (some items failed, or a sanity test ran to completion and reported fail).
constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitPartial = 2;

// Declarative run description. A JSON config file fills this first; command
// line flags override field by field.
struct RunConfig {
  // model
  std::string arch = "lenet";
  std::string weights;
  std::string embedding_point;       // empty = arch default
  std::vector<std::string> blocks;   // optional trailing subset of the blocks

  // what to compute
  std::vector<std::string> methods = {"gam"};
  std::vector<int> ns = {1};
  std::string score = "logit";
  std::string class_label;    // logit target; empty = predicted class
  std::string reference;      // second image for similarity scores

  // data and outputs
  std::string image;          // explain input
  std::string manifest;       // evaluate input
  std::string dataset;        // sanity training data manifest
  std::string out_dir = ".";
  uint64_t seed = 0;
  int workers = 1;

  // thresholds
  double threshold = 0.5;
  bool auto_threshold = false;
  double small_percentile = 0;        // 0 disables the small-object subset
  std::string region_rule = "auto";   // auto | largest | all
  SanityThresholds sanity_thresholds;

  // render
  double alpha = 0.5;
  std::string colormap = "viridis";

  // sanity
  std::string sanity_test = "param";  // param | data
  int probe_images = 20;

  // fixtures
  int per_class = 24;

  // training budget (sanity / fixtures)
  int train_epochs = 150;
  double train_lr = 2e-3;
  int train_batch = 16;
  double train_target = 0.95;
};

// Directory for trained-weight reuse; honors GAMKIT_CACHE.
std::string cache_dir();

void load_config_file(const std::string& path, RunConfig& cfg);

int cmd_explain(const RunConfig& cfg);
int cmd_evaluate(const RunConfig& cfg);
int cmd_sanity(const RunConfig& cfg);
int cmd_fixtures(const RunConfig& cfg);

// Full argv entry point used by the binary.
int run_cli(int argc, char** argv);

}  // namespace gamkit::cli
