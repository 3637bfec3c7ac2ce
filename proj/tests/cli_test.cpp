// Exit-code contract of the command-line driver: 0 on success, 1 on
// configuration problems, 2 when some manifest items fail but the run
// completes. The binary path comes in through GAMKIT_BIN_PATH.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <gamkit/datasets.hpp>
#include <gamkit/io/image.hpp>
#include <gamkit/nn/model.hpp>

#include "test_util.hpp"

using namespace gamkit;

namespace {

int run(const std::string& args) {
  const std::string cmd =
      std::string(GAMKIT_BIN_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

// Shared scratch fixture: one digit PNG and one (untrained) lenet weight file.
struct CliFixture {
  testutil::TempDir td{"gamkit-cli"};
  std::string png, weights;
  CliFixture() {
    DigitSetConfig dc;
    dc.per_class = 1;
    dc.seed = 21;
    const auto sample = synth_digits<double>(dc).front();
    png = td.file("digit.png");
    io::write_png_gray(png, sample.image[0]);
    auto model = nn::build_model<double>("lenet");
    model.init_random(6);
    weights = td.file("lenet.gwts");
    nn::save_weights(model, weights);
  }
};

}  // namespace

TEST_CASE("a bare invocation and unknown flag values are config errors") {
  CHECK(run("") == 1);
  CHECK(run("explain x.png --method whirl") == 1);
  CHECK(run("explain x.png --score entropy") == 1);
  CHECK(run("explain x.png --n 0") == 1);
}

TEST_CASE("missing weights are rejected before any work happens") {
  CliFixture fx;
  CHECK(run("explain " + fx.png + " --model lenet --method gam") == 1);
  CHECK(run("explain " + fx.png + " --weights " + fx.td.file("nope.gwts")) == 1);
}

TEST_CASE("similarity scores without a reference image are config errors") {
  CliFixture fx;
  CHECK(run("explain " + fx.png + " --weights " + fx.weights +
            " --score cosine --out " + fx.td.file("out")) == 1);
}

TEST_CASE("an empty manifest aborts the evaluation") {
  CliFixture fx;
  std::ofstream(fx.td.file("empty.jsonl")).close();
  CHECK(run("evaluate --weights " + fx.weights + " --manifest " +
            fx.td.file("empty.jsonl") + " --out " + fx.td.file("out")) == 1);
}

TEST_CASE("per-item failures finish the run and report exit code 2") {
  CliFixture fx;
  {
    std::ofstream m(fx.td.file("set.jsonl"));
    m << R"({"id": "good", "image_path": ")" << fx.png << R"(", "label": "3"})"
      << "\n";
    m << R"({"id": "gone", "image_path": ")" << fx.td.file("missing.png")
      << R"(", "label": "3"})" << "\n";
  }
  const std::string out = fx.td.file("out");
  std::filesystem::create_directories(out);
  CHECK(run("evaluate --weights " + fx.weights + " --manifest " +
            fx.td.file("set.jsonl") + " --method gam --n 1 --out " + out) == 2);
  // the surviving item still produced a report
  CHECK(std::filesystem::exists(out + "/report.csv"));
  CHECK(std::filesystem::exists(out + "/summary.json"));
}
