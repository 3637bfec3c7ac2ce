#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include <gamkit/sanity.hpp>

#include "test_util.hpp"

using namespace gamkit;

namespace {

std::vector<SanityProbe<double>> random_probes(int count, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<SanityProbe<double>> probes;
  probes.reserve(count);
  for (int i = 0; i < count; ++i) {
    SanityProbe<double> p;
    p.image = ImageTensor<double>(testutil::random_tensor(rng, 1, 8, 8, 0.0, 1.0),
                                  true);
    p.spec = ScoreSpec<double>::logit_class(i % 10);
    probes.push_back(std::move(p));
  }
  return probes;
}

}  // namespace

TEST_CASE("rank correlation matches an independently computed value") {
  // oracle from a reference average-rank Spearman implementation, confirmed
  // against scipy.stats.spearmanr on the same 12 pixel pairs
  Matd a(3, 4), b(3, 4);
  a << 0.1, 0.4, 0.4, 0.7,
       0.9, 0.2, 0.5, 0.3,
       0.6, 0.4, 0.8, 0.0;
  b << 0.2, 0.3, 0.5, 0.9,
       0.8, 0.1, 0.6, 0.35,
       0.55, 0.45, 0.95, 0.05;
  CHECK(map_rank_correlation(a, b) ==
        doctest::Approx(0.9436853723733581).epsilon(1e-12));
}

TEST_CASE("rank correlation endpoints") {
  Matd a(2, 3);
  a << 0.1, 0.7, 0.4, 0.9, 0.2, 0.4;  // includes a tie
  CHECK(map_rank_correlation(a, a) == doctest::Approx(1.0));

  Matd rev = Matd::Ones(2, 3) - a;  // strictly decreasing transform
  CHECK(map_rank_correlation(a, rev) == doctest::Approx(-1.0));

  const Matd zero = Matd::Zero(2, 3);
  const Matd flat = Matd::Constant(2, 3, 0.4);
  const Matd dot = Matd::Zero(1, 1);
  const Matd tall = Matd::Zero(3, 2);
  CHECK(map_rank_correlation(a, zero) == 0.0);
  CHECK(map_rank_correlation(flat, a) == 0.0);
  CHECK(map_rank_correlation(dot, dot) == 0.0);
  CHECK_THROWS_AS(map_rank_correlation(a, tall), ShapeError);
}

TEST_CASE("rank correlation is symmetric and rank-invariant") {
  std::mt19937_64 rng(101);
  for (int it = 0; it < 10; ++it) {
    auto a = testutil::random_grid(rng, 5, 5, 0.0, 1.0);
    auto b = testutil::random_grid(rng, 5, 5, 0.0, 1.0);
    const double ab = map_rank_correlation(a, b);
    CHECK(ab >= -1.0);
    CHECK(ab <= 1.0);
    CHECK(map_rank_correlation(b, a) == doctest::Approx(ab).epsilon(1e-12));

    // strictly increasing transforms leave every rank in place
    Matd bt = (b.array().cube() + 2.0 * b.array()).matrix();
    CHECK(map_rank_correlation(a, bt) == doctest::Approx(ab).epsilon(1e-12));
  }
}

TEST_CASE("degenerate saliency maps correlate zero by convention") {
  SaliencyMap<double> m1, m2;
  m1.grid = Matd::Random(4, 4).cwiseAbs();
  m2.grid = m1.grid;
  CHECK(map_rank_correlation(m1, m2) == doctest::Approx(1.0));
  m2.degenerate = true;
  CHECK(map_rank_correlation(m1, m2) == 0.0);
}

TEST_CASE("compare_model_maps is a perfect self-control") {
  auto model = nn::build_model<double>("toycnn");
  model.init_random(111);
  auto probes = random_probes(5, 112);
  auto [self, cross] = compare_model_maps(model, model, probes, Method::GAM, 1);
  CHECK(self == doctest::Approx(1.0));
  CHECK(cross == doctest::Approx(1.0));
  CHECK_THROWS_AS(
      compare_model_maps(model, model, {}, Method::GAM, 1), EmptyInput);
}

TEST_CASE("parameter randomization needs twenty probe images") {
  auto model = nn::build_model<double>("toycnn");
  model.init_random(113);
  CHECK_THROWS_AS(parameter_randomization_test(model, random_probes(19, 114),
                                               Method::GAM, 1, 7u),
                  ConfigError);
}

TEST_CASE("an insensitive comparison fails the parameter test") {
  // re-initializing with the model's own seed reproduces the weights, so the
  // 'randomized' maps match perfectly and the test must reject them
  auto model = nn::build_model<double>("toycnn");
  model.init_random(115);
  auto rep = parameter_randomization_test(model, random_probes(20, 116),
                                          Method::GAM, 1, 115u);
  CHECK(rep.test == "parameter_randomization");
  CHECK(rep.images == 20);
  CHECK(rep.self_similarity == doctest::Approx(1.0));
  CHECK(rep.cross_similarity == doctest::Approx(1.0));
  CHECK_FALSE(rep.pass);
}

TEST_CASE("the report's pass flag follows the thresholds") {
  auto model = nn::build_model<double>("toycnn");
  model.init_random(117);
  auto rep = parameter_randomization_test(model, random_probes(20, 118),
                                          Method::GAM, 1, 999u);
  CHECK(rep.self_similarity >= -1.0);
  CHECK(rep.self_similarity <= 1.0);
  CHECK(rep.cross_similarity >= -1.0);
  CHECK(rep.cross_similarity <= 1.0);
  CHECK(rep.pass == (rep.self_similarity > rep.thresholds.tau_self &&
                     rep.cross_similarity < rep.thresholds.tau_cross));
  CHECK(rep.thresholds.tau_self == doctest::Approx(0.99));
  CHECK(rep.thresholds.tau_cross == doctest::Approx(0.5));
}

TEST_CASE("identical models are the data randomization control") {
  auto model = nn::build_model<double>("toycnn");
  model.init_random(119);
  auto rep = data_randomization_test(model, model, random_probes(6, 120),
                                     Method::GAM, 1);
  CHECK(rep.test == "data_randomization");
  CHECK(rep.cross_similarity == doctest::Approx(1.0));
  CHECK_FALSE(rep.pass);
}
