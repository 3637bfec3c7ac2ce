#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <gamkit/saliency.hpp>

TEST_CASE("library headers compile and a map normalizes") {
    Eigen::MatrixXd g(2, 2);
    g << 0.0, 1.0, 2.0, 3.0;
    auto [norm, degenerate] = gamkit::normalize_minmax(g);
    CHECK_FALSE(degenerate);
    CHECK(norm(0, 0) == doctest::Approx(0.0));
    CHECK(norm(1, 1) == doctest::Approx(1.0));
}
