#include <doctest.h>

#include "sqrl/eval_stats.hpp"

using namespace sqrl;

TEST_CASE("normalized score anchors and the halfway example") {
  NormalizationBaseline breakout{"Breakout", 1.7, 30.5};
  CHECK(normalized_score(30.5, breakout) == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(normalized_score(1.7, breakout) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(normalized_score(16.1, breakout) == doctest::Approx(50.0).epsilon(1e-9));

  NormalizationBaseline degenerate{"X", 5.0, 5.0};
  CHECK_THROWS_AS(normalized_score(1.0, degenerate), NumericError);
}

TEST_CASE("normalized score is affine-consistent") {
  NormalizationBaseline b{"g", 10.0, 200.0};
  const double raw = 57.0;
  const double s = normalized_score(raw, b);
  // Transforming raw and both anchors by x -> a*x + c leaves the score fixed.
  NormalizationBaseline b2{"g", 10.0 * 3 + 4, 200.0 * 3 + 4};
  CHECK(normalized_score(raw * 3 + 4, b2) == doctest::Approx(s).epsilon(1e-12));
}

TEST_CASE("expected return is five times the dataset maximum") {
  CHECK(expected_return(104.0) == doctest::Approx(520.0));
  CHECK(expected_return(640.0) == doctest::Approx(3200.0));
  CHECK(expected_return(0.0) == doctest::Approx(0.0));
}

TEST_CASE("outlier removal follows the IQR rule with a floor of three") {
  auto r = remove_outliers({10, 11, 12, 100});
  CHECK(r.filtered == std::vector<double>{10, 11, 12});
  CHECK(r.removed_indices == std::vector<size_t>{3});

  auto same = remove_outliers({5, 5, 5});
  CHECK(same.filtered == std::vector<double>{5, 5, 5});
  CHECK(same.removed_indices.empty());

  auto clean = remove_outliers({1, 2, 3, 4, 5});
  CHECK(clean.filtered == std::vector<double>{1, 2, 3, 4, 5});
  CHECK(clean.removed_indices.empty());
}

TEST_CASE("outlier removal never drops below three, single pass per point") {
  std::vector<double> xs = {0, 0.1, 0.2, 0.3, 1000, -4000, 2500};
  auto r = remove_outliers(xs);
  CHECK(r.filtered.size() >= 3);
  for (double v : r.filtered) CHECK(std::abs(v) < 100);

  // Size <= 3 inputs are never touched.
  auto tiny = remove_outliers({1, 1000});
  CHECK(tiny.filtered.size() == 2);
}

TEST_CASE("summarize basics") {
  auto s = summarize({2, 4, 4, 4, 5, 5, 7, 9});
  CHECK(s.mean == doctest::Approx(5.0));
  CHECK(s.stddev == doctest::Approx(2.0));
}
