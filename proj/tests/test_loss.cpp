#include <doctest.h>

#include <cmath>

#include "depthvis/loss.hpp"
#include "depthvis/metrics.hpp"
#include "gradcheck.hpp"
#include "support.hpp"

using namespace depthvis;
using namespace depthvis::testing;

TEST_SUITE("loss") {
  TEST_CASE("lap1 of identical maps is zero with zero gradient") {
    const DepthMap a = random_depth(16, 16);
    const LossValueGrad r = lap1(a, a);
    CHECK(r.value == 0.0);
    CHECK((r.gradient == 0.0).all());
  }

  TEST_CASE("single-level lap1 is the mean absolute deviation") {
    const DepthMap a = random_depth(8, 8), b = random_depth(8, 8);
    CHECK(std::abs(lap1(a, b, 1).value - (a.values - b.values).abs().mean()) < 1e-15);
  }

  TEST_CASE("lap1 matches the brute-force pyramid") {
    for (int trial = 0; trial < 20; ++trial) {
      const Grid a = random_grid(8, 8), b = random_grid(8, 8);
      for (int levels = 1; levels <= 4; ++levels) {
        CHECK(std::abs(lap1(a, b, levels).value - brute_lap1(a, b, levels)) < 1e-9);
      }
    }
  }

  TEST_CASE("lap1 rejects holes and bad sizes") {
    DepthMap a = random_depth(8, 8);
    CHECK_THROWS_AS(lap1(a, random_depth(8, 6)), Error);
    CHECK_THROWS_AS(lap1(random_depth(6, 6), random_depth(6, 6), 3), Error);
    a.mask(0, 0) = false;
    CHECK_THROWS_AS(lap1(a, random_depth(8, 8)), Error);
  }

  TEST_CASE("lap1 gradient matches finite differences away from kinks") {
    for (int trial = 0; trial < 5; ++trial) {
      const Grid a = random_grid(16, 16), b = random_grid(16, 16);
      const GradCheck g = check_gradient([&](const Grid& x) { return lap1(x, b, 3).value; }, lap1(a, b, 3).gradient, a,
                                         20, 1e-5, 3, &b);
      CHECK(g.probes == 20);
      CHECK(g.worst < 1e-4);
    }
  }

  TEST_CASE("mse_v gradient matches finite differences") {
    for (int trial = 0; trial < 5; ++trial) {
      const DepthMap a = random_depth(8, 8, 2.0, 0.5), b = random_depth(8, 8, 2.0, 0.5);
      const GradCheck g = check_gradient([&](const Grid& x) { return mse_v(a.with_values(x), b); },
                                         mse_v_grad(a, b).gradient, a.values, 30);
      CHECK(g.worst < 1e-4);
    }
  }

  TEST_CASE("mse_v gradient with pitch and holes") {
    DepthMap a = random_depth(10, 10, 2.0, 0.05), b = random_depth(10, 10, 2.0, 0.05);
    a.pixel_pitch = b.pixel_pitch = 0.1;
    b.mask(3, 6) = false;
    const LossValueGrad r = mse_v_grad(a, b);
    CHECK(std::abs(r.value - mse_v(a, b)) < 1e-15);
    const GradCheck g = check_gradient([&](const Grid& x) { return mse_v(a.with_values(x), b); }, r.gradient, a.values, 40);
    CHECK(g.worst < 1e-4);
  }

  TEST_CASE("mse_v gradient is local to the stencil footprint") {
    DepthMap flat(Grid::Ones(9, 9));
    DepthMap bumped = flat;
    bumped.values(4, 4) += 1e-3;
    const Grid g = mse_v_grad(bumped, flat).gradient;
    CHECK(g(4, 4) != 0.0);
    for (int y = 0; y < 9; ++y)
      for (int x = 0; x < 9; ++x) {
        if (std::abs(y - 4) > 1 || std::abs(x - 4) > 1) CHECK(g(y, x) == 0.0);
      }
    const LossValueGrad same = mse_v_grad(flat, flat);
    CHECK(same.value == 0.0);
    CHECK((same.gradient == 0.0).all());
  }

  TEST_CASE("combined loss is additive and homogeneous") {
    const DepthMap a = random_depth(16, 16), b = random_depth(16, 16);
    const double l = lap1(a, b).value, v = mse_v(a, b);
    LossWeights w;
    w.w = 2.5;
    CHECK(std::abs(combined_loss(a, b, w).value - (l + 2.5 * v)) < 1e-12);
    w.w = 0.0;
    const LossValueGrad only = combined_loss(a, b, w);
    CHECK(only.value == lap1(a, b).value);
    CHECK((only.gradient == lap1(a, b).gradient).all());
    CHECK(combined_loss(a, a, LossWeights{}).value == 0.0);
  }

  TEST_CASE("combined gradient matches finite differences away from kinks") {
    const DepthMap a = random_depth(16, 16, 2.0, 0.5), b = random_depth(16, 16, 2.0, 0.5);
    LossWeights w;
    w.w = 3.0;
    const GradCheck g = check_gradient([&](const Grid& x) { return combined_loss(a.with_values(x), b, w, 3).value; },
                                       combined_loss(a, b, w, 3).gradient, a.values, 30, 1e-5, 3, &b.values);
    CHECK(g.worst < 1e-4);
  }

  TEST_CASE("smoothed lap1 keeps the exact value") {
    const Grid a = random_grid(16, 16), b = random_grid(16, 16);
    CHECK(lap1(a, b, 3, 0.5).value == lap1(a, b, 3).value);
    CHECK_THROWS_AS(lap1(a, b, 3, -1.0), Error);
  }

  TEST_CASE("property: shifted maps have zero mse_v but positive lap1") {
    const DepthMap a = random_depth(16, 16);
    const DepthMap b = a.with_values(a.values + 0.1);
    CHECK(mse_v(a, b) < 1e-28);
    CHECK(lap1(a, b).value > 0.0);
  }

  TEST_CASE("auto weight balances the terms") {
    const DepthMap a = random_depth(16, 16), b = random_depth(16, 16);
    const LossWeights w = auto_weight(a, b);
    CHECK(std::abs(w.w * mse_v(a, b) - lap1(a, b).value) < 1e-12 * lap1(a, b).value);
    CHECK_THROWS_AS(auto_weight(a, a), Error);
  }

  TEST_CASE("weights must be nonnegative") {
    LossWeights w;
    w.w = -1;
    CHECK_THROWS_AS(w.validate(), Error);
  }
}
