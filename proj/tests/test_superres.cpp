#include <doctest.h>

#include <cmath>

#include "depthvis/metrics.hpp"
#include "depthvis/scenegen.hpp"
#include "depthvis/superres.hpp"
#include "support.hpp"

using namespace depthvis;
using namespace depthvis::testing;

namespace {

SuperResProblem problem_for(const DepthMap& gt, int factor, Fidelity fidelity,
                            DownsampleModel model = DownsampleModel::Box) {
  SuperResProblem p;
  p.resampler = Resampler{model, factor};
  p.low_res = downsample(p.resampler, gt);
  p.fidelity = fidelity;
  p.smoothness_lambda = default_smoothness(fidelity);
  return p;
}

// Objective never increases within one scale of the coarse-to-fine schedule.
bool monotone_per_scale(const SolveTrace& t) {
  for (std::size_t i = 1; i < t.records.size(); ++i) {
    if (t.records[i].scale == t.records[i - 1].scale && t.records[i].objective > t.records[i - 1].objective) {
      return false;
    }
  }
  return true;
}

DepthMap ramp_scene() {
  SceneSpec s;
  s.kind = SceneKind::Ramp;
  s.width = s.height = 64;
  s.params.slope_x = 0.5;
  s.params.slope_y = 0.2;
  return generate(s);
}

}  // namespace

TEST_SUITE("superres") {
  TEST_CASE("constant input is a fixed point") {
    const DepthMap gt(Grid::Constant(16, 16, 1.5));
    for (const Fidelity f : {Fidelity::DepthMSE, Fidelity::VisualCombined}) {
      SuperResProblem p = problem_for(gt, 4, f);
      p.auto_weight = false;
      const SolveResult r = solve(p);
      CHECK((r.depth.values - 1.5).abs().maxCoeff() < 1e-12);
      CHECK(r.trace.records.front().objective < 1e-20);
    }
  }

  TEST_CASE("depth fidelity reaches feasibility on an underdetermined problem") {
    SuperResProblem p = problem_for(random_depth(4, 4), 2, Fidelity::DepthMSE);
    p.smoothness_lambda = 0.0;
    const SolveResult r = solve(p);
    const Grid residual = downsample<double>(r.depth.values, DownsampleModel::Box, 2) - p.low_res.values;
    CHECK(residual.square().sum() < 1e-10);
  }

  TEST_CASE("visual fidelity beats bicubic on a ramp") {
    const DepthMap gt = ramp_scene();
    const SuperResProblem p = problem_for(gt, 4, Fidelity::VisualCombined);
    const SolveResult r = solve(p);
    CHECK(rmse_v(r.depth, gt) < rmse_v(upsample_bicubic(p.low_res, 4), gt));
  }

  TEST_CASE("property: traces are monotone per scale with increasing iterations") {
    for (int trial = 0; trial < 3; ++trial) {
      for (const Fidelity f : {Fidelity::DepthMSE, Fidelity::VisualCombined}) {
        SolveOptions o;
        o.budget = 150;
        const SolveResult r = solve(problem_for(random_depth(16, 16, 2.0, 0.05), 4, f), o);
        CHECK(monotone_per_scale(r.trace));
        for (std::size_t i = 1; i < r.trace.records.size(); ++i) {
          CHECK(r.trace.records[i].iteration > r.trace.records[i - 1].iteration);
          CHECK(std::isfinite(r.trace.records[i].objective));
        }
      }
    }
  }

  TEST_CASE("solves are deterministic") {
    const SuperResProblem p = problem_for(random_depth(16, 16, 2.0, 0.05), 2, Fidelity::VisualCombined);
    SolveOptions o;
    o.budget = 100;
    const SolveResult a = solve(p, o), b = solve(p, o);
    CHECK(a.trace.to_csv() == b.trace.to_csv());
    CHECK((a.depth.values == b.depth.values).all());
  }

  TEST_CASE("final fidelity matches a fresh evaluation") {
    for (const Fidelity f : {Fidelity::DepthMSE, Fidelity::VisualCombined}) {
      SolveOptions o;
      o.budget = 80;
      const SuperResProblem p = problem_for(random_depth(16, 16, 2.0, 0.05), 4, f);
      const SolveResult r = solve(p, o);
      CHECK(std::abs(fidelity_value(p, r.depth, r.trace.visual_weight) - r.trace.records.back().fidelity) < 1e-12);
    }
  }

  TEST_CASE("depth fidelity solve is scale equivariant") {
    const SuperResProblem p = problem_for(random_depth(16, 16, 2.0, 0.05), 2, Fidelity::DepthMSE);
    SuperResProblem q = p;
    q.low_res.values *= 3.0;
    const SolveResult a = solve(p), b = solve(q);
    CHECK((b.depth.values - 3.0 * a.depth.values).abs().maxCoeff() < 1e-6);
  }

  TEST_CASE("holes are filled and counted") {
    SuperResProblem p = problem_for(random_depth(16, 16, 2.0, 0.05), 2, Fidelity::DepthMSE);
    p.low_res.mask(3, 3) = false;
    SolveOptions o;
    o.budget = 20;
    const SolveResult r = solve(p, o);
    CHECK(r.trace.holes_filled == 1);
    CHECK(r.depth.mask.all());
  }

  TEST_CASE("non-finite objectives report divergence") {
    Grid checker(16, 16);
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) checker(y, x) = (x + y) % 2 ? 60.0 : 40.0;
    SuperResProblem p = problem_for(DepthMap(checker), 2, Fidelity::DepthMSE);
    p.low_res.values = checker.topLeftCorner(8, 8);
    p.smoothness_lambda = 1e308;
    try {
      solve(p);
      FAIL("expected divergence");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Diverged);
    }
  }

  TEST_CASE("invalid problems are rejected") {
    SuperResProblem p = problem_for(random_depth(8, 8), 2, Fidelity::DepthMSE);
    p.smoothness_lambda = -1;
    CHECK_THROWS_AS(solve(p), Error);
    p.smoothness_lambda = 0;
    p.guide = Grid::Ones(3, 3);
    CHECK_THROWS_AS(solve(p), Error);
    p.guide.reset();
    SolveOptions o;
    o.budget = 0;
    CHECK_THROWS_AS(solve(p, o), Error);
  }

  TEST_CASE("a guide reshapes the smoothness weights") {
    SuperResProblem p = problem_for(random_depth(16, 16, 2.0, 0.05), 2, Fidelity::DepthMSE);
    SolveOptions o;
    o.budget = 50;
    const SolveResult plain = solve(p, o);
    p.guide = random_grid(16, 16, 0.0, 1.0);
    const SolveResult guided = solve(p, o);
    CHECK((plain.depth.values - guided.depth.values).abs().maxCoeff() > 0.0);
  }

  TEST_CASE("multiplicative noise") {
    const DepthMap m(Grid::Constant(64, 64, 2.0));
    CHECK((add_multiplicative_noise(m, 0.0, 7).values == m.values).all());
    const DepthMap one(Grid::Constant(1, 1, 2.0));
    CHECK(add_multiplicative_noise(one, 0.05, 9).values(0, 0) == add_multiplicative_noise(one, 0.05, 9).values(0, 0));
    const Grid g = add_multiplicative_noise(m, 0.05, 11).values / 2.0 - 1.0;
    const double sd = std::sqrt((g - g.mean()).square().sum() / (g.size() - 1));
    CHECK(sd == doctest::Approx(0.05).epsilon(0.2));
    CHECK_THROWS_AS(add_multiplicative_noise(m, -0.1, 1), Error);
  }
}
