#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "sfde/rng.hpp"
#include "sfde/solver.hpp"

using namespace sfde;

namespace {

CoefficientSet constant_drift(double b, double bbar = 0.0) {
    CoefficientSet cs;
    cs.name = "const_drift";
    cs.dim = 1;
    cs.brownian_dim = 1;
    cs.r0 = 0.0;
    cs.base = zero_half(1, 1);
    cs.barred = cs.base;
    cs.base.drift = [b](double, const SegmentView&, std::span<double> out) { out[0] = b; };
    cs.barred.drift = [bbar](double, const SegmentView&, std::span<double> out) { out[0] = bbar; };
    return cs;
}

}  // namespace

TEST_CASE("zero coefficients hold the initial value") {
    auto cs = builtin("zero");
    const Segment c = Segment::constant(1, 0.0, 3.5);
    auto noise = generate(1, 1, cs.marks, 0.0, 1.0, 0.1);
    auto r = solve_path(cs.base_equation(), c, noise, {0.1, 0.0, 1.0, {}});
    for (std::size_t k = 0; k < r.history.node_count(); ++k)
        CHECK(r.history.value(k, 0) == 3.5);
    CHECK(r.diag.steps == 10);
    CHECK_FALSE(r.stopped_at.has_value());
}

TEST_CASE("unit drift integrates to exactly 1.0") {
    auto cs = constant_drift(1.0);
    auto noise = generate(2, 1, cs.marks, 0.0, 1.0, 0.1);
    auto r = solve_path(cs.base_equation(), Segment::zero(1, 0.0), noise, {0.1, 0.0, 1.0, {}});
    CHECK(r.history.eval(0, 1.0) == 1.0);  // ten increments of 0.1, bitwise
}

TEST_CASE("single injected jump uses the left-limit segment") {
    // gamma = 1, b = sigma = 0, one event at t = 1 inside [0, 2].
    auto cs = builtin("constant_jump", {{"c", 1.0}, {"lambda", 1.0}});
    const Segment init = Segment::constant(1, 0.0, 2.0);
    auto noise = generate(3, 1, cs.marks, 0.0, 2.0, 0.1);
    noise = inject_events(noise, {{1.0, 0}});
    auto r = solve_path(cs.base_equation(), init, noise, {0.1, 0.0, 2.0, {}});

    CHECK(r.diag.jumps == 1);
    CHECK(r.history.eval(0, 0.9) == 2.0);
    CHECK(r.history.eval(0, 1.0) == 3.0);
    CHECK(r.history.eval(0, 2.0) == 3.0);
    CHECK(r.history.left_limit(0, 1.0) == 2.0);  // recorded pre-jump value
    CHECK(r.history.left_segment_at(1.0).at(0, 0.0) == 2.0);
    CHECK(r.history.jump_count() == 1);
}

TEST_CASE("jump coefficient sees the pre-jump state") {
    // gamma(xi) = -xi(0) empties the state: from 2 the jump lands at 0.
    auto cs = builtin("negating_jump");
    const Segment init = Segment::constant(1, 0.0, 2.0);
    auto noise = generate(4, 1, cs.marks, 0.0, 1.0, 0.25);
    noise = inject_events(noise, {{0.6, 0}});  // off the base grid
    auto r = solve_path(cs.base_equation(), init, noise, {0.25, 0.0, 1.0, {}});
    CHECK(r.history.eval(0, 0.6) == 0.0);
    CHECK(r.history.left_limit(0, 0.6) == 2.0);
    CHECK(r.history.eval(0, 1.0) == 0.0);
    // The off-grid event became a node between base nodes.
    CHECK(r.history.node_count() == 4 + 1 + 1);  // initial + 4 steps + 1 jump
}

TEST_CASE("coupled solve equals two single solves") {
    auto cs = builtin("shifted_drift_pair");
    const Segment z = Segment::zero(1, 0.0);
    auto noise = generate(5, 1, cs.marks, 0.0, 1.0, 0.01);
    SolverConfig cfg{0.01, 0.0, 1.0, {}};
    auto coupled = solve_coupled(cs, z, z, noise, cfg);
    auto x = solve_path(cs.base_equation(), z, noise, cfg);
    auto xbar = solve_path(cs.barred_equation(), z, noise, cfg);
    REQUIRE(coupled.x.history.node_count() == x.history.node_count());
    for (std::size_t k = 0; k < x.history.node_count(); ++k) {
        CHECK(coupled.x.history.value(k, 0) == x.history.value(k, 0));
        CHECK(coupled.xbar.history.value(k, 0) == xbar.history.value(k, 0));
    }
    // Identical halves and identical inits reproduce the same path.
    auto same = solve_coupled(builtin("geometric_diffusion"), z, z, noise, cfg);
    for (std::size_t k = 0; k < same.x.history.node_count(); ++k)
        CHECK(same.x.history.value(k, 0) == same.xbar.history.value(k, 0));
}

TEST_CASE("shifted drift pair keeps a positive gap on almost every path") {
    auto cs = builtin("shifted_drift_pair");
    const Segment z = Segment::zero(1, 0.0);
    SolverConfig cfg{1e-3, 0.0, 1.0, {}};
    int positive = 0;
    const int seeds = 1000;
    for (int s = 0; s < seeds; ++s) {
        auto noise = generate(substream_key(0xA11, static_cast<std::uint64_t>(s)), 1, cs.marks,
                              0.0, 1.0, 1e-3);
        auto r = solve_coupled(cs, z, z, noise, cfg);
        double min_gap = 1e300;
        for (std::size_t k = 1; k < r.x.history.node_count(); ++k)
            min_gap = std::min(min_gap,
                               r.xbar.history.value(k, 0) - r.x.history.value(k, 0));
        if (min_gap > 0.0) ++positive;
    }
    CHECK(positive >= 990);  // >= 99% of paths
}

TEST_CASE("moment diagnostic on deterministic ensembles") {
    auto cs = builtin("zero");
    const Segment c = Segment::constant(1, 0.0, 2.0);
    auto noise = generate(6, 1, cs.marks, 0.0, 1.0, 0.1);
    std::vector<PathResult> ensemble;
    ensemble.push_back(solve_path(cs.base_equation(), c, noise, {0.1, 0.0, 1.0, {}}));
    CHECK(moment_diagnostic(ensemble).mean_sup_sq == 4.0);

    // Monotone decay: b = -x from 1 never exceeds the initial value.
    auto lin = builtin("linear_drift", {{"a", -1.0}});
    auto r = solve_path(lin.base_equation(), Segment::constant(1, 0.0, 1.0), noise,
                        {0.1, 0.0, 1.0, {}});
    CHECK(sup_sq(r.history) == 1.0);
}

TEST_CASE("moment diagnostic matches Poisson second moments") {
    // X(t) = N_t (unit jumps, rate 2): E sup_{t<=1} X^2 = E N_1^2 = 6.
    auto cs = builtin("constant_jump", {{"c", 1.0}, {"lambda", 2.0}});
    const Segment z = Segment::zero(1, 0.0);
    std::vector<PathResult> ensemble;
    const std::size_t paths = 10000;
    for (std::size_t p = 0; p < paths; ++p) {
        auto noise = generate(substream_key(0x90, p), 1, cs.marks, 0.0, 1.0, 0.1);
        ensemble.push_back(solve_path(cs.base_equation(), z, noise, {0.1, 0.0, 1.0, {}}));
    }
    const double got = moment_diagnostic(ensemble).mean_sup_sq;
    // lambda T + (lambda T)^2 = 6 with 3 sigma of sqrt(Var(N^2)/paths).
    const double sd3 = 3.0 * std::sqrt(58.0 / static_cast<double>(paths));
    CHECK(std::abs(got - 6.0) < sd3);
}

TEST_CASE("adaptedness: truncating the future leaves the past bitwise") {
    auto cs = builtin("geometric_diffusion");
    const Segment one = Segment::constant(1, 0.0, 1.0);
    auto noise = generate(8, 1, cs.marks, 0.0, 2.0, 0.01);
    auto full = solve_path(cs.base_equation(), one, noise, {0.01, 0.0, 2.0, {}});
    auto cut_noise = truncated_after(noise, 1.0);
    auto cut = solve_path(cs.base_equation(), one, cut_noise, {0.01, 0.0, 1.0, {}});
    REQUIRE(cut.history.node_count() <= full.history.node_count());
    for (std::size_t k = 0; k < cut.history.node_count(); ++k) {
        CHECK(cut.history.time(k) == full.history.time(k));
        CHECK(cut.history.value(k, 0) == full.history.value(k, 0));
    }
}

TEST_CASE("grid refinement shows a strong-order trend") {
    auto cs = builtin("geometric_diffusion");
    const Segment one = Segment::constant(1, 0.0, 1.0);
    std::vector<double> ratios;
    for (std::uint64_t s = 0; s < 32; ++s) {
        auto fine = generate(substream_key(0x5A, s), 1, cs.marks, 0.0, 1.0, 0.0025);
        auto mid = coarsened(fine, 2);    // h = 0.005
        auto coarse = coarsened(fine, 4); // h = 0.01
        auto xf = solve_path(cs.base_equation(), one, fine, {0.0025, 0.0, 1.0, {}});
        auto xm = solve_path(cs.base_equation(), one, mid, {0.005, 0.0, 1.0, {}});
        auto xc = solve_path(cs.base_equation(), one, coarse, {0.01, 0.0, 1.0, {}});
        double err_c = 0.0, err_m = 0.0;
        for (std::size_t k = 0; k < xc.history.node_count(); ++k) {
            const double t = xc.history.time(k);
            err_c = std::max(err_c, std::abs(xc.history.value(k, 0) - xm.history.eval(0, t)));
            err_m = std::max(err_m, std::abs(xm.history.eval(0, t) - xf.history.eval(0, t)));
        }
        if (err_m > 0.0) ratios.push_back(err_c / err_m);
    }
    std::sort(ratios.begin(), ratios.end());
    CHECK(ratios[ratios.size() / 2] >= 1.2);  // median ratio, ~sqrt(2) expected
}

TEST_CASE("localization stops at the first exit") {
    auto cs = constant_drift(1.0);
    SolverConfig cfg{0.1, 0.0, 1.0, 0.35};
    auto noise = generate(9, 1, cs.marks, 0.0, 1.0, 0.1);
    auto r = solve_path(cs.base_equation(), Segment::zero(1, 0.0), noise, cfg);
    REQUIRE(r.stopped_at.has_value());
    CHECK(*r.stopped_at == doctest::Approx(0.4));
    CHECK(r.history.end_time() == *r.stopped_at);
    CHECK(r.history.eval(0, *r.stopped_at) >= 0.35);
}

TEST_CASE("blow-up raises NonFiniteState") {
    CoefficientSet cs;
    cs.dim = 1;
    cs.brownian_dim = 1;
    cs.r0 = 0.0;
    cs.base = zero_half(1, 1);
    cs.base.drift = [](double, const SegmentView& xi, std::span<double> out) {
        const double x = xi.at(0, 0.0);
        out[0] = x * x * x;
    };
    cs.barred = cs.base;
    auto noise = generate(10, 1, cs.marks, 0.0, 10.0, 1.0);
    CHECK_THROWS_AS(
        solve_path(cs.base_equation(), Segment::constant(1, 0.0, 10.0), noise, {1.0, 0.0, 10.0, {}}),
        NonFiniteState);
}

TEST_CASE("configuration mismatches are rejected") {
    auto cs = builtin("delayed_drift", {{"r0", 1.0}});
    auto noise = generate(11, 1, cs.marks, 0.0, 0.9, 0.3);
    // r0 = 1 is not a multiple of h = 0.3.
    CHECK_THROWS_AS(
        solve_path(cs.base_equation(), Segment::zero(1, 1.0), noise, {0.3, 0.0, 0.9, {}}),
        ConfigMismatch);
    // Noise generated at a different step.
    auto cs0 = builtin("zero");
    auto noise2 = generate(11, 1, cs0.marks, 0.0, 1.0, 0.1);
    CHECK_THROWS_AS(
        solve_path(cs0.base_equation(), Segment::zero(1, 0.0), noise2, {0.2, 0.0, 1.0, {}}),
        ConfigMismatch);
    // Initial segment delay differs from the equation's.
    CHECK_THROWS_AS(
        solve_path(cs0.base_equation(), Segment::zero(1, 0.5), noise2, {0.1, 0.0, 1.0, {}}),
        ConfigMismatch);
}

TEST_CASE("delayed drift reads the initial segment during warmup") {
    // b = x(-1), xi linear from 1 at -1 to 0 at 0: during [0, 1] the drift
    // replays the ramp; X(h) = h * xi(-1) = h exactly at the first step.
    auto cs = builtin("delayed_drift", {{"r0", 1.0}});
    Segment ramp(1, {-1.0, 0.0}, {1.0, 0.0});
    auto noise = generate(12, 1, cs.marks, 0.0, 2.0, 0.25);
    auto r = solve_path(cs.base_equation(), ramp, noise, {0.25, 0.0, 2.0, {}});
    CHECK(r.history.eval(0, 0.25) == 0.25 * 1.0);
    // Euler left-point sum of the ramp: X(1) = h * sum_{k=0}^{3} xi(-1 + k h).
    double expect = 0.0;
    for (int k = 0; k < 4; ++k) expect += 0.25 * ramp.at(0, -1.0 + 0.25 * k);
    CHECK(r.history.eval(0, 1.0) == doctest::Approx(expect).epsilon(1e-15));
}

TEST_CASE("multidimensional paths use row-major diffusion") {
    // d = m = 2 with diagonal sigma = 0.5 x^i(0): each component runs its own
    // geometric recursion on its own Brownian coordinate.
    auto cs = builtin("linear_drift", {{"d", 2.0}, {"m", 2.0}, {"a", -0.5}, {"c", 0.5}});
    const Segment init = Segment::constant(2, 0.0, std::vector<double>{1.0, -2.0});
    auto noise = generate(15, 2, cs.marks, 0.0, 1.0, 0.25);
    auto r = solve_path(cs.base_equation(), init, noise, {0.25, 0.0, 1.0, {}});
    double x0 = 1.0, x1 = -2.0;
    for (std::size_t k = 0; k < 4; ++k) {
        const double dt = r.history.time(k + 1) - r.history.time(k);
        const double* db = noise.step_increment(k);
        x0 += -0.5 * x0 * dt + 0.5 * x0 * db[0];
        x1 += -0.5 * x1 * dt + 0.5 * x1 * db[1];
        CHECK(r.history.value(k + 1, 0) == doctest::Approx(x0).epsilon(1e-15));
        CHECK(r.history.value(k + 1, 1) == doctest::Approx(x1).epsilon(1e-15));
    }
}

TEST_CASE("jump bookkeeping counts every in-horizon event") {
    auto cs = builtin("constant_jump", {{"c", 0.5}, {"lambda", 4.0}});
    auto noise = generate(14, 1, cs.marks, 0.0, 2.0, 0.1);
    auto r = solve_path(cs.base_equation(), Segment::zero(1, 0.0), noise, {0.1, 0.0, 2.0, {}});
    CHECK(r.diag.jumps == noise.events.size());
    CHECK(r.history.jump_count() == noise.events.size());
    // Each recorded pre value equals the value 0.5 below the post value.
    for (std::size_t j = 0; j < r.history.jump_count(); ++j) {
        const int node = r.history.jump_nodes()[j];
        CHECK(r.history.pre_value_at_jump(j)[0] ==
              doctest::Approx(r.history.value(static_cast<std::size_t>(node), 0) - 0.5));
    }
}
