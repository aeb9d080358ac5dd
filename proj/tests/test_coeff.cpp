#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sfde/coeff.hpp"

using namespace sfde;

TEST_CASE("control function whitelist") {
    auto one = ControlFunction::named("one");
    auto log_u = ControlFunction::named("log");
    CHECK(one(3.7) == 1.0);
    CHECK(log_u(1e-2) == doctest::Approx(std::log(std::exp(1.0) + 100.0)));
    CHECK(one.divergence_verified);
    CHECK(log_u.divergence_verified);
    CHECK_FALSE(ControlFunction::custom("c", [](double) { return 2.0; }).divergence_verified);
    CHECK_THROWS_AS(ControlFunction::named("sqrt"), UnknownName);
}

TEST_CASE("class-U validators accept the paper's typical elements") {
    const auto grid = log_grid(-9.0, 3.0, 200);
    for (const char* tag : {"one", "log"}) {
        auto v = validate_control(ControlFunction::named(tag), grid);
        CHECK(v.lower_bound_ok);
        CHECK(v.increasing_ok);
        CHECK(v.midpoint_concave_ok);
        CHECK(v.ok());
    }
}

TEST_CASE("class-U validators reject non-members") {
    const auto grid = log_grid(-6.0, 2.0, 100);
    // u < 1 fails the lower bound.
    auto low = validate_control(ControlFunction::custom("half", [](double) { return 0.5; }), grid);
    CHECK_FALSE(low.lower_bound_ok);
    // s*u(s) = s*e^{-s}*... choose u so s*u decreases: u = 1/s^2 on part of range.
    auto dec = validate_control(
        ControlFunction::custom("inv2", [](double s) { return 1.0 + 1.0 / (s * s); }), grid);
    CHECK_FALSE(dec.increasing_ok);
    // convex s*u(s): u(s) = 1 + s makes s*u = s + s^2.
    auto cvx =
        validate_control(ControlFunction::custom("lin", [](double s) { return 1.0 + s; }), grid);
    CHECK_FALSE(cvx.midpoint_concave_ok);
}

TEST_CASE("builtin catalogue instantiation") {
    for (const auto& info : builtin_catalogue()) CHECK_NOTHROW(builtin(info.name));
    CHECK_THROWS_AS(builtin("nope"), UnknownName);
    CHECK_THROWS_AS(builtin("zero", {{"q", 1.0}}), BadParams);
    CHECK_THROWS_AS(builtin("zero", {{"d", 0.0}}), BadParams);
    CHECK_THROWS_AS(builtin("constant_jump", {{"lambda", -1.0}}), BadParams);
}

TEST_CASE("builtin definitions match their catalogue entries") {
    const Segment two = Segment::constant(1, 0.0, 2.0);

    auto zero = builtin("zero", {{"d", 2.0}, {"m", 2.0}});
    CHECK(eval_drift(zero.base_equation(), 1.0, Segment::zero(2, 0.0)) ==
          std::vector<double>{0.0, 0.0});

    auto pair = builtin("shifted_drift_pair");
    CHECK(eval_drift(pair.base_equation(), 0.0, two)[0] == -2.0);
    CHECK(eval_drift(pair.barred_equation(), 0.0, two)[0] == -1.0);
    CHECK(eval_diffusion(pair.base_equation(), 0.0, two)[0] == 2.0);
    CHECK(eval_diffusion(pair.barred_equation(), 0.0, two)[0] == 2.0);

    auto delayed = builtin("delayed_diffusion", {{"r0", 1.0}});
    Segment ramp(1, {-1.0, 0.0}, {5.0, 0.0});
    CHECK(eval_diffusion(delayed.base_equation(), 0.0, ramp)[0] == 5.0);
    CHECK(eval_drift(delayed.base_equation(), 0.0, ramp)[0] == 0.0);

    auto jumps = builtin("constant_jump", {{"c", 2.5}, {"lambda", 3.0}});
    CHECK(jumps.marks.total_mass() == 3.0);
    CHECK(eval_jump(jumps.base_equation(), 0.0, two, 0)[0] == 2.5);

    auto neg = builtin("negating_jump");
    CHECK(eval_jump(neg.base_equation(), 0.0, two, 0)[0] == -2.0);
    CHECK(eval_jump(neg.barred_equation(), 0.0, two, 0)[0] == 0.0);

    auto abs_cs = builtin("abs_drift");
    CHECK(eval_drift(abs_cs.base_equation(), 0.0, Segment::constant(1, 0.0, -3.0))[0] == 3.0);

    auto log_cs = builtin("log_lipschitz_drift");
    CHECK(eval_drift(log_cs.base_equation(), 0.0, Segment::zero(1, 0.0))[0] == 0.0);
    const double x = 0.5;
    CHECK(eval_drift(log_cs.base_equation(), 0.0, Segment::constant(1, 0.0, x))[0] ==
          doctest::Approx(x * std::sqrt(std::log(std::exp(1.0) + 1.0 / (x * x)))));
}

namespace {

// Pair sampler pinning eta = 0 and xi = const delta (drives the (A1)
// small-scale examples).
PairSampler fixed_pair(double delta) {
    return [delta](std::mt19937_64&) {
        return PairSample{0.0, Segment::constant(1, 0.0, delta), Segment::zero(1, 0.0)};
    };
}

CoefficientSet scalar_drift(const char* name, std::function<double(double)> b) {
    CoefficientSet cs;
    cs.name = name;
    cs.dim = 1;
    cs.brownian_dim = 1;
    cs.r0 = 0.0;
    cs.base = zero_half(1, 1);
    cs.base.drift = [b](double, const SegmentView& xi, std::span<double> out) {
        out[0] = b(xi.at(0, 0.0));
    };
    cs.barred = zero_half(1, 1);  // "others 0": the barred half stays zero
    return cs;
}

}  // namespace

TEST_CASE("(A1) ratio: Lipschitz drift b = 2x gives exactly 4") {
    auto cs = scalar_drift("doubling", [](double x) { return 2.0 * x; });
    auto report = check_A1(cs, ControlFunction::one(), default_pair_sampler(1, 0.0), 500, 10.0, 3);
    CHECK(report.max_ratio == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(report.pass);
    CHECK(report.samples == 500);
    const double r =
        a1_ratio(cs, ControlFunction::one(), 0.0, Segment::constant(1, 0.0, 1.0), Segment::zero(1, 0.0));
    CHECK(r == 4.0);
}

TEST_CASE("(A1) catches the square-root drift at small scales") {
    auto cs = scalar_drift("root", [](double x) { return std::sqrt(std::abs(x)); });
    const auto u = ControlFunction::log_type();
    const double delta = 1e-6;
    auto report = check_A1(cs, u, fixed_pair(delta), 10, 1e3, 1);
    CHECK_FALSE(report.pass);
    // Analytic ratio: delta / (delta^2 u(delta^2)) grows without bound.
    const double expected = delta / (delta * delta * u(delta * delta));
    CHECK(report.max_ratio == doctest::Approx(expected).epsilon(1e-9));
    CHECK(report.max_ratio > 1e3);
}

TEST_CASE("(A1) modulus cancellation: b = x sqrt(u(x^2)) has ratio 1") {
    const auto u = ControlFunction::log_type();
    auto cs = scalar_drift("matched", [u](double x) {
        return x == 0.0 ? 0.0 : x * std::sqrt(u(x * x));
    });
    for (double x : {1e-5, 1e-2, 0.5, 3.0}) {
        const double r = a1_ratio(cs, u, 0.0, Segment::constant(1, 0.0, x), Segment::zero(1, 0.0));
        CHECK(r == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("(A1) degenerate pairs are skipped and counted") {
    auto cs = builtin("zero");
    auto report = check_A1(cs, ControlFunction::one(), fixed_pair(0.0), 7, 1.0, 1);
    CHECK(report.samples == 0);
    CHECK(report.degenerate_skipped == 7);
    CHECK(report.pass);  // vacuous
}

TEST_CASE("(A1) stability on a Lipschitz builtin as samples double") {
    auto cs = builtin("shifted_drift_pair");
    const auto u = ControlFunction::one();
    auto sampler = default_pair_sampler(1, 0.0);
    auto a = check_A1(cs, u, sampler, 2000, 100.0, 17);
    auto b = check_A1(cs, u, sampler, 4000, 100.0, 17);
    CHECK(a.max_ratio == doctest::Approx(b.max_ratio).epsilon(0.05));
    CHECK(a.pass);
    CHECK(b.pass);
}

TEST_CASE("(A2) evaluation at the zero segment") {
    CHECK(check_A2(builtin("zero"), 1.0, {0.0, 0.5, 1.0}).total == 0.0);

    // b(t, 0) = t: sup over [0, 2] of t^2 is 4.
    CoefficientSet cs;
    cs.dim = 1;
    cs.brownian_dim = 1;
    cs.r0 = 0.0;
    cs.base = zero_half(1, 1);
    cs.base.drift = [](double t, const SegmentView&, std::span<double> out) { out[0] = t; };
    cs.barred = zero_half(1, 1);
    std::vector<double> grid;
    for (int k = 0; k <= 20; ++k) grid.push_back(0.1 * k);
    auto rep = check_A2(cs, 2.0, grid);
    CHECK(rep.sup_value == doctest::Approx(4.0));
    CHECK(rep.worst_t == doctest::Approx(2.0));
    CHECK(rep.finite);

    // gamma(t, 0, z1) = 1 with nu1 = 3 on [0, 1]: integral 3 (1 + 1) = 6.
    CoefficientSet jc = builtin("constant_jump", {{"c", 1.0}, {"lambda", 3.0}});
    auto jrep = check_A2(jc, 1.0, {0.0, 0.5, 1.0});
    CHECK(jrep.jump_integral == doctest::Approx(6.0));
    CHECK(jrep.sup_value == 0.0);
}

TEST_CASE("(A2) flags non-finite coefficients") {
    CoefficientSet cs;
    cs.dim = 1;
    cs.brownian_dim = 1;
    cs.r0 = 0.0;
    cs.base = zero_half(1, 1);
    cs.base.drift = [](double, const SegmentView&, std::span<double> out) {
        out[0] = std::numeric_limits<double>::infinity();
    };
    cs.barred = zero_half(1, 1);
    CHECK_THROWS_AS(check_A2(cs, 1.0, {0.0, 1.0}), NonFiniteCoefficient);
}

TEST_CASE("(A1) worst pair is reproducible") {
    auto cs = scalar_drift("root", [](double x) { return std::sqrt(std::abs(x)); });
    const auto u = ControlFunction::log_type();
    auto report = check_A1(cs, u, default_pair_sampler(1, 0.0), 2000, 1e3, 5);
    REQUIRE(report.worst.has_value());
    const double again = a1_ratio(cs, u, report.worst->t, report.worst->xi, report.worst->eta);
    CHECK(again == report.max_ratio);
}
