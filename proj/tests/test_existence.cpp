#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "sfde/existence.hpp"
#include "sfde/rng.hpp"

using namespace sfde;

namespace {

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

}  // namespace

TEST_CASE("bihari bound closed cases") {
    BihariKernel one(ControlFunction::one());
    CHECK(one.bound(1.0, 1.0, 1.0) == doctest::Approx(std::exp(1.0)).epsilon(1e-10));
    CHECK(one.bound(2.5, 3.0, 0.0) == 2.5);
    CHECK(one.bound(0.0, 5.0, 7.0) == 0.0);

    BihariKernel logk(ControlFunction::log_type());
    CHECK(logk.bound(1.0, 0.0, 123.0) == 1.0);
    CHECK(logk.bound(1.0, 0.0, 0.0) == 1.0);
}

TEST_CASE("Gronwall reduction on a parameter grid") {
    BihariKernel one(ControlFunction::one());
    for (double a : {0.1, 1.0, 10.0})
        for (double C : {0.1, 1.0, 10.0})
            for (double t : {0.1, 1.0, 10.0}) {
                const double expected = a * std::exp(C * t);
                CHECK(one.bound(a, C, t) ==
                      doctest::Approx(expected).epsilon(1e-8));
            }
}

TEST_CASE("G is monotone with a faithful inverse") {
    for (const char* tag : {"one", "log"}) {
        BihariKernel k(ControlFunction::named(tag));
        double prev = -1e300;
        for (double lg = -6.0; lg <= 6.0; lg += 0.25) {
            const double s = std::pow(10.0, lg);
            const double g = k.G(s);
            CHECK(g > prev);
            prev = g;
            CHECK(k.G_inverse(g) == doctest::Approx(s).epsilon(1e-8));
        }
        CHECK(k.G(1.0) == 0.0);
    }
}

TEST_CASE("bound growth is monotone in its arguments") {
    BihariKernel logk(ControlFunction::log_type());
    double prev = 0.0;
    for (double t : {0.0, 0.5, 1.0, 2.0, 4.0}) {
        const double b = logk.bound(1.0, 1.0, t);
        CHECK(b >= prev);
        prev = b;
    }
}

TEST_CASE("RangeExceeded for a convergent tail") {
    // u(s) = e^s makes 1/(s u(s)) integrable at infinity: G is bounded.
    BihariKernel k(ControlFunction::custom("exp", [](double s) { return std::exp(s); }));
    CHECK_THROWS_AS(k.G_inverse(10.0), RangeExceeded);
}

TEST_CASE("mollifier law realizes the Brownian segment") {
    // Variance at theta is r0 + 1 + theta; increments are independent.
    auto law = MollifierLaw::make(1, 1.0, 20000, 42, 5);
    const auto& draws = law.draws();
    REQUIRE(draws.size() == 20000);
    const auto& thetas = draws.front().thetas();
    REQUIRE(thetas.size() == 5);

    for (std::size_t k = 0; k < thetas.size(); ++k) {
        double mean = 0.0, var = 0.0;
        for (const auto& d : draws) mean += d.value(k, 0);
        mean /= static_cast<double>(draws.size());
        for (const auto& d : draws) {
            const double c = d.value(k, 0) - mean;
            var += c * c;
        }
        var /= static_cast<double>(draws.size() - 1);
        const double expected = 1.0 + 1.0 + thetas[k];  // r0 + 1 + theta
        // 3-sigma band for a chi-square variance estimate.
        const double sd = expected * std::sqrt(2.0 / static_cast<double>(draws.size()));
        CHECK(std::abs(var - expected) < 3.0 * sd);
        const double mean_sd = std::sqrt(expected / static_cast<double>(draws.size()));
        CHECK(std::abs(mean) < 3.0 * mean_sd);
    }

    // Increment independence: consecutive increments are uncorrelated.
    double cov = 0.0, v1 = 0.0, v2 = 0.0;
    for (const auto& d : draws) {
        const double i1 = d.value(1, 0) - d.value(0, 0);
        const double i2 = d.value(2, 0) - d.value(1, 0);
        cov += i1 * i2;
        v1 += i1 * i1;
        v2 += i2 * i2;
    }
    CHECK(std::abs(cov / std::sqrt(v1 * v2)) < 0.025);
}

TEST_CASE("mollifying a constant is exact") {
    auto cs = builtin("zero");
    CoefficientHalf constant = zero_half(1, 1);
    constant.drift = [](double, const SegmentView&, std::span<double> out) { out[0] = 2.5; };
    auto law = MollifierLaw::make(1, 0.0, 1000, 7);
    auto smooth = mollify(constant, law, 3);
    std::vector<double> out(1);
    smooth.drift(0.0, Segment::zero(1, 0.0), out);
    CHECK(out[0] == doctest::Approx(2.5).epsilon(1e-14));
}

TEST_CASE("mollifying a linear drift only shifts by the frozen mean") {
    // b(xi) = xi(0): b_n(xi) = xi(0) + mean(eta(0)) / n with a CI oracle.
    CoefficientHalf linear = zero_half(1, 1);
    linear.drift = [](double, const SegmentView& xi, std::span<double> out) {
        out[0] = xi.at(0, 0.0);
    };
    const std::size_t samples = 4096;
    auto law = MollifierLaw::make(1, 0.0, samples, 11);
    for (int n : {1, 4}) {
        auto stats = mollified_drift_stats(linear, law, n, 0.0, Segment::constant(1, 0.0, 1.5));
        const double ci = 3.0 * std::sqrt(1.0 / static_cast<double>(samples)) / n;
        CHECK(std::abs(stats.mean[0] - 1.5) <= ci);
    }
}

TEST_CASE("mollified absolute drift at zero approaches the half-normal mean") {
    auto cs = builtin("abs_drift");
    auto law = MollifierLaw::make(1, 0.0, 10000, 13);
    const double target = std::sqrt(2.0 / (4.0 * std::atan(1.0)));
    for (int n : {1, 2, 8}) {
        auto stats = mollified_drift_stats(cs.base, law, n, 0.0, Segment::zero(1, 0.0));
        CHECK(std::abs(stats.mean[0] - target / n) <= stats.ci3[0]);
    }
}

TEST_CASE("mollification keeps the base modulus and stabilizes") {
    // |b_n(xi) - b_n(eta)| <= ||xi - eta|| for b = |x(0)| (averaging cannot
    // expand a 1-Lipschitz map), and the sampled quotient stabilizes as the
    // sample count doubles.
    auto cs = builtin("abs_drift");
    std::mt19937_64 rng(17);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto quotient = [&](const MollifierLaw& law) {
        double worst = 0.0;
        std::vector<double> oa(1), ob(1);
        auto smooth = mollify(cs.base, law, 2);
        for (int rep = 0; rep < 64; ++rep) {
            const double a = gauss(rng), b = gauss(rng);
            if (a == b) continue;
            smooth.drift(0.0, Segment::constant(1, 0.0, a), oa);
            smooth.drift(0.0, Segment::constant(1, 0.0, b), ob);
            worst = std::max(worst, std::abs(oa[0] - ob[0]) / std::abs(a - b));
        }
        return worst;
    };
    const double q1 = quotient(MollifierLaw::make(1, 0.0, 2000, 19));
    const double q2 = quotient(MollifierLaw::make(1, 0.0, 4000, 19));
    CHECK(q1 <= 1.0 + 1e-12);
    CHECK(q2 <= 1.0 + 1e-12);
    CHECK(q1 == doctest::Approx(q2).epsilon(0.05));
}

TEST_CASE("mollified oracles converge to the base as the level grows") {
    auto cs = builtin("abs_drift");
    auto law = MollifierLaw::make(1, 0.0, 4096, 23);
    std::mt19937_64 rng(29);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> points;
    for (int k = 0; k < 32; ++k) points.push_back(gauss(rng));

    double prev = 1e300;
    for (int n : {1, 2, 4, 8, 16, 32}) {
        auto smooth = mollify(cs.base, law, n);
        std::vector<double> devs;
        std::vector<double> out(1);
        for (double x : points) {
            smooth.drift(0.0, Segment::constant(1, 0.0, x), out);
            devs.push_back(std::abs(out[0] - std::abs(x)));
        }
        const double med = median_of(devs);
        CHECK(med <= prev + 1e-12);
        prev = med;
    }
    CHECK(prev < 0.05);  // close to the base at n = 32
}

TEST_CASE("segment truncation") {
    const Segment big = Segment::constant(1, 0.0, 5.0);
    CHECK(truncate_segment(big, 2.0).at(0, 0.0) == 2.0);
    const Segment small = Segment::constant(2, 1.0, std::vector<double>{0.5, -0.25});
    auto same = truncate_segment(small, 1.0);
    CHECK(same.at(0, 0.0) == 0.5);
    CHECK(same.at(1, -1.0) == -0.25);

    // Idempotence and monotonicity on random pairs.
    std::mt19937_64 rng(31);
    std::normal_distribution<double> gauss(0.0, 2.0);
    for (int rep = 0; rep < 100; ++rep) {
        const double a = gauss(rng);
        const double d = std::abs(gauss(rng));
        Segment xi = Segment::constant(1, 0.0, a);
        Segment xibar = Segment::constant(1, 0.0, a + d);
        auto ta = truncate_segment(xi, 1.5);
        CHECK(truncate_segment(ta, 1.5).at(0, 0.0) == ta.at(0, 0.0));
        CHECK(leq(ta, truncate_segment(xibar, 1.5)));
    }
}

TEST_CASE("truncated oracle agrees with the base inside the window") {
    auto cs = builtin("abs_drift");
    auto clipped = truncate_coeff(cs.base, 3);
    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> unif(-2.5, 2.5);
    std::vector<double> a(1), b(1);
    for (int rep = 0; rep < 100; ++rep) {
        Segment xi = Segment::constant(1, 0.0, unif(rng));
        const double t = 0.5 * (unif(rng) + 2.5);
        cs.base.drift(t, xi, a);
        clipped.drift(t, xi, b);
        CHECK(a[0] == b[0]);
    }
    // Outside: values clamp.
    Segment far = Segment::constant(1, 0.0, 10.0);
    clipped.drift(0.0, far, b);
    CHECK(b[0] == 3.0);
}

TEST_CASE("cascade on the zero base is identically zero") {
    auto cs = builtin("zero");
    auto law = MollifierLaw::make(1, 0.0, 256, 41);
    auto noise = generate(43, 1, cs.marks, 0.0, 1.0, 0.1);
    auto r = approximation_cascade(cs.base_equation(), Segment::zero(1, 0.0), noise,
                                   {0.1, 0.0, 1.0, {}}, law, {1, 2, 4});
    for (double g : r.gaps) CHECK(g == 0.0);
}

TEST_CASE("cascade on a linear base stays inside the frozen-mean envelope") {
    CoefficientSet cs;
    cs.dim = 1;
    cs.brownian_dim = 1;
    cs.r0 = 0.0;
    cs.base = zero_half(1, 1);
    cs.base.drift = [](double, const SegmentView& xi, std::span<double> out) {
        out[0] = xi.at(0, 0.0);
    };
    cs.barred = cs.base;
    const std::size_t samples = 4096;
    auto law = MollifierLaw::make(1, 0.0, samples, 47);
    // The frozen mean shift is the only difference between levels.
    double mean_eta = 0.0;
    for (const auto& d : law.draws()) mean_eta += d.value(0, 0);
    mean_eta /= static_cast<double>(samples);

    auto noise = generate(53, 1, cs.marks, 0.0, 1.0, 0.01);
    auto r = approximation_cascade(cs.base_equation(), Segment::zero(1, 0.0), noise,
                                   {0.01, 0.0, 1.0, {}}, law, {1, 2, 4, 8});
    for (std::size_t k = 0; k + 1 < r.levels.size(); ++k) {
        const double dn = 1.0 / r.levels[k] - 1.0 / r.levels[k + 1];
        const double envelope = std::abs(mean_eta) * dn * (std::exp(1.0) - 1.0) * 1.05 + 1e-12;
        CHECK(r.gaps[k] <= envelope);
    }
}

TEST_CASE("cascade gaps halve for the absolute-value drift") {
    auto cs = builtin("abs_drift");
    std::vector<std::vector<double>> rows;
    for (std::uint64_t s = 0; s < 8; ++s) {
        auto law = MollifierLaw::make(1, 0.0, 4096, substream_key(59, s));
        auto noise = generate(substream_key(61, s), 1, cs.marks, 0.0, 1.0, 0.01);
        auto r = approximation_cascade(cs.base_equation(), Segment::zero(1, 0.0), noise,
                                       {0.01, 0.0, 1.0, {}}, law, {1, 2, 4, 8, 16});
        rows.push_back(r.gaps);
    }
    for (std::size_t k = 0; k + 1 < rows.front().size(); ++k) {
        std::vector<double> a, b;
        for (const auto& row : rows) {
            a.push_back(row[k]);
            b.push_back(row[k + 1]);
        }
        CHECK(median_of(b) < median_of(a));
    }
    std::vector<double> first, last;
    for (const auto& row : rows) {
        first.push_back(row.front());
        last.push_back(row.back());
    }
    CHECK(median_of(last) / median_of(first) <= 0.25);
}

TEST_CASE("cascade validates its inputs") {
    auto cs = builtin("abs_drift");
    auto law = MollifierLaw::make(1, 0.0, 64, 67);
    auto noise = generate(71, 1, cs.marks, 0.0, 1.0, 0.1);
    CHECK_THROWS_AS(approximation_cascade(cs.base_equation(), Segment::zero(1, 0.0), noise,
                                          {0.1, 0.0, 1.0, {}}, law, {4, 2}),
                    Error);
    auto wrong_law = MollifierLaw::make(2, 0.0, 64, 67);
    CHECK_THROWS_AS(approximation_cascade(cs.base_equation(), Segment::zero(1, 0.0), noise,
                                          {0.1, 0.0, 1.0, {}}, wrong_law, {1, 2}),
                    ConfigMismatch);
}

TEST_CASE("uniqueness evidence: zero and jump configurations agree exactly") {
    auto zero = builtin("zero");
    auto rz = uniqueness_check(zero.base_equation(), Segment::zero(1, 0.0), {0.1, 0.0, 1.0, {}},
                               {1, 2, 3});
    CHECK(rz.max_sup_distance == 0.0);
    CHECK(rz.pass);

    // Jump nodes coincide bitwise between the two drivers.
    auto jumps = builtin("constant_jump", {{"c", 1.0}, {"lambda", 5.0}});
    auto rj = uniqueness_check(jumps.base_equation(), Segment::zero(1, 0.0), {0.1, 0.0, 2.0, {}},
                               {7, 8});
    CHECK(rj.max_sup_distance == 0.0);
}

TEST_CASE("uniqueness evidence on the linear builtin") {
    auto cs = builtin("linear_drift", {{"a", -1.0}, {"c", 0.5}});
    std::vector<std::uint64_t> seeds;
    for (std::uint64_t s = 0; s < 32; ++s) seeds.push_back(substream_key(73, s));
    auto r = uniqueness_check(cs.base_equation(), Segment::constant(1, 0.0, 1.0),
                              {0.01, 0.0, 1.0, {}}, seeds);
    CHECK(r.seeds == 32);
    CHECK(r.max_sup_distance <= kUniquenessBudget);
    CHECK(r.pass);
}
