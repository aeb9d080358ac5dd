#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sfde/noise.hpp"
#include "sfde/rng.hpp"

using namespace sfde;

TEST_CASE("empty mark space yields no events") {
    auto n = generate(42, 2, MarkMeasure::empty(), 0.0, 10.0, 0.1);
    CHECK(n.events.empty());
    CHECK(n.step_count() == 100);
    CHECK(n.increments.size() == 200);
}

TEST_CASE("generation is deterministic") {
    const auto marks = MarkMeasure::uniform(3, 0.5);
    auto a = generate(7, 2, marks, 0.0, 5.0, 0.05);
    auto b = generate(7, 2, marks, 0.0, 5.0, 0.05);
    CHECK(a.increments == b.increments);
    REQUIRE(a.events.size() == b.events.size());
    for (std::size_t k = 0; k < a.events.size(); ++k) {
        CHECK(a.events[k].time == b.events[k].time);
        CHECK(a.events[k].mark == b.events[k].mark);
    }
}

TEST_CASE("events are strictly increasing, in horizon, on the tick grid") {
    const auto marks = MarkMeasure::uniform(2, 2.0);
    auto n = generate(99, 1, marks, 1.0, 6.0, 0.25);
    const double tick = 0.25 / kTicksPerStep;
    double prev = 1.0;
    for (const auto& e : n.events) {
        CHECK(e.time > prev);
        CHECK(e.time <= 6.0);
        const double k = (e.time - 1.0) / tick;
        CHECK(std::abs(k - std::round(k)) < 1e-6);
        // Snapped times reproduce bitwise from their tick index.
        CHECK(e.time == 1.0 + std::round(k) * tick);
        prev = e.time;
    }
    CHECK(n.events.size() > 0);
}

TEST_CASE("arrival count matches the Poisson mean") {
    // nu(E) = 2, span 50: mean 100 per realization; averaged over 2000
    // realizations the 3-sigma band is well inside [98, 102].
    const auto marks = MarkMeasure::uniform(2, 1.0);
    double total = 0.0;
    const std::size_t reps = 2000;
    for (std::size_t s = 0; s < reps; ++s)
        total += static_cast<double>(generate(substream_key(5, s), 0, marks, 0.0, 50.0, 0.5).events.size());
    const double mean = total / static_cast<double>(reps);
    CHECK(mean > 98.0);
    CHECK(mean < 102.0);
}

TEST_CASE("increment moments") {
    auto n = generate(31, 1, MarkMeasure::empty(), 0.0, 1000.0, 0.01);
    const auto count = static_cast<double>(n.step_count());
    double mean = 0.0;
    for (double x : n.increments) mean += x;
    mean /= count;
    double var = 0.0;
    for (double x : n.increments) var += (x - mean) * (x - mean);
    var /= count - 1.0;
    CHECK(std::abs(var - 0.01) < 1e-4);                       // 1% of the step
    CHECK(std::abs(mean) < 3.0 * std::sqrt(0.01 / count));    // 3 sigma of 0
}

TEST_CASE("mark frequencies follow the weights") {
    MarkMeasure marks;
    marks.labels = {"a", "b"};
    marks.values = {1.0, 2.0};
    marks.weights = {1.0, 3.0};
    auto n = generate(77, 0, marks, 0.0, 30000.0, 1.0);
    REQUIRE(n.events.size() > 100000);
    double n1 = 0.0;
    for (const auto& e : n.events)
        if (e.mark == 1) n1 += 1.0;
    const double total = static_cast<double>(n.events.size());
    const double p = 0.75;
    CHECK(std::abs(n1 / total - p) < 3.0 * std::sqrt(p * (1 - p) / total));
}

TEST_CASE("substreams are uncorrelated") {
    auto a = generate(substream_key(123, 0), 1, MarkMeasure::empty(), 0.0, 1000.0, 0.01);
    auto b = generate(substream_key(123, 1), 1, MarkMeasure::empty(), 0.0, 1000.0, 0.01);
    const std::size_t n = a.step_count();
    double ma = 0.0, mb = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        ma += a.increments[k];
        mb += b.increments[k];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        cov += (a.increments[k] - ma) * (b.increments[k] - mb);
        va += (a.increments[k] - ma) * (a.increments[k] - ma);
        vb += (b.increments[k] - mb) * (b.increments[k] - mb);
    }
    CHECK(std::abs(cov / std::sqrt(va * vb)) < 0.01);
}

TEST_CASE("inject_events replaces the jump stream only") {
    const auto marks = MarkMeasure::uniform(2, 1.0);
    auto base = generate(11, 1, marks, 0.0, 2.0, 0.1);

    auto empty = inject_events(base, {});
    CHECK(empty.events.empty());
    CHECK(empty.increments == base.increments);

    auto one = inject_events(base, {{1.0, 0}});
    REQUIRE(one.events.size() == 1);
    CHECK(one.events[0].time == 1.0);

    CHECK_THROWS_AS(inject_events(base, {{1.0, 0}, {1.0, 1}}), UnsortedEvents);  // equal times
    CHECK_THROWS_AS(inject_events(base, {{1.5, 0}, {1.0, 1}}), UnsortedEvents);
    CHECK_THROWS_AS(inject_events(base, {{1.0, 5}}), UnknownMark);
    CHECK_THROWS_AS(inject_events(base, {{2.5, 0}}), UnsortedEvents);  // outside horizon
}

TEST_CASE("generation argument errors") {
    CHECK_THROWS_AS(generate(1, 1, MarkMeasure::empty(), 1.0, 1.0, 0.1), InvalidHorizon);
    CHECK_THROWS_AS(generate(1, 1, MarkMeasure::empty(), 0.0, 1.0, 0.0), ZeroStep);
    CHECK_THROWS_AS(generate(1, 1, MarkMeasure::empty(), 0.0, 1.0, 0.3), ZeroStep);  // no fit
}

TEST_CASE("coarsening sums increment groups") {
    auto fine = generate(3, 2, MarkMeasure::empty(), 0.0, 1.0, 0.01);
    auto coarse = coarsened(fine, 4);
    CHECK(coarse.step == doctest::Approx(0.04));
    CHECK(coarse.step_count() == 25);
    for (std::size_t k = 0; k < coarse.step_count(); ++k) {
        for (int j = 0; j < 2; ++j) {
            double sum = 0.0;
            for (int q = 0; q < 4; ++q) sum += fine.increments[(4 * k + q) * 2 + j];
            CHECK(coarse.increments[k * 2 + j] == doctest::Approx(sum).epsilon(1e-15));
        }
    }
}

TEST_CASE("truncation drops the tail bitwise") {
    const auto marks = MarkMeasure::uniform(1, 5.0);
    auto full = generate(13, 1, marks, 0.0, 2.0, 0.1);
    auto cut = truncated_after(full, 1.0);
    CHECK(cut.step_count() == 10);
    for (std::size_t k = 0; k < cut.increments.size(); ++k)
        CHECK(cut.increments[k] == full.increments[k]);
    for (const auto& e : cut.events) CHECK(e.time <= 1.0);
}

TEST_CASE("mark measure validation") {
    MarkMeasure bad;
    bad.labels = {"z1"};
    bad.values = {1.0};
    bad.weights = {-1.0};
    CHECK_THROWS_AS(bad.validate(), Error);
    CHECK(MarkMeasure::uniform(3, 0.5).total_mass() == doctest::Approx(1.5));
    CHECK(MarkMeasure::uniform(3, 0.5).index_of("z2") == 1);
    CHECK(MarkMeasure::uniform(3, 0.5).index_of("w") == -1);
}
