#include "sfde/noise.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "sfde/rng.hpp"

namespace sfde {

MarkMeasure MarkMeasure::uniform(int k, double weight_each) {
    MarkMeasure m;
    for (int j = 1; j <= k; ++j) {
        m.labels.push_back("z" + std::to_string(j));
        m.values.push_back(static_cast<double>(j));
        m.weights.push_back(weight_each);
    }
    m.validate();
    return m;
}

MarkMeasure MarkMeasure::single(double weight, double value, std::string label) {
    MarkMeasure m;
    m.labels.push_back(std::move(label));
    m.values.push_back(value);
    m.weights.push_back(weight);
    m.validate();
    return m;
}

double MarkMeasure::total_mass() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
}

int MarkMeasure::index_of(const std::string& label) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == label) return static_cast<int>(i);
    return -1;
}

void MarkMeasure::validate() const {
    if (labels.size() != weights.size() || values.size() != weights.size())
        throw Error("mark measure arrays must have equal length");
    for (double w : weights)
        if (!(w > 0.0) || !std::isfinite(w)) throw Error("mark weights must be finite and positive");
    if (!std::isfinite(total_mass())) throw Error("mark measure must have finite total mass");
}

namespace {

// Substream indices carving one realization seed into independent engines.
constexpr std::uint64_t kGaussStream = 1;
constexpr std::uint64_t kJumpStream = 2;

}  // namespace

NoiseRealization generate(std::uint64_t seed, int brownian_dim, const MarkMeasure& measure,
                          double t0, double horizon, double step) {
    if (!(horizon > t0)) throw InvalidHorizon("horizon must exceed t0");
    if (!(step > 0.0)) throw ZeroStep("base step must be positive");
    measure.validate();

    const double span = horizon - t0;
    const double steps_real = span / step;
    const auto n_steps = static_cast<std::size_t>(std::llround(steps_real));
    if (n_steps == 0 || std::abs(steps_real - static_cast<double>(n_steps)) >
                            1.0 / static_cast<double>(kTicksPerStep))
        throw ZeroStep("base step must divide the horizon");

    NoiseRealization out;
    out.brownian_dim = brownian_dim;
    out.t0 = t0;
    out.horizon = horizon;
    out.step = step;
    out.seed = seed;
    out.marks = measure;

    {
        auto engine = make_engine(seed, kGaussStream);
        std::normal_distribution<double> gauss(0.0, std::sqrt(step));
        out.increments.resize(n_steps * static_cast<std::size_t>(brownian_dim));
        for (double& x : out.increments) x = gauss(engine);
    }

    const double rate = measure.total_mass();
    if (measure.size() > 0 && rate > 0.0) {
        auto engine = make_engine(seed, kJumpStream);
        std::exponential_distribution<double> gap(rate);
        std::discrete_distribution<int> pick(measure.weights.begin(), measure.weights.end());
        const double tick = step / static_cast<double>(kTicksPerStep);
        const auto last_tick = static_cast<std::int64_t>(n_steps) * kTicksPerStep;
        double t = t0;
        std::int64_t prev_tick = 0;
        while (true) {
            t += gap(engine);
            if (t > horizon) break;
            auto k = static_cast<std::int64_t>(std::llround((t - t0) / tick));
            // Strictly increasing arrivals inside (t0, T] on the tick grid.
            k = std::max(k, prev_tick + 1);
            if (k > last_tick) break;
            prev_tick = k;
            out.events.push_back({t0 + static_cast<double>(k) * tick, pick(engine)});
        }
    }
    return out;
}

NoiseRealization inject_events(const NoiseRealization& base, const std::vector<JumpEvent>& events) {
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (events[i].mark < 0 || static_cast<std::size_t>(events[i].mark) >= base.marks.size())
            throw UnknownMark("event mark index out of range");
        if (events[i].time <= base.t0 || events[i].time > base.horizon)
            throw UnsortedEvents("event time outside (t0, T]");
        if (i > 0 && !(events[i - 1].time < events[i].time))
            throw UnsortedEvents("event times must strictly increase");
    }
    NoiseRealization out = base;
    out.events = events;
    return out;
}

NoiseRealization coarsened(const NoiseRealization& fine, int factor) {
    if (factor <= 0) throw Error("coarsening factor must be positive");
    const std::size_t n = fine.step_count();
    if (n % static_cast<std::size_t>(factor) != 0)
        throw Error("step count not divisible by coarsening factor");
    NoiseRealization out = fine;
    out.step = fine.step * factor;
    out.increments.assign(fine.increments.size() / factor, 0.0);
    const int m = fine.brownian_dim;
    for (std::size_t k = 0; k < n; ++k)
        for (int j = 0; j < m; ++j)
            out.increments[(k / factor) * m + j] += fine.increments[k * m + j];
    return out;
}

NoiseRealization truncated_after(const NoiseRealization& base, double t) {
    NoiseRealization out = base;
    const int m = base.brownian_dim;
    std::size_t keep = 0;
    while (keep < base.step_count() && base.grid_time(keep + 1) <= t) ++keep;
    out.increments.resize(keep * static_cast<std::size_t>(m));
    out.events.erase(std::remove_if(out.events.begin(), out.events.end(),
                                    [&](const JumpEvent& e) { return e.time > t; }),
                     out.events.end());
    out.horizon = base.grid_time(keep);
    return out;
}

}  // namespace sfde
