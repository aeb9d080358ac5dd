#ifndef SFDE_NOISE_HPP
#define SFDE_NOISE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "sfde/errors.hpp"

namespace sfde {

// Finite mark space E = {z_1, ..., z_K} with intensity weights nu_k > 0.
// Each mark carries a numeric value, used when jump coefficients want a
// scalar out of the mark (expression coefficients bind it to `z`).
struct MarkMeasure {
    std::vector<std::string> labels;
    std::vector<double> values;
    std::vector<double> weights;

    static MarkMeasure empty() { return {}; }
    // Marks z1..zK with values 1..K and the given weights.
    static MarkMeasure uniform(int k, double weight_each);
    static MarkMeasure single(double weight, double value = 1.0, std::string label = "z1");

    std::size_t size() const { return weights.size(); }
    double total_mass() const;
    int index_of(const std::string& label) const;  // -1 when absent
    void validate() const;
};

struct JumpEvent {
    double time = 0.0;
    int mark = 0;  // index into the mark measure
};

// One realization of the shared drivers: Brownian increments per base step
// plus marked Poisson arrivals. Both equations of a coupled pair consume the
// same realization. Immutable after generation.
struct NoiseRealization {
    int brownian_dim = 0;
    double t0 = 0.0;
    double horizon = 0.0;  // T
    double step = 0.0;     // base step h
    std::uint64_t seed = 0;
    MarkMeasure marks;
    std::vector<double> increments;  // steps * brownian_dim, N(0, h) entries
    std::vector<JumpEvent> events;   // strictly increasing times in (t0, T]

    std::size_t step_count() const {
        return brownian_dim == 0 ? 0 : increments.size() / static_cast<std::size_t>(brownian_dim);
    }
    const double* step_increment(std::size_t k) const {
        return increments.data() + k * static_cast<std::size_t>(brownian_dim);
    }
    double grid_time(std::size_t k) const { return t0 + static_cast<double>(k) * step; }
};

// Arrival times are snapped to this subdivision of the base step so they can
// be inserted into solver grids without float-equality ambiguity.
inline constexpr int kTicksPerStep = 1 << 16;

// Seeded generation of a realization on [t0, T]. Brownian increments are
// i.i.d. N(0, step) per coordinate; arrivals follow a Poisson process with
// rate nu(E) and marks drawn proportionally to the weights, independent of
// the Gaussian stream. Fully determined by (seed, arguments).
NoiseRealization generate(std::uint64_t seed, int brownian_dim, const MarkMeasure& measure,
                          double t0, double horizon, double step);

// Replaces the Poisson stream with a prescribed event list (deterministic
// jump test mode); the Gaussian stream is untouched.
NoiseRealization inject_events(const NoiseRealization& base, const std::vector<JumpEvent>& events);

// Sums groups of `factor` consecutive increments: the same Brownian path
// seen at step factor*h. step_count() must divide evenly.
NoiseRealization coarsened(const NoiseRealization& fine, int factor);

// Drops all increments of steps starting at or after `t` and all events
// after `t`; used by adaptedness checks.
NoiseRealization truncated_after(const NoiseRealization& base, double t);

}  // namespace sfde

#endif
