#ifndef SFDE_COEFF_HPP
#define SFDE_COEFF_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sfde/noise.hpp"
#include "sfde/segment.hpp"

namespace sfde {

// Element of the control class U: u >= 1 on (0, inf) with s*u(s) increasing
// and concave, and a divergent integral of 1/(s*u(s)) at 0+. Divergence is
// not machine-checkable; only whitelisted builtins carry the verified flag.
struct ControlFunction {
    std::string tag;
    std::function<double(double)> u;
    bool divergence_verified = false;

    double operator()(double s) const { return u(s); }

    static ControlFunction one();       // u(s) = 1
    static ControlFunction log_type();  // u(s) = log(e + 1/s)
    static ControlFunction custom(std::string tag, std::function<double(double)> fn);
    // "one" | "log"; anything else throws UnknownName.
    static ControlFunction named(const std::string& tag);
};

struct ControlValidation {
    bool lower_bound_ok = true;      // u(s) >= 1
    bool increasing_ok = true;       // s*u(s) nondecreasing
    bool midpoint_concave_ok = true; // f((a+b)/2) >= (f(a)+f(b))/2 for f = s*u(s)
    double worst_s = 0.0;
    bool ok() const { return lower_bound_ok && increasing_ok && midpoint_concave_ok; }
};

// Samples the class-U properties on the given s-grid (sorted ascending).
ControlValidation validate_control(const ControlFunction& u, const std::vector<double>& grid);

// Log-spaced validation grid, 10^lo .. 10^hi.
std::vector<double> log_grid(double lo_exp, double hi_exp, std::size_t points);

// Coefficient oracles of one equation. All must be pure and reentrant.
using DriftFn = std::function<void(double t, const SegmentView& xi, std::span<double> out)>;
using DiffusionFn = std::function<void(double t, const SegmentView& xi, std::span<double> out)>;
using JumpFn = std::function<void(double t, const SegmentView& xi, int mark, std::span<double> out)>;

struct CoefficientHalf {
    DriftFn drift;          // out: d
    DiffusionFn diffusion;  // out: d*m, row-major
    JumpFn jump;            // out: d
};

CoefficientHalf zero_half(int dim, int brownian_dim);

// One half bound to its dimensions and mark measure; what the solver runs.
struct Equation {
    int dim = 1;
    int brownian_dim = 1;
    double r0 = 0.0;
    const MarkMeasure* marks = nullptr;
    const CoefficientHalf* coeff = nullptr;
};

// The coupled system's coefficients (b, sigma, gamma) and barred
// counterparts, sharing dimensions and the mark measure.
struct CoefficientSet {
    std::string name;
    int dim = 1;
    int brownian_dim = 1;
    double r0 = 0.0;
    MarkMeasure marks;
    CoefficientHalf base;
    CoefficientHalf barred;

    Equation base_equation() const { return {dim, brownian_dim, r0, &marks, &base}; }
    Equation barred_equation() const { return {dim, brownian_dim, r0, &marks, &barred}; }
};

// Convenience evaluation into fresh vectors (checker-side; the solver uses
// preallocated buffers).
std::vector<double> eval_drift(const Equation& eq, double t, const SegmentView& xi);
std::vector<double> eval_diffusion(const Equation& eq, double t, const SegmentView& xi);
std::vector<double> eval_jump(const Equation& eq, double t, const SegmentView& xi, int mark);

// ---- builtin catalogue ----------------------------------------------------

struct BuiltinInfo {
    std::string name;
    std::string summary;
    // Documented expected verdicts of the three order-preservation condition
    // checkers (drift / diffusion / jump).
    bool drift_ok = true;
    bool diffusion_ok = true;
    bool jump_ok = true;
};

const std::vector<BuiltinInfo>& builtin_catalogue();

using Params = std::map<std::string, double>;

// Instantiates a catalogue entry. Unknown names throw UnknownName; unknown
// or out-of-range parameters throw BadParams.
CoefficientSet builtin(const std::string& name, const Params& params = {});

// ---- sampled (A1)/(A2) validation ------------------------------------------

struct PairSample {
    double t = 0.0;
    Segment xi;
    Segment eta;
};
using PairSampler = std::function<PairSample(std::mt19937_64&)>;

// Random segment pairs on a shared uniform skeleton with log-uniform scale
// mixing, including near-degenerate pairs.
PairSampler default_pair_sampler(int dim, double r0, std::size_t nodes = 5);

struct A1Report {
    double max_ratio = 0.0;
    std::optional<PairSample> worst;
    std::size_t samples = 0;
    std::size_t degenerate_skipped = 0;
    double budget = 0.0;
    std::uint64_t seed = 0;
    std::string sampler;  // distribution record: description + seed reproduce the run
    bool pass = false;    // sampled evidence, not proof
};

// Evaluates the full six-term left side of (A1) over sampled pairs divided
// by ||xi-eta||^2 u(||xi-eta||^2) and reports the worst ratio against the
// budget.
A1Report check_A1(const CoefficientSet& cs, const ControlFunction& u, const PairSampler& sampler,
                  std::size_t n_samples, double budget, std::uint64_t seed,
                  std::string sampler_description = "custom");

// Description of default_pair_sampler's distribution for the report.
std::string default_pair_sampler_description(int dim, double r0, std::size_t nodes = 5);

// Ratio of the (A1) left side to the modulus for one explicit pair.
double a1_ratio(const CoefficientSet& cs, const ControlFunction& u, double t, const Segment& xi,
                const Segment& eta);

struct A2Report {
    double sup_value = 0.0;       // sup over grid of the squared-coefficient sum at 0
    double jump_integral = 0.0;   // time integral of the nu-weighted jump terms
    double total = 0.0;           // C(T) estimate: sup + integral
    double worst_t = 0.0;
    bool finite = true;
};

// Evaluates the (A2) quantity at the zero segment over the grid; fails only
// on non-finite values (throws NonFiniteCoefficient).
A2Report check_A2(const CoefficientSet& cs, double horizon, const std::vector<double>& grid);

}  // namespace sfde

#endif
