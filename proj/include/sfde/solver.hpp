#ifndef SFDE_SOLVER_HPP
#define SFDE_SOLVER_HPP

#include <optional>
#include <vector>

#include "sfde/coeff.hpp"
#include "sfde/noise.hpp"
#include "sfde/segment.hpp"

namespace sfde {

struct SolverConfig {
    double step = 0.0;                  // base step h; r0 must be a multiple
    double t0 = 0.0;
    double horizon = 0.0;               // T
    std::optional<double> radius;       // stop when |X(t)| >= radius
};

struct PathDiagnostics {
    std::size_t steps = 0;
    std::size_t jumps = 0;
};

struct PathResult {
    History history;
    std::optional<double> stopped_at;   // first grid time with |X| >= radius
    PathDiagnostics diag;
};

struct CoupledResult {
    PathResult x;
    PathResult xbar;
};

// Explicit Euler on the union grid of base steps and jump times. Between
// events X advances by b(t, X_t) dt + sigma(t, X_t) dB with coefficients
// evaluated at the left node's segment; at a jump time the coefficient is
// evaluated at the left-limit segment X_{t-} and the pre-jump value is
// recorded. Within a split base step the Brownian increment is apportioned
// linearly in time.
PathResult solve_path(const Equation& eq, const Segment& xi, const NoiseRealization& noise,
                      const SolverConfig& cfg);

// Both equations advanced on the identical realization; equals two
// solve_path calls grid-for-grid.
CoupledResult solve_coupled(const CoefficientSet& cs, const Segment& xi, const Segment& xibar,
                            const NoiseRealization& noise, const SolverConfig& cfg);

struct MomentDiagnostic {
    double mean_sup_sq = 0.0;  // ensemble average of sup_t |X(t)|^2
    std::size_t paths = 0;
};

MomentDiagnostic moment_diagnostic(const std::vector<PathResult>& ensemble);

// sup_t |X(t)|^2 over nodes and pre-jump values of one history.
double sup_sq(const History& h);

}  // namespace sfde

#endif
