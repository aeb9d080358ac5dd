#ifndef SFDE_EXISTENCE_HPP
#define SFDE_EXISTENCE_HPP

#include <cstdint>
#include <memory>
#include <vector>

#include "sfde/coeff.hpp"
#include "sfde/solver.hpp"

namespace sfde {

// Bihari machinery: G(s) = int_1^s dr / (r u(r)), its inverse, and the
// a-priori bound G^{-1}(G(a) + C t). Closed forms for u = 1 (Gronwall);
// adaptive quadrature on a log substitution otherwise.
class BihariKernel {
  public:
    explicit BihariKernel(ControlFunction u);

    const ControlFunction& control() const { return u_; }
    double G(double s) const;          // s > 0
    double G_inverse(double y) const;  // throws RangeExceeded above G's range
    // a >= 0, C >= 0, t >= 0; returns 0 for a = 0.
    double bound(double a, double C, double t) const;

  private:
    ControlFunction u_;
    bool gronwall_ = false;  // u == 1 closed form
};

// Law of the C-valued Brownian segment eta(s) = B(r0 + 1 + s), s in [-r0, 0],
// realized on a uniform node grid and frozen: the same draws back every
// mollified oracle built from this law, keeping cascades reproducible.
class MollifierLaw {
  public:
    static MollifierLaw make(int dim, double r0, std::size_t samples, std::uint64_t seed,
                             std::size_t grid_nodes = 9);

    int dim() const { return dim_; }
    double delay() const { return r0_; }
    std::uint64_t seed() const { return seed_; }
    std::size_t sample_count() const { return draws_->size(); }
    const std::vector<Segment>& draws() const { return *draws_; }

  private:
    int dim_ = 1;
    double r0_ = 0.0;
    std::uint64_t seed_ = 0;
    std::shared_ptr<const std::vector<Segment>> draws_;
};

// Averaged coefficients f_n(t, xi) = mean_j f(t, xi + eta_j / n) over the
// law's frozen draws. The returned half keeps the law's samples alive.
CoefficientHalf mollify(const CoefficientHalf& base, const MollifierLaw& law, int level);

// Mean and a 3-sigma half-width of the mollified drift components at one
// probe point (for confidence-interval checks).
struct MollifiedValue {
    std::vector<double> mean;
    std::vector<double> ci3;  // 3 * sd / sqrt(samples), per component
};
MollifiedValue mollified_drift_stats(const CoefficientHalf& base, const MollifierLaw& law, int level,
                                     double t, const SegmentView& xi);

// Componentwise clip of all node and pre-jump values to [-bound, bound].
Segment truncate_segment(const Segment& xi, double bound);

// f_n(t, xi) = f(min(t, n), clip_n(xi)): the localization of unbounded
// coefficients.
CoefficientHalf truncate_coeff(const CoefficientHalf& base, int level);

struct CascadeResult {
    std::vector<int> levels;
    std::vector<PathResult> paths;  // one per level, same grid
    // gaps[k] = sup_t |X^(levels[k]) - X^(levels[k+1])|, the Cauchy table.
    std::vector<double> gaps;
};

// Solves the mollified equation per level on one shared realization and
// reports the Cauchy gaps between consecutive levels. With truncate set the
// base is localized at each level before mollification.
CascadeResult approximation_cascade(const Equation& eq, const Segment& xi,
                                    const NoiseRealization& noise, const SolverConfig& cfg,
                                    const MollifierLaw& law, const std::vector<int>& levels,
                                    bool truncate = false);

// Reference Euler driver, coded independently of solve_path: explicit
// segment construction per evaluation and permuted accumulation order.
// Agreement between the two is the discrete pathwise-uniqueness evidence.
PathResult solve_path_reference(const Equation& eq, const Segment& xi,
                                const NoiseRealization& noise, const SolverConfig& cfg);

struct UniquenessReport {
    double max_sup_distance = 0.0;
    std::vector<double> per_seed;
    std::size_t seeds = 0;
    bool pass = false;  // against the stated 1e-12 budget
};

inline constexpr double kUniquenessBudget = 1e-12;

UniquenessReport uniqueness_check(const Equation& eq, const Segment& xi, const SolverConfig& cfg,
                                  const std::vector<std::uint64_t>& seeds);

}  // namespace sfde

#endif
