#include "sfde/existence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sfde/quadrature.hpp"
#include "sfde/rng.hpp"

namespace sfde {

// ---- Bihari kernel -----------------------------------------------------------

BihariKernel::BihariKernel(ControlFunction u) : u_(std::move(u)) {
    gronwall_ = u_.tag == "one";
}

double BihariKernel::G(double s) const {
    if (!(s > 0.0)) throw RangeExceeded("G is defined for s > 0");
    if (gronwall_) return std::log(s);
    // int_1^s dr / (r u(r)) = int_0^{ln s} dv / u(e^v): bounded integrand,
    // stable for very small and very large s.
    const double L = std::log(s);
    if (L == 0.0) return 0.0;
    return integrate([&](double v) { return 1.0 / u_(std::exp(v)); }, 0.0, L, 1e-12);
}

double BihariKernel::G_inverse(double y) const {
    if (gronwall_) {
        if (y > 709.0) throw RangeExceeded("G^{-1} argument beyond representable range");
        return std::exp(y);
    }
    // Monotone bisection in log s over the representable range.
    double lo = -700.0, hi = 700.0;
    const double glo = G(std::exp(lo));
    const double ghi = G(std::exp(hi));
    if (y > ghi) throw RangeExceeded("G^{-1} argument exceeds the range of G");
    if (y < glo) return 0.0;  // below representable scale; the bound collapses
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (G(std::exp(mid)) < y)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-14 * std::max(1.0, std::abs(hi))) break;
    }
    return std::exp(0.5 * (lo + hi));
}

double BihariKernel::bound(double a, double C, double t) const {
    if (a < 0.0 || C < 0.0 || t < 0.0) throw Error("bihari bound needs a, C, t >= 0");
    if (a == 0.0) return 0.0;  // G(0+) = -inf for the divergent class
    if (C * t == 0.0) return a;
    return G_inverse(G(a) + C * t);
}

// ---- mollifier law -----------------------------------------------------------

MollifierLaw MollifierLaw::make(int dim, double r0, std::size_t samples, std::uint64_t seed,
                                std::size_t grid_nodes) {
    if (dim <= 0) throw Error("mollifier law needs dim >= 1");
    if (r0 < 0.0) throw Error("mollifier law needs r0 >= 0");
    if (samples == 0) throw Error("mollifier law needs at least one sample");

    MollifierLaw law;
    law.dim_ = dim;
    law.r0_ = r0;
    law.seed_ = seed;

    std::vector<double> thetas;
    if (r0 > 0.0) {
        grid_nodes = std::max<std::size_t>(grid_nodes, 2);
        thetas.resize(grid_nodes);
        for (std::size_t k = 0; k < grid_nodes; ++k)
            thetas[k] = -r0 + r0 * static_cast<double>(k) / static_cast<double>(grid_nodes - 1);
        thetas.front() = -r0;
        thetas.back() = 0.0;
    } else {
        thetas = {0.0};
    }

    auto draws = std::make_shared<std::vector<Segment>>();
    draws->reserve(samples);
    auto rng = make_engine(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t s = 0; s < samples; ++s) {
        // eta(theta) = B(r0 + 1 + theta): variance r0 + 1 + theta, built from
        // the time-offset start B(1) plus independent increments.
        std::vector<double> values(thetas.size() * static_cast<std::size_t>(dim));
        for (int i = 0; i < dim; ++i) values[i] = gauss(rng);  // N(0, 1) at theta = -r0
        for (std::size_t k = 1; k < thetas.size(); ++k) {
            const double sd = std::sqrt(thetas[k] - thetas[k - 1]);
            for (int i = 0; i < dim; ++i)
                values[k * dim + i] = values[(k - 1) * dim + i] + sd * gauss(rng);
        }
        draws->emplace_back(dim, thetas, std::move(values));
    }
    law.draws_ = std::move(draws);
    return law;
}

namespace {

// View of xi + scale * shift without materializing the sum.
class ShiftedView final : public SegmentView {
  public:
    ShiftedView(const SegmentView& base, const Segment& shift, double scale)
        : base_(&base), shift_(&shift), scale_(scale) {}

    int dim() const override { return base_->dim(); }
    double delay() const override { return base_->delay(); }
    double at(int i, double theta) const override {
        return base_->at(i, theta) + scale_ * shift_->at(i, theta);
    }

  private:
    const SegmentView* base_;
    const Segment* shift_;
    double scale_;
};

// View of the componentwise clip of xi to [-bound, bound].
class ClippedView final : public SegmentView {
  public:
    ClippedView(const SegmentView& base, double bound) : base_(&base), bound_(bound) {}

    int dim() const override { return base_->dim(); }
    double delay() const override { return base_->delay(); }
    double at(int i, double theta) const override {
        return std::clamp(base_->at(i, theta), -bound_, bound_);
    }

  private:
    const SegmentView* base_;
    double bound_;
};

using Draws = std::shared_ptr<const std::vector<Segment>>;

}  // namespace

CoefficientHalf mollify(const CoefficientHalf& base, const MollifierLaw& law, int level) {
    if (level < 1) throw Error("mollification level must be >= 1");
    const double scale = 1.0 / static_cast<double>(level);
    // Keep the frozen draws alive inside the oracles.
    auto draws = std::make_shared<std::vector<Segment>>(law.draws());
    const double inv = 1.0 / static_cast<double>(draws->size());

    CoefficientHalf out;
    out.drift = [fn = base.drift, draws, scale, inv](double t, const SegmentView& xi,
                                                     std::span<double> o) {
        std::vector<double> acc(o.size(), 0.0);
        std::vector<double> tmp(o.size());
        for (const Segment& eta : *draws) {
            ShiftedView view(xi, eta, scale);
            fn(t, view, tmp);
            for (std::size_t k = 0; k < o.size(); ++k) acc[k] += tmp[k];
        }
        for (std::size_t k = 0; k < o.size(); ++k) o[k] = acc[k] * inv;
    };
    out.diffusion = [fn = base.diffusion, draws, scale, inv](double t, const SegmentView& xi,
                                                             std::span<double> o) {
        std::vector<double> acc(o.size(), 0.0);
        std::vector<double> tmp(o.size());
        for (const Segment& eta : *draws) {
            ShiftedView view(xi, eta, scale);
            fn(t, view, tmp);
            for (std::size_t k = 0; k < o.size(); ++k) acc[k] += tmp[k];
        }
        for (std::size_t k = 0; k < o.size(); ++k) o[k] = acc[k] * inv;
    };
    out.jump = [fn = base.jump, draws, scale, inv](double t, const SegmentView& xi, int mark,
                                                   std::span<double> o) {
        std::vector<double> acc(o.size(), 0.0);
        std::vector<double> tmp(o.size());
        for (const Segment& eta : *draws) {
            ShiftedView view(xi, eta, scale);
            fn(t, view, mark, tmp);
            for (std::size_t k = 0; k < o.size(); ++k) acc[k] += tmp[k];
        }
        for (std::size_t k = 0; k < o.size(); ++k) o[k] = acc[k] * inv;
    };
    return out;
}

MollifiedValue mollified_drift_stats(const CoefficientHalf& base, const MollifierLaw& law,
                                     int level, double t, const SegmentView& xi) {
    const double scale = 1.0 / static_cast<double>(level);
    const std::size_t d = static_cast<std::size_t>(xi.dim());
    const std::size_t n = law.sample_count();
    MollifiedValue out;
    out.mean.assign(d, 0.0);
    out.ci3.assign(d, 0.0);
    std::vector<double> tmp(d);
    std::vector<double> sumsq(d, 0.0);
    for (const Segment& eta : law.draws()) {
        ShiftedView view(xi, eta, scale);
        base.drift(t, view, tmp);
        for (std::size_t k = 0; k < d; ++k) {
            out.mean[k] += tmp[k];
            sumsq[k] += tmp[k] * tmp[k];
        }
    }
    for (std::size_t k = 0; k < d; ++k) {
        out.mean[k] /= static_cast<double>(n);
        const double var =
            std::max(0.0, sumsq[k] / static_cast<double>(n) - out.mean[k] * out.mean[k]);
        out.ci3[k] = 3.0 * std::sqrt(var / static_cast<double>(n));
    }
    return out;
}

// ---- truncation ----------------------------------------------------------------

Segment truncate_segment(const Segment& xi, double bound) {
    const int d = xi.dim();
    auto clip = [bound](double v) { return std::clamp(v, -bound, bound); };
    std::vector<double> values(xi.node_count() * static_cast<std::size_t>(d));
    for (std::size_t k = 0; k < xi.node_count(); ++k)
        for (int i = 0; i < d; ++i) values[k * d + i] = clip(xi.value(k, i));
    std::vector<double> pre(xi.jump_nodes().size() * static_cast<std::size_t>(d));
    for (std::size_t j = 0; j < xi.jump_nodes().size(); ++j)
        for (int i = 0; i < d; ++i) pre[j * d + i] = clip(xi.pre_value(j)[i]);
    return Segment(d, xi.thetas(), std::move(values), xi.jump_nodes(), std::move(pre));
}

CoefficientHalf truncate_coeff(const CoefficientHalf& base, int level) {
    if (level < 1) throw Error("truncation level must be >= 1");
    const double bound = static_cast<double>(level);
    CoefficientHalf out;
    out.drift = [fn = base.drift, bound](double t, const SegmentView& xi, std::span<double> o) {
        ClippedView view(xi, bound);
        fn(std::min(t, bound), view, o);
    };
    out.diffusion = [fn = base.diffusion, bound](double t, const SegmentView& xi,
                                                 std::span<double> o) {
        ClippedView view(xi, bound);
        fn(std::min(t, bound), view, o);
    };
    out.jump = [fn = base.jump, bound](double t, const SegmentView& xi, int mark,
                                       std::span<double> o) {
        ClippedView view(xi, bound);
        fn(std::min(t, bound), view, mark, o);
    };
    return out;
}

// ---- approximation cascade ------------------------------------------------------

CascadeResult approximation_cascade(const Equation& eq, const Segment& xi,
                                    const NoiseRealization& noise, const SolverConfig& cfg,
                                    const MollifierLaw& law, const std::vector<int>& levels,
                                    bool truncate) {
    if (levels.empty()) throw Error("cascade needs at least one level");
    for (std::size_t k = 1; k < levels.size(); ++k)
        if (levels[k - 1] >= levels[k]) throw Error("cascade levels must strictly increase");
    if (law.dim() != eq.dim || law.delay() != eq.r0)
        throw ConfigMismatch("mollifier law does not match the equation");

    CascadeResult out;
    out.levels = levels;
    for (int n : levels) {
        CoefficientHalf staged = truncate ? truncate_coeff(*eq.coeff, n) : *eq.coeff;
        CoefficientHalf smooth = mollify(staged, law, n);
        Equation level_eq = eq;
        level_eq.coeff = &smooth;
        out.paths.push_back(solve_path(level_eq, xi, noise, cfg));
    }
    for (std::size_t k = 0; k + 1 < out.paths.size(); ++k) {
        const History& a = out.paths[k].history;
        const History& b = out.paths[k + 1].history;
        const std::size_t n = std::min(a.node_count(), b.node_count());
        double gap = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (int i = 0; i < eq.dim; ++i) {
                const double diff = a.value(j, i) - b.value(j, i);
                s += diff * diff;
            }
            gap = std::max(gap, std::sqrt(s));
        }
        out.gaps.push_back(gap);
    }
    return out;
}

// ---- reference driver and uniqueness evidence ------------------------------------

namespace {

double euclid(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

// Independent re-implementation of the Euler loop: explicit Segment
// construction per coefficient evaluation and accumulation order permuted
// relative to solve_path (diffusion summed high-to-low, then drift added).
PathResult solve_path_reference(const Equation& eq, const Segment& xi,
                                const NoiseRealization& noise, const SolverConfig& cfg) {
    const int d = eq.dim;
    const int m = eq.brownian_dim;
    const double h = cfg.step;
    if (!(h > 0.0) || !(cfg.horizon > cfg.t0)) throw ConfigMismatch("bad reference config");
    const auto n_steps = static_cast<std::size_t>(std::llround((cfg.horizon - cfg.t0) / h));

    PathResult result{History::from_initial(xi, cfg.t0), std::nullopt, {}};
    History& hist = result.history;
    std::vector<double> state(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) state[i] = xi.at(i, 0.0);

    std::vector<double> drift(static_cast<std::size_t>(d));
    std::vector<double> diff(static_cast<std::size_t>(d) * m);
    std::vector<double> jump(static_cast<std::size_t>(d));

    auto euler_piece = [&](double s, double dt, const double* db, double share) {
        const Segment seg = hist.segment_at(s);
        eq.coeff->drift(s, seg, drift);
        eq.coeff->diffusion(s, seg, diff);
        for (int i = 0; i < d; ++i) {
            double acc = 0.0;
            for (int j = m - 1; j >= 0; --j) acc += diff[i * m + j] * (share * db[j]);
            state[i] = (state[i] + acc) + drift[i] * dt;
            if (!std::isfinite(state[i]))
                throw NonFiniteState("reference state non-finite");
        }
    };

    std::size_t ev = 0;
    while (ev < noise.events.size() && noise.events[ev].time <= cfg.t0) ++ev;
    for (std::size_t k = 0; k < n_steps; ++k) {
        const double t_right = cfg.t0 + static_cast<double>(k + 1) * h;
        double s = hist.end_time();
        const double* db = noise.step_increment(k);
        while (ev < noise.events.size() && noise.events[ev].time <= t_right &&
               noise.events[ev].time <= cfg.horizon) {
            const JumpEvent e = noise.events[ev++];
            if (e.time > s) {
                const double share = (e.time - s) / h;
                euler_piece(s, e.time - s, db, share);
            }
            // Stage the pre-jump state as a regular node so the left-limit
            // segment can be taken off the history itself.
            hist.append(e.time, state.data());
            const Segment left = hist.segment_at(e.time);  // value at 0 is X(t-)
            eq.coeff->jump(e.time, left, e.mark, jump);
            for (int i = 0; i < d; ++i) state[i] += jump[i];
            hist.rewrite_last_as_jump(state.data());
            ++result.diag.jumps;
            s = e.time;
            if (cfg.radius && euclid(state) >= *cfg.radius) {
                result.stopped_at = s;
                return result;
            }
        }
        if (s < t_right) {
            const bool whole = s == cfg.t0 + static_cast<double>(k) * h;
            euler_piece(s, t_right - s, db, whole ? 1.0 : (t_right - s) / h);
            hist.append(t_right, state.data());
            ++result.diag.steps;
            if (cfg.radius && euclid(state) >= *cfg.radius) {
                result.stopped_at = t_right;
                return result;
            }
        }
    }
    return result;
}

UniquenessReport uniqueness_check(const Equation& eq, const Segment& xi, const SolverConfig& cfg,
                                  const std::vector<std::uint64_t>& seeds) {
    UniquenessReport report;
    report.seeds = seeds.size();
    for (std::uint64_t seed : seeds) {
        auto noise = generate(seed, eq.brownian_dim, *eq.marks, cfg.t0, cfg.horizon, cfg.step);
        PathResult primary = solve_path(eq, xi, noise, cfg);
        PathResult reference = solve_path_reference(eq, xi, noise, cfg);
        const History& a = primary.history;
        const History& b = reference.history;
        double dist = 0.0;
        const std::size_t n = std::min(a.node_count(), b.node_count());
        if (a.node_count() != b.node_count())
            dist = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < n; ++k)
            for (int i = 0; i < eq.dim; ++i)
                dist = std::max(dist, std::abs(a.value(k, i) - b.value(k, i)));
        report.per_seed.push_back(dist);
        report.max_sup_distance = std::max(report.max_sup_distance, dist);
    }
    report.pass = report.max_sup_distance <= kUniquenessBudget;
    return report;
}

}  // namespace sfde
