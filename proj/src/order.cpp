#include "sfde/order.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "sfde/parallel.hpp"
#include "sfde/rng.hpp"

namespace sfde {

// ---- psi family --------------------------------------------------------------

double psi_second(int n, double s) {
    const double nn = static_cast<double>(n);
    if (s <= 0.0 || s >= 1.0 / nn) return 0.0;
    if (s <= 0.5 / nn) return 4.0 * nn * nn * s;
    return -4.0 * nn * nn * (s - 1.0 / nn);
}

double psi_prime(int n, double s) {
    const double nn = static_cast<double>(n);
    if (s <= 0.0) return 0.0;
    if (s >= 1.0 / nn) return 1.0;
    if (s <= 0.5 / nn) return 2.0 * nn * nn * s * s;
    const double w = s - 1.0 / nn;
    return 1.0 - 2.0 * nn * nn * w * w;
}

double psi(int n, double s) {
    const double nn = static_cast<double>(n);
    if (s <= 0.0) return 0.0;
    if (s >= 1.0 / nn) return s - 0.5 / nn;
    if (s <= 0.5 / nn) return (2.0 / 3.0) * nn * nn * s * s * s;
    const double w = s - 1.0 / nn;
    return (s - 0.5 / nn) - (2.0 / 3.0) * nn * nn * w * w * w;
}

// ---- condition checkers --------------------------------------------------------

namespace {

std::vector<double> uniform_thetas(double r0, std::size_t nodes) {
    if (r0 <= 0.0) return {0.0};
    nodes = std::max<std::size_t>(nodes, 2);
    std::vector<double> thetas(nodes);
    for (std::size_t k = 0; k < nodes; ++k)
        thetas[k] = -r0 + r0 * static_cast<double>(k) / static_cast<double>(nodes - 1);
    thetas.front() = -r0;
    thetas.back() = 0.0;
    return thetas;
}

}  // namespace

ConditionSampler make_condition_sampler(ConditionKind kind, int dim, int brownian_dim, double r0,
                                        std::size_t nodes) {
    auto thetas = uniform_thetas(r0, nodes);
    return [kind, dim, brownian_dim, thetas](std::mt19937_64& rng) -> ConditionSample {
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        std::uniform_int_distribution<int> comp(0, dim - 1);

        ConditionSample s;
        s.t = 10.0 * unif(rng);
        s.component = comp(rng);
        s.col = brownian_dim > 0 ? std::uniform_int_distribution<int>(0, brownian_dim - 1)(rng) : 0;

        const std::size_t n = thetas.size();
        std::vector<double> base(n * static_cast<std::size_t>(dim));
        for (double& v : base) v = gauss(rng);

        if (kind == ConditionKind::Diffusion) {
            // Only endpoint equality in the probed component is required.
            std::vector<double> other(n * static_cast<std::size_t>(dim));
            for (double& v : other) v = gauss(rng);
            other[(n - 1) * dim + s.component] = base[(n - 1) * dim + s.component];
            s.xi = Segment(dim, thetas, std::move(base));
            s.xibar = Segment(dim, thetas, std::move(other));
            return s;
        }

        // Ordered pair: xibar = xi + delta, delta >= 0 from clipped Gaussians.
        std::vector<double> upper = base;
        for (std::size_t k = 0; k < upper.size(); ++k) upper[k] += std::abs(gauss(rng));
        if (kind == ConditionKind::Drift) {
            // Endpoint equality in the probed component.
            upper[(n - 1) * dim + s.component] = base[(n - 1) * dim + s.component];
        }
        s.xi = Segment(dim, thetas, std::move(base));
        s.xibar = Segment(dim, thetas, std::move(upper));
        return s;
    };
}

namespace {

void require_ordered(const ConditionSample& s) {
    if (!leq(s.xi, s.xibar))
        throw SamplerContractBroken("sampler produced an unordered pair");
}

void require_endpoint_equal(const ConditionSample& s) {
    if (s.xi.at(s.component, 0.0) != s.xibar.at(s.component, 0.0))
        throw SamplerContractBroken("sampler broke endpoint equality");
}

}  // namespace

ConditionReport check_cond_drift(const CoefficientSet& cs, const ConditionSampler& sampler,
                                 std::size_t n_samples, std::uint64_t seed) {
    ConditionReport report;
    report.condition = "drift";
    auto rng = make_engine(seed);
    const Equation base = cs.base_equation();
    const Equation barred = cs.barred_equation();
    for (std::size_t k = 0; k < n_samples; ++k) {
        ConditionSample s = sampler(rng);
        require_ordered(s);
        require_endpoint_equal(s);
        ++report.samples;
        const double lhs = eval_drift(base, s.t, s.xi)[s.component];
        const double rhs = eval_drift(barred, s.t, s.xibar)[s.component];
        if (lhs > rhs) {
            report.pass = false;
            report.witness = {s.t, s.component, -1, -1, s.xi, s.xibar, lhs, rhs};
            break;
        }
    }
    return report;
}

ConditionReport check_cond_diffusion(const CoefficientSet& cs, const ConditionSampler& sampler,
                                     std::size_t n_samples, std::uint64_t seed) {
    ConditionReport report;
    report.condition = "diffusion";
    auto rng = make_engine(seed);
    const Equation base = cs.base_equation();
    const Equation barred = cs.barred_equation();
    for (std::size_t k = 0; k < n_samples; ++k) {
        ConditionSample s = sampler(rng);
        require_endpoint_equal(s);
        ++report.samples;
        const int m = cs.brownian_dim;
        const double lhs = eval_diffusion(base, s.t, s.xi)[s.component * m + s.col];
        const double rhs = eval_diffusion(barred, s.t, s.xibar)[s.component * m + s.col];
        if (lhs != rhs) {
            report.pass = false;
            report.witness = {s.t, s.component, s.col, -1, s.xi, s.xibar, lhs, rhs};
            break;
        }
    }
    return report;
}

ConditionReport check_cond_jump(const CoefficientSet& cs, const ConditionSampler& sampler,
                                std::size_t n_samples, std::uint64_t seed) {
    ConditionReport report;
    report.condition = "jump";
    auto rng = make_engine(seed);
    const Equation base = cs.base_equation();
    const Equation barred = cs.barred_equation();
    for (std::size_t k = 0; k < n_samples && report.pass; ++k) {
        ConditionSample s = sampler(rng);
        require_ordered(s);
        ++report.samples;
        for (std::size_t z = 0; z < cs.marks.size(); ++z) {
            const double lhs = s.xi.at(s.component, 0.0) +
                               eval_jump(base, s.t, s.xi, static_cast<int>(z))[s.component];
            const double rhs = s.xibar.at(s.component, 0.0) +
                               eval_jump(barred, s.t, s.xibar, static_cast<int>(z))[s.component];
            if (lhs > rhs) {
                report.pass = false;
                report.witness = {s.t, s.component, -1, static_cast<int>(z), s.xi, s.xibar, lhs, rhs};
                break;
            }
        }
    }
    return report;
}

ConditionReport check_condition(const CoefficientSet& cs, ConditionKind kind,
                                std::size_t n_samples, std::uint64_t seed) {
    auto sampler = make_condition_sampler(kind, cs.dim, cs.brownian_dim, cs.r0);
    switch (kind) {
        case ConditionKind::Drift: return check_cond_drift(cs, sampler, n_samples, seed);
        case ConditionKind::Diffusion: return check_cond_diffusion(cs, sampler, n_samples, seed);
        case ConditionKind::Jump: return check_cond_jump(cs, sampler, n_samples, seed);
    }
    throw Error("unreachable");
}

bool recheck_witness(const CoefficientSet& cs, const ConditionReport& report) {
    if (!report.witness) return false;
    const ConditionWitness& w = *report.witness;
    const Equation base = cs.base_equation();
    const Equation barred = cs.barred_equation();
    if (report.condition == "drift") {
        return eval_drift(base, w.t, w.xi)[w.component] >
               eval_drift(barred, w.t, w.xibar)[w.component];
    }
    if (report.condition == "diffusion") {
        const int m = cs.brownian_dim;
        return eval_diffusion(base, w.t, w.xi)[w.component * m + w.col] !=
               eval_diffusion(barred, w.t, w.xibar)[w.component * m + w.col];
    }
    if (report.condition == "jump") {
        return w.xi.at(w.component, 0.0) + eval_jump(base, w.t, w.xi, w.mark)[w.component] >
               w.xibar.at(w.component, 0.0) + eval_jump(barred, w.t, w.xibar, w.mark)[w.component];
    }
    return false;
}

// ---- Monte-Carlo order verification -------------------------------------------

std::span<const int> default_psi_levels() {
    static const std::array<int, 11> levels = {1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024};
    return {levels.data(), levels.size()};
}

namespace {

// Largest signed gap max_{t,i} (x^i(t) - xbar^i(t)) over shared nodes and
// pre-jump values. Histories from one coupled solve share their grid.
double max_gap(const History& a, const History& b) {
    const int d = a.dim();
    const std::size_t n = std::min(a.node_count(), b.node_count());
    double gap = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
        for (int i = 0; i < d; ++i) {
            gap = std::max(gap, a.value(k, i) - b.value(k, i));
            gap = std::max(gap, a.node_left_value(k, i) - b.node_left_value(k, i));
        }
    }
    return gap;
}

}  // namespace

OrderMetric verify_order_mc(const CoefficientSet& cs, const Segment& xi, const Segment& xibar,
                            const SolverConfig& cfg, std::size_t n_paths, std::uint64_t master_seed,
                            std::span<const int> psi_levels, unsigned threads) {
    if (!leq(xi, xibar)) throw Error("verify_order_mc requires xi <= xibar");
    if (psi_levels.empty()) psi_levels = default_psi_levels();
    // Shared skeleton keeps the two histories node-aligned for the gap scan.
    const auto aligned = align(xi, xibar);
    const Segment& init = aligned.first;
    const Segment& initbar = aligned.second;

    OrderMetric metric;
    metric.paths = n_paths;
    std::vector<double> gaps(n_paths, std::numeric_limits<double>::quiet_NaN());

    parallel_for(
        n_paths,
        [&](std::size_t p) {
            auto noise = generate(substream_key(master_seed, p), cs.brownian_dim, cs.marks, cfg.t0,
                                  cfg.horizon, cfg.step);
            try {
                CoupledResult r = solve_coupled(cs, init, initbar, noise, cfg);
                gaps[p] = max_gap(r.x.history, r.xbar.history);
            } catch (const Error&) {
                // counted below; NaN marks the slot
            }
        },
        threads);

    metric.per_path_sup.resize(n_paths, 0.0);
    double global = -std::numeric_limits<double>::infinity();
    std::size_t violating = 0, ok_paths = 0;
    std::vector<double> psi_means(psi_levels.size(), 0.0);
    for (std::size_t p = 0; p < n_paths; ++p) {
        if (std::isnan(gaps[p])) {
            ++metric.failed_paths;
            continue;
        }
        ++ok_paths;
        metric.per_path_sup[p] = std::max(0.0, gaps[p]);
        if (gaps[p] > 0.0) ++violating;
        global = std::max(global, gaps[p]);
        for (std::size_t q = 0; q < psi_levels.size(); ++q) {
            const double v = psi(psi_levels[q], gaps[p]);
            psi_means[q] += v * v;
        }
    }
    metric.hard_sup = ok_paths == 0 ? 0.0 : std::max(0.0, global);
    metric.violation_frequency =
        ok_paths == 0 ? 0.0 : static_cast<double>(violating) / static_cast<double>(ok_paths);
    for (std::size_t q = 0; q < psi_levels.size(); ++q)
        metric.soft_psi.emplace_back(psi_levels[q],
                                     ok_paths == 0 ? 0.0 : psi_means[q] / static_cast<double>(ok_paths));
    return metric;
}

// ---- generator and drift necessity probe ---------------------------------------

double generator_L(const Equation& eq, const TestFunction& h, double t, const Segment& xi) {
    const int d = eq.dim;
    const int m = eq.brownian_dim;
    std::vector<double> x(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) x[i] = xi.at(i, 0.0);

    std::vector<double> grad(static_cast<std::size_t>(d));
    h.gradient(x, grad);
    std::vector<double> b = eval_drift(eq, t, xi);
    double out = 0.0;
    for (int i = 0; i < d; ++i) out += b[i] * grad[i];

    std::vector<double> hess(static_cast<std::size_t>(d) * d);
    h.hessian(x, hess);
    std::vector<double> sigma = eval_diffusion(eq, t, xi);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            double a_ij = 0.0;  // (sigma sigma*)^{ij}
            for (int k = 0; k < m; ++k) a_ij += sigma[i * m + k] * sigma[j * m + k];
            out += 0.5 * a_ij * hess[i * d + j];
        }
    }

    const double hx = h.value(x);
    std::vector<double> shifted(static_cast<std::size_t>(d));
    for (std::size_t z = 0; z < eq.marks->size(); ++z) {
        std::vector<double> g = eval_jump(eq, t, xi, static_cast<int>(z));
        for (int i = 0; i < d; ++i) shifted[i] = x[i] + g[i];
        const double hz = h.value(shifted);
        if (!std::isfinite(hz)) throw NonFiniteCoefficient("test function non-finite after jump");
        out += eq.marks->weights[z] * (hz - hx);
    }
    if (!std::isfinite(out)) throw NonFiniteCoefficient("generator value is not finite");
    return out;
}

namespace {

// C^2 ramp: 0 at 0, 1 at 1, flat first and second derivatives at both ends.
double smoothstep(double t) { return t * t * t * (10.0 + t * (-15.0 + 6.0 * t)); }
double smoothstep_prime(double t) { return 30.0 * t * t * (1.0 - t) * (1.0 - t); }
// Antiderivative of smoothstep with S(0) = 0; S(1) = 1/2.
double smoothstep_int(double t) {
    return t * t * t * t * (2.5 + t * (-3.0 + t));
}

}  // namespace

// Bump profile of the monotone test function: 1 on [-eps, eps], smooth decay
// to 0 outside [-2 eps, 2 eps].
struct BumpProfile {
    double eps;

    double phi(double s) const {
        const double a = std::abs(s);
        if (a <= eps) return 1.0;
        if (a >= 2.0 * eps) return 0.0;
        return smoothstep((2.0 * eps - a) / eps);
    }
    double phi_prime(double s) const {
        const double a = std::abs(s);
        if (a <= eps || a >= 2.0 * eps) return 0.0;
        const double v = smoothstep_prime((2.0 * eps - a) / eps) * (-1.0 / eps);
        return s > 0.0 ? v : -v;
    }
    // H(y) = int_0^y phi, odd in y; H = 3 eps / 2 beyond 2 eps.
    double integral(double y) const {
        const double a = std::abs(y);
        double v;
        if (a <= eps) {
            v = a;
        } else if (a >= 2.0 * eps) {
            v = 1.5 * eps;
        } else {
            const double u = (2.0 * eps - a) / eps;
            v = eps + eps * (0.5 - smoothstep_int(u));
        }
        return y >= 0.0 ? v : -v;
    }
};

DriftProbeReport necessity_probe_drift(const CoefficientSet& cs, double t0, int component,
                                       const Segment& xi, const Segment& xibar, double eps) {
    if (!(eps > 0.0)) throw Error("probe needs eps > 0");
    if (!leq(xi, xibar)) throw Error("probe requires xi <= xibar");
    if (xi.at(component, 0.0) != xibar.at(component, 0.0))
        throw Error("probe requires equal endpoints in the probed component");

    const BumpProfile bump{eps};
    const double anchor = xi.at(component, 0.0);
    const int d = cs.dim;
    TestFunction h;
    h.value = [bump, anchor, component](std::span<const double> x) {
        return bump.integral(x[component] - anchor);
    };
    h.gradient = [bump, anchor, component](std::span<const double> x, std::span<double> g) {
        std::fill(g.begin(), g.end(), 0.0);
        g[component] = bump.phi(x[component] - anchor);
    };
    h.hessian = [bump, anchor, component, d](std::span<const double> x, std::span<double> hess) {
        std::fill(hess.begin(), hess.end(), 0.0);
        hess[component * d + component] = bump.phi_prime(x[component] - anchor);
    };

    DriftProbeReport report;
    report.eps = eps;
    report.Lh = generator_L(cs.base_equation(), h, t0, xi);
    report.Lbar_h = generator_L(cs.barred_equation(), h, t0, xibar);

    // Jump terms of both generators are bounded by (4 eps) ^ (|gamma| + |gammabar|).
    const Equation base = cs.base_equation();
    const Equation barred = cs.barred_equation();
    for (std::size_t z = 0; z < cs.marks.size(); ++z) {
        auto g = eval_jump(base, t0, xi, static_cast<int>(z));
        auto gb = eval_jump(barred, t0, xibar, static_cast<int>(z));
        double ng = 0.0, ngb = 0.0;
        for (int i = 0; i < d; ++i) {
            ng += g[i] * g[i];
            ngb += gb[i] * gb[i];
        }
        report.jump_slack +=
            cs.marks.weights[z] * std::min(4.0 * eps, std::sqrt(ng) + std::sqrt(ngb));
    }

    const double diff = report.Lh - report.Lbar_h;
    if (diff > report.jump_slack)
        report.verdict = ProbeVerdict::Violation;
    else if (diff > 0.0)
        report.verdict = ProbeVerdict::Inconclusive;
    else
        report.verdict = ProbeVerdict::NoViolation;
    return report;
}

}  // namespace sfde
