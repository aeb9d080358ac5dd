#include "sfde/coeff.hpp"

#include <algorithm>
#include <cmath>

#include "sfde/rng.hpp"

namespace sfde {

ControlFunction ControlFunction::one() {
    return {"one", [](double) { return 1.0; }, true};
}

ControlFunction ControlFunction::log_type() {
    const double e = std::exp(1.0);
    return {"log", [e](double s) { return std::log(e + 1.0 / s); }, true};
}

ControlFunction ControlFunction::custom(std::string tag, std::function<double(double)> fn) {
    return {std::move(tag), std::move(fn), false};
}

ControlFunction ControlFunction::named(const std::string& tag) {
    if (tag == "one") return one();
    if (tag == "log") return log_type();
    throw UnknownName("unknown control function '" + tag + "' (builtins: one, log)");
}

std::vector<double> log_grid(double lo_exp, double hi_exp, std::size_t points) {
    std::vector<double> g(points);
    for (std::size_t k = 0; k < points; ++k)
        g[k] = std::pow(10.0, lo_exp + (hi_exp - lo_exp) * static_cast<double>(k) /
                                  static_cast<double>(points - 1));
    return g;
}

ControlValidation validate_control(const ControlFunction& u, const std::vector<double>& grid) {
    ControlValidation v;
    // Rounding slack: the class properties are exact, evaluation is not.
    const auto tol = [](double x) { return 1e-12 * std::max(1.0, std::abs(x)); };
    auto f = [&](double s) { return s * u(s); };
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double s = grid[k];
        if (u(s) < 1.0 - 1e-12) {
            v.lower_bound_ok = false;
            v.worst_s = s;
        }
        if (k > 0 && f(grid[k - 1]) > f(s) + tol(f(s))) {
            v.increasing_ok = false;
            v.worst_s = s;
        }
        if (k > 0) {
            const double a = grid[k - 1], b = s;
            const double mid = f(0.5 * (a + b));
            const double chord = 0.5 * (f(a) + f(b));
            if (mid < chord - tol(chord)) {
                v.midpoint_concave_ok = false;
                v.worst_s = s;
            }
        }
    }
    return v;
}

CoefficientHalf zero_half(int dim, int brownian_dim) {
    (void)dim;
    (void)brownian_dim;
    CoefficientHalf h;
    h.drift = [](double, const SegmentView&, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
    };
    h.diffusion = h.drift;
    h.jump = [](double, const SegmentView&, int, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
    };
    return h;
}

std::vector<double> eval_drift(const Equation& eq, double t, const SegmentView& xi) {
    std::vector<double> out(static_cast<std::size_t>(eq.dim));
    eq.coeff->drift(t, xi, out);
    return out;
}

std::vector<double> eval_diffusion(const Equation& eq, double t, const SegmentView& xi) {
    std::vector<double> out(static_cast<std::size_t>(eq.dim) * eq.brownian_dim);
    eq.coeff->diffusion(t, xi, out);
    return out;
}

std::vector<double> eval_jump(const Equation& eq, double t, const SegmentView& xi, int mark) {
    std::vector<double> out(static_cast<std::size_t>(eq.dim));
    eq.coeff->jump(t, xi, mark, out);
    return out;
}

// ---- builtin catalogue ------------------------------------------------------

namespace {

double param(const Params& p, const std::string& key, double fallback) {
    auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
}

void reject_unknown(const Params& p, std::initializer_list<const char*> known,
                    const std::string& name) {
    for (const auto& [key, _] : p) {
        if (std::find_if(known.begin(), known.end(),
                         [&](const char* k) { return key == k; }) == known.end())
            throw BadParams("builtin '" + name + "': unknown parameter '" + key + "'");
    }
}

int int_param(const Params& p, const std::string& key, int fallback) {
    double v = param(p, key, fallback);
    if (v < 1 || v != std::floor(v)) throw BadParams("parameter '" + key + "' must be a positive integer");
    return static_cast<int>(v);
}

CoefficientSet skeleton(const std::string& name, int d, int m, double r0) {
    if (r0 < 0.0) throw BadParams("r0 must be nonnegative");
    CoefficientSet cs;
    cs.name = name;
    cs.dim = d;
    cs.brownian_dim = m;
    cs.r0 = r0;
    cs.base = zero_half(d, m);
    cs.barred = cs.base;
    return cs;
}

}  // namespace

const std::vector<BuiltinInfo>& builtin_catalogue() {
    static const std::vector<BuiltinInfo> catalogue = {
        {"zero", "all coefficients vanish", true, true, true},
        {"linear_drift", "b^i = a x^i(0), sigma = c x^i(0) on the diagonal", true, true, true},
        {"shifted_drift_pair", "b = -x(0), bbar = b + c, sigma = sigmabar = x(0)", true, true, true},
        {"delayed_drift", "b = bbar = x(-r0), monotone delay feedback", true, true, true},
        {"geometric_diffusion", "sigma = sigmabar = s x(0)", true, true, true},
        {"delayed_diffusion", "sigma = sigmabar = x(-r0): delayed volatility", true, false, true},
        {"constant_jump", "gamma = gammabar = c on one mark", true, true, true},
        {"negating_jump", "gamma = -x(0), gammabar = 0", true, true, false},
        {"abs_drift", "b^i = |x^i(0)|, non-differentiable at 0", true, true, true},
        {"log_lipschitz_drift", "b = x(0) sqrt(log(e + x(0)^-2)), log-Lipschitz", true, true, true},
    };
    return catalogue;
}

CoefficientSet builtin(const std::string& name, const Params& params) {
    if (name == "zero") {
        reject_unknown(params, {"d", "m", "r0"}, name);
        return skeleton(name, int_param(params, "d", 1), int_param(params, "m", 1),
                        param(params, "r0", 0.0));
    }
    if (name == "linear_drift") {
        reject_unknown(params, {"d", "m", "r0", "a", "c"}, name);
        const int d = int_param(params, "d", 1);
        const int m = int_param(params, "m", 1);
        const double a = param(params, "a", -1.0);
        const double c = param(params, "c", 0.0);
        CoefficientSet cs = skeleton(name, d, m, param(params, "r0", 0.0));
        cs.base.drift = [a](double, const SegmentView& xi, std::span<double> out) {
            for (std::size_t i = 0; i < out.size(); ++i)
                out[i] = a * xi.at(static_cast<int>(i), 0.0);
        };
        cs.base.diffusion = [c, m](double, const SegmentView& xi, std::span<double> out) {
            std::fill(out.begin(), out.end(), 0.0);
            const int d = static_cast<int>(out.size()) / m;
            for (int i = 0; i < d && i < m; ++i) out[i * m + i] = c * xi.at(i, 0.0);
        };
        cs.barred = cs.base;
        return cs;
    }
    if (name == "shifted_drift_pair") {
        reject_unknown(params, {"c"}, name);
        const double c = param(params, "c", 1.0);
        CoefficientSet cs = skeleton(name, 1, 1, 0.0);
        cs.base.drift = [](double, const SegmentView& xi, std::span<double> out) {
            out[0] = -xi.at(0, 0.0);
        };
        cs.base.diffusion = [](double, const SegmentView& xi, std::span<double> out) {
            out[0] = xi.at(0, 0.0);
        };
        cs.barred = cs.base;
        cs.barred.drift = [c](double, const SegmentView& xi, std::span<double> out) {
            out[0] = -xi.at(0, 0.0) + c;
        };
        return cs;
    }
    if (name == "delayed_drift") {
        reject_unknown(params, {"r0"}, name);
        const double r0 = param(params, "r0", 1.0);
        if (!(r0 > 0.0)) throw BadParams("delayed_drift needs r0 > 0");
        CoefficientSet cs = skeleton(name, 1, 1, r0);
        cs.base.drift = [r0](double, const SegmentView& xi, std::span<double> out) {
            out[0] = xi.at(0, -r0);
        };
        cs.barred = cs.base;
        return cs;
    }
    if (name == "geometric_diffusion") {
        reject_unknown(params, {"s"}, name);
        const double s = param(params, "s", 1.0);
        CoefficientSet cs = skeleton(name, 1, 1, 0.0);
        cs.base.diffusion = [s](double, const SegmentView& xi, std::span<double> out) {
            out[0] = s * xi.at(0, 0.0);
        };
        cs.barred = cs.base;
        return cs;
    }
    if (name == "delayed_diffusion") {
        reject_unknown(params, {"r0"}, name);
        const double r0 = param(params, "r0", 1.0);
        if (!(r0 > 0.0)) throw BadParams("delayed_diffusion needs r0 > 0");
        CoefficientSet cs = skeleton(name, 1, 1, r0);
        cs.base.diffusion = [r0](double, const SegmentView& xi, std::span<double> out) {
            out[0] = xi.at(0, -r0);
        };
        cs.barred = cs.base;
        return cs;
    }
    if (name == "constant_jump") {
        reject_unknown(params, {"c", "lambda"}, name);
        const double c = param(params, "c", 1.0);
        const double lambda = param(params, "lambda", 1.0);
        if (!(lambda > 0.0)) throw BadParams("constant_jump needs lambda > 0");
        CoefficientSet cs = skeleton(name, 1, 1, 0.0);
        cs.marks = MarkMeasure::single(lambda);
        cs.base.jump = [c](double, const SegmentView&, int, std::span<double> out) { out[0] = c; };
        cs.barred = cs.base;
        return cs;
    }
    if (name == "negating_jump") {
        reject_unknown(params, {"lambda"}, name);
        const double lambda = param(params, "lambda", 1.0);
        if (!(lambda > 0.0)) throw BadParams("negating_jump needs lambda > 0");
        CoefficientSet cs = skeleton(name, 1, 1, 0.0);
        cs.marks = MarkMeasure::single(lambda);
        cs.base.jump = [](double, const SegmentView& xi, int, std::span<double> out) {
            out[0] = -xi.at(0, 0.0);
        };
        // barred keeps the zero jump
        return cs;
    }
    if (name == "abs_drift") {
        reject_unknown(params, {"d"}, name);
        const int d = int_param(params, "d", 1);
        CoefficientSet cs = skeleton(name, d, 1, 0.0);
        cs.base.drift = [](double, const SegmentView& xi, std::span<double> out) {
            for (std::size_t i = 0; i < out.size(); ++i)
                out[i] = std::abs(xi.at(static_cast<int>(i), 0.0));
        };
        cs.barred = cs.base;
        return cs;
    }
    if (name == "log_lipschitz_drift") {
        reject_unknown(params, {}, name);
        CoefficientSet cs = skeleton(name, 1, 1, 0.0);
        const double e = std::exp(1.0);
        cs.base.drift = [e](double, const SegmentView& xi, std::span<double> out) {
            const double x = xi.at(0, 0.0);
            out[0] = x == 0.0 ? 0.0 : x * std::sqrt(std::log(e + 1.0 / (x * x)));
        };
        cs.barred = cs.base;
        return cs;
    }
    throw UnknownName("unknown builtin '" + name + "'");
}

// ---- sampled (A1)/(A2) validation ------------------------------------------

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

Segment gaussian_segment(int dim, const std::vector<double>& thetas, double scale,
                         std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> values(thetas.size() * static_cast<std::size_t>(dim));
    for (double& v : values) v = scale * gauss(rng);
    return Segment(dim, thetas, std::move(values));
}

}  // namespace

PairSampler default_pair_sampler(int dim, double r0, std::size_t nodes) {
    auto thetas = uniform_thetas(r0, nodes);
    return [dim, thetas](std::mt19937_64& rng) -> PairSample {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        // Log-uniform pair separation covers the non-Lipschitz small-scale
        // regime as well as O(1) pairs.
        const double scale = std::pow(10.0, -6.0 + 7.0 * unif(rng));
        PairSample s;
        s.t = 10.0 * unif(rng);
        s.xi = gaussian_segment(dim, thetas, 1.0, rng);
        Segment delta = gaussian_segment(dim, thetas, scale, rng);
        s.eta = add(s.xi, delta);
        return s;
    };
}

namespace {

double sq(double x) { return x * x; }

void check_finite(const std::vector<double>& v, const char* what) {
    for (double x : v)
        if (!std::isfinite(x)) throw NonFiniteCoefficient(std::string(what) + " is not finite");
}

}  // namespace

double a1_ratio(const CoefficientSet& cs, const ControlFunction& u, double t, const Segment& xi,
                const Segment& eta) {
    const Equation base = cs.base_equation();
    const Equation barred = cs.barred_equation();

    double lhs = 0.0;
    {
        auto b1 = eval_drift(base, t, xi), b2 = eval_drift(base, t, eta);
        auto bb1 = eval_drift(barred, t, xi), bb2 = eval_drift(barred, t, eta);
        for (int i = 0; i < cs.dim; ++i) lhs += sq(b1[i] - b2[i]) + sq(bb1[i] - bb2[i]);
        auto s1 = eval_diffusion(base, t, xi), s2 = eval_diffusion(base, t, eta);
        auto sb1 = eval_diffusion(barred, t, xi), sb2 = eval_diffusion(barred, t, eta);
        for (std::size_t k = 0; k < s1.size(); ++k)
            lhs += sq(s1[k] - s2[k]) + sq(sb1[k] - sb2[k]);
        double linear = 0.0;
        for (std::size_t z = 0; z < cs.marks.size(); ++z) {
            auto g1 = eval_jump(base, t, xi, static_cast<int>(z));
            auto g2 = eval_jump(base, t, eta, static_cast<int>(z));
            auto gb1 = eval_jump(barred, t, xi, static_cast<int>(z));
            auto gb2 = eval_jump(barred, t, eta, static_cast<int>(z));
            double d2 = 0.0, db2 = 0.0;
            for (int i = 0; i < cs.dim; ++i) {
                d2 += sq(g1[i] - g2[i]);
                db2 += sq(gb1[i] - gb2[i]);
            }
            lhs += cs.marks.weights[z] * (d2 + db2);
            linear += cs.marks.weights[z] * (std::sqrt(d2) + std::sqrt(db2));
        }
        lhs += sq(linear);
    }
    if (!std::isfinite(lhs)) throw NonFiniteCoefficient("(A1) left side is not finite");

    Segment diff = add(xi, scaled(eta, -1.0));
    const double n2 = sq(sup_norm(diff));
    if (n2 == 0.0) return 0.0;  // degenerate; callers skip
    return lhs / (n2 * u(n2));
}

std::string default_pair_sampler_description(int dim, double r0, std::size_t nodes) {
    return "gaussian segments, d=" + std::to_string(dim) + ", r0=" + std::to_string(r0) +
           ", nodes=" + std::to_string(r0 > 0.0 ? nodes : 1) +
           ", pair separation log-uniform in [1e-6, 10]";
}

A1Report check_A1(const CoefficientSet& cs, const ControlFunction& u, const PairSampler& sampler,
                  std::size_t n_samples, double budget, std::uint64_t seed,
                  std::string sampler_description) {
    A1Report report;
    report.budget = budget;
    report.seed = seed;
    report.sampler = std::move(sampler_description);
    auto rng = make_engine(seed);
    for (std::size_t k = 0; k < n_samples; ++k) {
        PairSample s = sampler(rng);
        Segment diff = add(s.xi, scaled(s.eta, -1.0));
        if (sup_norm(diff) == 0.0) {
            ++report.degenerate_skipped;
            continue;
        }
        ++report.samples;
        const double ratio = a1_ratio(cs, u, s.t, s.xi, s.eta);
        if (ratio > report.max_ratio) {
            report.max_ratio = ratio;
            report.worst = std::move(s);
        }
    }
    report.pass = report.max_ratio <= budget;
    return report;
}

A2Report check_A2(const CoefficientSet& cs, double horizon, const std::vector<double>& grid) {
    if (grid.empty()) throw Error("(A2) needs a nonempty grid");
    for (double t : grid)
        if (t < 0.0 || t > horizon) throw Error("(A2) grid times must lie in [0, T]");

    const Equation base = cs.base_equation();
    const Equation barred = cs.barred_equation();
    const Segment zero = Segment::zero(cs.dim, cs.r0);

    A2Report report;
    std::vector<double> jump_term(grid.size(), 0.0);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double t = grid[k];
        double v = 0.0;
        auto b = eval_drift(base, t, zero);
        auto bb = eval_drift(barred, t, zero);
        check_finite(b, "b(t, 0)");
        check_finite(bb, "bbar(t, 0)");
        for (int i = 0; i < cs.dim; ++i) v += sq(b[i]) + sq(bb[i]);
        auto s = eval_diffusion(base, t, zero);
        auto sb = eval_diffusion(barred, t, zero);
        check_finite(s, "sigma(t, 0)");
        check_finite(sb, "sigmabar(t, 0)");
        for (std::size_t j = 0; j < s.size(); ++j) v += sq(s[j]) + sq(sb[j]);
        if (v >= report.sup_value) {
            report.sup_value = v;
            report.worst_t = t;
        }
        for (std::size_t z = 0; z < cs.marks.size(); ++z) {
            auto g = eval_jump(base, t, zero, static_cast<int>(z));
            auto gb = eval_jump(barred, t, zero, static_cast<int>(z));
            check_finite(g, "gamma(t, 0, z)");
            check_finite(gb, "gammabar(t, 0, z)");
            double w = 0.0;
            for (int i = 0; i < cs.dim; ++i) w += sq(g[i]) + sq(gb[i]);
            jump_term[k] += cs.marks.weights[z] * w;
        }
    }
    // Trapezoid integral of the nu-weighted jump terms over the grid.
    for (std::size_t k = 1; k < grid.size(); ++k)
        report.jump_integral += 0.5 * (jump_term[k - 1] + jump_term[k]) * (grid[k] - grid[k - 1]);
    report.total = report.sup_value + report.jump_integral;
    report.finite = std::isfinite(report.total);
    return report;
}

}  // namespace sfde
