#include "sfde/solver.hpp"

#include <algorithm>
#include <cmath>

namespace sfde {

namespace {

// Zero-copy window [t - r0, t] into a running history. theta = 0 reads the
// supplied current-state buffer (which is the pre-jump state while a jump is
// being applied); negative offsets read settled history nodes.
class HistoryWindow final : public SegmentView {
  public:
    HistoryWindow(const History& h) : h_(&h), dim_(h.dim()), r0_(h.delay()) {}

    void rebind(double now, const double* current) {
        now_ = now;
        current_ = current;
    }

    int dim() const override { return dim_; }
    double delay() const override { return r0_; }
    double at(int i, double theta) const override {
        if (theta == 0.0) return current_[i];
        if (theta < -r0_ || theta > 0.0)
            throw OutOfRange("coefficient probe outside [-r0, 0]");
        return h_->eval(i, now_ + theta);
    }

  private:
    const History* h_;
    int dim_;
    double r0_;
    double now_ = 0.0;
    const double* current_ = nullptr;
};

void require(bool ok, const char* what) {
    if (!ok) throw ConfigMismatch(what);
}

double norm2(const double* v, int d) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += v[i] * v[i];
    return std::sqrt(s);
}

bool finite(const double* v, int d) {
    for (int i = 0; i < d; ++i)
        if (!std::isfinite(v[i])) return false;
    return true;
}

}  // namespace

PathResult solve_path(const Equation& eq, const Segment& xi, const NoiseRealization& noise,
                      const SolverConfig& cfg) {
    const int d = eq.dim;
    const int m = eq.brownian_dim;
    const double h = cfg.step;
    require(h > 0.0, "solver step must be positive");
    require(cfg.horizon > cfg.t0, "solver horizon must exceed t0");
    require(xi.dim() == d, "initial segment dimension mismatch");
    require(xi.delay() == eq.r0, "initial segment delay mismatch");
    require(noise.brownian_dim == m, "noise dimension mismatch");
    require(noise.t0 == cfg.t0, "noise must start at the solver t0");
    require(noise.step == h, "noise base step mismatch");
    const double steps_real = (cfg.horizon - cfg.t0) / h;
    const auto n_steps = static_cast<std::size_t>(std::llround(steps_real));
    require(n_steps >= 1 && std::abs(steps_real - static_cast<double>(n_steps)) <
                                1.0 / static_cast<double>(kTicksPerStep),
            "step must divide the horizon");
    require(noise.step_count() >= n_steps, "noise does not cover the horizon");
    if (eq.r0 > 0.0) {
        const double ratio = eq.r0 / h;
        require(std::abs(ratio - std::round(ratio)) < 1e-9, "r0 must be a multiple of the step");
    }

    PathResult result{History::from_initial(xi, cfg.t0), std::nullopt, {}};
    History& hist = result.history;
    hist.reserve(n_steps + noise.events.size() + 1);

    std::vector<double> cur(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) cur[i] = xi.at(i, 0.0);
    std::vector<double> pre(static_cast<std::size_t>(d));
    std::vector<double> bbuf(static_cast<std::size_t>(d));
    std::vector<double> sbuf(static_cast<std::size_t>(d) * m);
    std::vector<double> gbuf(static_cast<std::size_t>(d));
    std::vector<double> dbscratch(static_cast<std::size_t>(m));

    HistoryWindow window(hist);
    const CoefficientHalf& coeff = *eq.coeff;

    // Euler advance over [s, s + dt] with Brownian increment db, coefficients
    // frozen at the segment X_s.
    auto advance = [&](double s, double dt, const double* db) {
        window.rebind(s, cur.data());
        coeff.drift(s, window, bbuf);
        coeff.diffusion(s, window, sbuf);
        for (int i = 0; i < d; ++i) {
            double acc = bbuf[i] * dt;
            const double* row = sbuf.data() + static_cast<std::size_t>(i) * m;
            for (int j = 0; j < m; ++j) acc += row[j] * db[j];
            cur[i] += acc;
        }
    };

    // Returns true when the path should stop at node time t.
    auto settle_node = [&](double t) -> bool {
        if (!finite(cur.data(), d))
            throw NonFiniteState("state became non-finite at t = " + std::to_string(t));
        if (cfg.radius && norm2(cur.data(), d) >= *cfg.radius) {
            result.stopped_at = t;
            return true;
        }
        return false;
    };

    std::size_t next_event = 0;
    const auto& events = noise.events;
    while (next_event < events.size() && events[next_event].time <= cfg.t0) ++next_event;

    bool stopped = false;
    for (std::size_t k = 0; k < n_steps && !stopped; ++k) {
        const double t_right = cfg.t0 + static_cast<double>(k + 1) * h;
        double s = hist.end_time();
        const double* db = noise.step_increment(k);

        while (next_event < events.size() && events[next_event].time <= t_right) {
            const JumpEvent& ev = events[next_event];
            ++next_event;
            if (ev.time > cfg.horizon) break;
            if (ev.time > s) {
                // Linear-in-time share of the step's increment.
                const double f = (ev.time - s) / h;
                for (int j = 0; j < m; ++j) dbscratch[j] = f * db[j];
                advance(s, ev.time - s, dbscratch.data());
            }
            pre = cur;
            window.rebind(ev.time, pre.data());  // X_{t-}: left-limit segment
            coeff.jump(ev.time, window, ev.mark, gbuf);
            for (int i = 0; i < d; ++i) cur[i] += gbuf[i];
            hist.append_jump(ev.time, pre.data(), cur.data());
            ++result.diag.jumps;
            s = ev.time;
            if (settle_node(s)) {
                stopped = true;
                break;
            }
        }
        if (stopped) break;

        if (s < t_right) {
            if (s == cfg.t0 + static_cast<double>(k) * h) {
                // Untouched step: use the raw increment.
                advance(s, t_right - s, db);
            } else {
                // Tail of a step split by a jump.
                const double f = (t_right - s) / h;
                for (int j = 0; j < m; ++j) dbscratch[j] = f * db[j];
                advance(s, t_right - s, dbscratch.data());
            }
            hist.append(t_right, cur.data());
            ++result.diag.steps;
            stopped = settle_node(t_right);
        }
    }
    return result;
}

CoupledResult solve_coupled(const CoefficientSet& cs, const Segment& xi, const Segment& xibar,
                            const NoiseRealization& noise, const SolverConfig& cfg) {
    return {solve_path(cs.base_equation(), xi, noise, cfg),
            solve_path(cs.barred_equation(), xibar, noise, cfg)};
}

double sup_sq(const History& h) {
    const int d = h.dim();
    double m = 0.0;
    for (std::size_t k = 0; k < h.node_count(); ++k) {
        double s = 0.0;
        for (int i = 0; i < d; ++i) s += h.value(k, i) * h.value(k, i);
        m = std::max(m, s);
    }
    for (std::size_t j = 0; j < h.jump_count(); ++j) {
        const double* p = h.pre_value_at_jump(j);
        double s = 0.0;
        for (int i = 0; i < d; ++i) s += p[i] * p[i];
        m = std::max(m, s);
    }
    return m;
}

MomentDiagnostic moment_diagnostic(const std::vector<PathResult>& ensemble) {
    if (ensemble.empty()) throw Error("moment diagnostic needs at least one path");
    MomentDiagnostic out;
    out.paths = ensemble.size();
    for (const auto& p : ensemble) out.mean_sup_sq += sup_sq(p.history);
    out.mean_sup_sq /= static_cast<double>(ensemble.size());
    return out;
}

}  // namespace sfde
