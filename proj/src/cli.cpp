#include "sfde/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "sfde/acceptance.hpp"
#include "sfde/existence.hpp"
#include "sfde/io.hpp"
#include "sfde/order.hpp"
#include "sfde/parallel.hpp"
#include "sfde/rng.hpp"
#include "sfde/solver.hpp"

namespace sfde {

namespace {

using nlohmann::json;

std::string resolve_out_dir(const std::string& flag) {
    if (!flag.empty()) return flag;
    const char* env = std::getenv("SFDE_OUT_DIR");
    return env ? env : "";
}

void emit(const json& summary, const std::string& out_dir, const std::string& name) {
    std::cout << summary.dump(2) << "\n";
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        write_text_file(out_dir + "/" + name, summary.dump(2) + "\n");
    }
}

void write_csv(const std::string& out_dir, const std::string& name, const std::string& content) {
    if (out_dir.empty()) return;
    std::filesystem::create_directories(out_dir);
    write_text_file(out_dir + "/" + name, content);
}

std::string format_number(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

std::string history_csv(const History& h) {
    std::ostringstream os;
    os << "t";
    for (int i = 0; i < h.dim(); ++i) os << ",x" << (i + 1);
    os << ",jump\n";
    for (std::size_t k = 0; k < h.node_count(); ++k) {
        os << format_number(h.time(k));
        for (int i = 0; i < h.dim(); ++i) os << ',' << format_number(h.value(k, i));
        os << ',' << (h.is_jump_node(k) ? 1 : 0) << "\n";
    }
    return os.str();
}

json witness_to_json(const ConditionWitness& w) {
    return json{{"t", w.t},     {"component", w.component + 1},
                {"col", w.col}, {"mark", w.mark},
                {"lhs", w.lhs}, {"rhs", w.rhs},
                {"xi", segment_to_json(w.xi)},
                {"xibar", segment_to_json(w.xibar)}};
}

std::vector<int> parse_int_list(const std::string& csv) {
    std::vector<int> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
    return out;
}

std::vector<double> parse_double_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    return out;
}

Segment load_segment(const std::string& path) { return segment_from_json(load_json_file(path)); }

struct SimulateArgs {
    std::string coeff, init, initbar, inject, out;
    std::uint64_t seed = 1;
    std::size_t paths = 1;
    double step = 0.01, horizon = 1.0, t0 = 0.0;
    double radius = 0.0;
    unsigned threads = 0;
    bool dump_noise = false;
};

int cmd_simulate(const SimulateArgs& a) {
    auto cs = coefficients_from_json(load_json_file(a.coeff));
    Segment xi = load_segment(a.init);
    const bool coupled = !a.initbar.empty();
    Segment xibar = coupled ? load_segment(a.initbar) : xi;
    SolverConfig cfg{a.step, a.t0, a.horizon, {}};
    if (a.radius > 0.0) cfg.radius = a.radius;

    std::vector<JumpEvent> injected;
    const bool inject = !a.inject.empty();
    if (inject) injected = events_from_json(load_json_file(a.inject), cs.marks);

    const std::string out_dir = resolve_out_dir(a.out);
    std::vector<PathResult> results(a.paths);
    std::vector<PathResult> results_bar(coupled ? a.paths : 0);
    parallel_for(
        a.paths,
        [&](std::size_t p) {
            auto noise = generate(substream_key(a.seed, p), cs.brownian_dim, cs.marks, a.t0,
                                  a.horizon, a.step);
            if (inject) noise = inject_events(noise, injected);
            if (a.dump_noise && !out_dir.empty())
                write_csv(out_dir, "noise-" + std::to_string(p) + ".json",
                          noise_to_json(noise).dump(2) + "\n");
            results[p] = solve_path(cs.base_equation(), xi, noise, cfg);
            if (coupled) results_bar[p] = solve_path(cs.barred_equation(), xibar, noise, cfg);
        },
        a.threads);

    for (std::size_t p = 0; p < a.paths; ++p) {
        write_csv(out_dir, "path-" + std::to_string(p) + ".csv", history_csv(results[p].history));
        if (coupled)
            write_csv(out_dir, "pathbar-" + std::to_string(p) + ".csv",
                      history_csv(results_bar[p].history));
    }

    auto diag = moment_diagnostic(results);
    json summary{{"command", "simulate"},
                 {"config",
                  {{"coeff", a.coeff},
                   {"init", a.init},
                   {"initbar", a.initbar},
                   {"inject", a.inject},
                   {"seed", a.seed},
                   {"paths", a.paths},
                   {"step", a.step},
                   {"t0", a.t0},
                   {"horizon", a.horizon},
                   {"radius", a.radius}}},
                 {"mean_sup_sq", diag.mean_sup_sq},
                 {"paths", diag.paths}};
    std::size_t jumps = 0, stops = 0;
    for (const auto& r : results) {
        jumps += r.diag.jumps;
        if (r.stopped_at) ++stops;
    }
    summary["total_jumps"] = jumps;
    summary["stopped_paths"] = stops;
    emit(summary, out_dir, "summary.json");
    return 0;
}

int cmd_check_conditions(const std::string& coeff, std::size_t samples, std::uint64_t seed,
                         const std::string& out) {
    auto cs = coefficients_from_json(load_json_file(coeff));
    json reports = json::array();
    bool all_pass = true;
    for (ConditionKind kind :
         {ConditionKind::Drift, ConditionKind::Diffusion, ConditionKind::Jump}) {
        ConditionReport r = check_condition(cs, kind, samples, seed);
        json item{{"condition", r.condition},
                  {"pass", r.pass},
                  {"samples", r.samples},
                  {"verdict_kind", "sampled"}};
        if (r.witness) {
            item["witness"] = witness_to_json(*r.witness);
            item["witness_reproduces"] = recheck_witness(cs, r);
        }
        reports.push_back(item);
        all_pass = all_pass && r.pass;
    }
    const std::string out_dir = resolve_out_dir(out);
    json summary{{"command", "check-conditions"},
                 {"config", {{"coeff", coeff}, {"samples", samples}, {"seed", seed}}},
                 {"reports", reports},
                 {"all_pass", all_pass}};
    emit(summary, out_dir, "conditions.json");
    return all_pass ? 0 : 1;
}

int cmd_verify_order(const std::string& coeff, const std::string& init, const std::string& initbar,
                     std::size_t paths, double step, double horizon, double t0,
                     std::uint64_t seed, bool expect_pass, const std::string& psi_levels,
                     unsigned threads, const std::string& out) {
    auto cs = coefficients_from_json(load_json_file(coeff));
    Segment xi = load_segment(init);
    Segment xibar = load_segment(initbar);
    SolverConfig cfg{step, t0, horizon, {}};
    std::vector<int> levels;
    if (!psi_levels.empty()) levels = parse_int_list(psi_levels);
    OrderMetric m = verify_order_mc(cs, xi, xibar, cfg, paths, seed,
                                    {levels.data(), levels.size()}, threads);

    json soft = json::array();
    for (auto [n, v] : m.soft_psi) soft.push_back(json::array({n, v}));
    const std::string out_dir = resolve_out_dir(out);
    json summary{{"command", "verify-order"},
                 {"config",
                  {{"coeff", coeff},
                   {"init", init},
                   {"initbar", initbar},
                   {"paths", paths},
                   {"step", step},
                   {"t0", t0},
                   {"horizon", horizon},
                   {"seed", seed}}},
                 {"hard_sup", m.hard_sup},
                 {"violation_frequency", m.violation_frequency},
                 {"soft_psi", soft},
                 {"failed_paths", m.failed_paths}};
    emit(summary, out_dir, "order.json");

    std::ostringstream csv;
    csv << "path,hard_sup\n";
    for (std::size_t p = 0; p < m.per_path_sup.size(); ++p)
        csv << p << ',' << format_number(m.per_path_sup[p]) << "\n";
    write_csv(out_dir, "hard_sups.csv", csv.str());

    if (expect_pass && m.hard_sup > 0.0) return 1;
    return 0;
}

int cmd_necessity_probe(const std::string& coeff, const std::string& init,
                        const std::string& initbar, int component, double eps, double t0,
                        bool expect_pass, const std::string& out) {
    auto cs = coefficients_from_json(load_json_file(coeff));
    Segment xi = load_segment(init);
    Segment xibar = load_segment(initbar);
    DriftProbeReport r = necessity_probe_drift(cs, t0, component - 1, xi, xibar, eps);
    const char* verdict = r.verdict == ProbeVerdict::Violation      ? "violation"
                          : r.verdict == ProbeVerdict::Inconclusive ? "inconclusive"
                                                                    : "no_violation";
    const std::string out_dir = resolve_out_dir(out);
    json summary{{"command", "necessity-probe"},
                 {"config",
                  {{"coeff", coeff},
                   {"init", init},
                   {"initbar", initbar},
                   {"component", component},
                   {"eps", eps},
                   {"t0", t0}}},
                 {"Lh", r.Lh},
                 {"Lbar_h", r.Lbar_h},
                 {"jump_slack", r.jump_slack},
                 {"verdict", verdict},
                 {"small_jump_condition_automatic", r.small_jump_condition_automatic}};
    emit(summary, out_dir, "probe.json");
    if (expect_pass && r.verdict == ProbeVerdict::Violation) return 1;
    return 0;
}

int cmd_existence_cascade(const std::string& coeff, const std::string& init,
                          const std::string& levels_csv, std::uint64_t seed, double step,
                          double horizon, double t0, std::size_t samples, bool truncate,
                          const std::string& out) {
    auto cs = coefficients_from_json(load_json_file(coeff));
    Segment xi = init.empty() ? Segment::zero(cs.dim, cs.r0) : load_segment(init);
    auto levels = parse_int_list(levels_csv);
    SolverConfig cfg{step, t0, horizon, {}};
    auto law = MollifierLaw::make(cs.dim, cs.r0, samples, seed);
    auto noise =
        generate(substream_key(seed, 0x9a7), cs.brownian_dim, cs.marks, t0, horizon, step);
    CascadeResult r =
        approximation_cascade(cs.base_equation(), xi, noise, cfg, law, levels, truncate);

    json gaps = json::array();
    for (std::size_t k = 0; k + 1 < levels.size(); ++k)
        gaps.push_back(json::array({levels[k], levels[k + 1], r.gaps[k]}));
    const std::string out_dir = resolve_out_dir(out);
    json summary{{"command", "existence-cascade"},
                 {"config",
                  {{"coeff", coeff},
                   {"init", init},
                   {"levels", levels},
                   {"seed", seed},
                   {"step", step},
                   {"t0", t0},
                   {"horizon", horizon},
                   {"mollifier_samples", samples},
                   {"truncate", truncate}}},
                 {"cauchy_gaps", gaps}};
    emit(summary, out_dir, "cascade.json");
    for (std::size_t k = 0; k < r.paths.size(); ++k)
        write_csv(out_dir, "cascade-level-" + std::to_string(levels[k]) + ".csv",
                  history_csv(r.paths[k].history));
    return 0;
}

int cmd_bihari(const std::string& u_tag, double a, double c, double t, const std::string& out) {
    BihariKernel kernel(ControlFunction::named(u_tag));
    const double value = kernel.bound(a, c, t);
    std::cout << format_number(value) << "\n";
    const std::string out_dir = resolve_out_dir(out);
    if (!out_dir.empty()) {
        json summary{{"command", "bihari"},
                     {"config", {{"u", u_tag}, {"a", a}, {"c", c}, {"t", t}}},
                     {"bound", value}};
        std::filesystem::create_directories(out_dir);
        write_text_file(out_dir + "/bihari.json", summary.dump(2) + "\n");
    }
    return 0;
}

int cmd_psi_table(int n, const std::string& points_csv, const std::string& out) {
    auto points = parse_double_list(points_csv);
    std::ostringstream csv;
    csv << "s,psi,psi_prime,psi_second\n";
    for (double s : points)
        csv << format_number(s) << ',' << format_number(psi(n, s)) << ','
            << format_number(psi_prime(n, s)) << ',' << format_number(psi_second(n, s)) << "\n";
    std::cout << csv.str();
    write_csv(resolve_out_dir(out), "psi.csv", csv.str());
    return 0;
}

int cmd_acceptance(const std::string& only_csv) {
    std::vector<int> only;
    if (!only_csv.empty()) only = parse_int_list(only_csv);
    bool all = true;
    auto results = run_acceptance(only, [&](const CriterionResult& r) {
        std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << "criterion " << r.id << ": " << r.name
                  << " (" << std::fixed << std::setprecision(2) << r.seconds << " s) " << r.detail
                  << "\n"
                  << std::defaultfloat;
    });
    for (const auto& r : results) all = all && r.pass;
    std::cout << (all ? "ACCEPTANCE: all criteria passed" : "ACCEPTANCE: FAILURES present")
              << "\n";
    return all ? 0 : 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"coupled stochastic functional differential equations with jumps: "
                 "simulation, order-preservation checks, existence machinery"};
    app.require_subcommand(1);

    // simulate
    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "integrate one or both equations");
    simulate->add_option("--coeff", sim.coeff, "coefficient config JSON")->required();
    simulate->add_option("--init", sim.init, "initial segment JSON")->required();
    simulate->add_option("--initbar", sim.initbar, "barred initial segment JSON (couples)");
    simulate->add_option("--seed", sim.seed, "master seed");
    simulate->add_option("--paths", sim.paths, "number of paths");
    simulate->add_option("--step", sim.step, "base step h")->required();
    simulate->add_option("--horizon", sim.horizon, "final time T")->required();
    simulate->add_option("--t0", sim.t0, "start time");
    simulate->add_option("--inject", sim.inject, "prescribed events JSON (replaces Poisson)");
    simulate->add_option("--radius", sim.radius, "stopping radius R");
    simulate->add_option("--threads", sim.threads, "worker threads (0 = auto)");
    simulate->add_option("--out", sim.out, "output directory (default $SFDE_OUT_DIR)");
    simulate->add_flag("--dump-noise", sim.dump_noise, "dump realizations for replay");

    // check-conditions
    std::string cc_coeff, cc_out;
    std::size_t cc_samples = 10000;
    std::uint64_t cc_seed = 1;
    auto* check = app.add_subcommand("check-conditions", "sampled order-preservation conditions");
    check->add_option("--coeff", cc_coeff)->required();
    check->add_option("--samples", cc_samples);
    check->add_option("--seed", cc_seed);
    check->add_option("--out", cc_out);

    // verify-order
    std::string vo_coeff, vo_init, vo_initbar, vo_psi, vo_out;
    std::size_t vo_paths = 1000;
    double vo_step = 0.001, vo_horizon = 1.0, vo_t0 = 0.0;
    std::uint64_t vo_seed = 1;
    unsigned vo_threads = 0;
    bool vo_expect = false;
    auto* verify = app.add_subcommand("verify-order", "Monte-Carlo order-preservation metric");
    verify->add_option("--coeff", vo_coeff)->required();
    verify->add_option("--init", vo_init)->required();
    verify->add_option("--initbar", vo_initbar)->required();
    verify->add_option("--paths", vo_paths);
    verify->add_option("--step", vo_step);
    verify->add_option("--horizon", vo_horizon);
    verify->add_option("--t0", vo_t0);
    verify->add_option("--seed", vo_seed);
    verify->add_option("--psi-levels", vo_psi, "comma list of n for the soft metric");
    verify->add_option("--threads", vo_threads);
    verify->add_option("--out", vo_out);
    verify->add_flag("--expect-pass", vo_expect, "exit 1 on any order violation");

    // necessity-probe
    std::string np_coeff, np_init, np_initbar, np_out;
    int np_component = 1;
    double np_eps = 0.1, np_t0 = 0.0;
    bool np_expect = false;
    auto* probe = app.add_subcommand("necessity-probe", "generator comparison drift probe");
    probe->add_option("--coeff", np_coeff)->required();
    probe->add_option("--init", np_init)->required();
    probe->add_option("--initbar", np_initbar)->required();
    probe->add_option("--component", np_component, "probed component (1-based)");
    probe->add_option("--eps", np_eps, "bump half-width");
    probe->add_option("--t0", np_t0);
    probe->add_option("--out", np_out);
    probe->add_flag("--expect-pass", np_expect, "exit 1 on a flagged violation");

    // existence-cascade
    std::string ec_coeff, ec_init, ec_levels = "1,2,4,8,16", ec_out;
    std::uint64_t ec_seed = 1;
    double ec_step = 0.01, ec_horizon = 1.0, ec_t0 = 0.0;
    std::size_t ec_samples = 4096;
    bool ec_truncate = false;
    auto* cascade = app.add_subcommand("existence-cascade", "mollified approximation cascade");
    cascade->add_option("--coeff", ec_coeff)->required();
    cascade->add_option("--init", ec_init, "initial segment JSON (default zero)");
    cascade->add_option("--levels", ec_levels);
    cascade->add_option("--seed", ec_seed);
    cascade->add_option("--step", ec_step);
    cascade->add_option("--horizon", ec_horizon);
    cascade->add_option("--t0", ec_t0);
    cascade->add_option("--samples", ec_samples, "mollifier sample count");
    cascade->add_flag("--truncate", ec_truncate, "localize unbounded coefficients per level");
    cascade->add_option("--out", ec_out);

    // bihari
    std::string bi_u = "one", bi_out;
    double bi_a = 1.0, bi_c = 1.0, bi_t = 1.0;
    auto* bihari = app.add_subcommand("bihari", "moment bound G^{-1}(G(a) + C t)");
    bihari->add_option("--u", bi_u, "control function: one | log");
    bihari->add_option("--a", bi_a);
    bihari->add_option("--c", bi_c);
    bihari->add_option("--t", bi_t);
    bihari->add_option("--out", bi_out);

    // psi-table
    int pt_n = 1;
    std::string pt_points = "0,0.25,0.5,1,2", pt_out;
    auto* psi_tbl = app.add_subcommand("psi-table", "smooth positive-part family values");
    psi_tbl->add_option("--n", pt_n);
    psi_tbl->add_option("--points", pt_points, "comma list of s values");
    psi_tbl->add_option("--out", pt_out);

    // acceptance
    std::string ac_only;
    auto* acceptance = app.add_subcommand("acceptance", "run the bundled acceptance experiments");
    acceptance->add_option("--only", ac_only, "comma list of criterion ids");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help() << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(sim);
        if (check->parsed()) return cmd_check_conditions(cc_coeff, cc_samples, cc_seed, cc_out);
        if (verify->parsed())
            return cmd_verify_order(vo_coeff, vo_init, vo_initbar, vo_paths, vo_step, vo_horizon,
                                    vo_t0, vo_seed, vo_expect, vo_psi, vo_threads, vo_out);
        if (probe->parsed())
            return cmd_necessity_probe(np_coeff, np_init, np_initbar, np_component, np_eps, np_t0,
                                       np_expect, np_out);
        if (cascade->parsed())
            return cmd_existence_cascade(ec_coeff, ec_init, ec_levels, ec_seed, ec_step,
                                         ec_horizon, ec_t0, ec_samples, ec_truncate, ec_out);
        if (bihari->parsed()) return cmd_bihari(bi_u, bi_a, bi_c, bi_t, bi_out);
        if (psi_tbl->parsed()) return cmd_psi_table(pt_n, pt_points, pt_out);
        if (acceptance->parsed()) return cmd_acceptance(ac_only);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

int run_cli(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args);
}

}  // namespace sfde
