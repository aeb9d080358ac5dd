#include "sfde/io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "sfde/expr.hpp"

namespace sfde {

using nlohmann::json;

json segment_to_json(const Segment& s) {
    json nodes = json::array();
    for (std::size_t k = 0; k < s.node_count(); ++k) {
        json v = json::array();
        for (int i = 0; i < s.dim(); ++i) v.push_back(s.value(k, i));
        nodes.push_back(json::array({s.theta(k), v}));
    }
    json jumps = json::array();
    for (std::size_t j = 0; j < s.jump_nodes().size(); ++j) {
        json v = json::array();
        for (int i = 0; i < s.dim(); ++i) v.push_back(s.pre_value(j)[i]);
        jumps.push_back(json::array({s.theta(static_cast<std::size_t>(s.jump_nodes()[j])), v}));
    }
    return json{{"r0", s.delay()}, {"d", s.dim()}, {"nodes", nodes}, {"jumps", jumps}};
}

Segment segment_from_json(const json& j) {
    if (!j.is_object() || !j.contains("nodes")) throw Error("segment JSON needs a nodes array");
    const int d = j.value("d", 1);
    std::vector<double> thetas;
    std::vector<double> values;
    for (const auto& node : j.at("nodes")) {
        thetas.push_back(node.at(0).get<double>());
        const auto& v = node.at(1);
        if (static_cast<int>(v.size()) != d) throw Error("segment node value size != d");
        for (const auto& x : v) values.push_back(x.get<double>());
    }
    std::vector<int> jump_nodes;
    std::vector<double> pre_values;
    if (j.contains("jumps")) {
        for (const auto& jump : j.at("jumps")) {
            const double theta = jump.at(0).get<double>();
            auto it = std::find(thetas.begin(), thetas.end(), theta);
            if (it == thetas.end()) throw Error("jump mark at a non-node time");
            jump_nodes.push_back(static_cast<int>(it - thetas.begin()));
            const auto& v = jump.at(1);
            if (static_cast<int>(v.size()) != d) throw Error("segment pre-jump value size != d");
            for (const auto& x : v) pre_values.push_back(x.get<double>());
        }
    }
    Segment s(d, std::move(thetas), std::move(values), std::move(jump_nodes),
              std::move(pre_values));
    if (j.contains("r0") && j.at("r0").get<double>() != s.delay())
        throw Error("declared r0 does not match the first node time");
    return s;
}

json mark_measure_to_json(const MarkMeasure& m) {
    return json{{"labels", m.labels}, {"values", m.values}, {"weights", m.weights}};
}

MarkMeasure mark_measure_from_json(const json& j) {
    MarkMeasure m;
    if (j.is_object() && j.contains("weights")) {
        m.weights = j.at("weights").get<std::vector<double>>();
        if (j.contains("labels"))
            m.labels = j.at("labels").get<std::vector<std::string>>();
        else
            for (std::size_t k = 0; k < m.weights.size(); ++k)
                m.labels.push_back("z" + std::to_string(k + 1));
        if (j.contains("values"))
            m.values = j.at("values").get<std::vector<double>>();
        else
            for (std::size_t k = 0; k < m.weights.size(); ++k)
                m.values.push_back(static_cast<double>(k + 1));
    } else if (j.is_object()) {
        // Map form {"label": weight, ...}; values default to 1-based indices.
        for (auto it = j.begin(); it != j.end(); ++it) {
            m.labels.push_back(it.key());
            m.weights.push_back(it.value().get<double>());
            m.values.push_back(static_cast<double>(m.values.size() + 1));
        }
    } else {
        throw Error("mark measure JSON must be an object");
    }
    m.validate();
    return m;
}

namespace {

CoefficientHalf half_from_json(const json& j, int d, int m, double r0, const MarkMeasure& marks) {
    CoefficientHalf out = zero_half(d, m);
    const ExprContext scalar_ctx{d, r0, false};
    const ExprContext mark_ctx{d, r0, true};

    if (j.contains("b")) {
        const auto& b = j.at("b");
        if (static_cast<int>(b.size()) != d) throw Error("coefficient b needs d entries");
        auto exprs = std::make_shared<std::vector<CoefficientExpr>>();
        for (const auto& e : b) exprs->push_back(parse_expr(e.get<std::string>(), scalar_ctx));
        out.drift = [exprs](double t, const SegmentView& xi, std::span<double> o) {
            for (std::size_t i = 0; i < o.size(); ++i) o[i] = (*exprs)[i].eval(t, xi, 0.0);
        };
    }
    if (j.contains("sigma")) {
        const auto& s = j.at("sigma");
        if (static_cast<int>(s.size()) != d) throw Error("coefficient sigma needs d rows");
        auto exprs = std::make_shared<std::vector<CoefficientExpr>>();
        for (const auto& row : s) {
            if (static_cast<int>(row.size()) != m) throw Error("sigma rows need m entries");
            for (const auto& e : row) exprs->push_back(parse_expr(e.get<std::string>(), scalar_ctx));
        }
        out.diffusion = [exprs](double t, const SegmentView& xi, std::span<double> o) {
            for (std::size_t k = 0; k < o.size(); ++k) o[k] = (*exprs)[k].eval(t, xi, 0.0);
        };
    }
    if (j.contains("gamma")) {
        const auto& g = j.at("gamma");
        // One expression list per mark label.
        auto exprs = std::make_shared<std::vector<std::vector<CoefficientExpr>>>(
            marks.size(), std::vector<CoefficientExpr>());
        for (auto it = g.begin(); it != g.end(); ++it) {
            const int z = marks.index_of(it.key());
            if (z < 0) throw UnknownMark("gamma for unknown mark '" + it.key() + "'");
            if (static_cast<int>(it.value().size()) != d)
                throw Error("gamma entries need d expressions");
            for (const auto& e : it.value())
                (*exprs)[z].push_back(parse_expr(e.get<std::string>(), mark_ctx));
        }
        auto values = std::make_shared<std::vector<double>>(marks.values);
        out.jump = [exprs, values](double t, const SegmentView& xi, int mark, std::span<double> o) {
            const auto& per_mark = (*exprs)[static_cast<std::size_t>(mark)];
            if (per_mark.empty()) {
                std::fill(o.begin(), o.end(), 0.0);
                return;
            }
            for (std::size_t i = 0; i < o.size(); ++i)
                o[i] = per_mark[i].eval(t, xi, (*values)[static_cast<std::size_t>(mark)]);
        };
    }
    return out;
}

Params params_from_json(const json& j) {
    Params p;
    if (j.is_object())
        for (auto it = j.begin(); it != j.end(); ++it) p[it.key()] = it.value().get<double>();
    return p;
}

}  // namespace

CoefficientSet coefficients_from_json(const json& j) {
    if (!j.is_object()) throw Error("coefficient config must be a JSON object");
    if (j.contains("builtin"))
        return builtin(j.at("builtin").get<std::string>(),
                       params_from_json(j.value("params", json::object())));

    CoefficientSet cs;
    cs.name = j.value("name", "config");
    cs.dim = j.value("d", 1);
    cs.brownian_dim = j.value("m", 1);
    cs.r0 = j.value("r0", 0.0);
    if (cs.dim < 1 || cs.brownian_dim < 0 || cs.r0 < 0.0)
        throw Error("coefficient config needs d >= 1, m >= 0, r0 >= 0");
    if (j.contains("marks")) cs.marks = mark_measure_from_json(j.at("marks"));
    cs.base = half_from_json(j, cs.dim, cs.brownian_dim, cs.r0, cs.marks);
    cs.barred = j.contains("barred")
                    ? half_from_json(j.at("barred"), cs.dim, cs.brownian_dim, cs.r0, cs.marks)
                    : cs.base;
    return cs;
}

std::vector<JumpEvent> events_from_json(const json& j, const MarkMeasure& marks) {
    std::vector<JumpEvent> events;
    if (!j.is_array()) throw Error("events JSON must be an array");
    for (const auto& e : j) {
        JumpEvent ev;
        if (e.is_array()) {
            ev.time = e.at(0).get<double>();
            if (e.at(1).is_string()) {
                ev.mark = marks.index_of(e.at(1).get<std::string>());
                if (ev.mark < 0) throw UnknownMark("unknown mark '" + e.at(1).get<std::string>() + "'");
            } else {
                ev.mark = e.at(1).get<int>();
            }
        } else {
            ev.time = e.at("t").get<double>();
            if (e.at("mark").is_string()) {
                ev.mark = marks.index_of(e.at("mark").get<std::string>());
                if (ev.mark < 0)
                    throw UnknownMark("unknown mark '" + e.at("mark").get<std::string>() + "'");
            } else {
                ev.mark = e.at("mark").get<int>();
            }
        }
        events.push_back(ev);
    }
    return events;
}

json noise_to_json(const NoiseRealization& n) {
    json events = json::array();
    for (const auto& e : n.events) events.push_back(json::array({e.time, e.mark}));
    return json{{"m", n.brownian_dim}, {"t0", n.t0},     {"T", n.horizon},
                {"step", n.step},      {"seed", n.seed}, {"marks", mark_measure_to_json(n.marks)},
                {"increments", n.increments},            {"events", events}};
}

NoiseRealization noise_from_json(const json& j) {
    NoiseRealization n;
    n.brownian_dim = j.at("m").get<int>();
    n.t0 = j.at("t0").get<double>();
    n.horizon = j.at("T").get<double>();
    n.step = j.at("step").get<double>();
    n.seed = j.at("seed").get<std::uint64_t>();
    n.marks = mark_measure_from_json(j.at("marks"));
    n.increments = j.at("increments").get<std::vector<double>>();
    for (const auto& e : j.at("events")) n.events.push_back({e.at(0).get<double>(), e.at(1).get<int>()});
    return n;
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open file: " + path);
    json j;
    in >> j;
    return j;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write file: " + path);
    out << text;
}

}  // namespace sfde
