#include "sfde/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "sfde/errors.hpp"

namespace sfde {

namespace {

using Node = CoefficientExpr::Node;
using NodePtr = CoefficientExpr::NodePtr;
using Kind = Node::Kind;

NodePtr make_constant(double v) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Constant;
    n->constant = v;
    return n;
}

NodePtr make_leaf(Kind kind) {
    auto n = std::make_shared<Node>();
    n->kind = kind;
    return n;
}

NodePtr make_probe(int component, double theta) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Probe;
    n->component = component;
    n->theta = theta;
    return n;
}

NodePtr make_negate(NodePtr a) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Negate;
    n->args = {std::move(a)};
    return n;
}

NodePtr make_binary(char op, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Binary;
    n->op = op;
    n->args = {std::move(a), std::move(b)};
    return n;
}

NodePtr make_call(std::string func, std::vector<NodePtr> args) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Call;
    n->func = std::move(func);
    n->args = std::move(args);
    return n;
}

int arity_of(const std::string& func) {
    if (func == "abs" || func == "exp" || func == "log" || func == "sqrt") return 1;
    if (func == "min" || func == "max") return 2;
    if (func == "clip") return 3;
    return -1;
}

class Parser {
  public:
    Parser(const std::string& text, const ExprContext& ctx) : text_(text), ctx_(ctx) {}

    NodePtr parse() {
        skip_ws();
        if (pos_ >= text_.size()) throw SyntaxError("empty expression", pos_);
        NodePtr e = parse_expr();
        skip_ws();
        if (pos_ < text_.size()) throw SyntaxError("trailing input", pos_);
        return e;
    }

  private:
    NodePtr parse_expr() {
        NodePtr lhs = parse_mul();
        while (true) {
            skip_ws();
            char c = peek();
            if (c != '+' && c != '-') return lhs;
            ++pos_;
            lhs = make_binary(c, std::move(lhs), parse_mul());
        }
    }

    NodePtr parse_mul() {
        NodePtr lhs = parse_pow();
        while (true) {
            skip_ws();
            char c = peek();
            if (c != '*' && c != '/') return lhs;
            ++pos_;
            lhs = make_binary(c, std::move(lhs), parse_pow());
        }
    }

    NodePtr parse_pow() {
        NodePtr base = parse_unary();
        skip_ws();
        if (peek() == '^') {
            ++pos_;
            return make_binary('^', std::move(base), parse_pow());
        }
        return base;
    }

    NodePtr parse_unary() {
        skip_ws();
        if (peek() == '-') {
            ++pos_;
            return make_negate(parse_unary());
        }
        return parse_primary();
    }

    NodePtr parse_primary() {
        skip_ws();
        if (pos_ >= text_.size()) throw SyntaxError("unexpected end of input", pos_);
        char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (c == '(') {
            ++pos_;
            NodePtr e = parse_expr();
            expect(')');
            return e;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) return parse_word();
        throw SyntaxError(std::string("unexpected character '") + c + "'", pos_);
    }

    NodePtr parse_number() {
        const char* begin = text_.c_str() + pos_;
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        if (end == begin) throw SyntaxError("malformed number", pos_);
        pos_ += static_cast<std::size_t>(end - begin);
        return make_constant(v);
    }

    NodePtr parse_word() {
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        std::string word = text_.substr(start, pos_ - start);
        if (word == "t") return make_leaf(Kind::Time);
        if (word == "z") {
            if (!ctx_.allow_mark)
                throw UnknownSymbol("mark symbol z is only valid in jump coefficients");
            return make_leaf(Kind::Mark);
        }
        if (word == "e") return make_constant(std::exp(1.0));
        if (word == "pi") return make_constant(4.0 * std::atan(1.0));
        if (word == "x") return parse_probe(start);
        if (arity_of(word) > 0) {
            expect('(');
            std::vector<NodePtr> args;
            args.push_back(parse_expr());
            for (int k = 1; k < arity_of(word); ++k) {
                expect(',');
                args.push_back(parse_expr());
            }
            expect(')');
            return make_call(word, std::move(args));
        }
        throw UnknownSymbol("unknown symbol '" + word + "'");
    }

    NodePtr parse_probe(std::size_t word_start) {
        expect('[');
        skip_ws();
        std::size_t num_start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        if (pos_ == num_start) throw SyntaxError("expected component index", pos_);
        int component = std::stoi(text_.substr(num_start, pos_ - num_start));
        expect(']');
        if (component < 1 || component > ctx_.dim)
            throw UnknownSymbol("probe component x[" + std::to_string(component) +
                                "] outside 1.." + std::to_string(ctx_.dim));
        expect('(');
        NodePtr theta_expr = parse_expr();
        expect(')');
        double theta = eval_constant(theta_expr, word_start);
        if (theta < -ctx_.r0 || theta > 0.0)
            throw ThetaOutOfRange("probe offset " + std::to_string(theta) + " outside [-r0, 0]");
        return make_probe(component - 1, theta);
    }

    // Probe offsets must be constant; fold them at parse time.
    double eval_constant(const NodePtr& n, std::size_t at) {
        switch (n->kind) {
            case Kind::Constant:
                return n->constant;
            case Kind::Negate:
                return -eval_constant(n->args[0], at);
            case Kind::Binary: {
                double a = eval_constant(n->args[0], at);
                double b = eval_constant(n->args[1], at);
                switch (n->op) {
                    case '+': return a + b;
                    case '-': return a - b;
                    case '*': return a * b;
                    case '/': return a / b;
                    case '^': return std::pow(a, b);
                }
                break;
            }
            default:
                break;
        }
        throw SyntaxError("probe offset must be a constant expression", at);
    }

    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

    void expect(char c) {
        skip_ws();
        if (peek() != c)
            throw SyntaxError(std::string("expected '") + c + "'", pos_);
        ++pos_;
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    const std::string& text_;
    ExprContext ctx_;
    std::size_t pos_ = 0;
};

double eval_node(const Node& n, double t, const SegmentView& xi, double mark_value) {
    switch (n.kind) {
        case Kind::Constant:
            return n.constant;
        case Kind::Time:
            return t;
        case Kind::Mark:
            return mark_value;
        case Kind::Probe:
            return xi.at(n.component, n.theta);
        case Kind::Negate:
            return -eval_node(*n.args[0], t, xi, mark_value);
        case Kind::Binary: {
            double a = eval_node(*n.args[0], t, xi, mark_value);
            double b = eval_node(*n.args[1], t, xi, mark_value);
            switch (n.op) {
                case '+': return a + b;
                case '-': return a - b;
                case '*': return a * b;
                case '/': return a / b;
                case '^': return std::pow(a, b);
            }
            return 0.0;
        }
        case Kind::Call: {
            if (n.func == "abs") return std::abs(eval_node(*n.args[0], t, xi, mark_value));
            if (n.func == "exp") return std::exp(eval_node(*n.args[0], t, xi, mark_value));
            if (n.func == "log") return std::log(eval_node(*n.args[0], t, xi, mark_value));
            if (n.func == "sqrt") return std::sqrt(eval_node(*n.args[0], t, xi, mark_value));
            if (n.func == "min")
                return std::min(eval_node(*n.args[0], t, xi, mark_value),
                                eval_node(*n.args[1], t, xi, mark_value));
            if (n.func == "max")
                return std::max(eval_node(*n.args[0], t, xi, mark_value),
                                eval_node(*n.args[1], t, xi, mark_value));
            if (n.func == "clip")
                return std::clamp(eval_node(*n.args[0], t, xi, mark_value),
                                  eval_node(*n.args[1], t, xi, mark_value),
                                  eval_node(*n.args[2], t, xi, mark_value));
            throw UnknownSymbol("unknown function '" + n.func + "'");
        }
    }
    return 0.0;
}

int precedence(const Node& n) {
    switch (n.kind) {
        case Kind::Binary:
            if (n.op == '+' || n.op == '-') return 1;
            if (n.op == '*' || n.op == '/') return 2;
            return 3;  // ^
        case Kind::Negate:
            return 4;
        default:
            return 5;
    }
}

void print_node(const Node& n, std::ostringstream& os);

void print_child(const Node& parent, const Node& child, bool is_right, std::ostringstream& os) {
    int pp = precedence(parent), cp = precedence(child);
    // Left-associative at equal precedence except '^' (right-associative);
    // parenthesize when association would change.
    bool need = cp < pp;
    if (cp == pp && parent.kind == Kind::Binary && child.kind == Kind::Binary) {
        if (parent.op == '^')
            need = !is_right;
        else
            need = is_right;
    }
    if (need) os << '(';
    print_node(child, os);
    if (need) os << ')';
}

void format_number(double v, std::ostringstream& os) {
    std::ostringstream tmp;
    tmp.precision(17);
    tmp << v;
    os << tmp.str();
}

void print_node(const Node& n, std::ostringstream& os) {
    switch (n.kind) {
        case Kind::Constant:
            format_number(n.constant, os);
            return;
        case Kind::Time:
            os << 't';
            return;
        case Kind::Mark:
            os << 'z';
            return;
        case Kind::Probe:
            os << "x[" << (n.component + 1) << "](";
            format_number(n.theta, os);
            os << ')';
            return;
        case Kind::Negate:
            os << '-';
            print_child(n, *n.args[0], false, os);
            return;
        case Kind::Binary:
            print_child(n, *n.args[0], false, os);
            os << ' ' << n.op << ' ';
            print_child(n, *n.args[1], true, os);
            return;
        case Kind::Call: {
            os << n.func << '(';
            for (std::size_t i = 0; i < n.args.size(); ++i) {
                if (i) os << ", ";
                print_node(*n.args[i], os);
            }
            os << ')';
            return;
        }
    }
}

bool equal_nodes(const Node& a, const Node& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case Kind::Constant:
            return a.constant == b.constant;
        case Kind::Time:
        case Kind::Mark:
            return true;
        case Kind::Probe:
            return a.component == b.component && a.theta == b.theta;
        case Kind::Negate:
            return equal_nodes(*a.args[0], *b.args[0]);
        case Kind::Binary:
            return a.op == b.op && equal_nodes(*a.args[0], *b.args[0]) &&
                   equal_nodes(*a.args[1], *b.args[1]);
        case Kind::Call:
            if (a.func != b.func || a.args.size() != b.args.size()) return false;
            for (std::size_t i = 0; i < a.args.size(); ++i)
                if (!equal_nodes(*a.args[i], *b.args[i])) return false;
            return true;
    }
    return false;
}

void walk_probes(const Node& n, double& depth, bool& mark) {
    if (n.kind == Kind::Probe) depth = std::max(depth, -n.theta);
    if (n.kind == Kind::Mark) mark = true;
    for (const auto& a : n.args) walk_probes(*a, depth, mark);
}

}  // namespace

bool CoefficientExpr::uses_mark() const {
    if (!root_) return false;
    double d = 0.0;
    bool m = false;
    walk_probes(*root_, d, m);
    return m;
}

double CoefficientExpr::max_probe_depth() const {
    if (!root_) return 0.0;
    double d = 0.0;
    bool m = false;
    walk_probes(*root_, d, m);
    return d;
}

double CoefficientExpr::eval(double t, const SegmentView& xi, double mark_value) const {
    if (!root_) return 0.0;
    return eval_node(*root_, t, xi, mark_value);
}

std::string CoefficientExpr::print() const {
    if (!root_) return "0";
    std::ostringstream os;
    print_node(*root_, os);
    return os.str();
}

bool operator==(const CoefficientExpr& a, const CoefficientExpr& b) {
    if (!a.root_ || !b.root_) return !a.root_ && !b.root_;
    return equal_nodes(*a.root_, *b.root_);
}

CoefficientExpr parse_expr(const std::string& text, const ExprContext& ctx) {
    Parser p(text, ctx);
    return CoefficientExpr(p.parse());
}

}  // namespace sfde
