#ifndef SFDE_EXPR_HPP
#define SFDE_EXPR_HPP

#include <memory>
#include <string>
#include <vector>

#include "sfde/segment.hpp"

namespace sfde {

// Small expression language for config-defined coefficients. One expression
// defines one scalar entry of b, sigma or gamma.
//
//   expr     := mul (('+'|'-') mul)*
//   mul      := pow (('*'|'/') pow)*
//   pow      := unary ('^' pow)?            right-associative
//   unary    := '-' unary | primary
//   primary  := NUMBER | 't' | 'z' | 'e' | 'pi'
//             | 'x' '[' INT ']' '(' expr ')'    segment probe x[i](theta)
//             | FUNC '(' expr {',' expr} ')'
//             | '(' expr ')'
//   FUNC     := min | max | abs | exp | log | sqrt | clip
//
// Probe components are 1-based; theta must be a constant subexpression in
// [-r0, 0]. `z` is the numeric value of the current mark and is only valid
// in jump coefficients.
class CoefficientExpr {
  public:
    struct Node;
    using NodePtr = std::shared_ptr<const Node>;

    struct Node {
        enum class Kind { Constant, Time, Mark, Probe, Negate, Binary, Call };
        Kind kind = Kind::Constant;
        double constant = 0.0;   // Constant
        int component = 0;       // Probe: 0-based
        double theta = 0.0;      // Probe
        char op = '+';           // Binary
        std::string func;        // Call
        std::vector<NodePtr> args;
    };

    CoefficientExpr() = default;
    explicit CoefficientExpr(NodePtr root) : root_(std::move(root)) {}

    const NodePtr& root() const { return root_; }
    bool uses_mark() const;
    double max_probe_depth() const;  // most negative theta probed (as -theta)

    double eval(double t, const SegmentView& xi, double mark_value) const;
    std::string print() const;

    friend bool operator==(const CoefficientExpr& a, const CoefficientExpr& b);

  private:
    NodePtr root_;
};

struct ExprContext {
    int dim = 1;
    double r0 = 0.0;
    bool allow_mark = false;
};

// Throws SyntaxError (with position), UnknownSymbol or ThetaOutOfRange.
CoefficientExpr parse_expr(const std::string& text, const ExprContext& ctx);

}  // namespace sfde

#endif
