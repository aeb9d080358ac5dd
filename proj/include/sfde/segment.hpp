#ifndef SFDE_SEGMENT_HPP
#define SFDE_SEGMENT_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sfde/errors.hpp"

namespace sfde {

// Read-only view of a delay window: an R^d-valued cadlag path on [-r0, 0].
// Coefficient oracles are written against this interface so the solver can
// hand out zero-copy windows into its running history.
class SegmentView {
  public:
    virtual ~SegmentView() = default;
    virtual int dim() const = 0;
    virtual double delay() const = 0;  // r0
    // Right-continuous evaluation of component i at theta in [-r0, 0].
    virtual double at(int i, double theta) const = 0;
    double endpoint(int i) const { return at(i, 0.0); }
};

// Witness of a failed componentwise comparison.
struct OrderWitness {
    int component = 0;       // 0-based
    double theta = 0.0;      // offset in [-r0, 0]
    bool left_limit = false; // violation seen at the pre-jump value
};

// Cadlag path on [-r0, 0]: piecewise linear between nodes, discontinuous only
// at jump-marked nodes, where the left-limit (pre-jump) value is stored
// explicitly. The value held at a node is the post-jump (right-continuous)
// one. Immutable after construction.
class Segment final : public SegmentView {
  public:
    Segment() = default;

    // Continuous path through the given nodes. thetas must be strictly
    // increasing with back() == 0; r0 is taken from -thetas.front().
    // values is node-major: values[k*dim + i].
    Segment(int dim, std::vector<double> thetas, std::vector<double> values);

    // As above plus jump marks: jump_nodes are indices into thetas (sorted,
    // unique, of nodes with explicit pre-jump values); pre_values is
    // jump-major like values. Marks where pre == value are pruned.
    Segment(int dim, std::vector<double> thetas, std::vector<double> values,
            std::vector<int> jump_nodes, std::vector<double> pre_values);

    static Segment constant(int dim, double r0, const std::vector<double>& value);
    static Segment constant(int dim, double r0, double value);
    static Segment zero(int dim, double r0) { return constant(dim, r0, 0.0); }

    int dim() const override { return dim_; }
    double delay() const override { return r0_; }
    double at(int i, double theta) const override;
    double left_limit(int i, double theta) const;

    std::size_t node_count() const { return thetas_.size(); }
    double theta(std::size_t k) const { return thetas_[k]; }
    const std::vector<double>& thetas() const { return thetas_; }
    double value(std::size_t k, int i) const { return values_[k * dim_ + i]; }
    const double* node_value(std::size_t k) const { return values_.data() + k * dim_; }
    // Left limit of the path as it arrives at node k (equals the node value
    // at continuous nodes; pre-jump value at marked ones).
    double node_left_value(std::size_t k, int i) const;
    bool is_jump_node(std::size_t k) const;
    const std::vector<int>& jump_nodes() const { return jump_nodes_; }
    const double* pre_value(std::size_t j) const { return pre_values_.data() + j * dim_; }

  private:
    void validate() const;

    int dim_ = 0;
    double r0_ = 0.0;
    std::vector<double> thetas_;
    std::vector<double> values_;
    std::vector<int> jump_nodes_;
    std::vector<double> pre_values_;
};

// sum_i sup_theta |xi^i(theta)|, exact over the piecewise-linear
// representation (extrema sit at nodes or pre-jump values).
double sup_norm(const Segment& s);

// Refine both operands to the union of their node skeletons. Throws
// SkeletonMismatch when dim or r0 differ.
std::pair<Segment, Segment> align(const Segment& a, const Segment& b);

// Componentwise partial order on aligned skeletons. On failure fills
// *witness (if given) with the first violating (component, theta) pair.
bool leq(const Segment& a, const Segment& b, OrderWitness* witness = nullptr);

// Nodewise lattice operations on the aligned skeleton.
Segment meet(const Segment& a, const Segment& b);
Segment join(const Segment& a, const Segment& b);  // via -((-a) meet (-b))

// Pointwise arithmetic (aligned nodewise).
Segment add(const Segment& a, const Segment& b);
Segment scaled(const Segment& a, double c);

// Growing solution path on [t0 - r0, T]: absolute-time nodes, same
// representation as Segment, append-only. Restriction to [t - r0, t] yields
// the segment X_t; with the pre-jump value at t, the segment X_{t-}.
class History {
  public:
    History() = default;  // empty placeholder, e.g. for container slots
    History(int dim, double r0, double t0);

    // Places xi on [t0 - r0, t0]; xi.delay() must equal r0.
    static History from_initial(const Segment& xi, double t0);

    int dim() const { return dim_; }
    double delay() const { return r0_; }
    double origin() const { return t0_; }
    double start_time() const { return times_.front(); }
    double end_time() const { return times_.back(); }

    void reserve(std::size_t nodes);
    // t must strictly exceed end_time().
    void append(double t, const double* value);
    // Jump node: pre is the left limit at t, value the post-jump state.
    void append_jump(double t, const double* pre, const double* value);
    // Turns the last appended node into a jump node: its current value
    // becomes the recorded left limit, `post` the stored value.
    void rewrite_last_as_jump(const double* post);

    double eval(int i, double t) const;        // right-continuous
    double left_limit(int i, double t) const;

    Segment segment_at(double t) const;        // X_t
    Segment left_segment_at(double t) const;   // X_{t-}; requires t > t0

    std::size_t node_count() const { return times_.size(); }
    double time(std::size_t k) const { return times_[k]; }
    const std::vector<double>& times() const { return times_; }
    const double* node_value(std::size_t k) const { return values_.data() + k * dim_; }
    double value(std::size_t k, int i) const { return values_[k * dim_ + i]; }
    bool is_jump_node(std::size_t k) const;
    std::size_t jump_count() const { return jump_nodes_.size(); }
    const std::vector<int>& jump_nodes() const { return jump_nodes_; }
    const double* pre_value_at_jump(std::size_t j) const { return pre_values_.data() + j * dim_; }
    // Left limit as the path arrives at node k.
    double node_left_value(std::size_t k, int i) const;

  private:
    std::size_t locate(double t) const;  // greatest k with times_[k] <= t

    int dim_ = 0;
    double r0_ = 0.0;
    double t0_ = 0.0;
    std::vector<double> times_;
    std::vector<double> values_;
    std::vector<int> jump_nodes_;      // sorted node indices
    std::vector<double> pre_values_;
};

}  // namespace sfde

#endif
