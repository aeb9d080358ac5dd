#include "sfde/segment.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace sfde {

namespace {

bool all_finite(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

Segment::Segment(int dim, std::vector<double> thetas, std::vector<double> values)
    : Segment(dim, std::move(thetas), std::move(values), {}, {}) {}

Segment::Segment(int dim, std::vector<double> thetas, std::vector<double> values,
                 std::vector<int> jump_nodes, std::vector<double> pre_values)
    : dim_(dim),
      thetas_(std::move(thetas)),
      values_(std::move(values)),
      jump_nodes_(std::move(jump_nodes)),
      pre_values_(std::move(pre_values)) {
    if (thetas_.empty()) throw Error("segment needs at least one node");
    r0_ = -thetas_.front();
    validate();
    // Prune zero-size jumps so jump marks mean actual discontinuities.
    std::vector<int> kept_nodes;
    std::vector<double> kept_pre;
    for (std::size_t j = 0; j < jump_nodes_.size(); ++j) {
        const double* pre = pre_values_.data() + j * dim_;
        const double* post = values_.data() + static_cast<std::size_t>(jump_nodes_[j]) * dim_;
        if (!std::equal(pre, pre + dim_, post)) {
            kept_nodes.push_back(jump_nodes_[j]);
            kept_pre.insert(kept_pre.end(), pre, pre + dim_);
        }
    }
    jump_nodes_ = std::move(kept_nodes);
    pre_values_ = std::move(kept_pre);
}

void Segment::validate() const {
    if (dim_ <= 0) throw Error("segment dim must be positive");
    if (thetas_.back() != 0.0) throw Error("segment last node must sit at theta = 0");
    if (r0_ < 0.0) throw Error("segment first node must sit at theta = -r0 <= 0");
    for (std::size_t k = 1; k < thetas_.size(); ++k)
        if (!(thetas_[k - 1] < thetas_[k])) throw Error("segment node times must strictly increase");
    if (values_.size() != thetas_.size() * static_cast<std::size_t>(dim_))
        throw Error("segment value array size mismatch");
    if (!all_finite(values_) || !all_finite(pre_values_)) throw Error("segment values must be finite");
    if (pre_values_.size() != jump_nodes_.size() * static_cast<std::size_t>(dim_))
        throw Error("segment pre-jump array size mismatch");
    for (std::size_t j = 0; j < jump_nodes_.size(); ++j) {
        int k = jump_nodes_[j];
        if (k <= 0 || static_cast<std::size_t>(k) >= thetas_.size())
            throw Error("jump mark index out of range");
        if (j > 0 && jump_nodes_[j - 1] >= k) throw Error("jump marks must be sorted and unique");
    }
}

Segment Segment::constant(int dim, double r0, const std::vector<double>& value) {
    if (static_cast<int>(value.size()) != dim) throw Error("constant segment: value size != dim");
    std::vector<double> thetas;
    std::vector<double> values;
    if (r0 > 0.0) {
        thetas = {-r0, 0.0};
        values = value;
        values.insert(values.end(), value.begin(), value.end());
    } else if (r0 == 0.0) {
        thetas = {0.0};
        values = value;
    } else {
        throw Error("constant segment: r0 must be nonnegative");
    }
    return Segment(dim, std::move(thetas), std::move(values));
}

Segment Segment::constant(int dim, double r0, double value) {
    return constant(dim, r0, std::vector<double>(static_cast<std::size_t>(dim), value));
}

bool Segment::is_jump_node(std::size_t k) const {
    return std::binary_search(jump_nodes_.begin(), jump_nodes_.end(), static_cast<int>(k));
}

double Segment::node_left_value(std::size_t k, int i) const {
    auto it = std::lower_bound(jump_nodes_.begin(), jump_nodes_.end(), static_cast<int>(k));
    if (it != jump_nodes_.end() && *it == static_cast<int>(k)) {
        std::size_t j = static_cast<std::size_t>(it - jump_nodes_.begin());
        return pre_values_[j * dim_ + i];
    }
    return values_[k * dim_ + i];
}

double Segment::at(int i, double theta) const {
    if (theta < thetas_.front() || theta > 0.0)
        throw OutOfRange("segment evaluation outside [-r0, 0]");
    auto it = std::upper_bound(thetas_.begin(), thetas_.end(), theta);
    std::size_t k = static_cast<std::size_t>(it - thetas_.begin()) - 1;
    if (thetas_[k] == theta) return values_[k * dim_ + i];
    double t0 = thetas_[k], t1 = thetas_[k + 1];
    double v0 = values_[k * dim_ + i];
    double v1 = node_left_value(k + 1, i);
    return std::lerp(v0, v1, (theta - t0) / (t1 - t0));
}

double Segment::left_limit(int i, double theta) const {
    if (theta < thetas_.front() || theta > 0.0)
        throw OutOfRange("segment evaluation outside [-r0, 0]");
    auto it = std::lower_bound(thetas_.begin(), thetas_.end(), theta);
    if (it != thetas_.end() && *it == theta)
        return node_left_value(static_cast<std::size_t>(it - thetas_.begin()), i);
    return at(i, theta);  // continuous between nodes
}

double sup_norm(const Segment& s) {
    double total = 0.0;
    const int d = s.dim();
    for (int i = 0; i < d; ++i) {
        double m = 0.0;
        for (std::size_t k = 0; k < s.node_count(); ++k)
            m = std::max(m, std::abs(s.value(k, i)));
        for (std::size_t j = 0; j < s.jump_nodes().size(); ++j)
            m = std::max(m, std::abs(s.pre_value(j)[i]));
        total += m;
    }
    return total;
}

namespace {

// Merge two strictly increasing node lists by exact value.
std::vector<double> union_skeleton(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out;
    out.reserve(a.size() + b.size());
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

// Resample s onto the given skeleton (a superset of its own nodes).
Segment refine(const Segment& s, const std::vector<double>& skeleton) {
    const int d = s.dim();
    std::vector<double> values(skeleton.size() * static_cast<std::size_t>(d));
    std::vector<int> jump_nodes;
    std::vector<double> pre_values;
    for (std::size_t k = 0; k < skeleton.size(); ++k) {
        bool marked = false;
        for (int i = 0; i < d; ++i) values[k * d + i] = s.at(i, skeleton[k]);
        for (int i = 0; i < d; ++i) {
            if (s.left_limit(i, skeleton[k]) != values[k * d + i]) {
                marked = true;
                break;
            }
        }
        if (marked) {
            jump_nodes.push_back(static_cast<int>(k));
            for (int i = 0; i < d; ++i) pre_values.push_back(s.left_limit(i, skeleton[k]));
        }
    }
    return Segment(d, skeleton, std::move(values), std::move(jump_nodes), std::move(pre_values));
}

}  // namespace

std::pair<Segment, Segment> align(const Segment& a, const Segment& b) {
    if (a.dim() != b.dim()) throw SkeletonMismatch("segment dims differ");
    if (a.delay() != b.delay()) throw SkeletonMismatch("segment delays differ");
    if (a.thetas() == b.thetas()) return {a, b};
    auto skeleton = union_skeleton(a.thetas(), b.thetas());
    return {refine(a, skeleton), refine(b, skeleton)};
}

bool leq(const Segment& a, const Segment& b, OrderWitness* witness) {
    auto [ra, rb] = align(a, b);
    const int d = ra.dim();
    for (std::size_t k = 0; k < ra.node_count(); ++k) {
        for (int i = 0; i < d; ++i) {
            if (ra.value(k, i) > rb.value(k, i)) {
                if (witness) *witness = {i, ra.theta(k), false};
                return false;
            }
            if (ra.node_left_value(k, i) > rb.node_left_value(k, i)) {
                if (witness) *witness = {i, ra.theta(k), true};
                return false;
            }
        }
    }
    return true;
}

namespace {

template <typename Op>
Segment combine(const Segment& a, const Segment& b, Op op) {
    auto [ra, rb] = align(a, b);
    const int d = ra.dim();
    const std::size_t n = ra.node_count();
    std::vector<double> values(n * static_cast<std::size_t>(d));
    std::vector<int> jump_nodes;
    std::vector<double> pre_values;
    for (std::size_t k = 0; k < n; ++k) {
        bool marked = false;
        for (int i = 0; i < d; ++i) {
            values[k * d + i] = op(ra.value(k, i), rb.value(k, i));
            if (op(ra.node_left_value(k, i), rb.node_left_value(k, i)) != values[k * d + i])
                marked = true;
        }
        if (marked) {
            jump_nodes.push_back(static_cast<int>(k));
            for (int i = 0; i < d; ++i)
                pre_values.push_back(op(ra.node_left_value(k, i), rb.node_left_value(k, i)));
        }
    }
    return Segment(d, ra.thetas(), std::move(values), std::move(jump_nodes), std::move(pre_values));
}

}  // namespace

Segment meet(const Segment& a, const Segment& b) {
    return combine(a, b, [](double x, double y) { return std::min(x, y); });
}

Segment join(const Segment& a, const Segment& b) {
    return scaled(meet(scaled(a, -1.0), scaled(b, -1.0)), -1.0);
}

Segment add(const Segment& a, const Segment& b) {
    return combine(a, b, [](double x, double y) { return x + y; });
}

Segment scaled(const Segment& a, double c) {
    const int d = a.dim();
    std::vector<double> values(a.node_count() * static_cast<std::size_t>(d));
    for (std::size_t k = 0; k < a.node_count(); ++k)
        for (int i = 0; i < d; ++i) values[k * d + i] = c * a.value(k, i);
    std::vector<double> pre(a.jump_nodes().size() * static_cast<std::size_t>(d));
    for (std::size_t j = 0; j < a.jump_nodes().size(); ++j)
        for (int i = 0; i < d; ++i) pre[j * d + i] = c * a.pre_value(j)[i];
    return Segment(d, a.thetas(), std::move(values), a.jump_nodes(), std::move(pre));
}

History::History(int dim, double r0, double t0) : dim_(dim), r0_(r0), t0_(t0) {
    if (dim <= 0) throw Error("history dim must be positive");
    if (r0 < 0.0) throw Error("history delay must be nonnegative");
}

History History::from_initial(const Segment& xi, double t0) {
    History h(xi.dim(), xi.delay(), t0);
    h.times_.reserve(xi.node_count());
    h.values_.reserve(xi.node_count() * static_cast<std::size_t>(xi.dim()));
    for (std::size_t k = 0; k < xi.node_count(); ++k) {
        h.times_.push_back(t0 + xi.theta(k));
        const double* v = xi.node_value(k);
        h.values_.insert(h.values_.end(), v, v + xi.dim());
    }
    // Last node lands exactly on t0 regardless of rounding in t0 + 0.0.
    h.times_.back() = t0;
    for (std::size_t j = 0; j < xi.jump_nodes().size(); ++j) {
        h.jump_nodes_.push_back(xi.jump_nodes()[j]);
        const double* p = xi.pre_value(j);
        h.pre_values_.insert(h.pre_values_.end(), p, p + xi.dim());
    }
    return h;
}

void History::reserve(std::size_t nodes) {
    times_.reserve(times_.size() + nodes);
    values_.reserve(values_.size() + nodes * static_cast<std::size_t>(dim_));
}

void History::append(double t, const double* value) {
    if (!times_.empty() && !(t > times_.back())) throw Error("history append must advance time");
    times_.push_back(t);
    values_.insert(values_.end(), value, value + dim_);
}

void History::append_jump(double t, const double* pre, const double* value) {
    append(t, value);
    jump_nodes_.push_back(static_cast<int>(times_.size()) - 1);
    pre_values_.insert(pre_values_.end(), pre, pre + dim_);
}

void History::rewrite_last_as_jump(const double* post) {
    if (times_.empty()) throw Error("history has no node to rewrite");
    const std::size_t k = times_.size() - 1;
    if (!jump_nodes_.empty() && jump_nodes_.back() == static_cast<int>(k))
        throw Error("last node is already a jump node");
    const double* cur = values_.data() + k * dim_;
    jump_nodes_.push_back(static_cast<int>(k));
    pre_values_.insert(pre_values_.end(), cur, cur + dim_);
    std::copy(post, post + dim_, values_.begin() + static_cast<std::ptrdiff_t>(k * dim_));
}

bool History::is_jump_node(std::size_t k) const {
    return std::binary_search(jump_nodes_.begin(), jump_nodes_.end(), static_cast<int>(k));
}

double History::node_left_value(std::size_t k, int i) const {
    auto it = std::lower_bound(jump_nodes_.begin(), jump_nodes_.end(), static_cast<int>(k));
    if (it != jump_nodes_.end() && *it == static_cast<int>(k)) {
        std::size_t j = static_cast<std::size_t>(it - jump_nodes_.begin());
        return pre_values_[j * dim_ + i];
    }
    return values_[k * dim_ + i];
}

std::size_t History::locate(double t) const {
    if (times_.empty() || t < times_.front() || t > times_.back())
        throw OutOfRange("history evaluation outside coverage");
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    return static_cast<std::size_t>(it - times_.begin()) - 1;
}

double History::eval(int i, double t) const {
    std::size_t k = locate(t);
    if (times_[k] == t) return values_[k * dim_ + i];
    double v0 = values_[k * dim_ + i];
    double v1 = node_left_value(k + 1, i);
    return std::lerp(v0, v1, (t - times_[k]) / (times_[k + 1] - times_[k]));
}

double History::left_limit(int i, double t) const {
    std::size_t k = locate(t);
    if (times_[k] == t) return node_left_value(k, i);
    return eval(i, t);
}

Segment History::segment_at(double t) const {
    const double lo = t - r0_;
    if (t > times_.back() || lo < times_.front())
        throw OutOfRange("history does not cover [t - r0, t]");
    std::vector<double> thetas;
    std::vector<double> values;
    std::vector<int> jumps;
    std::vector<double> pres;

    auto push_node = [&](double theta, bool allow_mark) {
        thetas.push_back(theta);
        for (int i = 0; i < dim_; ++i) values.push_back(eval(i, t + theta));
        if (allow_mark) {
            std::size_t k = thetas.size() - 1;
            bool marked = false;
            for (int i = 0; i < dim_; ++i)
                if (left_limit(i, t + theta) != values[k * dim_ + i]) marked = true;
            if (marked) {
                jumps.push_back(static_cast<int>(k));
                for (int i = 0; i < dim_; ++i) pres.push_back(left_limit(i, t + theta));
            }
        }
    };

    if (r0_ > 0.0) {
        // Left-limit records at theta = -r0 would reference data outside the
        // window, so the first node is never marked.
        push_node(-r0_, false);
        auto first = std::upper_bound(times_.begin(), times_.end(), lo);
        auto last = std::lower_bound(times_.begin(), times_.end(), t);
        for (auto it = first; it != last; ++it) {
            const double theta = *it - t;
            // Rebasing can round a node onto the window edge or its
            // predecessor; keep the skeleton strictly increasing.
            if (theta <= thetas.back() || theta >= 0.0) continue;
            push_node(theta, true);
        }
        push_node(0.0, true);
    } else {
        push_node(0.0, false);
    }
    return Segment(dim_, std::move(thetas), std::move(values), std::move(jumps), std::move(pres));
}

Segment History::left_segment_at(double t) const {
    if (!(t > t0_)) throw OutOfRange("left segment requires t > t0");
    Segment seg = segment_at(t);
    // Replace the value at theta = 0 with the path's left limit at t and
    // unmark that node; the interior is unchanged.
    const std::size_t last = seg.node_count() - 1;
    std::vector<double> values(seg.node_count() * static_cast<std::size_t>(dim_));
    for (std::size_t k = 0; k < seg.node_count(); ++k)
        for (int i = 0; i < dim_; ++i) values[k * dim_ + i] = seg.value(k, i);
    for (int i = 0; i < dim_; ++i) values[last * dim_ + i] = left_limit(i, t);
    std::vector<int> jumps;
    std::vector<double> pres;
    for (std::size_t j = 0; j < seg.jump_nodes().size(); ++j) {
        if (static_cast<std::size_t>(seg.jump_nodes()[j]) == last) continue;
        jumps.push_back(seg.jump_nodes()[j]);
        const double* p = seg.pre_value(j);
        pres.insert(pres.end(), p, p + dim_);
    }
    return Segment(dim_, seg.thetas(), std::move(values), std::move(jumps), std::move(pres));
}

}  // namespace sfde
