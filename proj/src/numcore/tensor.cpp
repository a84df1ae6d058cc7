#include "memaae/numcore/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "memaae/error.hpp"

namespace memaae::nc {

std::size_t numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out << ',';
        out << shape[i];
    }
    out << ']';
    return out.str();
}

void Node::ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
}

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

namespace {

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
    throw Error(ErrorKind::Shape,
                std::string(op) + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

[[noreturn]] void shape_error(const char* op, const std::string& detail) {
    throw Error(ErrorKind::Shape, std::string(op) + ": " + detail);
}

void check_shape(const Shape& shape) {
    if (shape.empty()) throw Error(ErrorKind::Shape, "tensor shape must have at least one axis");
    for (auto d : shape)
        if (d == 0) throw Error(ErrorKind::Shape, "tensor shape " + shape_str(shape) + " has a zero axis");
}

Tensor make_op(const char* op, Shape shape, std::vector<double> value, std::vector<NodePtr> parents,
               std::function<void(Node&)> rule) {
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->value = std::move(value);
    node->op = op;
    bool needs = g_grad_enabled && std::any_of(parents.begin(), parents.end(),
                             [](const NodePtr& p) { return p->requires_grad; });
    if (needs) {
        node->requires_grad = true;
        node->parents = std::move(parents);
        node->backward_rule = std::move(rule);
    }
    return Tensor(std::move(node));
}

// Products of the axes before, at and after `axis`.
struct AxisSplit {
    std::size_t outer, extent, inner;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
    AxisSplit s{1, shape[axis], 1};
    for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
    for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
    return s;
}

void check_axis(const char* op, const Tensor& a, std::size_t axis) {
    if (axis >= a.rank())
        shape_error(op, "axis " + std::to_string(axis) + " out of range for shape " + shape_str(a.shape()));
}

// --- broadcasting -----------------------------------------------------------

struct Broadcast {
    Shape out;
    std::vector<std::size_t> stride_a, stride_b;  // element strides over `out`, 0 on broadcast axes
    bool same = false;
};

std::vector<std::size_t> broadcast_strides(const Shape& in, const Shape& out) {
    std::vector<std::size_t> strides(out.size(), 0);
    std::size_t offset = out.size() - in.size();
    std::size_t stride = 1;
    for (std::size_t i = in.size(); i-- > 0;) {
        strides[offset + i] = in[i] == 1 ? 0 : stride;
        stride *= in[i];
    }
    return strides;
}

Broadcast plan_broadcast(const char* op, const Shape& a, const Shape& b) {
    Broadcast plan;
    if (a == b) {
        plan.out = a;
        plan.same = true;
        return plan;
    }
    std::size_t rank = std::max(a.size(), b.size());
    plan.out.assign(rank, 1);
    for (std::size_t i = 0; i < rank; ++i) {
        std::size_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
        std::size_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
        if (da != db && da != 1 && db != 1) shape_error(op, a, b);
        plan.out[i] = std::max(da, db);
    }
    plan.stride_a = broadcast_strides(a, plan.out);
    plan.stride_b = broadcast_strides(b, plan.out);
    return plan;
}

template <class Fn>
void for_each_broadcast(const Broadcast& plan, Fn&& fn) {
    std::size_t total = numel(plan.out);
    if (plan.same) {
        for (std::size_t i = 0; i < total; ++i) fn(i, i, i);
        return;
    }
    std::size_t rank = plan.out.size();
    std::vector<std::size_t> index(rank, 0);
    std::size_t ia = 0, ib = 0;
    for (std::size_t i = 0; i < total; ++i) {
        fn(i, ia, ib);
        for (std::size_t ax = rank; ax-- > 0;) {
            ++index[ax];
            ia += plan.stride_a[ax];
            ib += plan.stride_b[ax];
            if (index[ax] < plan.out[ax]) break;
            ia -= plan.stride_a[ax] * index[ax];
            ib -= plan.stride_b[ax] * index[ax];
            index[ax] = 0;
        }
    }
}

enum class BinaryKind { Add, Sub, Mul };

Tensor binary(const char* op, BinaryKind kind, const Tensor& a, const Tensor& b) {
    auto plan = plan_broadcast(op, a.shape(), b.shape());
    std::vector<double> out(numel(plan.out));
    const auto& av = a.node()->value;
    const auto& bv = b.node()->value;
    for_each_broadcast(plan, [&](std::size_t i, std::size_t ia, std::size_t ib) {
        switch (kind) {
            case BinaryKind::Add: out[i] = av[ia] + bv[ib]; break;
            case BinaryKind::Sub: out[i] = av[ia] - bv[ib]; break;
            case BinaryKind::Mul: out[i] = av[ia] * bv[ib]; break;
        }
    });
    return make_op(op, plan.out, std::move(out), {a.node(), b.node()}, [plan, kind](Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        if (pa.requires_grad) pa.ensure_grad();
        if (pb.requires_grad) pb.ensure_grad();
        const auto& g = self.grad;
        for_each_broadcast(plan, [&](std::size_t i, std::size_t ia, std::size_t ib) {
            double gi = g[i];
            switch (kind) {
                case BinaryKind::Add:
                    if (pa.requires_grad) pa.grad[ia] += gi;
                    if (pb.requires_grad) pb.grad[ib] += gi;
                    break;
                case BinaryKind::Sub:
                    if (pa.requires_grad) pa.grad[ia] += gi;
                    if (pb.requires_grad) pb.grad[ib] -= gi;
                    break;
                case BinaryKind::Mul:
                    if (pa.requires_grad) pa.grad[ia] += gi * pb.value[ib];
                    if (pb.requires_grad) pb.grad[ib] += gi * pa.value[ia];
                    break;
            }
        });
    });
}

// Elementwise unary op; `derivative(x, y)` returns dy/dx.
template <class F, class D>
Tensor unary(const char* op, const Tensor& a, F&& forward, D derivative) {
    const auto& av = a.node()->value;
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = forward(av[i]);
    return make_op(op, a.shape(), std::move(out), {a.node()}, [derivative](Node& self) {
        Node& p = *self.parents[0];
        p.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i)
            p.grad[i] += self.grad[i] * derivative(p.value[i], self.value[i]);
    });
}

}  // namespace

// --- Tensor -----------------------------------------------------------------

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    check_shape(shape);
    std::size_t n = numel(shape);
    return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
    check_shape(shape);
    if (numel(shape) != values.size())
        throw Error(ErrorKind::Shape, "tensor shape " + shape_str(shape) + " does not match " +
                                          std::to_string(values.size()) + " values");
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->value = std::move(values);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value) { return from({1}, {value}); }

double Tensor::item() const {
    if (size() != 1) throw Error(ErrorKind::Shape, "item() on tensor of shape " + shape_str(shape()));
    return node_->value[0];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
    if (index.size() != rank()) throw Error(ErrorKind::Shape, "at(): index rank mismatch");
    std::size_t flat = 0;
    std::size_t ax = 0;
    for (auto i : index) {
        if (i >= node_->shape[ax]) throw Error(ErrorKind::Shape, "at(): index out of range");
        flat = flat * node_->shape[ax] + i;
        ++ax;
    }
    return node_->value[flat];
}

Tensor Tensor::detach() const { return from(shape(), node_->value, false); }

// --- Graph ------------------------------------------------------------------

Graph::Graph(const Tensor& root) : root_(root.node()) {
    if (!root_->requires_grad) return;
    std::unordered_set<const Node*> visited;
    // Iterative post-order DFS; parents are visited in declaration order so the
    // resulting order is deterministic for a given graph.
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(root_.get(), 0);
    visited.insert(root_.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* parent = node->parents[next++].get();
            if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
        } else {
            order_.push_back(node);
            stack.pop_back();
        }
    }
}

void Graph::backward() {
    if (!root_->requires_grad) return;
    root_->ensure_grad();
    root_->grad[0] += 1.0;
    for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
        Node* node = *it;
        if (node->backward_rule && !node->grad.empty()) node->backward_rule(*node);
    }
}

void backward(const Tensor& loss) {
    if (loss.size() != 1)
        throw Error(ErrorKind::Shape, "backward: loss must be a scalar, got shape " + shape_str(loss.shape()));
    Graph(loss).backward();
}

// --- elementwise ------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) { return binary("add", BinaryKind::Add, a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary("subtract", BinaryKind::Sub, a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary("multiply", BinaryKind::Mul, a, b); }
Tensor scale(const Tensor& a, double factor) { return mul(a, Tensor::scalar(factor)); }

Tensor sqrt(const Tensor& a) {
    for (double v : a.values())
        if (v < 0.0) throw Error(ErrorKind::Domain, "sqrt: negative input " + std::to_string(v));
    // The derivative at exactly 0 is taken as 0 (a valid subgradient for norms).
    return unary("sqrt", a, [](double x) { return std::sqrt(x); },
                 [](double, double y) { return y > 0.0 ? 0.5 / y : 0.0; });
}

Tensor exp(const Tensor& a) {
    return unary("exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
    for (double v : a.values())
        if (v <= 0.0) throw Error(ErrorKind::Domain, "log: non-positive input " + std::to_string(v));
    return unary("log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor sigmoid(const Tensor& a) {
    return unary(
        "sigmoid", a,
        [](double x) {
            if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
            double e = std::exp(x);
            return e / (1.0 + e);
        },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
    return unary("tanh", a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& a) {
    return unary("relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
                 [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
    return unary("clamp", a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
                 [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

// --- linear algebra ---------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) shape_error("matmul", a.shape(), b.shape());
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    const double* av = a.values().data();
    const double* bv = b.values().data();
    std::vector<double> out(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double* row = out.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            double s = av[i * k + p];
            if (s == 0.0) continue;
            const double* brow = bv + p * n;
            for (std::size_t j = 0; j < n; ++j) row[j] += s * brow[j];
        }
    }
    return make_op("matmul", {m, n}, std::move(out), {a.node(), b.node()}, [m, k, n](Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        const double* g = self.grad.data();
        if (pa.requires_grad) {
            pa.ensure_grad();
            // dA = G B^T, accumulated row by row against a transposed copy of B
            std::vector<double> bt(n * k);
            for (std::size_t p = 0; p < k; ++p)
                for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = pb.value[p * n + j];
            for (std::size_t i = 0; i < m; ++i) {
                double* ga = pa.grad.data() + i * k;
                for (std::size_t j = 0; j < n; ++j) {
                    const double s = g[i * n + j];
                    if (s == 0.0) continue;
                    const double* brow = bt.data() + j * k;
                    for (std::size_t p = 0; p < k; ++p) ga[p] += s * brow[p];
                }
            }
        }
        if (pb.requires_grad) {
            pb.ensure_grad();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    double s = pa.value[i * k + p];
                    if (s == 0.0) continue;
                    double* gb = pb.grad.data() + p * n;
                    const double* grow = g + i * n;
                    for (std::size_t j = 0; j < n; ++j) gb[j] += s * grow[j];
                }
        }
    });
}

std::size_t conv1d_output_length(std::size_t length, std::size_t kernel, std::size_t stride,
                                 std::size_t padding) {
    if (stride == 0) throw Error(ErrorKind::Shape, "conv1d: stride must be positive");
    if (length + 2 * padding < kernel)
        throw Error(ErrorKind::Shape, "conv1d: kernel " + std::to_string(kernel) + " longer than padded input " +
                                          std::to_string(length + 2 * padding));
    return (length + 2 * padding - kernel) / stride + 1;
}

std::size_t conv_transpose1d_output_length(std::size_t length, std::size_t kernel, std::size_t stride,
                                           std::size_t padding) {
    if (stride == 0) throw Error(ErrorKind::Shape, "conv_transpose1d: stride must be positive");
    std::size_t full = (length - 1) * stride + kernel;
    if (full <= 2 * padding) throw Error(ErrorKind::Shape, "conv_transpose1d: padding consumes the output");
    return full - 2 * padding;
}

namespace {

// Column buffer for one sample: cols[t][c * kernel + k] = src[c][t * stride + k - padding],
// zero where the tap falls in the padding.
struct ConvGeometry {
    std::size_t channels, len, lout, kernel, stride, padding;

    // Input position for output t and tap k, or -1 inside the padding.
    std::ptrdiff_t pos(std::size_t t, std::size_t k) const {
        std::ptrdiff_t p = static_cast<std::ptrdiff_t>(t * stride + k) - static_cast<std::ptrdiff_t>(padding);
        return p < 0 || p >= static_cast<std::ptrdiff_t>(len) ? -1 : p;
    }

    void im2col(const double* src, double* cols) const {
        const std::size_t width = channels * kernel;
        for (std::size_t t = 0; t < lout; ++t)
            for (std::size_t k = 0; k < kernel; ++k) {
                std::ptrdiff_t p = pos(t, k);
                for (std::size_t c = 0; c < channels; ++c)
                    cols[t * width + c * kernel + k] = p < 0 ? 0.0 : src[c * len + static_cast<std::size_t>(p)];
            }
    }

    void col2im_add(const double* cols, double* dst) const {
        const std::size_t width = channels * kernel;
        for (std::size_t t = 0; t < lout; ++t)
            for (std::size_t k = 0; k < kernel; ++k) {
                std::ptrdiff_t p = pos(t, k);
                if (p < 0) continue;
                for (std::size_t c = 0; c < channels; ++c)
                    dst[c * len + static_cast<std::size_t>(p)] += cols[t * width + c * kernel + k];
            }
    }
};

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy(double s, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += s * x[i];
}

}  // namespace

Tensor conv1d(const Tensor& x, const Tensor& weight, std::size_t stride, std::size_t padding) {
    if (x.rank() != 3 || weight.rank() != 3 || x.dim(1) != weight.dim(1))
        shape_error("conv1d", x.shape(), weight.shape());
    const std::size_t batch = x.dim(0), cin = x.dim(1), len = x.dim(2);
    const std::size_t cout = weight.dim(0), kernel = weight.dim(2);
    const std::size_t lout = conv1d_output_length(len, kernel, stride, padding);
    const ConvGeometry geo{cin, len, lout, kernel, stride, padding};
    const std::size_t width = cin * kernel;
    const double* wv = weight.values().data();

    // weight rows are already laid out as (cout, cin * kernel)
    std::vector<double> cols(batch * lout * width);
    std::vector<double> out(batch * cout * lout);
    for (std::size_t b = 0; b < batch; ++b) {
        double* cb = cols.data() + b * lout * width;
        geo.im2col(x.values().data() + b * cin * len, cb);
        for (std::size_t o = 0; o < cout; ++o)
            for (std::size_t t = 0; t < lout; ++t)
                out[(b * cout + o) * lout + t] = dot(wv + o * width, cb + t * width, width);
    }
    if (!g_grad_enabled) cols.clear();
    return make_op("conv1d", {batch, cout, lout}, std::move(out), {x.node(), weight.node()},
                   [geo, batch, cout, width, cols = std::move(cols)](Node& self) {
                       Node& px = *self.parents[0];
                       Node& pw = *self.parents[1];
                       const double* g = self.grad.data();
                       const std::size_t lout = geo.lout;
                       if (px.requires_grad) {
                           px.ensure_grad();
                           std::vector<double> gcols(lout * width);
                           for (std::size_t b = 0; b < batch; ++b) {
                               std::fill(gcols.begin(), gcols.end(), 0.0);
                               for (std::size_t t = 0; t < lout; ++t)
                                   for (std::size_t o = 0; o < cout; ++o)
                                       axpy(g[(b * cout + o) * lout + t], pw.value.data() + o * width,
                                            gcols.data() + t * width, width);
                               geo.col2im_add(gcols.data(), px.grad.data() + b * geo.channels * geo.len);
                           }
                       }
                       if (pw.requires_grad) {
                           pw.ensure_grad();
                           for (std::size_t b = 0; b < batch; ++b)
                               for (std::size_t o = 0; o < cout; ++o)
                                   for (std::size_t t = 0; t < lout; ++t)
                                       axpy(g[(b * cout + o) * lout + t], cols.data() + (b * lout + t) * width,
                                            pw.grad.data() + o * width, width);
                       }
                   });
}

Tensor conv_transpose1d(const Tensor& x, const Tensor& weight, std::size_t stride, std::size_t padding) {
    if (x.rank() != 3 || weight.rank() != 3 || x.dim(1) != weight.dim(0))
        shape_error("conv_transpose1d", x.shape(), weight.shape());
    const std::size_t batch = x.dim(0), cin = x.dim(1), len = x.dim(2);
    const std::size_t cout = weight.dim(1), kernel = weight.dim(2);
    const std::size_t lout = conv_transpose1d_output_length(len, kernel, stride, padding);
    // The adjoint of a conv1d mapping (cout, lout) to (cin, len).
    const ConvGeometry geo{cout, lout, len, kernel, stride, padding};
    const std::size_t width = cout * kernel;
    const double* xv = x.values().data();
    const double* wv = weight.values().data();

    std::vector<double> out(batch * cout * lout, 0.0);
    std::vector<double> cols(len * width);
    for (std::size_t b = 0; b < batch; ++b) {
        std::fill(cols.begin(), cols.end(), 0.0);
        for (std::size_t t = 0; t < len; ++t)
            for (std::size_t c = 0; c < cin; ++c)
                axpy(xv[(b * cin + c) * len + t], wv + c * width, cols.data() + t * width, width);
        geo.col2im_add(cols.data(), out.data() + b * cout * lout);
    }
    return make_op("conv_transpose1d", {batch, cout, lout}, std::move(out), {x.node(), weight.node()},
                   [geo, batch, cin, width](Node& self) {
                       Node& px = *self.parents[0];
                       Node& pw = *self.parents[1];
                       const std::size_t len = geo.lout;
                       std::vector<double> gcols(len * width);
                       for (std::size_t b = 0; b < batch; ++b) {
                           geo.im2col(self.grad.data() + b * geo.channels * geo.len, gcols.data());
                           if (px.requires_grad) {
                               px.ensure_grad();
                               for (std::size_t c = 0; c < cin; ++c)
                                   for (std::size_t t = 0; t < len; ++t)
                                       px.grad[(b * cin + c) * len + t] +=
                                           dot(pw.value.data() + c * width, gcols.data() + t * width, width);
                           }
                           if (pw.requires_grad) {
                               pw.ensure_grad();
                               for (std::size_t c = 0; c < cin; ++c)
                                   for (std::size_t t = 0; t < len; ++t)
                                       axpy(px.value[(b * cin + c) * len + t], gcols.data() + t * width,
                                            pw.grad.data() + c * width, width);
                           }
                       }
                   });
}

// --- layout -----------------------------------------------------------------

Tensor transpose(const Tensor& a) {
    if (a.rank() != 2) shape_error("transpose", "expects a 2-D tensor, got " + shape_str(a.shape()));
    return permute(a, {1, 0});
}

Tensor permute(const Tensor& a, const std::vector<std::size_t>& axes) {
    const std::size_t rank = a.rank();
    std::vector<bool> seen(rank, false);
    if (axes.size() != rank) shape_error("transpose", "permutation rank mismatch for " + shape_str(a.shape()));
    for (auto ax : axes) {
        if (ax >= rank || seen[ax]) shape_error("transpose", "invalid permutation for " + shape_str(a.shape()));
        seen[ax] = true;
    }
    Shape out_shape(rank);
    std::vector<std::size_t> in_strides(rank, 1);
    for (std::size_t i = rank - 1; i-- > 0;) in_strides[i] = in_strides[i + 1] * a.shape()[i + 1];
    std::vector<std::size_t> strides(rank);
    for (std::size_t i = 0; i < rank; ++i) {
        out_shape[i] = a.shape()[axes[i]];
        strides[i] = in_strides[axes[i]];
    }
    // gather[i] = flat input index of output element i
    std::vector<std::size_t> gather(a.size());
    std::vector<std::size_t> index(rank, 0);
    std::size_t src = 0;
    for (std::size_t i = 0; i < gather.size(); ++i) {
        gather[i] = src;
        for (std::size_t ax = rank; ax-- > 0;) {
            ++index[ax];
            src += strides[ax];
            if (index[ax] < out_shape[ax]) break;
            src -= strides[ax] * index[ax];
            index[ax] = 0;
        }
    }
    const auto& av = a.node()->value;
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[gather[i]];
    return make_op("transpose", out_shape, std::move(out), {a.node()},
                   [gather = std::move(gather)](Node& self) {
                       Node& p = *self.parents[0];
                       p.ensure_grad();
                       for (std::size_t i = 0; i < gather.size(); ++i) p.grad[gather[i]] += self.grad[i];
                   });
}

Tensor reshape(const Tensor& a, Shape shape) {
    check_shape(shape);
    if (numel(shape) != a.size()) shape_error("reshape", a.shape(), shape);
    return make_op("reshape", std::move(shape), a.node()->value, {a.node()}, [](Node& self) {
        Node& p = *self.parents[0];
        p.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i];
    });
}

Tensor slice(const Tensor& a, std::size_t axis, std::size_t start, std::size_t length) {
    check_axis("slice", a, axis);
    if (length == 0 || start + length > a.dim(axis))
        shape_error("slice", "range [" + std::to_string(start) + "," + std::to_string(start + length) +
                                 ") outside axis " + std::to_string(axis) + " of " + shape_str(a.shape()));
    auto s = split_at(a.shape(), axis);
    Shape out_shape = a.shape();
    out_shape[axis] = length;
    const auto& av = a.node()->value;
    std::vector<double> out(s.outer * length * s.inner);
    for (std::size_t o = 0; o < s.outer; ++o)
        std::copy_n(av.begin() + static_cast<std::ptrdiff_t>((o * s.extent + start) * s.inner),
                    length * s.inner, out.begin() + static_cast<std::ptrdiff_t>(o * length * s.inner));
    return make_op("slice", std::move(out_shape), std::move(out), {a.node()}, [s, start, length](Node& self) {
        Node& p = *self.parents[0];
        p.ensure_grad();
        for (std::size_t o = 0; o < s.outer; ++o) {
            const double* g = self.grad.data() + o * length * s.inner;
            double* dst = p.grad.data() + (o * s.extent + start) * s.inner;
            for (std::size_t i = 0; i < length * s.inner; ++i) dst[i] += g[i];
        }
    });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
    if (parts.empty()) shape_error("concat", "no operands");
    check_axis("concat", parts[0], axis);
    Shape out_shape = parts[0].shape();
    out_shape[axis] = 0;
    for (const auto& p : parts) {
        if (p.rank() != parts[0].rank()) shape_error("concat", parts[0].shape(), p.shape());
        for (std::size_t i = 0; i < p.rank(); ++i)
            if (i != axis && p.shape()[i] != parts[0].shape()[i]) shape_error("concat", parts[0].shape(), p.shape());
        out_shape[axis] += p.dim(axis);
    }
    auto s = split_at(out_shape, axis);
    std::vector<double> out(numel(out_shape));
    std::vector<std::size_t> offsets;
    std::vector<NodePtr> nodes;
    std::size_t offset = 0;
    for (const auto& p : parts) {
        std::size_t extent = p.dim(axis);
        const auto& pv = p.node()->value;
        for (std::size_t o = 0; o < s.outer; ++o)
            std::copy_n(pv.begin() + static_cast<std::ptrdiff_t>(o * extent * s.inner), extent * s.inner,
                        out.begin() + static_cast<std::ptrdiff_t>((o * s.extent + offset) * s.inner));
        offsets.push_back(offset);
        nodes.push_back(p.node());
        offset += extent;
    }
    return make_op("concat", std::move(out_shape), std::move(out), std::move(nodes),
                   [s, axis, offsets](Node& self) {
                       for (std::size_t n = 0; n < self.parents.size(); ++n) {
                           Node& p = *self.parents[n];
                           if (!p.requires_grad) continue;
                           p.ensure_grad();
                           std::size_t extent = p.shape[axis];
                           for (std::size_t o = 0; o < s.outer; ++o) {
                               const double* g = self.grad.data() + (o * s.extent + offsets[n]) * s.inner;
                               double* dst = p.grad.data() + o * extent * s.inner;
                               for (std::size_t i = 0; i < extent * s.inner; ++i) dst[i] += g[i];
                           }
                       }
                   });
}

// --- reductions -------------------------------------------------------------

namespace {

Tensor reduce_all(const char* op, const Tensor& a, double factor) {
    double total = 0.0;
    for (double v : a.values()) total += v;
    return make_op(op, {1}, {total * factor}, {a.node()}, [factor](Node& self) {
        Node& p = *self.parents[0];
        p.ensure_grad();
        double g = self.grad[0] * factor;
        for (auto& v : p.grad) v += g;
    });
}

Tensor reduce_axis(const char* op, const Tensor& a, std::size_t axis, bool keepdim, bool average) {
    check_axis(op, a, axis);
    auto s = split_at(a.shape(), axis);
    double factor = average ? 1.0 / static_cast<double>(s.extent) : 1.0;
    Shape out_shape = a.shape();
    if (keepdim || a.rank() == 1)
        out_shape[axis] = 1;
    else
        out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
    const auto& av = a.node()->value;
    std::vector<double> out(s.outer * s.inner, 0.0);
    for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t e = 0; e < s.extent; ++e)
            for (std::size_t i = 0; i < s.inner; ++i) out[o * s.inner + i] += av[(o * s.extent + e) * s.inner + i];
    if (average)
        for (auto& v : out) v *= factor;
    return make_op(op, std::move(out_shape), std::move(out), {a.node()}, [s, factor](Node& self) {
        Node& p = *self.parents[0];
        p.ensure_grad();
        for (std::size_t o = 0; o < s.outer; ++o)
            for (std::size_t e = 0; e < s.extent; ++e)
                for (std::size_t i = 0; i < s.inner; ++i)
                    p.grad[(o * s.extent + e) * s.inner + i] += self.grad[o * s.inner + i] * factor;
    });
}

}  // namespace

Tensor sum(const Tensor& a) { return reduce_all("sum", a, 1.0); }
Tensor mean(const Tensor& a) { return reduce_all("mean", a, 1.0 / static_cast<double>(a.size())); }
Tensor sum(const Tensor& a, std::size_t axis, bool keepdim) { return reduce_axis("sum", a, axis, keepdim, false); }
Tensor mean(const Tensor& a, std::size_t axis, bool keepdim) { return reduce_axis("mean", a, axis, keepdim, true); }

Tensor softmax(const Tensor& a, std::size_t axis) {
    check_axis("softmax", a, axis);
    auto s = split_at(a.shape(), axis);
    const auto& av = a.node()->value;
    std::vector<double> out(av.size());
    for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t i = 0; i < s.inner; ++i) {
            auto at = [&](std::size_t e) { return (o * s.extent + e) * s.inner + i; };
            double peak = -std::numeric_limits<double>::infinity();
            for (std::size_t e = 0; e < s.extent; ++e) peak = std::max(peak, av[at(e)]);
            double total = 0.0;
            for (std::size_t e = 0; e < s.extent; ++e) {
                out[at(e)] = std::exp(av[at(e)] - peak);
                total += out[at(e)];
            }
            for (std::size_t e = 0; e < s.extent; ++e) out[at(e)] /= total;
        }
    return make_op("softmax", a.shape(), std::move(out), {a.node()}, [s](Node& self) {
        Node& p = *self.parents[0];
        p.ensure_grad();
        for (std::size_t o = 0; o < s.outer; ++o)
            for (std::size_t i = 0; i < s.inner; ++i) {
                auto at = [&](std::size_t e) { return (o * s.extent + e) * s.inner + i; };
                double dot = 0.0;
                for (std::size_t e = 0; e < s.extent; ++e) dot += self.grad[at(e)] * self.value[at(e)];
                for (std::size_t e = 0; e < s.extent; ++e)
                    p.grad[at(e)] += self.value[at(e)] * (self.grad[at(e)] - dot);
            }
    });
}

}  // namespace memaae::nc
