#include "corge/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace corge::ad {

std::size_t ParamStore::add(const std::string& name, std::size_t rows, std::size_t cols) {
    for (const auto& t : tensors_) {
        if (t.name == name) throw std::invalid_argument("duplicate tensor name: " + name);
    }
    TensorSpec spec{name, rows, cols, value_.size()};
    tensors_.push_back(spec);
    value_.resize(value_.size() + spec.size(), 0.0);
    grad_.resize(value_.size(), 0.0);
    return tensors_.size() - 1;
}

const TensorSpec& ParamStore::find(const std::string& name) const {
    for (const auto& t : tensors_) {
        if (t.name == name) return t;
    }
    throw std::invalid_argument("unknown tensor: " + name);
}

const TensorSpec& ParamStore::spec(const std::string& name) const { return find(name); }

ParamRef ParamStore::ref(const std::string& name) {
    const auto& t = find(name);
    return {value_.data() + t.offset, grad_.data() + t.offset, t.rows, t.cols};
}

ParamRef ParamStore::ref(std::size_t tensor_index) {
    const auto& t = tensors_.at(tensor_index);
    return {value_.data() + t.offset, grad_.data() + t.offset, t.rows, t.cols};
}

std::span<double> ParamStore::values(const std::string& name) {
    const auto& t = find(name);
    return {value_.data() + t.offset, t.size()};
}

std::span<const double> ParamStore::values(const std::string& name) const {
    const auto& t = find(name);
    return {value_.data() + t.offset, t.size()};
}

std::span<double> ParamStore::grads(const std::string& name) {
    const auto& t = find(name);
    return {grad_.data() + t.offset, t.size()};
}

void ParamStore::zero_grad() {
    std::fill(grad_.begin(), grad_.end(), 0.0);
}

void Tape::reset() {
    nodes_.clear();
    values_.clear();
    adjoints_.clear();
    aux_.clear();
    parent_pool_.clear();
}

Tape::Var Tape::push(Node node) {
    nodes_.push_back(node);
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

std::size_t Tape::alloc(std::size_t n) {
    const std::size_t offset = values_.size();
    values_.resize(offset + n, 0.0);
    return offset;
}

std::size_t Tape::push_aux(std::span<const double> data) {
    const std::size_t offset = aux_.size();
    aux_.insert(aux_.end(), data.begin(), data.end());
    return offset;
}

const double* Tape::val_ptr(std::uint32_t id) const {
    return values_.data() + nodes_[id].out;
}

double* Tape::adj_ptr(std::uint32_t id) {
    return adjoints_.data() + nodes_[id].out;
}

std::span<const double> Tape::value(Var v) const {
    const Node& n = nodes_.at(v.node);
    return {values_.data() + n.out, n.size};
}

double Tape::scalar(Var v) const {
    const auto val = value(v);
    if (val.size() != 1) throw std::logic_error("scalar() on a non-scalar node");
    return val[0];
}

Tape::Var Tape::constant(std::span<const double> v) {
    Node n{};
    n.op = Op::kConstant;
    n.size = v.size();
    n.out = alloc(n.size);
    std::copy(v.begin(), v.end(), out_ptr(n));
    return push(n);
}

Tape::Var Tape::zeros(std::size_t size) {
    Node n{};
    n.op = Op::kConstant;
    n.size = size;
    n.out = alloc(size);
    return push(n);
}

Tape::Var Tape::embed_row(const ParamRef& table, std::size_t row) {
    if (row >= table.rows) throw std::out_of_range("embedding row out of range");
    Node n{};
    n.op = Op::kEmbedRow;
    n.param = table;
    n.index = row;
    n.size = table.cols;
    n.out = alloc(n.size);
    const double* src = table.value + row * table.cols;
    std::copy(src, src + table.cols, out_ptr(n));
    return push(n);
}

Tape::Var Tape::matvec(const ParamRef& w, Var x) {
    const Node& xn = nodes_.at(x.node);
    if (xn.size != w.cols) throw std::invalid_argument("matvec shape mismatch");
    Node n{};
    n.op = Op::kMatVec;
    n.a = x.node;
    n.param = w;
    n.size = w.rows;
    n.out = alloc(n.size);
    const double* xv = val_ptr(x.node);
    double* out = out_ptr(n);
    for (std::size_t r = 0; r < w.rows; ++r) {
        const double* row = w.value + r * w.cols;
        double acc = 0.0;
        for (std::size_t c = 0; c < w.cols; ++c) acc += row[c] * xv[c];
        out[r] = acc;
    }
    return push(n);
}

Tape::Var Tape::add_bias(const ParamRef& b, Var x) {
    const Node& xn = nodes_.at(x.node);
    if (xn.size != b.rows * b.cols) throw std::invalid_argument("bias shape mismatch");
    Node n{};
    n.op = Op::kAddBias;
    n.a = x.node;
    n.param = b;
    n.size = xn.size;
    n.out = alloc(n.size);
    const double* xv = val_ptr(x.node);
    double* out = out_ptr(n);
    for (std::size_t i = 0; i < n.size; ++i) out[i] = xv[i] + b.value[i];
    return push(n);
}

Tape::Var Tape::add(Var a, Var b) {
    const Node& an = nodes_.at(a.node);
    const Node& bn = nodes_.at(b.node);
    if (an.size != bn.size) throw std::invalid_argument("add size mismatch");
    Node n{};
    n.op = Op::kAdd;
    n.a = a.node;
    n.b = b.node;
    n.size = an.size;
    n.out = alloc(n.size);
    const double* av = val_ptr(a.node);
    const double* bv = val_ptr(b.node);
    double* out = out_ptr(n);
    for (std::size_t i = 0; i < n.size; ++i) out[i] = av[i] + bv[i];
    return push(n);
}

Tape::Var Tape::concat(Var a, Var b) {
    const Node& an = nodes_.at(a.node);
    const Node& bn = nodes_.at(b.node);
    Node n{};
    n.op = Op::kConcat;
    n.a = a.node;
    n.b = b.node;
    n.size = an.size + bn.size;
    n.out = alloc(n.size);
    double* out = out_ptr(n);
    std::copy(val_ptr(a.node), val_ptr(a.node) + an.size, out);
    std::copy(val_ptr(b.node), val_ptr(b.node) + bn.size, out + an.size);
    return push(n);
}

Tape::Var Tape::sigmoid(Var x) {
    const Node& xn = nodes_.at(x.node);
    Node n{};
    n.op = Op::kSigmoid;
    n.a = x.node;
    n.size = xn.size;
    n.out = alloc(n.size);
    const double* xv = val_ptr(x.node);
    double* out = out_ptr(n);
    for (std::size_t i = 0; i < n.size; ++i) out[i] = 1.0 / (1.0 + std::exp(-xv[i]));
    return push(n);
}

Tape::Var Tape::tanh(Var x) {
    const Node& xn = nodes_.at(x.node);
    Node n{};
    n.op = Op::kTanh;
    n.a = x.node;
    n.size = xn.size;
    n.out = alloc(n.size);
    const double* xv = val_ptr(x.node);
    double* out = out_ptr(n);
    for (std::size_t i = 0; i < n.size; ++i) out[i] = std::tanh(xv[i]);
    return push(n);
}

Tape::Var Tape::hadamard(Var a, Var b) {
    const Node& an = nodes_.at(a.node);
    const Node& bn = nodes_.at(b.node);
    if (an.size != bn.size) throw std::invalid_argument("hadamard size mismatch");
    Node n{};
    n.op = Op::kHadamard;
    n.a = a.node;
    n.b = b.node;
    n.size = an.size;
    n.out = alloc(n.size);
    const double* av = val_ptr(a.node);
    const double* bv = val_ptr(b.node);
    double* out = out_ptr(n);
    for (std::size_t i = 0; i < n.size; ++i) out[i] = av[i] * bv[i];
    return push(n);
}

Tape::Var Tape::blend(Var gate, Var a, Var b) {
    const Node& gn = nodes_.at(gate.node);
    const Node& an = nodes_.at(a.node);
    const Node& bn = nodes_.at(b.node);
    if (gn.size != an.size || an.size != bn.size) {
        throw std::invalid_argument("blend size mismatch");
    }
    Node n{};
    n.op = Op::kBlend;
    n.a = gate.node;
    n.b = a.node;
    n.c = b.node;
    n.size = an.size;
    n.out = alloc(n.size);
    const double* gv = val_ptr(gate.node);
    const double* av = val_ptr(a.node);
    const double* bv = val_ptr(b.node);
    double* out = out_ptr(n);
    for (std::size_t i = 0; i < n.size; ++i) {
        out[i] = (1.0 - gv[i]) * av[i] + gv[i] * bv[i];
    }
    return push(n);
}

namespace {

// max-shifted logsumexp; accumulation in index order.
double logsumexp(const double* x, std::size_t size) {
    double max_x = x[0];
    for (std::size_t i = 1; i < size; ++i) max_x = std::max(max_x, x[i]);
    double total = 0.0;
    for (std::size_t i = 0; i < size; ++i) total += std::exp(x[i] - max_x);
    return max_x + std::log(total);
}

}  // namespace

Tape::Var Tape::pick_log_prob(Var logits, std::size_t target) {
    const Node& xn = nodes_.at(logits.node);
    if (target >= xn.size) throw std::out_of_range("pick target out of range");
    Node n{};
    n.op = Op::kPickLogProb;
    n.a = logits.node;
    n.index = target;
    n.size = 1;
    n.out = alloc(1);
    const double* xv = val_ptr(logits.node);
    const double lse = logsumexp(xv, xn.size);
    const double aux[1] = {lse};
    n.aux = push_aux(aux);
    n.aux_size = 1;
    out_ptr(n)[0] = xv[target] - lse;
    return push(n);
}

Tape::Var Tape::sum(std::span<const Var> scalars) {
    if (scalars.empty()) throw std::invalid_argument("sum over no nodes");
    Node n{};
    n.op = Op::kSum;
    n.size = 1;
    n.out = alloc(1);
    n.list = parent_pool_.size();
    n.list_size = scalars.size();
    double acc = 0.0;
    for (const Var& v : scalars) {
        if (nodes_.at(v.node).size != 1) throw std::invalid_argument("sum expects scalars");
        parent_pool_.push_back(v.node);
        acc += val_ptr(v.node)[0];
    }
    out_ptr(n)[0] = acc;
    return push(n);
}

Tape::Var Tape::stack(std::span<const Var> scalars) {
    if (scalars.empty()) throw std::invalid_argument("stack of no nodes");
    Node n{};
    n.op = Op::kStack;
    n.size = scalars.size();
    n.out = alloc(n.size);
    n.list = parent_pool_.size();
    n.list_size = scalars.size();
    double* out = out_ptr(n);
    for (std::size_t i = 0; i < scalars.size(); ++i) {
        if (nodes_.at(scalars[i].node).size != 1) {
            throw std::invalid_argument("stack expects scalars");
        }
        parent_pool_.push_back(scalars[i].node);
        out[i] = val_ptr(scalars[i].node)[0];
    }
    return push(n);
}

Tape::Var Tape::add_const(Var x, std::span<const double> c) {
    const Node& xn = nodes_.at(x.node);
    if (xn.size != c.size()) throw std::invalid_argument("add_const size mismatch");
    Node n{};
    n.op = Op::kAddConst;
    n.a = x.node;
    n.size = xn.size;
    n.out = alloc(n.size);
    const double* xv = val_ptr(x.node);
    double* out = out_ptr(n);
    for (std::size_t i = 0; i < n.size; ++i) out[i] = xv[i] + c[i];
    return push(n);
}

Tape::Var Tape::scale(Var x, double factor) {
    const Node& xn = nodes_.at(x.node);
    Node n{};
    n.op = Op::kScale;
    n.a = x.node;
    n.size = xn.size;
    n.out = alloc(n.size);
    const double aux[1] = {factor};
    n.aux = push_aux(aux);
    n.aux_size = 1;
    const double* xv = val_ptr(x.node);
    double* out = out_ptr(n);
    for (std::size_t i = 0; i < n.size; ++i) out[i] = xv[i] * factor;
    return push(n);
}

Tape::Var Tape::log_softmax(Var x) {
    const Node& xn = nodes_.at(x.node);
    Node n{};
    n.op = Op::kLogSoftmax;
    n.a = x.node;
    n.size = xn.size;
    n.out = alloc(n.size);
    const double* xv = val_ptr(x.node);
    const double lse = logsumexp(xv, xn.size);
    double* out = out_ptr(n);
    for (std::size_t i = 0; i < n.size; ++i) out[i] = xv[i] - lse;
    return push(n);
}

Tape::Var Tape::l2_normalize(Var x) {
    const Node& xn = nodes_.at(x.node);
    Node n{};
    n.op = Op::kL2Normalize;
    n.a = x.node;
    n.size = xn.size;
    n.out = alloc(n.size);
    const double* xv = val_ptr(x.node);
    double sumsq = 0.0;
    for (std::size_t i = 0; i < n.size; ++i) sumsq += xv[i] * xv[i];
    if (sumsq <= 0.0) throw std::runtime_error("l2_normalize of a zero vector");
    const double norm = std::sqrt(sumsq);
    const double aux[1] = {norm};
    n.aux = push_aux(aux);
    n.aux_size = 1;
    const double inv = 1.0 / norm;
    double* out = out_ptr(n);
    for (std::size_t i = 0; i < n.size; ++i) out[i] = xv[i] * inv;
    return push(n);
}

Tape::Var Tape::dot_const(Var x, std::span<const double> c) {
    const Node& xn = nodes_.at(x.node);
    if (xn.size != c.size()) throw std::invalid_argument("dot_const size mismatch");
    Node n{};
    n.op = Op::kDotConst;
    n.a = x.node;
    n.size = 1;
    n.out = alloc(1);
    n.aux = push_aux(c);
    n.aux_size = c.size();
    const double* xv = val_ptr(x.node);
    double acc = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) acc += xv[i] * c[i];
    out_ptr(n)[0] = acc;
    return push(n);
}

Tape::Var Tape::neg_logsumexp(Var x) {
    const Node& xn = nodes_.at(x.node);
    Node n{};
    n.op = Op::kNegLogSumExp;
    n.a = x.node;
    n.size = 1;
    n.out = alloc(1);
    const double* xv = val_ptr(x.node);
    const double lse = logsumexp(xv, xn.size);
    const double aux[1] = {lse};
    n.aux = push_aux(aux);
    n.aux_size = 1;
    out_ptr(n)[0] = -lse;
    return push(n);
}

void Tape::backward(Var root, double seed) {
    adjoints_.assign(values_.size(), 0.0);
    const Node& root_node = nodes_.at(root.node);
    if (root_node.size != 1) throw std::invalid_argument("backward root must be scalar");
    adjoints_[root_node.out] = seed;

    for (std::size_t idx = nodes_.size(); idx-- > 0;) {
        const Node& n = nodes_[idx];
        const double* adj = adjoints_.data() + n.out;
        switch (n.op) {
            case Op::kConstant:
                break;
            case Op::kEmbedRow: {
                double* grad_row = n.param.grad + n.index * n.param.cols;
                for (std::size_t i = 0; i < n.size; ++i) grad_row[i] += adj[i];
                break;
            }
            case Op::kMatVec: {
                const double* xv = val_ptr(n.a);
                double* xa = adj_ptr(n.a);
                for (std::size_t r = 0; r < n.param.rows; ++r) {
                    const double a_r = adj[r];
                    if (a_r == 0.0) continue;
                    const double* row = n.param.value + r * n.param.cols;
                    double* grad_row = n.param.grad + r * n.param.cols;
                    for (std::size_t c = 0; c < n.param.cols; ++c) {
                        grad_row[c] += a_r * xv[c];
                        xa[c] += a_r * row[c];
                    }
                }
                break;
            }
            case Op::kAddBias: {
                double* xa = adj_ptr(n.a);
                for (std::size_t i = 0; i < n.size; ++i) {
                    n.param.grad[i] += adj[i];
                    xa[i] += adj[i];
                }
                break;
            }
            case Op::kAdd: {
                double* aa = adj_ptr(n.a);
                double* ba = adj_ptr(n.b);
                for (std::size_t i = 0; i < n.size; ++i) {
                    aa[i] += adj[i];
                    ba[i] += adj[i];
                }
                break;
            }
            case Op::kConcat: {
                const std::size_t a_size = nodes_[n.a].size;
                double* aa = adj_ptr(n.a);
                double* ba = adj_ptr(n.b);
                for (std::size_t i = 0; i < a_size; ++i) aa[i] += adj[i];
                for (std::size_t i = a_size; i < n.size; ++i) ba[i - a_size] += adj[i];
                break;
            }
            case Op::kSigmoid: {
                const double* y = values_.data() + n.out;
                double* xa = adj_ptr(n.a);
                for (std::size_t i = 0; i < n.size; ++i) {
                    xa[i] += adj[i] * y[i] * (1.0 - y[i]);
                }
                break;
            }
            case Op::kTanh: {
                const double* y = values_.data() + n.out;
                double* xa = adj_ptr(n.a);
                for (std::size_t i = 0; i < n.size; ++i) {
                    xa[i] += adj[i] * (1.0 - y[i] * y[i]);
                }
                break;
            }
            case Op::kHadamard: {
                const double* av = val_ptr(n.a);
                const double* bv = val_ptr(n.b);
                double* aa = adj_ptr(n.a);
                double* ba = adj_ptr(n.b);
                for (std::size_t i = 0; i < n.size; ++i) {
                    aa[i] += adj[i] * bv[i];
                    ba[i] += adj[i] * av[i];
                }
                break;
            }
            case Op::kBlend: {
                const double* gv = val_ptr(n.a);
                const double* av = val_ptr(n.b);
                const double* bv = val_ptr(n.c);
                double* ga = adj_ptr(n.a);
                double* aa = adj_ptr(n.b);
                double* ba = adj_ptr(n.c);
                for (std::size_t i = 0; i < n.size; ++i) {
                    ga[i] += adj[i] * (bv[i] - av[i]);
                    aa[i] += adj[i] * (1.0 - gv[i]);
                    ba[i] += adj[i] * gv[i];
                }
                break;
            }
            case Op::kPickLogProb: {
                const double a0 = adj[0];
                if (a0 == 0.0) break;
                const double lse = aux_[n.aux];
                const double* xv = val_ptr(n.a);
                double* xa = adj_ptr(n.a);
                const std::size_t x_size = nodes_[n.a].size;
                for (std::size_t i = 0; i < x_size; ++i) {
                    const double softmax_i = std::exp(xv[i] - lse);
                    xa[i] += a0 * ((i == n.index ? 1.0 : 0.0) - softmax_i);
                }
                break;
            }
            case Op::kSum: {
                const double a0 = adj[0];
                for (std::size_t i = 0; i < n.list_size; ++i) {
                    adj_ptr(parent_pool_[n.list + i])[0] += a0;
                }
                break;
            }
            case Op::kStack: {
                for (std::size_t i = 0; i < n.list_size; ++i) {
                    adj_ptr(parent_pool_[n.list + i])[0] += adj[i];
                }
                break;
            }
            case Op::kAddConst: {
                double* xa = adj_ptr(n.a);
                for (std::size_t i = 0; i < n.size; ++i) xa[i] += adj[i];
                break;
            }
            case Op::kScale: {
                const double factor = aux_[n.aux];
                double* xa = adj_ptr(n.a);
                for (std::size_t i = 0; i < n.size; ++i) xa[i] += adj[i] * factor;
                break;
            }
            case Op::kLogSoftmax: {
                const double* y = values_.data() + n.out;
                double adj_total = 0.0;
                for (std::size_t i = 0; i < n.size; ++i) adj_total += adj[i];
                double* xa = adj_ptr(n.a);
                for (std::size_t i = 0; i < n.size; ++i) {
                    xa[i] += adj[i] - std::exp(y[i]) * adj_total;
                }
                break;
            }
            case Op::kL2Normalize: {
                const double norm = aux_[n.aux];
                const double* y = values_.data() + n.out;
                double y_dot_adj = 0.0;
                for (std::size_t i = 0; i < n.size; ++i) y_dot_adj += y[i] * adj[i];
                double* xa = adj_ptr(n.a);
                for (std::size_t i = 0; i < n.size; ++i) {
                    xa[i] += (adj[i] - y_dot_adj * y[i]) / norm;
                }
                break;
            }
            case Op::kDotConst: {
                const double a0 = adj[0];
                if (a0 == 0.0) break;
                double* xa = adj_ptr(n.a);
                for (std::size_t i = 0; i < n.aux_size; ++i) {
                    xa[i] += a0 * aux_[n.aux + i];
                }
                break;
            }
            case Op::kNegLogSumExp: {
                const double a0 = adj[0];
                if (a0 == 0.0) break;
                const double lse = aux_[n.aux];
                const double* xv = val_ptr(n.a);
                double* xa = adj_ptr(n.a);
                const std::size_t x_size = nodes_[n.a].size;
                for (std::size_t i = 0; i < x_size; ++i) {
                    xa[i] += -a0 * std::exp(xv[i] - lse);
                }
                break;
            }
        }
    }
}

}  // namespace corge::ad
