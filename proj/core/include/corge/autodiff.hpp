#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace corge::ad {

/// Shape and location of one named parameter block inside a ParamStore.
struct TensorSpec {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t offset = 0;

    std::size_t size() const { return rows * cols; }
};

/// View of one parameter block plus its gradient accumulator.
struct ParamRef {
    const double* value = nullptr;
    double* grad = nullptr;
    std::size_t rows = 0;
    std::size_t cols = 0;
};

/// Flat parameter/gradient storage. Blocks are registered once up front;
/// ParamRef views stay valid because the buffers never reallocate afterwards.
class ParamStore {
public:
    std::size_t add(const std::string& name, std::size_t rows, std::size_t cols);

    ParamRef ref(const std::string& name);
    ParamRef ref(std::size_t tensor_index);
    const TensorSpec& spec(const std::string& name) const;

    std::span<double> values(const std::string& name);
    std::span<const double> values(const std::string& name) const;
    std::span<double> grads(const std::string& name);

    std::vector<double>& value() { return value_; }
    const std::vector<double>& value() const { return value_; }
    std::vector<double>& grad() { return grad_; }
    const std::vector<double>& grad() const { return grad_; }
    const std::vector<TensorSpec>& tensors() const { return tensors_; }

    std::size_t size() const { return value_.size(); }
    void zero_grad();

private:
    const TensorSpec& find(const std::string& name) const;

    std::vector<TensorSpec> tensors_;
    std::vector<double> value_;
    std::vector<double> grad_;
};

/// Tape-based reverse-mode differentiation over vector-valued nodes.
///
/// Forward arithmetic is written to be bit-identical with the plain forward
/// passes elsewhere in the library: per-element expressions and accumulation
/// order must not be changed in one place without the other.
class Tape {
public:
    struct Var {
        std::uint32_t node = UINT32_MAX;
        bool valid() const { return node != UINT32_MAX; }
    };

    /// Clears nodes and arenas but keeps capacity for reuse in hot loops.
    void reset();

    Var constant(std::span<const double> v);
    Var zeros(std::size_t n);

    Var embed_row(const ParamRef& table, std::size_t row);
    Var matvec(const ParamRef& w, Var x);
    Var add_bias(const ParamRef& b, Var x);
    Var add(Var a, Var b);
    Var concat(Var a, Var b);
    Var sigmoid(Var x);
    Var tanh(Var x);
    Var hadamard(Var a, Var b);
    /// (1 - gate) * a + gate * b, elementwise.
    Var blend(Var gate, Var a, Var b);
    /// logits[target] - logsumexp(logits), as a scalar node.
    Var pick_log_prob(Var logits, std::size_t target);
    Var sum(std::span<const Var> scalars);
    Var stack(std::span<const Var> scalars);
    Var add_const(Var x, std::span<const double> c);
    Var scale(Var x, double factor);
    Var log_softmax(Var x);
    Var l2_normalize(Var x);
    Var dot_const(Var x, std::span<const double> c);
    Var neg_logsumexp(Var x);

    std::span<const double> value(Var v) const;
    double scalar(Var v) const;
    std::size_t node_count() const { return nodes_.size(); }

    /// Reverse sweep from root; parameter gradients accumulate into the
    /// ParamRef grad buffers registered by the forward ops.
    void backward(Var root, double seed = 1.0);

private:
    enum class Op : std::uint8_t {
        kConstant,
        kEmbedRow,
        kMatVec,
        kAddBias,
        kAdd,
        kConcat,
        kSigmoid,
        kTanh,
        kHadamard,
        kBlend,
        kPickLogProb,
        kSum,
        kStack,
        kAddConst,
        kScale,
        kLogSoftmax,
        kL2Normalize,
        kDotConst,
        kNegLogSumExp,
    };

    struct Node {
        Op op;
        std::uint32_t a = UINT32_MAX;
        std::uint32_t b = UINT32_MAX;
        std::uint32_t c = UINT32_MAX;
        std::size_t out = 0;        // offset into values_/adjoints_
        std::size_t size = 0;       // output length
        ParamRef param;             // for kEmbedRow / kMatVec / kAddBias
        std::size_t index = 0;      // row or pick target
        std::size_t aux = 0;        // offset into aux_
        std::size_t aux_size = 0;
        std::size_t list = 0;       // offset into parent_pool_
        std::size_t list_size = 0;
    };

    Var push(Node node);
    std::size_t alloc(std::size_t n);
    std::size_t push_aux(std::span<const double> data);

    double* out_ptr(const Node& n) { return values_.data() + n.out; }
    const double* val_ptr(std::uint32_t id) const;
    double* adj_ptr(std::uint32_t id);

    std::vector<Node> nodes_;
    std::vector<double> values_;
    std::vector<double> adjoints_;
    std::vector<double> aux_;
    std::vector<std::uint32_t> parent_pool_;
};

}  // namespace corge::ad
