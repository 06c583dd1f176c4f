#ifndef CLICKGRAD_TAPE_HPP
#define CLICKGRAD_TAPE_HPP

#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace clickgrad {

using NodeId = uint32_t;
using SlotId = int32_t;

class ParameterStore;

// Reverse-mode autodiff over a closed set of nine log-space operations.
// Append-only per batch: record a forward pass, call backward() once,
// then reset() for the next batch. Single-threaded by design; run one
// tape per thread if batches are processed concurrently.
class Tape {
  public:
    enum class Op : uint8_t {
        Constant,
        Leaf,
        Add,          // n-ary sum
        Scale,        // constant multiplier
        Negate,
        LogSigmoid,
        Log1mSigmoid,
        LogSumExp,    // n-ary
        Log1mExp,
    };

    NodeId constant(double value);
    /// Parameter leaf; `slot` ties the node to a ParameterStore entry
    /// (pass -1 for free-standing leaves in tests).
    NodeId leaf(double value, SlotId slot = -1);
    NodeId add(NodeId a, NodeId b);
    NodeId add(std::span<const NodeId> inputs);
    NodeId scale(NodeId a, double c);
    NodeId negate(NodeId a);
    NodeId log_sigmoid(NodeId a);
    NodeId log1m_sigmoid(NodeId a);
    NodeId log_sum_exp(std::span<const NodeId> inputs);
    NodeId log1mexp(NodeId a);

    double value(NodeId id) const { return values_[check(id)]; }
    double adjoint(NodeId id) const { return adjoints_[check(id)]; }
    size_t size() const { return ops_.size(); }

    /// Seeds d(loss)/d(loss) = 1 and propagates adjoints in reverse
    /// recording order. Deterministic accumulation.
    void backward(NodeId loss);

    /// Per-leaf gradients after backward(); zero for unreached leaves.
    std::map<NodeId, double> parameter_gradients() const;

    /// Adds each leaf adjoint into the store's gradient buffer.
    void accumulate_leaf_grads(ParameterStore& store) const;

    /// Clears all nodes, keeping capacity for the next batch.
    void reset();

  private:
    struct Rec {
        Op op;
        uint32_t a0 = 0;  // unary input id / n-ary args offset / leaf slot
        uint32_t a1 = 0;  // n-ary arg count
        double aux = 0.0; // Scale multiplier
    };

    NodeId check(NodeId id) const;
    NodeId push(Rec rec, double value);

    std::vector<Rec> ops_;
    std::vector<double> values_;
    std::vector<double> adjoints_;
    std::vector<NodeId> args_;
    std::vector<NodeId> leaves_;
};

}  // namespace clickgrad

#endif
