#include "clickgrad/tape.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "clickgrad/logspace.hpp"
#include "clickgrad/parameters.hpp"

namespace clickgrad {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

NodeId Tape::check(NodeId id) const {
    if (id >= ops_.size()) throw std::invalid_argument("tape: unknown node id");
    return id;
}

NodeId Tape::push(Rec rec, double value) {
    ops_.push_back(rec);
    values_.push_back(value);
    return static_cast<NodeId>(ops_.size() - 1);
}

NodeId Tape::constant(double value) {
    return push({Op::Constant}, value);
}

NodeId Tape::leaf(double value, SlotId slot) {
    NodeId id = push({Op::Leaf, static_cast<uint32_t>(slot)}, value);
    leaves_.push_back(id);
    return id;
}

NodeId Tape::add(NodeId a, NodeId b) {
    const NodeId in[2] = {a, b};
    return add(in);
}

NodeId Tape::add(std::span<const NodeId> inputs) {
    if (inputs.empty()) throw std::invalid_argument("tape: add of zero inputs");
    double sum = 0.0;
    const uint32_t off = static_cast<uint32_t>(args_.size());
    for (NodeId id : inputs) {
        sum += values_[check(id)];
        args_.push_back(id);
    }
    return push({Op::Add, off, static_cast<uint32_t>(inputs.size())}, sum);
}

NodeId Tape::scale(NodeId a, double c) {
    return push({Op::Scale, check(a), 0, c}, c * values_[a]);
}

NodeId Tape::negate(NodeId a) {
    return push({Op::Negate, check(a)}, -values_[a]);
}

NodeId Tape::log_sigmoid(NodeId a) {
    return push({Op::LogSigmoid, check(a)}, logspace::log_sigmoid(values_[a]));
}

NodeId Tape::log1m_sigmoid(NodeId a) {
    return push({Op::Log1mSigmoid, check(a)}, logspace::log1m_sigmoid(values_[a]));
}

NodeId Tape::log_sum_exp(std::span<const NodeId> inputs) {
    if (inputs.empty()) throw std::invalid_argument("tape: log_sum_exp of zero inputs");
    double m = kNegInf;
    const uint32_t off = static_cast<uint32_t>(args_.size());
    for (NodeId id : inputs) {
        double v = values_[check(id)];
        if (std::isnan(v)) throw std::invalid_argument("tape: log_sum_exp NaN input");
        if (v > m) m = v;
        args_.push_back(id);
    }
    double value;
    if (std::isinf(m) && m < 0.0) {
        value = m;
    } else {
        double sum = 0.0;
        for (NodeId id : inputs) sum += std::exp(values_[id] - m);
        value = m + std::log(sum);
    }
    return push({Op::LogSumExp, off, static_cast<uint32_t>(inputs.size())}, value);
}

NodeId Tape::log1mexp(NodeId a) {
    if (values_[check(a)] > 0.0)
        throw std::invalid_argument("tape: log1mexp input must be <= 0");
    return push({Op::Log1mExp, a}, logspace::log1mexp(values_[a]));
}

void Tape::backward(NodeId loss) {
    check(loss);
    adjoints_.assign(ops_.size(), 0.0);
    adjoints_[loss] = 1.0;
    for (NodeId i = loss + 1; i-- > 0;) {
        const double adj = adjoints_[i];
        if (adj == 0.0) continue;
        const Rec& r = ops_[i];
        switch (r.op) {
            case Op::Constant:
            case Op::Leaf:
                break;
            case Op::Add:
                for (uint32_t j = 0; j < r.a1; ++j)
                    adjoints_[args_[r.a0 + j]] += adj;
                break;
            case Op::Scale:
                adjoints_[r.a0] += adj * r.aux;
                break;
            case Op::Negate:
                adjoints_[r.a0] -= adj;
                break;
            case Op::LogSigmoid:
                // d/dx log sigma(x) = sigma(-x)
                adjoints_[r.a0] += adj * std::exp(logspace::log_sigmoid(-values_[r.a0]));
                break;
            case Op::Log1mSigmoid:
                adjoints_[r.a0] -= adj * std::exp(logspace::log_sigmoid(values_[r.a0]));
                break;
            case Op::LogSumExp: {
                const double lse = values_[i];
                if (std::isinf(lse) && lse < 0.0) break;  // all-zero inputs, flat
                for (uint32_t j = 0; j < r.a1; ++j) {
                    NodeId in = args_[r.a0 + j];
                    adjoints_[in] += adj * std::exp(values_[in] - lse);
                }
                break;
            }
            case Op::Log1mExp:
                // d/da log(1 - e^a) = -e^a / (1 - e^a)
                adjoints_[r.a0] -= adj * std::exp(values_[r.a0] - values_[i]);
                break;
        }
    }
}

std::map<NodeId, double> Tape::parameter_gradients() const {
    std::map<NodeId, double> grads;
    for (NodeId id : leaves_)
        grads[id] = adjoints_.empty() ? 0.0 : adjoints_[id];
    return grads;
}

void Tape::accumulate_leaf_grads(ParameterStore& store) const {
    if (adjoints_.size() != ops_.size())
        throw std::logic_error("tape: backward() must run before gradient accumulation");
    for (NodeId id : leaves_) {
        const SlotId slot = static_cast<SlotId>(ops_[id].a0);
        if (slot < 0) continue;
        store.accumulate_grad(slot, adjoints_[id]);
    }
}

void Tape::reset() {
    ops_.clear();
    values_.clear();
    adjoints_.clear();
    args_.clear();
    leaves_.clear();
}

}  // namespace clickgrad
