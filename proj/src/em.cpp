#include "clickgrad/em.hpp"

#include <algorithm>
#include <cmath>

#include "clickgrad/errors.hpp"
#include "clickgrad/logspace.hpp"
#include "clickgrad/parallel.hpp"
#include "clickgrad/tape.hpp"

namespace clickgrad::em {

namespace {
constexpr double kClampLo = 1e-9;
constexpr double kClampHi = 1.0 - 1e-9;

double clamp01(double p) { return std::min(kClampHi, std::max(kClampLo, p)); }
}  // namespace

Observations flatten(const Dataset& data) {
    Observations obs;
    for (const auto& rec : data.sessions) {
        for (int k = 0; k < rec.length(); ++k) {
            const int64_t id = rec.doc_ids[static_cast<size_t>(k)];
            auto [it, inserted] =
                obs.doc_index.try_emplace(id, static_cast<int32_t>(obs.doc_ids.size()));
            if (inserted) obs.doc_ids.push_back(id);
            obs.rank.push_back(k + 1);
            obs.doc.push_back(it->second);
            obs.click.push_back(rec.clicks[static_cast<size_t>(k)]);
            obs.positions = std::max(obs.positions, k + 1);
        }
    }
    obs.num_docs = static_cast<int>(obs.doc_ids.size());
    obs.by_rank.resize(static_cast<size_t>(obs.positions));
    obs.by_doc.resize(static_cast<size_t>(obs.num_docs));
    for (uint32_t i = 0; i < obs.size(); ++i) {
        obs.by_rank[static_cast<size_t>(obs.rank[i] - 1)].push_back(i);
        obs.by_doc[static_cast<size_t>(obs.doc[i])].push_back(i);
    }
    return obs;
}

namespace {

template <bool Parallel>
Posteriors e_step_impl(const PbmParams& params, const Observations& obs) {
    Posteriors post;
    post.e_hat.resize(obs.size());
    post.a_hat.resize(obs.size());
    auto body = [&](int64_t i) {
        const double theta = params.theta[static_cast<size_t>(obs.rank[static_cast<size_t>(i)] - 1)];
        const double gamma = params.gamma[static_cast<size_t>(obs.doc[static_cast<size_t>(i)])];
        if (obs.click[static_cast<size_t>(i)]) {
            post.e_hat[static_cast<size_t>(i)] = 1.0;
            post.a_hat[static_cast<size_t>(i)] = 1.0;
            return;
        }
        const double denom = 1.0 - theta * gamma;
        if (denom <= 0.0)
            throw NumericError("e_step: degenerate posterior, theta*gamma = 1 with no click");
        post.e_hat[static_cast<size_t>(i)] = (1.0 - gamma) * theta / denom;
        post.a_hat[static_cast<size_t>(i)] = (1.0 - theta) * gamma / denom;
    };
    if constexpr (Parallel)
        parallel::for_each_index(static_cast<int64_t>(obs.size()), body);
    else
        parallel::for_each_index_serial(static_cast<int64_t>(obs.size()), body);
    return post;
}

}  // namespace

Posteriors e_step(const PbmParams& params, const Observations& obs) {
    return e_step_impl<true>(params, obs);
}

Posteriors e_step_serial(const PbmParams& params, const Observations& obs) {
    return e_step_impl<false>(params, obs);
}

void m_step(const Posteriors& post, const Observations& obs, PbmParams& params) {
    parallel::for_each_index(static_cast<int64_t>(obs.by_rank.size()), [&](int64_t k) {
        const auto& group = obs.by_rank[static_cast<size_t>(k)];
        if (group.empty()) return;  // keep previous value
        double sum = 0.0;
        for (uint32_t i : group) sum += post.e_hat[i];
        params.theta[static_cast<size_t>(k)] = clamp01(sum / static_cast<double>(group.size()));
    });
    parallel::for_each_index(static_cast<int64_t>(obs.by_doc.size()), [&](int64_t d) {
        const auto& group = obs.by_doc[static_cast<size_t>(d)];
        if (group.empty()) return;
        double sum = 0.0;
        for (uint32_t i : group) sum += post.a_hat[i];
        params.gamma[static_cast<size_t>(d)] = clamp01(sum / static_cast<double>(group.size()));
    });
}

namespace {

template <bool Parallel>
double marginal_ll_impl(const PbmParams& params, const Observations& obs) {
    auto term = [&](size_t i) {
        const double p = params.theta[static_cast<size_t>(obs.rank[i] - 1)] *
                         params.gamma[static_cast<size_t>(obs.doc[i])];
        return obs.click[i] ? std::log(p) : std::log1p(-p);
    };
    if constexpr (Parallel) return parallel::chunked_sum(obs.size(), term);
    return parallel::chunked_sum_serial(obs.size(), term);
}

}  // namespace

double marginal_ll(const PbmParams& params, const Observations& obs) {
    return marginal_ll_impl<true>(params, obs);
}

double marginal_ll_serial(const PbmParams& params, const Observations& obs) {
    return marginal_ll_impl<false>(params, obs);
}

EmResult run_em(const Observations& obs, double init_prob, int max_iters, double tol) {
    if (!(init_prob > 0.0 && init_prob < 1.0))
        throw ConfigError("run_em: init probability must lie in (0, 1)");
    EmResult res;
    res.params.theta.assign(static_cast<size_t>(obs.positions), clamp01(init_prob));
    res.params.gamma.assign(static_cast<size_t>(obs.num_docs), clamp01(init_prob));
    const double n = static_cast<double>(obs.size());
    double prev = marginal_ll(res.params, obs) / n;
    for (int it = 0; it < max_iters; ++it) {
        Posteriors post = e_step(res.params, obs);
        m_step(post, obs, res.params);
        const double ll = marginal_ll(res.params, obs) / n;
        res.ll_trace.push_back(ll);
        res.iterations = it + 1;
        if (std::fabs(ll - prev) < tol) break;
        prev = ll;
    }
    return res;
}

PbmParams q_gradient(const PbmParams& params, const Observations& obs, const Posteriors& post) {
    PbmParams grad;
    grad.theta.assign(params.theta.size(), 0.0);
    grad.gamma.assign(params.gamma.size(), 0.0);
    // dQ/dtheta_k = sum over rank-k observations of e/theta - (1-e)/(1-theta)
    for (size_t k = 0; k < obs.by_rank.size(); ++k) {
        const double theta = params.theta[k];
        double g = 0.0;
        for (uint32_t i : obs.by_rank[k])
            g += post.e_hat[i] / theta - (1.0 - post.e_hat[i]) / (1.0 - theta);
        grad.theta[k] = g;
    }
    for (size_t d = 0; d < obs.by_doc.size(); ++d) {
        const double gamma = params.gamma[d];
        double g = 0.0;
        for (uint32_t i : obs.by_doc[d])
            g += post.a_hat[i] / gamma - (1.0 - post.a_hat[i]) / (1.0 - gamma);
        grad.gamma[d] = g;
    }
    return grad;
}

PbmParams marginal_ll_gradient_autodiff(const PbmParams& params, const Observations& obs) {
    Tape tape;
    std::vector<NodeId> theta_leaf, gamma_leaf, theta_log, gamma_log;
    for (double t : params.theta) {
        theta_leaf.push_back(tape.leaf(logspace::logit(t)));
        theta_log.push_back(tape.log_sigmoid(theta_leaf.back()));
    }
    for (double g : params.gamma) {
        gamma_leaf.push_back(tape.leaf(logspace::logit(g)));
        gamma_log.push_back(tape.log_sigmoid(gamma_leaf.back()));
    }
    std::vector<NodeId> terms;
    terms.reserve(obs.size());
    for (size_t i = 0; i < obs.size(); ++i) {
        const NodeId logp = tape.add(theta_log[static_cast<size_t>(obs.rank[i] - 1)],
                                     gamma_log[static_cast<size_t>(obs.doc[i])]);
        terms.push_back(obs.click[i] ? logp : tape.log1mexp(logp));
    }
    const NodeId ll = tape.add(terms);
    tape.backward(ll);
    // d LL / d p = (d LL / d logit) / (p (1 - p))
    PbmParams grad;
    for (size_t k = 0; k < params.theta.size(); ++k) {
        const double p = params.theta[k];
        grad.theta.push_back(tape.adjoint(theta_leaf[k]) / (p * (1.0 - p)));
    }
    for (size_t d = 0; d < params.gamma.size(); ++d) {
        const double p = params.gamma[d];
        grad.gamma.push_back(tape.adjoint(gamma_leaf[d]) / (p * (1.0 - p)));
    }
    return grad;
}

}  // namespace clickgrad::em
