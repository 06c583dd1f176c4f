#ifndef CLICKGRAD_EM_HPP
#define CLICKGRAD_EM_HPP

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "clickgrad/session.hpp"

namespace clickgrad {

// Classical batch EM for the position-based model, kept as an
// independent optimizer to cross-validate gradient training. Works in
// probability space with parameters clamped to [1e-9, 1 - 1e-9].

namespace em {

// Dataset flattened to (rank, dense doc index, click) observations with
// group indices precomputed for deterministic parallel reductions.
struct Observations {
    std::vector<int32_t> rank;    // 1..K
    std::vector<int32_t> doc;     // dense index
    std::vector<uint8_t> click;
    int positions = 0;
    int num_docs = 0;
    std::vector<int64_t> doc_ids;                  // dense index -> original id
    std::unordered_map<int64_t, int32_t> doc_index;  // original id -> dense
    std::vector<std::vector<uint32_t>> by_rank;    // obs grouped by rank
    std::vector<std::vector<uint32_t>> by_doc;     // obs grouped by doc

    size_t size() const { return rank.size(); }
};

Observations flatten(const Dataset& data);

struct PbmParams {
    std::vector<double> theta;  // per rank
    std::vector<double> gamma;  // per dense doc
};

struct Posteriors {
    std::vector<double> e_hat;  // expected examination per observation
    std::vector<double> a_hat;  // expected attractiveness per observation
};

/// Posterior expectations of the latent examination/attractiveness.
/// Clicked observations get exactly 1. Throws NumericError when
/// theta*gamma = 1 meets a non-click.
Posteriors e_step(const PbmParams& params, const Observations& obs);
Posteriors e_step_serial(const PbmParams& params, const Observations& obs);

/// Closed-form means; ranks or docs with no observations keep their
/// previous value.
void m_step(const Posteriors& post, const Observations& obs, PbmParams& params);

/// Marginal log-likelihood of the observations (total, natural log).
double marginal_ll(const PbmParams& params, const Observations& obs);
double marginal_ll_serial(const PbmParams& params, const Observations& obs);

struct EmResult {
    PbmParams params;
    std::vector<double> ll_trace;  // per-observation LL after each iteration
    int iterations = 0;
};

/// Alternates E and M until |delta LL per obs| < tol or max_iters.
EmResult run_em(const Observations& obs, double init_prob, int max_iters, double tol);

/// Gradient of the expected complete-data log-likelihood (Q function) at
/// the parameters the posteriors were computed with; probability space.
PbmParams q_gradient(const PbmParams& params, const Observations& obs, const Posteriors& post);

/// Gradient of the marginal log-likelihood via the autodiff tape, mapped
/// back to probability space through the logit chain rule.
PbmParams marginal_ll_gradient_autodiff(const PbmParams& params, const Observations& obs);

}  // namespace em

}  // namespace clickgrad

#endif
