#include "clickgrad/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "clickgrad/errors.hpp"
#include "clickgrad/logspace.hpp"
#include "clickgrad/parallel.hpp"
#include "clickgrad/rng.hpp"

namespace clickgrad {

namespace {
constexpr double kPosInf = std::numeric_limits<double>::infinity();
}

ModelKind parse_model_kind(const std::string& name) {
    if (name == "gctr") return ModelKind::GCTR;
    if (name == "rctr") return ModelKind::RCTR;
    if (name == "dctr") return ModelKind::DCTR;
    if (name == "pbm") return ModelKind::PBM;
    if (name == "cm") return ModelKind::CM;
    if (name == "ubm") return ModelKind::UBM;
    if (name == "dcm") return ModelKind::DCM;
    if (name == "ccm") return ModelKind::CCM;
    if (name == "dbn") return ModelKind::DBN;
    if (name == "sdbn") return ModelKind::SDBN;
    throw ConfigError("unknown model kind '" + name + "'");
}

std::string model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::GCTR: return "gctr";
        case ModelKind::RCTR: return "rctr";
        case ModelKind::DCTR: return "dctr";
        case ModelKind::PBM: return "pbm";
        case ModelKind::CM: return "cm";
        case ModelKind::UBM: return "ubm";
        case ModelKind::DCM: return "dcm";
        case ModelKind::CCM: return "ccm";
        case ModelKind::DBN: return "dbn";
        case ModelKind::SDBN: return "sdbn";
    }
    return "?";
}

ModelKind model_kind_at(int i) {
    static const ModelKind kinds[kNumModelKinds] = {
        ModelKind::GCTR, ModelKind::RCTR, ModelKind::DCTR, ModelKind::PBM, ModelKind::CM,
        ModelKind::UBM,  ModelKind::DCM,  ModelKind::CCM,  ModelKind::DBN, ModelKind::SDBN};
    return kinds[i];
}

namespace {

bool needs_attraction(ModelKind k) {
    return k != ModelKind::GCTR && k != ModelKind::RCTR;
}

}  // namespace

ClickModel::ClickModel(std::shared_ptr<ParameterStore> store, const ClickModelConfig& cfg,
                       const std::string& prefix,
                       std::shared_ptr<LogitSource> shared_attraction)
    : store_(std::move(store)), cfg_(cfg) {
    if (!store_) throw ConfigError("click model requires a parameter store");
    if (cfg.positions < 1) throw ConfigError("missing binding: positions must be >= 1");
    if (!(cfg.init_probability > 0.0 && cfg.init_probability < 1.0))
        throw ConfigError("init_probability must lie in (0, 1)");
    if (cfg.min_log_prob >= 0.0) throw ConfigError("min_log_prob must be negative");
    const double init_logit = logspace::logit(cfg.init_probability);

    auto make_embedding = [&](const std::string& name) -> std::shared_ptr<LogitSource> {
        if (cfg.linear_features) {
            if (cfg.feature_dim < 1)
                throw ConfigError("missing binding: feature_dim required for linear features");
            return std::make_shared<LinearSource>(*store_, name, cfg.feature_dim, init_logit);
        }
        if (cfg.num_docs < 1)
            throw ConfigError("missing binding: num_docs required for " + name);
        EmbeddingConfig ecfg;
        ecfg.size = cfg.num_docs;
        ecfg.compression = cfg.compression;
        ecfg.compression_ratio = cfg.compression_ratio;
        ecfg.remainder_size = cfg.remainder_size;
        ecfg.hash_seed = cfg.hash_seed;
        ecfg.baseline = cfg.baseline;
        ecfg.init_logit = init_logit;
        return std::make_shared<EmbeddingSource>(*store_, name, ecfg);
    };

    if (needs_attraction(cfg.kind)) {
        attraction_ = shared_attraction ? std::move(shared_attraction)
                                        : make_embedding(prefix + "attraction");
    }

    switch (cfg.kind) {
        case ModelKind::GCTR:
            rho_ = store_->add_table(prefix + "global_ctr", 1, init_logit);
            break;
        case ModelKind::RCTR:
        case ModelKind::PBM:
            examination_ =
                PositionTable(*store_, prefix + "examination", cfg.positions, init_logit);
            break;
        case ModelKind::UBM:
            ubm_examination_ =
                UbmPositionTable(*store_, prefix + "examination", cfg.positions, init_logit);
            break;
        case ModelKind::DCM:
            continuation_by_rank_ =
                PositionTable(*store_, prefix + "continuation", cfg.positions, init_logit);
            break;
        case ModelKind::CCM:
            tau_ = store_->add_table(prefix + "tau", 3, init_logit);
            break;
        case ModelKind::DBN:
        case ModelKind::SDBN: {
            // SDBN is the DBN with continuation frozen at probability 1;
            // logit +inf maps to log lambda = 0 exactly through log_sigmoid.
            const bool frozen = cfg.kind == ModelKind::SDBN;
            lambda_ = store_->add_table(prefix + "continuation", 1,
                                        frozen ? kPosInf : init_logit, frozen);
            satisfaction_ = make_embedding(prefix + "satisfaction");
            break;
        }
        case ModelKind::CM:
        case ModelKind::DCTR:
            break;
    }
}

// ---------------------------------------------------------------------------
// Forward recursions, written once and instantiated twice: over tape nodes
// (differentiable, for losses) and over plain doubles (prediction kernels).
// ---------------------------------------------------------------------------

namespace {

struct TapeEval {
    Tape& tape;
    using V = NodeId;
    V constant(double c) { return tape.constant(c); }
    V add(V a, V b) { return tape.add(a, b); }
    V add_n(std::span<const V> xs) { return xs.size() == 1 ? xs[0] : tape.add(xs); }
    V negate(V a) { return tape.negate(a); }
    V log_sigmoid(V a) { return tape.log_sigmoid(a); }
    V log1m_sigmoid(V a) { return tape.log1m_sigmoid(a); }
    V lse(std::span<const V> xs) { return xs.size() == 1 ? xs[0] : tape.log_sum_exp(xs); }
    V log1mexp(V a) { return tape.log1mexp(a); }
    V logit(const LogitSource& src, const SessionBatch& b, int s, int k) {
        return src.tape_logit(tape, b, s, k);
    }
    V position_logit(const PositionTable& t, int rank) { return t.tape_logit(tape, rank); }
    V ubm_logit(const UbmPositionTable& t, int rank, int lc) {
        return t.tape_logit(tape, rank, lc);
    }
    V scalar_logit(const ParameterStore& store, SlotId slot) {
        return tape.leaf(store.value(slot), slot);
    }
};

struct ValueEval {
    using V = double;
    V constant(double c) { return c; }
    V add(V a, V b) { return a + b; }
    V add_n(std::span<const V> xs) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    V negate(V a) { return -a; }
    V log_sigmoid(V a) { return logspace::log_sigmoid(a); }
    V log1m_sigmoid(V a) { return logspace::log1m_sigmoid(a); }
    V lse(std::span<const V> xs) { return logspace::log_sum_exp(xs); }
    V log1mexp(V a) { return logspace::log1mexp(a); }
    V logit(const LogitSource& src, const SessionBatch& b, int s, int k) {
        return src.value_logit(b, s, k);
    }
    V position_logit(const PositionTable& t, int rank) { return t.value_logit(rank); }
    V ubm_logit(const UbmPositionTable& t, int rank, int lc) { return t.value_logit(rank, lc); }
    V scalar_logit(const ParameterStore& store, SlotId slot) { return store.value(slot); }
};

}  // namespace

struct detail::Forward {
    // P(C=1 | d, k) per slot of one session, log scale.
    template <class E>
    static std::vector<typename E::V> unconditional(const ClickModel& m, E& ev,
                                                    const SessionBatch& b, int s) {
        using V = typename E::V;
        const int len = b.session_len(s);
        std::vector<V> out;
        out.reserve(static_cast<size_t>(len));

        // adds log examination (absent = log 1) to log gamma
        auto with_eps = [&](V gamma, const std::optional<V>& eps) {
            return eps ? ev.add(gamma, *eps) : gamma;
        };

        switch (m.cfg_.kind) {
            case ModelKind::GCTR:
                for (int k = 0; k < len; ++k)
                    out.push_back(ev.log_sigmoid(ev.scalar_logit(*m.store_, m.rho_)));
                break;

            case ModelKind::RCTR:
                for (int k = 0; k < len; ++k)
                    out.push_back(ev.log_sigmoid(ev.position_logit(m.examination_, k + 1)));
                break;

            case ModelKind::DCTR:
                for (int k = 0; k < len; ++k)
                    out.push_back(ev.log_sigmoid(ev.logit(*m.attraction_, b, s, k)));
                break;

            case ModelKind::PBM:
                for (int k = 0; k < len; ++k) {
                    V theta = ev.log_sigmoid(ev.position_logit(m.examination_, k + 1));
                    V gamma = ev.log_sigmoid(ev.logit(*m.attraction_, b, s, k));
                    out.push_back(ev.add(theta, gamma));
                }
                break;

            case ModelKind::CM: {
                std::optional<V> prefix;  // sum of log(1 - gamma_i) over i < k
                for (int k = 0; k < len; ++k) {
                    V logit = ev.logit(*m.attraction_, b, s, k);
                    V gamma = ev.log_sigmoid(logit);
                    out.push_back(with_eps(gamma, prefix));
                    V miss = ev.log1m_sigmoid(logit);
                    prefix = prefix ? ev.add(*prefix, miss) : miss;
                }
                break;
            }

            case ModelKind::UBM: {
                // Marginalize over the last clicked position i (0 = none).
                // cum[i] accumulates log(1 - theta_{j,i} gamma_j) for the
                // no-click stretch j = i+1 .. k-1.
                std::vector<std::optional<V>> cum(static_cast<size_t>(len) + 1);
                std::vector<V> gamma(static_cast<size_t>(len));
                for (int k = 0; k < len; ++k)
                    gamma[static_cast<size_t>(k)] =
                        ev.log_sigmoid(ev.logit(*m.attraction_, b, s, k));
                for (int k = 0; k < len; ++k) {
                    const int rank = k + 1;
                    std::vector<V> paths, clicks_here;
                    for (int i = 0; i <= k; ++i) {
                        V theta = ev.log_sigmoid(ev.ubm_logit(m.ubm_examination_, rank, i));
                        V here = ev.add(theta, gamma[static_cast<size_t>(k)]);
                        clicks_here.push_back(here);
                        std::vector<V> terms;
                        if (i > 0) terms.push_back(out[static_cast<size_t>(i - 1)]);
                        if (cum[static_cast<size_t>(i)])
                            terms.push_back(*cum[static_cast<size_t>(i)]);
                        terms.push_back(here);
                        paths.push_back(ev.add_n(terms));
                    }
                    out.push_back(ev.lse(paths));
                    for (int i = 0; i <= k; ++i) {
                        V miss = ev.log1mexp(clicks_here[static_cast<size_t>(i)]);
                        auto& c = cum[static_cast<size_t>(i)];
                        c = c ? ev.add(*c, miss) : miss;
                    }
                }
                break;
            }

            case ModelKind::DCM: {
                std::optional<V> eps;
                for (int k = 0; k < len; ++k) {
                    V logit = ev.logit(*m.attraction_, b, s, k);
                    V gamma = ev.log_sigmoid(logit);
                    out.push_back(with_eps(gamma, eps));
                    // eps_{k+1} = eps_k * (gamma lambda_k + (1 - gamma))
                    V lam = ev.log_sigmoid(ev.position_logit(m.continuation_by_rank_, k + 1));
                    const V opts[2] = {ev.add(gamma, lam), ev.log1m_sigmoid(logit)};
                    V factor = ev.lse(opts);
                    eps = eps ? ev.add(*eps, factor) : factor;
                }
                break;
            }

            case ModelKind::CCM: {
                std::optional<V> eps;
                for (int k = 0; k < len; ++k) {
                    V logit = ev.logit(*m.attraction_, b, s, k);
                    V gamma = ev.log_sigmoid(logit);
                    V miss = ev.log1m_sigmoid(logit);
                    out.push_back(with_eps(gamma, eps));
                    // gamma (1 - gamma) tau2 + gamma^2 tau3 + (1 - gamma) tau1
                    V t1 = ev.log_sigmoid(ev.scalar_logit(*m.store_, m.tau_ + 0));
                    V t2 = ev.log_sigmoid(ev.scalar_logit(*m.store_, m.tau_ + 1));
                    V t3 = ev.log_sigmoid(ev.scalar_logit(*m.store_, m.tau_ + 2));
                    const V opts[3] = {ev.add(ev.add(gamma, miss), t2),
                                       ev.add(ev.add(gamma, gamma), t3), ev.add(miss, t1)};
                    V factor = ev.lse(opts);
                    eps = eps ? ev.add(*eps, factor) : factor;
                }
                break;
            }

            case ModelKind::DBN:
            case ModelKind::SDBN: {
                std::optional<V> eps;
                for (int k = 0; k < len; ++k) {
                    V gamma = ev.log_sigmoid(ev.logit(*m.attraction_, b, s, k));
                    V sigma = ev.log_sigmoid(ev.logit(*m.satisfaction_, b, s, k));
                    out.push_back(with_eps(gamma, eps));
                    // eps_{k+1} = eps_k * lambda * (1 - gamma sigma)
                    V lam = ev.log_sigmoid(ev.scalar_logit(*m.store_, m.lambda_));
                    V factor = ev.add(lam, ev.log1mexp(ev.add(gamma, sigma)));
                    eps = eps ? ev.add(*eps, factor) : factor;
                }
                break;
            }
        }
        return out;
    }

    // P(C=1 | d, k, c_<k) per slot, conditioning on the batch's clicks.
    template <class E>
    static std::vector<typename E::V> conditional(const ClickModel& m, E& ev,
                                                  const SessionBatch& b, int s) {
        using V = typename E::V;
        const int len = b.session_len(s);
        const ModelKind kind = m.cfg_.kind;
        if (kind == ModelKind::GCTR || kind == ModelKind::RCTR || kind == ModelKind::DCTR ||
            kind == ModelKind::PBM)
            return unconditional(m, ev, b, s);

        std::vector<V> out;
        out.reserve(static_cast<size_t>(len));
        auto clicked = [&](int k) { return b.clicks[static_cast<size_t>(b.at(s, k))] != 0.0; };
        auto with_eps = [&](V gamma, const std::optional<V>& eps) {
            return eps ? ev.add(gamma, *eps) : gamma;
        };

        switch (kind) {
            case ModelKind::CM: {
                bool clicked_before = false;
                for (int k = 0; k < len; ++k) {
                    if (clicked_before) {
                        out.push_back(ev.constant(m.cfg_.min_log_prob));
                    } else {
                        out.push_back(ev.log_sigmoid(ev.logit(*m.attraction_, b, s, k)));
                    }
                    clicked_before = clicked_before || clicked(k);
                }
                break;
            }

            case ModelKind::UBM: {
                int last_click = 0;
                for (int k = 0; k < len; ++k) {
                    V theta =
                        ev.log_sigmoid(ev.ubm_logit(m.ubm_examination_, k + 1, last_click));
                    V gamma = ev.log_sigmoid(ev.logit(*m.attraction_, b, s, k));
                    out.push_back(ev.add(theta, gamma));
                    if (clicked(k)) last_click = k + 1;
                }
                break;
            }

            case ModelKind::DCM: {
                std::optional<V> eps;
                for (int k = 0; k < len; ++k) {
                    V logit = ev.logit(*m.attraction_, b, s, k);
                    V gamma = ev.log_sigmoid(logit);
                    out.push_back(with_eps(gamma, eps));
                    if (clicked(k)) {
                        eps = ev.log_sigmoid(ev.position_logit(m.continuation_by_rank_, k + 1));
                    } else {
                        // Bayes posterior: (1 - gamma) eps / (1 - gamma eps)
                        V joint = with_eps(gamma, eps);
                        std::vector<V> terms{ev.log1m_sigmoid(logit)};
                        if (eps) terms.push_back(*eps);
                        terms.push_back(ev.negate(ev.log1mexp(joint)));
                        eps = ev.add_n(terms);
                    }
                }
                break;
            }

            case ModelKind::CCM: {
                std::optional<V> eps;
                for (int k = 0; k < len; ++k) {
                    V logit = ev.logit(*m.attraction_, b, s, k);
                    V gamma = ev.log_sigmoid(logit);
                    V miss = ev.log1m_sigmoid(logit);
                    out.push_back(with_eps(gamma, eps));
                    V t1 = ev.log_sigmoid(ev.scalar_logit(*m.store_, m.tau_ + 0));
                    V t2 = ev.log_sigmoid(ev.scalar_logit(*m.store_, m.tau_ + 1));
                    V t3 = ev.log_sigmoid(ev.scalar_logit(*m.store_, m.tau_ + 2));
                    if (clicked(k)) {
                        // gamma tau3 + (1 - gamma) tau2
                        const V opts[2] = {ev.add(gamma, t3), ev.add(miss, t2)};
                        eps = ev.lse(opts);
                    } else {
                        // (1 - gamma) eps tau1 / (1 - gamma eps)
                        V joint = with_eps(gamma, eps);
                        std::vector<V> terms{miss};
                        if (eps) terms.push_back(*eps);
                        terms.push_back(t1);
                        terms.push_back(ev.negate(ev.log1mexp(joint)));
                        eps = ev.add_n(terms);
                    }
                }
                break;
            }

            case ModelKind::DBN:
            case ModelKind::SDBN: {
                std::optional<V> eps;
                for (int k = 0; k < len; ++k) {
                    V glogit = ev.logit(*m.attraction_, b, s, k);
                    V gamma = ev.log_sigmoid(glogit);
                    out.push_back(with_eps(gamma, eps));
                    V lam = ev.log_sigmoid(ev.scalar_logit(*m.store_, m.lambda_));
                    if (clicked(k)) {
                        V slogit = ev.logit(*m.satisfaction_, b, s, k);
                        eps = ev.add(lam, ev.log1m_sigmoid(slogit));
                    } else {
                        V joint = with_eps(gamma, eps);
                        std::vector<V> terms{lam, ev.log1m_sigmoid(glogit)};
                        if (eps) terms.push_back(*eps);
                        terms.push_back(ev.negate(ev.log1mexp(joint)));
                        eps = ev.add_n(terms);
                    }
                }
                break;
            }

            default:
                break;  // handled above
        }
        return out;
    }

    // c log p + (1 - c) log(1 - p) per unmasked slot, conditional p.
    static std::vector<NodeId> conditional_ll_terms(const ClickModel& m, Tape& tape,
                                                    const SessionBatch& b, int s) {
        TapeEval ev{tape};
        std::vector<NodeId> logp = conditional(m, ev, b, s);
        std::vector<NodeId> terms;
        terms.reserve(logp.size());
        for (size_t k = 0; k < logp.size(); ++k) {
            const bool c = b.clicks[static_cast<size_t>(b.at(s, static_cast<int>(k)))] != 0.0;
            terms.push_back(c ? logp[k] : tape.log1mexp(logp[k]));
        }
        return terms;
    }
};

NodeId ClickModel::compute_loss(Tape& tape, const SessionBatch& b) const {
    std::vector<NodeId> terms;
    for (int s = 0; s < b.size; ++s) {
        std::vector<NodeId> t = detail::Forward::conditional_ll_terms(*this, tape, b, s);
        terms.insert(terms.end(), t.begin(), t.end());
    }
    if (terms.empty()) throw ConfigError("compute_loss: batch has zero unmasked slots");
    return tape.scale(tape.add(terms), -1.0 / static_cast<double>(terms.size()));
}

NodeId ClickModel::session_conditional_nll(Tape& tape, const SessionBatch& b, int s) const {
    std::vector<NodeId> terms = detail::Forward::conditional_ll_terms(*this, tape, b, s);
    if (terms.empty()) throw ConfigError("session_conditional_nll: empty session");
    return tape.negate(tape.add(terms));
}

namespace {

template <typename F>
void run_prediction(const SessionBatch& b, std::span<double> out, bool parallel, F&& session_fn) {
    if (out.size() != static_cast<size_t>(b.size) * static_cast<size_t>(b.max_len))
        throw ConfigError("prediction output span has wrong size");
    std::fill(out.begin(), out.end(), 0.0);
    auto body = [&](int64_t s) {
        ValueEval ev;
        std::vector<double> logp = session_fn(ev, static_cast<int>(s));
        for (size_t k = 0; k < logp.size(); ++k)
            out[static_cast<size_t>(b.at(static_cast<int>(s), static_cast<int>(k)))] = logp[k];
    };
    if (parallel)
        parallel::for_each_index(b.size, body);
    else
        parallel::for_each_index_serial(b.size, body);
}

}  // namespace

void ClickModel::predict_clicks(const SessionBatch& b, std::span<double> out) const {
    run_prediction(b, out, true, [&](ValueEval& ev, int s) {
        return detail::Forward::unconditional(*this, ev, b, s);
    });
}

void ClickModel::predict_clicks_serial(const SessionBatch& b, std::span<double> out) const {
    run_prediction(b, out, false, [&](ValueEval& ev, int s) {
        return detail::Forward::unconditional(*this, ev, b, s);
    });
}

void ClickModel::predict_conditional_clicks(const SessionBatch& b,
                                            std::span<double> out) const {
    run_prediction(b, out, true, [&](ValueEval& ev, int s) {
        return detail::Forward::conditional(*this, ev, b, s);
    });
}

void ClickModel::predict_conditional_clicks_serial(const SessionBatch& b,
                                                   std::span<double> out) const {
    run_prediction(b, out, false, [&](ValueEval& ev, int s) {
        return detail::Forward::conditional(*this, ev, b, s);
    });
}

void ClickModel::predict_relevance(const SessionBatch& b, std::span<double> out) const {
    if (out.size() != static_cast<size_t>(b.size) * static_cast<size_t>(b.max_len))
        throw ConfigError("prediction output span has wrong size");
    std::fill(out.begin(), out.end(), 0.0);
    if (!needs_attraction(cfg_.kind)) return;  // documents indistinguishable
    parallel::for_each_index(b.size, [&](int64_t s) {
        const int len = b.session_len(static_cast<int>(s));
        for (int k = 0; k < len; ++k) {
            double score =
                logspace::log_sigmoid(attraction_->value_logit(b, static_cast<int>(s), k));
            if (satisfaction_)
                score += logspace::log_sigmoid(
                    satisfaction_->value_logit(b, static_cast<int>(s), k));
            out[static_cast<size_t>(b.at(static_cast<int>(s), k))] = score;
        }
    });
}

void ClickModel::sample_session(const SessionBatch& b, int s, SampleResult& res,
                                uint64_t seed) const {
    Rng rng = Rng::substream(seed, static_cast<uint64_t>(b.session_index[static_cast<size_t>(s)]));
    const int len = b.session_len(s);
    auto prob = [&](double logit) { return logspace::sigmoid(logit); };
    auto set = [&](std::vector<uint8_t>& v, int k, bool x) {
        v[static_cast<size_t>(b.at(s, k))] = x ? 1 : 0;
    };

    switch (cfg_.kind) {
        case ModelKind::GCTR:
        case ModelKind::RCTR:
        case ModelKind::DCTR: {
            for (int k = 0; k < len; ++k) {
                double p;
                if (cfg_.kind == ModelKind::GCTR)
                    p = prob(store_->value(rho_));
                else if (cfg_.kind == ModelKind::RCTR)
                    p = prob(examination_.value_logit(k + 1));
                else
                    p = prob(attraction_->value_logit(b, s, k));
                const bool c = rng.bernoulli(p);
                res.clicks[static_cast<size_t>(b.at(s, k))] = c ? 1.0 : 0.0;
                set(res.examination, k, true);
                set(res.attraction, k, c);
            }
            break;
        }

        case ModelKind::PBM: {
            for (int k = 0; k < len; ++k) {
                const bool e = rng.bernoulli(prob(examination_.value_logit(k + 1)));
                const bool a = rng.bernoulli(prob(attraction_->value_logit(b, s, k)));
                set(res.examination, k, e);
                set(res.attraction, k, a);
                res.clicks[static_cast<size_t>(b.at(s, k))] = (e && a) ? 1.0 : 0.0;
            }
            break;
        }

        case ModelKind::UBM: {
            int last_click = 0;
            for (int k = 0; k < len; ++k) {
                const bool e =
                    rng.bernoulli(prob(ubm_examination_.value_logit(k + 1, last_click)));
                const bool a = rng.bernoulli(prob(attraction_->value_logit(b, s, k)));
                set(res.examination, k, e);
                set(res.attraction, k, a);
                const bool c = e && a;
                res.clicks[static_cast<size_t>(b.at(s, k))] = c ? 1.0 : 0.0;
                if (c) last_click = k + 1;
            }
            break;
        }

        case ModelKind::CM: {
            bool browsing = true;
            for (int k = 0; k < len && browsing; ++k) {
                set(res.examination, k, true);
                const bool a = rng.bernoulli(prob(attraction_->value_logit(b, s, k)));
                set(res.attraction, k, a);
                res.clicks[static_cast<size_t>(b.at(s, k))] = a ? 1.0 : 0.0;
                if (a) browsing = false;  // first click ends the session
            }
            break;
        }

        case ModelKind::DCM: {
            bool browsing = true;
            for (int k = 0; k < len && browsing; ++k) {
                set(res.examination, k, true);
                const bool a = rng.bernoulli(prob(attraction_->value_logit(b, s, k)));
                set(res.attraction, k, a);
                res.clicks[static_cast<size_t>(b.at(s, k))] = a ? 1.0 : 0.0;
                if (a) browsing = rng.bernoulli(prob(continuation_by_rank_.value_logit(k + 1)));
            }
            break;
        }

        case ModelKind::CCM: {
            bool browsing = true;
            const double t1 = prob(store_->value(tau_ + 0));
            const double t2 = prob(store_->value(tau_ + 1));
            const double t3 = prob(store_->value(tau_ + 2));
            for (int k = 0; k < len && browsing; ++k) {
                set(res.examination, k, true);
                const double gamma = prob(attraction_->value_logit(b, s, k));
                const bool a = rng.bernoulli(gamma);
                set(res.attraction, k, a);
                res.clicks[static_cast<size_t>(b.at(s, k))] = a ? 1.0 : 0.0;
                if (a) {
                    // satisfaction shares the attractiveness probability
                    const bool sat = rng.bernoulli(gamma);
                    set(res.satisfaction, k, sat);
                    browsing = rng.bernoulli(sat ? t3 : t2);
                } else {
                    browsing = rng.bernoulli(t1);
                }
            }
            break;
        }

        case ModelKind::DBN:
        case ModelKind::SDBN: {
            bool browsing = true;
            const double lam = prob(store_->value(lambda_));
            for (int k = 0; k < len && browsing; ++k) {
                set(res.examination, k, true);
                const bool a = rng.bernoulli(prob(attraction_->value_logit(b, s, k)));
                set(res.attraction, k, a);
                res.clicks[static_cast<size_t>(b.at(s, k))] = a ? 1.0 : 0.0;
                if (a) {
                    const bool sat = rng.bernoulli(prob(satisfaction_->value_logit(b, s, k)));
                    set(res.satisfaction, k, sat);
                    if (sat) {
                        browsing = false;
                    } else {
                        browsing = rng.bernoulli(lam);
                    }
                } else {
                    browsing = rng.bernoulli(lam);
                }
            }
            break;
        }
    }
}

SampleResult ClickModel::sample(const SessionBatch& b, uint64_t seed) const {
    SampleResult res;
    const size_t n = static_cast<size_t>(b.size) * static_cast<size_t>(b.max_len);
    res.clicks.assign(n, 0.0);
    res.examination.assign(n, 0);
    res.attraction.assign(n, 0);
    res.satisfaction.assign(n, 0);
    parallel::for_each_index(b.size,
                             [&](int64_t s) { sample_session(b, static_cast<int>(s), res, seed); });
    return res;
}

}  // namespace clickgrad
