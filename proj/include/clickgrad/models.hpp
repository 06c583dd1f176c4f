#ifndef CLICKGRAD_MODELS_HPP
#define CLICKGRAD_MODELS_HPP

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "clickgrad/parameters.hpp"
#include "clickgrad/session.hpp"
#include "clickgrad/tape.hpp"

namespace clickgrad {

enum class ModelKind { GCTR, RCTR, DCTR, PBM, CM, UBM, DCM, CCM, DBN, SDBN };

ModelKind parse_model_kind(const std::string& name);
std::string model_kind_name(ModelKind kind);
constexpr int kNumModelKinds = 10;
ModelKind model_kind_at(int i);

struct SampleResult {
    std::vector<double> clicks;        // batch-aligned, 0 on padding
    std::vector<uint8_t> examination;
    std::vector<uint8_t> attraction;
    std::vector<uint8_t> satisfaction;
};

// Unified five-method click model interface. Losses and the session NLL
// are recorded on a tape; prediction kernels work on plain doubles and
// are safe to call concurrently.
class Model {
  public:
    virtual ~Model() = default;

    virtual ParameterStore& store() = 0;
    virtual const ParameterStore& store() const = 0;

    /// Negative mean conditional log-likelihood over unmasked slots.
    virtual NodeId compute_loss(Tape& tape, const SessionBatch& b) const = 0;
    /// P(C=1 | d, k) per slot, log scale; padded slots get 0.
    virtual void predict_clicks(const SessionBatch& b, std::span<double> out) const = 0;
    /// P(C=1 | d, k, c_<k) per slot, log scale.
    virtual void predict_conditional_clicks(const SessionBatch& b,
                                            std::span<double> out) const = 0;
    /// Ranking scores (higher ranks first when sorted descending).
    virtual void predict_relevance(const SessionBatch& b, std::span<double> out) const = 0;
    /// Generative rollout; draws depend only on (seed, session_index).
    virtual SampleResult sample(const SessionBatch& b, uint64_t seed) const = 0;

    /// Sum of per-slot conditional NLL for one session, as a tape node.
    virtual NodeId session_conditional_nll(Tape& tape, const SessionBatch& b, int s) const = 0;

    // Serial reference kernels; bit-identical to the parallel versions.
    virtual void predict_clicks_serial(const SessionBatch& b, std::span<double> out) const = 0;
    virtual void predict_conditional_clicks_serial(const SessionBatch& b,
                                                   std::span<double> out) const = 0;

    std::vector<double> predict_clicks(const SessionBatch& b) const {
        std::vector<double> out(static_cast<size_t>(b.size) * b.max_len, 0.0);
        predict_clicks(b, out);
        return out;
    }
    std::vector<double> predict_conditional_clicks(const SessionBatch& b) const {
        std::vector<double> out(static_cast<size_t>(b.size) * b.max_len, 0.0);
        predict_conditional_clicks(b, out);
        return out;
    }
    std::vector<double> predict_relevance(const SessionBatch& b) const {
        std::vector<double> out(static_cast<size_t>(b.size) * b.max_len, 0.0);
        predict_relevance(b, out);
        return out;
    }
};

struct ClickModelConfig {
    ModelKind kind = ModelKind::PBM;
    int positions = 10;
    int64_t num_docs = 0;
    Compression compression = Compression::None;
    int64_t compression_ratio = 10;
    int64_t remainder_size = 16;
    uint64_t hash_seed = 0;
    bool baseline = false;
    bool linear_features = false;  // attraction (and DBN satisfaction) from features
    int feature_dim = 0;
    double init_probability = 0.1;
    double min_log_prob = -13.815510557964274;  // ln 1e-6
};

namespace detail {
struct Forward;
}

// One of the ten classic models, parameters bound to a shared store.
// All probability math runs in log space on the nine-op tape set.
class ClickModel : public Model {
  public:
    /// `prefix` namespaces the parameter tables (mixture members);
    /// `shared_attraction` reuses an existing attraction source.
    ClickModel(std::shared_ptr<ParameterStore> store, const ClickModelConfig& cfg,
               const std::string& prefix = "",
               std::shared_ptr<LogitSource> shared_attraction = nullptr);

    ParameterStore& store() override { return *store_; }
    const ParameterStore& store() const override { return *store_; }
    ModelKind kind() const { return cfg_.kind; }
    const ClickModelConfig& config() const { return cfg_; }
    std::shared_ptr<LogitSource> attraction() const { return attraction_; }

    NodeId compute_loss(Tape& tape, const SessionBatch& b) const override;
    void predict_clicks(const SessionBatch& b, std::span<double> out) const override;
    void predict_conditional_clicks(const SessionBatch& b, std::span<double> out) const override;
    void predict_relevance(const SessionBatch& b, std::span<double> out) const override;
    SampleResult sample(const SessionBatch& b, uint64_t seed) const override;
    NodeId session_conditional_nll(Tape& tape, const SessionBatch& b, int s) const override;

    void predict_clicks_serial(const SessionBatch& b, std::span<double> out) const override;
    void predict_conditional_clicks_serial(const SessionBatch& b,
                                           std::span<double> out) const override;

    using Model::predict_clicks;
    using Model::predict_conditional_clicks;
    using Model::predict_relevance;

  private:
    friend struct detail::Forward;

    void sample_session(const SessionBatch& b, int s, SampleResult& out, uint64_t seed) const;

    std::shared_ptr<ParameterStore> store_;
    ClickModelConfig cfg_;
    std::shared_ptr<LogitSource> attraction_;    // gamma_d
    std::shared_ptr<LogitSource> satisfaction_;  // sigma_d (DBN family)
    PositionTable examination_;                  // theta_k (RCTR, PBM)
    UbmPositionTable ubm_examination_;           // theta_{k,k'}
    PositionTable continuation_by_rank_;         // lambda_k (DCM)
    SlotId rho_ = -1;                            // global CTR
    SlotId lambda_ = -1;                         // DBN continuation (SDBN frozen)
    SlotId tau_ = -1;                            // CCM tau1..tau3
};

}  // namespace clickgrad

#endif
