#ifndef CLICKGRAD_METRICS_HPP
#define CLICKGRAD_METRICS_HPP

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "clickgrad/session.hpp"

namespace clickgrad {

// Streaming, mask-aware click-prediction metric. Contributions are
// accumulated in base-2 log scale, globally and per rank, so the value
// is invariant to how the data is batched and the log-likelihood and
// perplexity views of the same sums agree exactly.
class ClickMetricAccumulator {
  public:
    /// log_probs are natural-log click probabilities (<= 0 on unmasked
    /// slots); clicks in {0,1}; positions give the 1-based rank per slot.
    void update(std::span<const double> log_probs, std::span<const double> clicks,
                std::span<const uint8_t> mask, std::span<const int32_t> positions);
    void update(const SessionBatch& b, std::span<const double> log_probs);

    void merge(const ClickMetricAccumulator& other);

    size_t count() const { return count_; }
    /// Mean log-likelihood, natural log (negative; closer to 0 is better).
    double mean_ll() const;
    /// 2^(- mean base-2 log-likelihood).
    double perplexity() const;
    /// Per-rank means/perplexities for ranks 1..max with observations.
    std::vector<std::pair<int, double>> per_rank_ll() const;
    std::vector<std::pair<int, double>> per_rank_perplexity() const;

  private:
    void bump_rank(int rank, double ll2);
    std::vector<double> rank_sum2_;  // base-2 sums per rank (index rank-1)
    std::vector<size_t> rank_count_;
    double sum2_ = 0.0;
    size_t count_ = 0;
};

// Session-mean ranking metrics over graded relevance labels. Documents
// are ordered by score descending with a stable sort, so ties keep their
// display order.
class RankingMetricAccumulator {
  public:
    explicit RankingMetricAccumulator(int top_k = 10) : top_k_(top_k) {}

    void update(const SessionBatch& b, std::span<const double> scores);

    void merge(const RankingMetricAccumulator& other);

    size_t sessions() const { return sessions_; }
    double mean_dcg() const;
    double mean_mrr() const;
    int top_k() const { return top_k_; }

  private:
    int top_k_;
    double dcg_sum_ = 0.0;
    double mrr_sum_ = 0.0;
    size_t sessions_ = 0;
};

/// DCG@k of one ranked list: sum of (2^label - 1) / log2(i + 1) over the
/// top k sorted positions i = 1, 2, ...
double dcg_at_k(std::span<const double> scores, std::span<const int32_t> labels, int k);

/// 1 / (first sorted position with label > 0), 0 when none in the top k.
double mrr_at_k(std::span<const double> scores, std::span<const int32_t> labels, int k);

// Full evaluation report: ll / ppl / cond_ppl rows (global and per
// rank) plus dcg@k / mrr@k when labels are present.
struct MetricReport {
    struct Row {
        std::string metric;
        int rank;  // 0 = "all"
        double value;
    };
    std::vector<Row> rows;
    double value(const std::string& metric, int rank = 0) const;
    void write_csv(std::ostream& out) const;
};

class Model;

/// Streams a dataset through the model's predictors and builds a report.
MetricReport evaluate_model(const Model& model, const Dataset& data, int batch_size = 256,
                            int ranking_top_k = 10);

}  // namespace clickgrad

#endif
