#include "clickgrad/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "clickgrad/errors.hpp"
#include "clickgrad/logspace.hpp"
#include "clickgrad/models.hpp"

namespace clickgrad {

namespace {
// ln 2; contributions are divided by this once per slot
constexpr double kLn2 = 0.6931471805599453;
}

void ClickMetricAccumulator::bump_rank(int rank, double ll2) {
    if (rank < 1) throw ConfigError("metrics: rank must be >= 1");
    if (static_cast<size_t>(rank) > rank_sum2_.size()) {
        rank_sum2_.resize(static_cast<size_t>(rank), 0.0);
        rank_count_.resize(static_cast<size_t>(rank), 0);
    }
    rank_sum2_[static_cast<size_t>(rank - 1)] += ll2;
    rank_count_[static_cast<size_t>(rank - 1)] += 1;
    sum2_ += ll2;
    count_ += 1;
}

void ClickMetricAccumulator::update(std::span<const double> log_probs,
                                    std::span<const double> clicks,
                                    std::span<const uint8_t> mask,
                                    std::span<const int32_t> positions) {
    if (log_probs.size() != clicks.size() || clicks.size() != mask.size() ||
        mask.size() != positions.size())
        throw ConfigError("metrics: input spans must have equal length");
    for (size_t i = 0; i < log_probs.size(); ++i) {
        if (!mask[i]) continue;
        const double lp = log_probs[i];
        if (lp > 0.0) throw ConfigError("metrics: log probability > 0");
        const double ll = clicks[i] != 0.0 ? lp : logspace::log1mexp(lp);
        bump_rank(positions[i], ll / kLn2);
    }
}

void ClickMetricAccumulator::update(const SessionBatch& b, std::span<const double> log_probs) {
    update(log_probs, b.clicks, b.mask, b.positions);
}

void ClickMetricAccumulator::merge(const ClickMetricAccumulator& other) {
    if (other.rank_sum2_.size() > rank_sum2_.size()) {
        rank_sum2_.resize(other.rank_sum2_.size(), 0.0);
        rank_count_.resize(other.rank_count_.size(), 0);
    }
    for (size_t i = 0; i < other.rank_sum2_.size(); ++i) {
        rank_sum2_[i] += other.rank_sum2_[i];
        rank_count_[i] += other.rank_count_[i];
    }
    sum2_ += other.sum2_;
    count_ += other.count_;
}

double ClickMetricAccumulator::mean_ll() const {
    if (count_ == 0) throw ConfigError("metrics: no observations");
    return (sum2_ / static_cast<double>(count_)) * kLn2;
}

double ClickMetricAccumulator::perplexity() const {
    if (count_ == 0) throw ConfigError("metrics: no observations");
    return std::exp2(-(sum2_ / static_cast<double>(count_)));
}

std::vector<std::pair<int, double>> ClickMetricAccumulator::per_rank_ll() const {
    std::vector<std::pair<int, double>> out;
    for (size_t i = 0; i < rank_sum2_.size(); ++i)
        if (rank_count_[i] > 0)
            out.emplace_back(static_cast<int>(i + 1),
                             (rank_sum2_[i] / static_cast<double>(rank_count_[i])) * kLn2);
    return out;
}

std::vector<std::pair<int, double>> ClickMetricAccumulator::per_rank_perplexity() const {
    std::vector<std::pair<int, double>> out;
    for (size_t i = 0; i < rank_sum2_.size(); ++i)
        if (rank_count_[i] > 0)
            out.emplace_back(static_cast<int>(i + 1),
                             std::exp2(-(rank_sum2_[i] / static_cast<double>(rank_count_[i]))));
    return out;
}

namespace {

std::vector<size_t> sorted_by_score(std::span<const double> scores) {
    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return scores[a] > scores[b]; });
    return order;
}

}  // namespace

double dcg_at_k(std::span<const double> scores, std::span<const int32_t> labels, int k) {
    const std::vector<size_t> order = sorted_by_score(scores);
    double dcg = 0.0;
    const size_t top = std::min(order.size(), static_cast<size_t>(k));
    for (size_t i = 0; i < top; ++i) {
        const double gain = std::exp2(static_cast<double>(labels[order[i]])) - 1.0;
        dcg += gain / std::log2(static_cast<double>(i) + 2.0);
    }
    return dcg;
}

double mrr_at_k(std::span<const double> scores, std::span<const int32_t> labels, int k) {
    const std::vector<size_t> order = sorted_by_score(scores);
    const size_t top = std::min(order.size(), static_cast<size_t>(k));
    for (size_t i = 0; i < top; ++i)
        if (labels[order[i]] > 0) return 1.0 / (static_cast<double>(i) + 1.0);
    return 0.0;
}

void RankingMetricAccumulator::update(const SessionBatch& b, std::span<const double> scores) {
    if (!b.has_labels) throw ConfigError("ranking metrics require labels");
    for (int s = 0; s < b.size; ++s) {
        const int len = b.session_len(s);
        if (len == 0) continue;
        const size_t base = static_cast<size_t>(b.at(s, 0));
        std::span<const double> sc(scores.data() + base, static_cast<size_t>(len));
        std::span<const int32_t> lb(b.labels.data() + base, static_cast<size_t>(len));
        dcg_sum_ += dcg_at_k(sc, lb, top_k_);
        mrr_sum_ += mrr_at_k(sc, lb, top_k_);
        sessions_ += 1;
    }
}

void RankingMetricAccumulator::merge(const RankingMetricAccumulator& other) {
    if (other.top_k_ != top_k_) throw ConfigError("ranking metrics: top_k mismatch");
    dcg_sum_ += other.dcg_sum_;
    mrr_sum_ += other.mrr_sum_;
    sessions_ += other.sessions_;
}

double RankingMetricAccumulator::mean_dcg() const {
    if (sessions_ == 0) throw ConfigError("metrics: no observations");
    return dcg_sum_ / static_cast<double>(sessions_);
}

double RankingMetricAccumulator::mean_mrr() const {
    if (sessions_ == 0) throw ConfigError("metrics: no observations");
    return mrr_sum_ / static_cast<double>(sessions_);
}

double MetricReport::value(const std::string& metric, int rank) const {
    for (const auto& r : rows)
        if (r.metric == metric && r.rank == rank) return r.value;
    throw ConfigError("metric report has no row '" + metric + "'");
}

void MetricReport::write_csv(std::ostream& out) const {
    out << "metric,rank,value\n";
    char buf[64];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.17g", r.value);
        out << r.metric << ',';
        if (r.rank == 0)
            out << "all";
        else
            out << r.rank;
        out << ',' << buf << '\n';
    }
}

MetricReport evaluate_model(const Model& model, const Dataset& data, int batch_size,
                            int ranking_top_k) {
    ClickMetricAccumulator ll_acc, ppl_acc, cond_ppl_acc;
    RankingMetricAccumulator rank_acc(ranking_top_k);

    BatchStream stream(data, batch_size, /*shuffle=*/false, /*seed=*/0);
    SessionBatch b;
    std::vector<double> uncond, cond, scores;
    while (stream.next(b)) {
        const size_t n = static_cast<size_t>(b.size) * static_cast<size_t>(b.max_len);
        uncond.assign(n, 0.0);
        cond.assign(n, 0.0);
        model.predict_clicks(b, uncond);
        model.predict_conditional_clicks(b, cond);
        ll_acc.update(b, cond);
        cond_ppl_acc.update(b, cond);
        ppl_acc.update(b, uncond);
        if (data.has_labels) {
            scores.assign(n, 0.0);
            model.predict_relevance(b, scores);
            rank_acc.update(b, scores);
        }
    }

    MetricReport report;
    report.rows.push_back({"ll", 0, ll_acc.mean_ll()});
    report.rows.push_back({"ppl", 0, ppl_acc.perplexity()});
    report.rows.push_back({"cond_ppl", 0, cond_ppl_acc.perplexity()});
    for (const auto& [rank, v] : ll_acc.per_rank_ll()) report.rows.push_back({"ll", rank, v});
    for (const auto& [rank, v] : ppl_acc.per_rank_perplexity())
        report.rows.push_back({"ppl", rank, v});
    for (const auto& [rank, v] : cond_ppl_acc.per_rank_perplexity())
        report.rows.push_back({"cond_ppl", rank, v});
    if (data.has_labels && rank_acc.sessions() > 0) {
        report.rows.push_back(
            {"dcg@" + std::to_string(ranking_top_k), 0, rank_acc.mean_dcg()});
        report.rows.push_back(
            {"mrr@" + std::to_string(ranking_top_k), 0, rank_acc.mean_mrr()});
    }
    return report;
}

}  // namespace clickgrad
