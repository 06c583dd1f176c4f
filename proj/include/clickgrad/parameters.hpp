#ifndef CLICKGRAD_PARAMETERS_HPP
#define CLICKGRAD_PARAMETERS_HPP

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "clickgrad/session.hpp"
#include "clickgrad/tape.hpp"

namespace clickgrad {

/// FNV-1a 64 over the 8 little-endian bytes of (id XOR seed), reduced
/// modulo physical_rows. Fixed constants for bit-exact reproducibility.
uint32_t hash_index(int64_t id, int64_t physical_rows, uint64_t seed);

/// Physical rows allocated by the hashing trick for a declared size.
inline int64_t hashed_rows(int64_t declared_size, int64_t ratio) {
    return (declared_size + ratio - 1) / ratio;
}

// Flat storage for every trainable scalar: values, gradients and AdamW
// moments, grouped into named tables for dump/restore. Reads are
// concurrency-safe; gradient accumulation and updates are single-writer.
class ParameterStore {
  public:
    SlotId add_table(const std::string& name, int64_t rows, double init, bool frozen = false);

    double value(SlotId slot) const { return values_[static_cast<size_t>(slot)]; }
    void set_value(SlotId slot, double v) { values_[static_cast<size_t>(slot)] = v; }
    bool frozen(SlotId slot) const { return frozen_[static_cast<size_t>(slot)] != 0; }
    size_t size() const { return values_.size(); }

    double grad(SlotId slot) const { return grads_[static_cast<size_t>(slot)]; }
    void accumulate_grad(SlotId slot, double g);
    /// Slots touched since the last clear, sorted and deduplicated.
    const std::vector<SlotId>& touched_slots();
    void clear_grads();

    // AdamW moments, owned here so snapshots stay a plain value copy.
    double& moment1(SlotId slot) { return m_[static_cast<size_t>(slot)]; }
    double& moment2(SlotId slot) { return v_[static_cast<size_t>(slot)]; }

    std::vector<double> snapshot() const { return values_; }
    void restore(const std::vector<double>& snap);

    /// CSV dump `table,row,value`, 17 significant digits.
    void dump_csv(std::ostream& out) const;
    void restore_csv(std::istream& in);

    struct TableInfo {
        std::string name;
        SlotId first;
        int64_t rows;
    };
    const std::vector<TableInfo>& tables() const { return tables_; }
    SlotId table_first(const std::string& name) const;

  private:
    std::vector<double> values_, grads_, m_, v_;
    std::vector<uint8_t> frozen_;
    std::vector<SlotId> touched_;
    bool touched_sorted_ = true;
    std::vector<TableInfo> tables_;
};

enum class Compression { None, Hashing, QuotientRemainder };

struct EmbeddingConfig {
    int64_t size = 0;  // declared id space
    Compression compression = Compression::None;
    int64_t compression_ratio = 10;  // hashing
    int64_t remainder_size = 16;     // quotient-remainder
    uint64_t hash_seed = 0;
    bool baseline = false;
    double init_logit = 0.0;
};

// Produces one logit per slot, either as a tape expression (with leaves
// that receive gradients) or as a plain value for evaluation kernels.
class LogitSource {
  public:
    virtual ~LogitSource() = default;
    virtual NodeId tape_logit(Tape& tape, const SessionBatch& b, int s, int k) const = 0;
    virtual double value_logit(const SessionBatch& b, int s, int k) const = 0;
};

// Per-id logit table with optional shared-baseline correction and
// optional compression (hashing trick or quotient-remainder trick; the
// quotient and remainder logits combine additively).
class EmbeddingSource : public LogitSource {
  public:
    EmbeddingSource(ParameterStore& store, const std::string& name, const EmbeddingConfig& cfg);

    NodeId tape_logit(Tape& tape, const SessionBatch& b, int s, int k) const override;
    double value_logit(const SessionBatch& b, int s, int k) const override;

    NodeId tape_logit_for_id(Tape& tape, int64_t id) const;
    double value_logit_for_id(int64_t id) const;

    int64_t physical_rows() const { return rows_; }
    /// Row slot an id resolves to (None or Hashing modes).
    SlotId slot_for(int64_t id) const;
    SlotId baseline_slot() const { return baseline_; }

  private:
    void check_id(int64_t id) const;

    ParameterStore& store_;
    EmbeddingConfig cfg_;
    int64_t rows_ = 0;       // physical rows of the main (or quotient) table
    SlotId main_ = -1;       // main or quotient table
    SlotId remainder_ = -1;  // quotient-remainder only
    SlotId baseline_ = -1;
};

// logit = bias + w . features, all leaves.
class LinearSource : public LogitSource {
  public:
    LinearSource(ParameterStore& store, const std::string& name, int feature_dim,
                 double init_bias);

    NodeId tape_logit(Tape& tape, const SessionBatch& b, int s, int k) const override;
    double value_logit(const SessionBatch& b, int s, int k) const override;

    int feature_dim() const { return feature_dim_; }

  private:
    ParameterStore& store_;
    int feature_dim_;
    SlotId weights_;
    SlotId bias_;
};

// Rank-indexed logits: theta_k for PBM/RCTR, lambda_k for DCM.
class PositionTable {
  public:
    PositionTable() = default;
    PositionTable(ParameterStore& store, const std::string& name, int positions,
                  double init_logit);

    NodeId tape_logit(Tape& tape, int rank) const;  // rank is 1-based
    double value_logit(int rank) const;
    int positions() const { return positions_; }
    SlotId slot_for_rank(int rank) const;

  private:
    ParameterStore* store_ = nullptr;
    int positions_ = 0;
    SlotId first_ = -1;
};

// Rank x last-click-rank logits for the UBM; last-click index 0 means
// "no previous click". Entries with last_click >= rank are never read.
class UbmPositionTable {
  public:
    UbmPositionTable() = default;
    UbmPositionTable(ParameterStore& store, const std::string& name, int positions,
                     double init_logit);

    NodeId tape_logit(Tape& tape, int rank, int last_click) const;
    double value_logit(int rank, int last_click) const;
    int positions() const { return positions_; }
    SlotId slot_for(int rank, int last_click) const;

  private:
    ParameterStore* store_ = nullptr;
    int positions_ = 0;
    SlotId first_ = -1;
};

}  // namespace clickgrad

#endif
