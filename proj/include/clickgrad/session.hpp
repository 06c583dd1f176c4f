#ifndef CLICKGRAD_SESSION_HPP
#define CLICKGRAD_SESSION_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace clickgrad {

// One displayed result list, slots in rank order 1..K.
struct SessionRecord {
    int64_t session_id = 0;
    std::vector<int64_t> doc_ids;
    std::vector<uint8_t> clicks;
    std::vector<int32_t> labels;     // empty unless the file has a label column
    std::vector<double> features;    // K * feature_dim, row-major; empty without features
    int length() const { return static_cast<int>(doc_ids.size()); }
};

struct Dataset {
    std::vector<SessionRecord> sessions;
    int feature_dim = 0;
    bool has_labels = false;

    size_t size() const { return sessions.size(); }
    int max_length() const;
    size_t total_slots() const;
};

// Rectangular batch, padded to the longest session it contains. Padded
// slots carry position 0, id 0, click 0 and mask false; padding only
// ever appears at the tail of a row.
struct SessionBatch {
    int size = 0;
    int max_len = 0;
    int feature_dim = 0;
    bool has_labels = false;
    std::vector<int32_t> positions;    // size * max_len
    std::vector<int64_t> doc_ids;
    std::vector<double> clicks;
    std::vector<uint8_t> mask;
    std::vector<int32_t> labels;
    std::vector<double> features;      // size * max_len * feature_dim
    std::vector<int64_t> session_ids;  // size
    std::vector<int64_t> session_index;  // position of each session in the dataset

    int at(int s, int k) const { return s * max_len + k; }
    int session_len(int s) const;
    size_t unmasked_count() const;
};

/// Builds one batch from the given dataset rows (order preserved).
SessionBatch make_batch(const Dataset& data, const std::vector<size_t>& rows);

// Streams shuffled or in-order batches over a dataset. A given
// (dataset, batch_size, shuffle, seed) always yields the same sequence.
class BatchStream {
  public:
    BatchStream(const Dataset& data, int batch_size, bool shuffle, uint64_t seed);
    bool next(SessionBatch& out);
    void restart();
    size_t batch_count() const;

  private:
    const Dataset& data_;
    int batch_size_;
    std::vector<size_t> order_;
    size_t cursor_ = 0;
};

/// CSV (or gzip CSV when the name ends in .gz) loader. Expected header:
/// session_id,rank,query_doc_id,click[,label][,f0..f{n-1}]
/// Rows are grouped by session in order of first appearance and ranks
/// must be exactly 1..K. Violations are rejected with the row number.
Dataset load_sessions(const std::string& path, int max_positions = 25);

/// Writes the dataset back in load_sessions column order.
void write_sessions(const Dataset& data, const std::string& path);

/// Seeded session-level split; fractions must sum to 1 within 1e-9.
struct SplitResult {
    Dataset train, val, test;
};
SplitResult split_dataset(const Dataset& data, double train_frac, double val_frac,
                          double test_frac, uint64_t seed);

}  // namespace clickgrad

#endif
