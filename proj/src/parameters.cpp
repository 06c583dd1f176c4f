#include "clickgrad/parameters.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "clickgrad/errors.hpp"

namespace clickgrad {

uint32_t hash_index(int64_t id, int64_t physical_rows, uint64_t seed) {
    uint64_t h = 14695981039346656037ULL;
    uint64_t x = static_cast<uint64_t>(id) ^ seed;
    for (int i = 0; i < 8; ++i) {
        h ^= (x >> (8 * i)) & 0xFFULL;
        h *= 1099511628211ULL;
    }
    return static_cast<uint32_t>(h % static_cast<uint64_t>(physical_rows));
}

SlotId ParameterStore::add_table(const std::string& name, int64_t rows, double init,
                                 bool frozen) {
    if (rows < 1) throw ConfigError("parameter table '" + name + "' needs >= 1 rows");
    for (const auto& t : tables_)
        if (t.name == name) throw ConfigError("duplicate parameter table '" + name + "'");
    const SlotId first = static_cast<SlotId>(values_.size());
    values_.resize(values_.size() + static_cast<size_t>(rows), init);
    grads_.resize(values_.size(), 0.0);
    m_.resize(values_.size(), 0.0);
    v_.resize(values_.size(), 0.0);
    frozen_.resize(values_.size(), frozen ? 1 : 0);
    tables_.push_back({name, first, rows});
    return first;
}

void ParameterStore::accumulate_grad(SlotId slot, double g) {
    if (grads_[static_cast<size_t>(slot)] == 0.0) {
        touched_.push_back(slot);
        touched_sorted_ = false;
    }
    grads_[static_cast<size_t>(slot)] += g;
}

const std::vector<SlotId>& ParameterStore::touched_slots() {
    if (!touched_sorted_) {
        std::sort(touched_.begin(), touched_.end());
        touched_.erase(std::unique(touched_.begin(), touched_.end()), touched_.end());
        touched_sorted_ = true;
    }
    return touched_;
}

void ParameterStore::clear_grads() {
    for (SlotId s : touched_) grads_[static_cast<size_t>(s)] = 0.0;
    touched_.clear();
    touched_sorted_ = true;
}

void ParameterStore::restore(const std::vector<double>& snap) {
    if (snap.size() != values_.size())
        throw ConfigError("snapshot size mismatch");
    values_ = snap;
}

void ParameterStore::dump_csv(std::ostream& out) const {
    out << "table,row,value\n";
    char buf[64];
    for (const auto& t : tables_) {
        for (int64_t r = 0; r < t.rows; ++r) {
            std::snprintf(buf, sizeof(buf), "%.17g",
                          values_[static_cast<size_t>(t.first) + static_cast<size_t>(r)]);
            out << t.name << ',' << r << ',' << buf << '\n';
        }
    }
}

void ParameterStore::restore_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("table,row,value", 0) != 0)
        throw ConfigError("parameter dump: bad header");
    size_t row_no = 1;
    while (std::getline(in, line)) {
        ++row_no;
        if (line.empty()) continue;
        const size_t c1 = line.find(',');
        const size_t c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw ConfigError("parameter dump row " + std::to_string(row_no) + ": bad format");
        const std::string name = line.substr(0, c1);
        const int64_t row = std::stoll(line.substr(c1 + 1, c2 - c1 - 1));
        const double value = std::strtod(line.c_str() + c2 + 1, nullptr);
        const TableInfo* table = nullptr;
        for (const auto& t : tables_)
            if (t.name == name) {
                table = &t;
                break;
            }
        if (!table)
            throw ConfigError("parameter dump: unknown table '" + name + "'");
        if (row < 0 || row >= table->rows)
            throw ConfigError("parameter dump: row out of range in '" + name + "'");
        values_[static_cast<size_t>(table->first) + static_cast<size_t>(row)] = value;
    }
}

SlotId ParameterStore::table_first(const std::string& name) const {
    for (const auto& t : tables_)
        if (t.name == name) return t.first;
    throw ConfigError("no parameter table '" + name + "'");
}

EmbeddingSource::EmbeddingSource(ParameterStore& store, const std::string& name,
                                 const EmbeddingConfig& cfg)
    : store_(store), cfg_(cfg) {
    if (cfg.size < 1) throw ConfigError("embedding '" + name + "': size must be >= 1");
    switch (cfg.compression) {
        case Compression::None:
            rows_ = cfg.size;
            main_ = store.add_table(name, rows_, cfg.init_logit);
            break;
        case Compression::Hashing:
            if (cfg.compression_ratio < 1)
                throw ConfigError("embedding '" + name + "': compression_ratio must be >= 1");
            rows_ = hashed_rows(cfg.size, cfg.compression_ratio);
            main_ = store.add_table(name, rows_, cfg.init_logit);
            break;
        case Compression::QuotientRemainder:
            if (cfg.remainder_size < 1)
                throw ConfigError("embedding '" + name + "': remainder_size must be >= 1");
            rows_ = (cfg.size + cfg.remainder_size - 1) / cfg.remainder_size;
            main_ = store.add_table(name + "_quotient", rows_, cfg.init_logit);
            remainder_ = store.add_table(name + "_remainder", cfg.remainder_size, 0.0);
            break;
    }
    if (cfg.baseline) baseline_ = store.add_table(name + "_baseline", 1, 0.0);
}

void EmbeddingSource::check_id(int64_t id) const {
    if (id < 0 || id >= cfg_.size)
        throw ConfigError("embedding id " + std::to_string(id) + " out of range (size " +
                          std::to_string(cfg_.size) + ")");
}

SlotId EmbeddingSource::slot_for(int64_t id) const {
    check_id(id);
    switch (cfg_.compression) {
        case Compression::None:
            return main_ + static_cast<SlotId>(id);
        case Compression::Hashing:
            return main_ + static_cast<SlotId>(hash_index(id, rows_, cfg_.hash_seed));
        case Compression::QuotientRemainder:
            throw ConfigError("quotient-remainder embeddings have no single row slot");
    }
    return -1;
}

NodeId EmbeddingSource::tape_logit_for_id(Tape& tape, int64_t id) const {
    check_id(id);
    NodeId out;
    if (cfg_.compression == Compression::QuotientRemainder) {
        const SlotId q = main_ + static_cast<SlotId>(id / cfg_.remainder_size);
        const SlotId r = remainder_ + static_cast<SlotId>(id % cfg_.remainder_size);
        out = tape.add(tape.leaf(store_.value(q), q), tape.leaf(store_.value(r), r));
    } else {
        const SlotId s = slot_for(id);
        out = tape.leaf(store_.value(s), s);
    }
    if (baseline_ >= 0)
        out = tape.add(out, tape.leaf(store_.value(baseline_), baseline_));
    return out;
}

double EmbeddingSource::value_logit_for_id(int64_t id) const {
    check_id(id);
    double out;
    if (cfg_.compression == Compression::QuotientRemainder) {
        out = store_.value(main_ + static_cast<SlotId>(id / cfg_.remainder_size)) +
              store_.value(remainder_ + static_cast<SlotId>(id % cfg_.remainder_size));
    } else {
        out = store_.value(slot_for(id));
    }
    if (baseline_ >= 0) out += store_.value(baseline_);
    return out;
}

NodeId EmbeddingSource::tape_logit(Tape& tape, const SessionBatch& b, int s, int k) const {
    return tape_logit_for_id(tape, b.doc_ids[static_cast<size_t>(b.at(s, k))]);
}

double EmbeddingSource::value_logit(const SessionBatch& b, int s, int k) const {
    return value_logit_for_id(b.doc_ids[static_cast<size_t>(b.at(s, k))]);
}

LinearSource::LinearSource(ParameterStore& store, const std::string& name, int feature_dim,
                           double init_bias)
    : store_(store), feature_dim_(feature_dim) {
    if (feature_dim < 1) throw ConfigError("linear '" + name + "': feature_dim must be >= 1");
    weights_ = store.add_table(name + "_weights", feature_dim, 0.0);
    bias_ = store.add_table(name + "_bias", 1, init_bias);
}

NodeId LinearSource::tape_logit(Tape& tape, const SessionBatch& b, int s, int k) const {
    if (b.feature_dim != feature_dim_)
        throw ConfigError("feature dimension mismatch: batch has " +
                          std::to_string(b.feature_dim) + ", model expects " +
                          std::to_string(feature_dim_));
    const size_t base = static_cast<size_t>(b.at(s, k)) * static_cast<size_t>(feature_dim_);
    std::vector<NodeId> terms;
    terms.reserve(static_cast<size_t>(feature_dim_) + 1);
    terms.push_back(tape.leaf(store_.value(bias_), bias_));
    for (int f = 0; f < feature_dim_; ++f) {
        const SlotId w = weights_ + f;
        terms.push_back(tape.scale(tape.leaf(store_.value(w), w), b.features[base + f]));
    }
    return tape.add(terms);
}

double LinearSource::value_logit(const SessionBatch& b, int s, int k) const {
    if (b.feature_dim != feature_dim_)
        throw ConfigError("feature dimension mismatch: batch has " +
                          std::to_string(b.feature_dim) + ", model expects " +
                          std::to_string(feature_dim_));
    const size_t base = static_cast<size_t>(b.at(s, k)) * static_cast<size_t>(feature_dim_);
    double out = store_.value(bias_);
    for (int f = 0; f < feature_dim_; ++f)
        out += store_.value(weights_ + f) * b.features[base + f];
    return out;
}

PositionTable::PositionTable(ParameterStore& store, const std::string& name, int positions,
                             double init_logit)
    : store_(&store), positions_(positions) {
    first_ = store.add_table(name, positions, init_logit);
}

SlotId PositionTable::slot_for_rank(int rank) const {
    if (rank < 1 || rank > positions_)
        throw ConfigError("rank " + std::to_string(rank) + " outside position table (K=" +
                          std::to_string(positions_) + ")");
    return first_ + rank - 1;
}

NodeId PositionTable::tape_logit(Tape& tape, int rank) const {
    const SlotId s = slot_for_rank(rank);
    return tape.leaf(store_->value(s), s);
}

double PositionTable::value_logit(int rank) const { return store_->value(slot_for_rank(rank)); }

UbmPositionTable::UbmPositionTable(ParameterStore& store, const std::string& name,
                                   int positions, double init_logit)
    : store_(&store), positions_(positions) {
    first_ = store.add_table(name, static_cast<int64_t>(positions) * positions, init_logit);
}

SlotId UbmPositionTable::slot_for(int rank, int last_click) const {
    if (rank < 1 || rank > positions_ || last_click < 0 || last_click >= rank)
        throw ConfigError("ubm examination index (" + std::to_string(rank) + "," +
                          std::to_string(last_click) + ") out of range");
    return first_ + static_cast<SlotId>((rank - 1) * positions_ + last_click);
}

NodeId UbmPositionTable::tape_logit(Tape& tape, int rank, int last_click) const {
    const SlotId s = slot_for(rank, last_click);
    return tape.leaf(store_->value(s), s);
}

double UbmPositionTable::value_logit(int rank, int last_click) const {
    return store_->value(slot_for(rank, last_click));
}

}  // namespace clickgrad
