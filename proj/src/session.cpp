#include "clickgrad/session.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "clickgrad/errors.hpp"
#include "clickgrad/rng.hpp"

namespace clickgrad {

int Dataset::max_length() const {
    int m = 0;
    for (const auto& s : sessions) m = std::max(m, s.length());
    return m;
}

size_t Dataset::total_slots() const {
    size_t n = 0;
    for (const auto& s : sessions) n += static_cast<size_t>(s.length());
    return n;
}

int SessionBatch::session_len(int s) const {
    int n = 0;
    while (n < max_len && mask[at(s, n)]) ++n;
    return n;
}

size_t SessionBatch::unmasked_count() const {
    size_t n = 0;
    for (uint8_t m : mask) n += m;
    return n;
}

SessionBatch make_batch(const Dataset& data, const std::vector<size_t>& rows) {
    SessionBatch b;
    b.size = static_cast<int>(rows.size());
    b.feature_dim = data.feature_dim;
    b.has_labels = data.has_labels;
    for (size_t r : rows) b.max_len = std::max(b.max_len, data.sessions[r].length());

    const size_t n = static_cast<size_t>(b.size) * b.max_len;
    b.positions.assign(n, 0);
    b.doc_ids.assign(n, 0);
    b.clicks.assign(n, 0.0);
    b.mask.assign(n, 0);
    if (b.has_labels) b.labels.assign(n, 0);
    if (b.feature_dim > 0) b.features.assign(n * b.feature_dim, 0.0);

    for (int s = 0; s < b.size; ++s) {
        const SessionRecord& rec = data.sessions[rows[s]];
        b.session_ids.push_back(rec.session_id);
        b.session_index.push_back(static_cast<int64_t>(rows[s]));
        for (int k = 0; k < rec.length(); ++k) {
            const int i = b.at(s, k);
            b.positions[i] = k + 1;
            b.doc_ids[i] = rec.doc_ids[k];
            b.clicks[i] = rec.clicks[k];
            b.mask[i] = 1;
            if (b.has_labels && !rec.labels.empty()) b.labels[i] = rec.labels[k];
            for (int f = 0; f < b.feature_dim; ++f)
                b.features[static_cast<size_t>(i) * b.feature_dim + f] =
                    rec.features[static_cast<size_t>(k) * b.feature_dim + f];
        }
    }
    return b;
}

BatchStream::BatchStream(const Dataset& data, int batch_size, bool shuffle, uint64_t seed)
    : data_(data), batch_size_(batch_size) {
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    order_.resize(data.size());
    for (size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    if (shuffle) {
        Rng rng(seed);
        for (size_t i = order_.size(); i > 1; --i)
            std::swap(order_[i - 1], order_[rng.uniform_int(i)]);
    }
}

bool BatchStream::next(SessionBatch& out) {
    if (cursor_ >= order_.size()) return false;
    const size_t end = std::min(cursor_ + static_cast<size_t>(batch_size_), order_.size());
    std::vector<size_t> rows(order_.begin() + static_cast<long>(cursor_),
                             order_.begin() + static_cast<long>(end));
    cursor_ = end;
    out = make_batch(data_, rows);
    return true;
}

void BatchStream::restart() { cursor_ = 0; }

size_t BatchStream::batch_count() const {
    return (order_.size() + static_cast<size_t>(batch_size_) - 1) /
           static_cast<size_t>(batch_size_);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::vector<std::string> lines;
    if (path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0) {
        gzFile gz = gzopen(path.c_str(), "rb");
        if (!gz) throw ConfigError("cannot open " + path);
        std::string buf;
        char chunk[1 << 16];
        int n;
        while ((n = gzread(gz, chunk, sizeof(chunk))) > 0) buf.append(chunk, static_cast<size_t>(n));
        gzclose(gz);
        std::istringstream in(buf);
        std::string line;
        while (std::getline(in, line)) lines.push_back(line);
    } else {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open " + path);
        std::string line;
        while (std::getline(in, line)) lines.push_back(line);
    }
    return lines;
}

[[noreturn]] void reject(size_t row, const std::string& why) {
    throw ConfigError("row " + std::to_string(row) + ": " + why);
}

}  // namespace

Dataset load_sessions(const std::string& path, int max_positions) {
    const std::vector<std::string> lines = read_lines(path);
    if (lines.empty()) throw ConfigError(path + ": empty file");

    const std::vector<std::string> header = split_csv_line(lines[0]);
    if (header.size() < 4 || header[0] != "session_id" || header[1] != "rank" ||
        header[2] != "query_doc_id" || header[3] != "click")
        throw ConfigError(path + ": header must start with session_id,rank,query_doc_id,click");

    size_t col = 4;
    bool has_labels = false;
    if (col < header.size() && header[col] == "label") {
        has_labels = true;
        ++col;
    }
    int feature_dim = 0;
    for (; col < header.size(); ++col) {
        if (header[col] != "f" + std::to_string(feature_dim))
            throw ConfigError(path + ": unexpected column '" + header[col] + "'");
        ++feature_dim;
    }
    const size_t ncols = 4 + (has_labels ? 1 : 0) + static_cast<size_t>(feature_dim);

    Dataset data;
    data.has_labels = has_labels;
    data.feature_dim = feature_dim;

    // (session_id, rank) -> parsed row, grouped by first appearance
    std::unordered_map<int64_t, size_t> session_pos;

    struct RawSlot {
        int32_t rank;
        int64_t doc;
        uint8_t click;
        int32_t label;
        std::vector<double> feat;
        size_t row;
    };
    std::vector<std::vector<RawSlot>> groups;
    std::vector<int64_t> group_ids;

    for (size_t r = 1; r < lines.size(); ++r) {
        if (lines[r].empty()) continue;
        const std::vector<std::string> f = split_csv_line(lines[r]);
        if (f.size() != ncols) reject(r, "expected " + std::to_string(ncols) + " columns");
        RawSlot slot;
        int64_t sid;
        try {
            sid = std::stoll(f[0]);
            slot.rank = static_cast<int32_t>(std::stol(f[1]));
            slot.doc = std::stoll(f[2]);
            slot.click = static_cast<uint8_t>(std::stol(f[3]));
            slot.label = has_labels ? static_cast<int32_t>(std::stol(f[4])) : 0;
            for (int i = 0; i < feature_dim; ++i)
                slot.feat.push_back(std::stod(f[4 + (has_labels ? 1 : 0) + static_cast<size_t>(i)]));
        } catch (const std::exception&) {
            reject(r, "unparseable field");
        }
        if (f[3] != "0" && f[3] != "1") reject(r, "non-binary click");
        if (slot.rank < 1) reject(r, "rank must be >= 1");
        if (slot.rank > max_positions)
            reject(r, "rank exceeds max_positions=" + std::to_string(max_positions));
        if (slot.doc < 0) reject(r, "negative query_doc_id");
        slot.row = r;

        auto [it, inserted] = session_pos.try_emplace(sid, groups.size());
        if (inserted) {
            groups.emplace_back();
            group_ids.push_back(sid);
        }
        groups[it->second].push_back(std::move(slot));
    }

    for (size_t g = 0; g < groups.size(); ++g) {
        auto& slots = groups[g];
        std::stable_sort(slots.begin(), slots.end(),
                         [](const RawSlot& a, const RawSlot& b) { return a.rank < b.rank; });
        SessionRecord rec;
        rec.session_id = group_ids[g];
        for (size_t k = 0; k < slots.size(); ++k) {
            const RawSlot& s = slots[k];
            const int32_t expected = static_cast<int32_t>(k) + 1;
            if (s.rank != expected) {
                if (k > 0 && slots[k - 1].rank == s.rank)
                    reject(s.row, "duplicate (session, rank)");
                reject(s.row, "rank gap at session " + std::to_string(rec.session_id));
            }
            rec.doc_ids.push_back(s.doc);
            rec.clicks.push_back(s.click);
            if (has_labels) rec.labels.push_back(s.label);
            rec.features.insert(rec.features.end(), s.feat.begin(), s.feat.end());
        }
        data.sessions.push_back(std::move(rec));
    }
    return data;
}

void write_sessions(const Dataset& data, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << "session_id,rank,query_doc_id,click";
    if (data.has_labels) out << ",label";
    for (int f = 0; f < data.feature_dim; ++f) out << ",f" << f;
    out << "\n";
    char buf[64];
    for (const auto& rec : data.sessions) {
        for (int k = 0; k < rec.length(); ++k) {
            out << rec.session_id << ',' << (k + 1) << ',' << rec.doc_ids[k] << ','
                << static_cast<int>(rec.clicks[k]);
            if (data.has_labels) out << ',' << (rec.labels.empty() ? 0 : rec.labels[k]);
            for (int f = 0; f < data.feature_dim; ++f) {
                std::snprintf(buf, sizeof(buf), "%.17g",
                              rec.features[static_cast<size_t>(k) * data.feature_dim + f]);
                out << ',' << buf;
            }
            out << "\n";
        }
    }
}

SplitResult split_dataset(const Dataset& data, double train_frac, double val_frac,
                          double test_frac, uint64_t seed) {
    if (train_frac < 0 || val_frac < 0 || test_frac < 0 ||
        std::fabs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
        throw ConfigError("split fractions must be non-negative and sum to 1");

    std::vector<size_t> order(data.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    for (size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.uniform_int(i)]);

    const auto n = static_cast<double>(data.size());
    size_t n_train = static_cast<size_t>(std::llround(n * train_frac));
    size_t n_val = static_cast<size_t>(std::llround(n * val_frac));
    n_train = std::min(n_train, data.size());
    n_val = std::min(n_val, data.size() - n_train);

    SplitResult out;
    out.train.feature_dim = out.val.feature_dim = out.test.feature_dim = data.feature_dim;
    out.train.has_labels = out.val.has_labels = out.test.has_labels = data.has_labels;
    for (size_t i = 0; i < order.size(); ++i) {
        Dataset& dst = i < n_train ? out.train : (i < n_train + n_val ? out.val : out.test);
        dst.sessions.push_back(data.sessions[order[i]]);
    }
    return out;
}

}  // namespace clickgrad
