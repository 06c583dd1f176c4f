#ifndef CLICKGRAD_PARALLEL_HPP
#define CLICKGRAD_PARALLEL_HPP

#include <cstddef>
#include <cstdint>
#include <exception>
#include <vector>

// OpenMP helpers. Every parallel kernel in this library has a serial
// twin that produces bit-identical output; tests compare the two and the
// bench target times them. Reductions are chunked with a fixed chunk
// size and merged in chunk order, so results do not depend on the thread
// count or schedule. Exceptions thrown by loop bodies are captured and
// rethrown after the region (throwing across an omp boundary terminates).

namespace clickgrad::parallel {

constexpr size_t kChunk = 4096;

class ErrorCollector {
  public:
    template <typename F>
    void run(F&& f) noexcept {
        try {
            f();
        } catch (...) {
#pragma omp critical(clickgrad_parallel_error)
            if (!error_) error_ = std::current_exception();
        }
    }
    void rethrow() const {
        if (error_) std::rethrow_exception(error_);
    }

  private:
    std::exception_ptr error_;
};

inline int64_t num_chunks(size_t n) {
    return static_cast<int64_t>((n + kChunk - 1) / kChunk);
}

/// Chunk-ordered sum of f(i) for i in [0, n). Parallel over chunks.
template <typename F>
double chunked_sum(size_t n, F&& f) {
    const int64_t chunks = num_chunks(n);
    std::vector<double> partial(static_cast<size_t>(chunks), 0.0);
    ErrorCollector errors;
#pragma omp parallel for schedule(static)
    for (int64_t c = 0; c < chunks; ++c) {
        errors.run([&, c] {
            const size_t lo = static_cast<size_t>(c) * kChunk;
            const size_t hi = lo + kChunk < n ? lo + kChunk : n;
            double s = 0.0;
            for (size_t i = lo; i < hi; ++i) s += f(i);
            partial[static_cast<size_t>(c)] = s;
        });
    }
    errors.rethrow();
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

/// Serial reference with the same chunking, kept for testing.
template <typename F>
double chunked_sum_serial(size_t n, F&& f) {
    const int64_t chunks = num_chunks(n);
    double total = 0.0;
    for (int64_t c = 0; c < chunks; ++c) {
        const size_t lo = static_cast<size_t>(c) * kChunk;
        const size_t hi = lo + kChunk < n ? lo + kChunk : n;
        double s = 0.0;
        for (size_t i = lo; i < hi; ++i) s += f(i);
        total += s;
    }
    return total;
}

/// Parallel for over independent items (each body invocation writes only
/// its own output slots).
template <typename F>
void for_each_index(int64_t n, F&& f) {
    ErrorCollector errors;
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) {
        errors.run([&, i] { f(i); });
    }
    errors.rethrow();
}

template <typename F>
void for_each_index_serial(int64_t n, F&& f) {
    for (int64_t i = 0; i < n; ++i) f(i);
}

}  // namespace clickgrad::parallel

#endif
