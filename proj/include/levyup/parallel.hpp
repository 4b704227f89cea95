#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace levyup {

inline int default_workers() {
    if (const char* env = std::getenv("LEVYUP_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

// Deterministic replicate-parallel driver. Replicates are grouped into a
// fixed number of chunks that does not depend on the worker count; each chunk
// accumulates sequentially and chunk results are merged in chunk order, so
// the result is bit-identical for any number of workers. All randomness must
// come from per-replicate streams keyed by the replicate index.
template <typename Acc, typename Work, typename Merge>
Acc run_replicates(long n_replicates, Acc init, Work&& work, Merge&& merge, int workers = 0) {
    if (workers <= 0) workers = default_workers();
    if (n_replicates <= 0) return init;

    const long n_chunks = std::min<long>(n_replicates, 64);
    const long chunk_size = (n_replicates + n_chunks - 1) / n_chunks;

    std::vector<Acc> partial(static_cast<std::size_t>(n_chunks), init);
    std::atomic<long> next_chunk{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};

    auto body = [&]() {
        for (;;) {
            const long c = next_chunk.fetch_add(1);
            if (c >= n_chunks || failed.load()) return;
            const long lo = c * chunk_size;
            const long hi = std::min(n_replicates, lo + chunk_size);
            try {
                for (long rep = lo; rep < hi; ++rep) {
                    work(rep, partial[static_cast<std::size_t>(c)]);
                }
            } catch (...) {
                if (!failed.exchange(true)) error = std::current_exception();
                return;
            }
        }
    };

    if (workers == 1) {
        body();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(body);
        for (auto& t : pool) t.join();
    }
    if (failed.load() && error) std::rethrow_exception(error);

    Acc out = std::move(partial[0]);
    for (long c = 1; c < n_chunks; ++c) merge(out, std::move(partial[static_cast<std::size_t>(c)]));
    return out;
}

}  // namespace levyup
