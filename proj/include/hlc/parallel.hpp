#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace hlc {

unsigned default_workers();

// Runs fn(shard_index) for shard_index in [0, shards) on up to `workers`
// threads and returns the results in shard order. The shard plan is chosen by
// the caller and never depends on the worker count, so merges are
// bit-identical for any `workers`.
template <class T, class Fn>
std::vector<T> run_shards(std::size_t shards, unsigned workers, Fn fn)
{
    std::vector<T> results(shards);
    if (workers == 0)
        workers = default_workers();
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, shards));
    if (workers <= 1) {
        for (std::size_t s = 0; s < shards; ++s)
            results[s] = fn(s);
        return results;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            try {
                for (std::size_t s = next++; s < shards; s = next++)
                    results[s] = fn(s);
            } catch (...) {
                errors[w] = std::current_exception();
                next = shards;
            }
        });
    for (auto& t : pool)
        t.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    return results;
}

// Contiguous split of [lo, hi] into at most `shards` pieces.
inline std::vector<std::pair<long long, long long>> split_range(long long lo, long long hi, std::size_t shards)
{
    std::vector<std::pair<long long, long long>> out;
    if (hi < lo)
        return out;
    const long long total = hi - lo + 1;
    const long long pieces = std::max<long long>(1, std::min<long long>(total, static_cast<long long>(shards)));
    for (long long i = 0; i < pieces; ++i) {
        long long a = lo + total * i / pieces;
        long long b = lo + total * (i + 1) / pieces - 1;
        out.emplace_back(a, b);
    }
    return out;
}

} // namespace hlc
