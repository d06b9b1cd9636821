#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

namespace geodex {

// Random stream keyed by (seed, purpose, block index). Every block of samples
// draws from its own stream, so results do not depend on how blocks are
// distributed over workers.
class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t purpose, std::uint64_t block) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(purpose), static_cast<std::uint32_t>(purpose >> 32),
                          static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32)};
        eng_.seed(seq);
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double normal() { return gauss_(eng_); }

    std::mt19937_64& engine() { return eng_; }

private:
    std::mt19937_64 eng_;
    std::normal_distribution<double> gauss_{0.0, 1.0};
};

// Runs body(i) for i in [0, count) on up to `workers` threads.
template <class F>
void parallel_for(std::size_t count, int workers, F&& body) {
    const std::size_t nthreads = std::min<std::size_t>(std::max(1, workers), count);
    if (nthreads <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nthreads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next.store(count);
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

inline constexpr std::size_t sample_block = 2048;

// Splits `samples` into fixed blocks, evaluates block(stream, begin, end) -> R in
// parallel and returns the per-block results in block order.
template <class R, class F>
std::vector<R> run_blocks(std::size_t samples, int workers, std::uint64_t seed, std::uint64_t purpose, F&& block) {
    const std::size_t nblocks = (samples + sample_block - 1) / sample_block;
    std::vector<R> out(nblocks);
    parallel_for(nblocks, workers, [&](std::size_t b) {
        Stream s(seed, purpose, b);
        const std::size_t begin = b * sample_block;
        const std::size_t end = std::min(samples, begin + sample_block);
        out[b] = block(s, begin, end);
    });
    return out;
}

}  // namespace geodex
