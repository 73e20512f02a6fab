#ifndef CRITMIX_PARALLEL_HPP
#define CRITMIX_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace critmix {

/// Runs fn(chunk) for chunk in [0, chunks) on up to `workers` threads.
/// Chunks are claimed dynamically, so fn must write only to its own slot;
/// callers combine slot results in chunk order for worker-independent output.
template <class Fn>
void parallel_chunks(std::size_t chunks, unsigned workers, Fn&& fn)
{
    if (workers <= 1 || chunks <= 1) {
        for (std::size_t c = 0; c < chunks; ++c)
            fn(c);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    auto body = [&] {
        while (!failed.load()) {
            const std::size_t c = next.fetch_add(1);
            if (c >= chunks)
                return;
            try {
                fn(c);
            }
            catch (...) {
                if (!failed.exchange(true))
                    failure = std::current_exception();
            }
        }
    };
    const unsigned n = static_cast<unsigned>(std::min<std::size_t>(workers, chunks));
    std::vector<std::thread> pool;
    pool.reserve(n);
    for (unsigned i = 0; i < n; ++i)
        pool.emplace_back(body);
    for (auto& t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
}

} // namespace critmix

#endif
