#include "rcf/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rcf {

unsigned default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

void parallel_for(Index count, unsigned workers, const std::function<void(Index)>& body) {
    if (count <= 0) return;
    if (workers == 0) workers = default_workers();
    workers = static_cast<unsigned>(std::min<Index>(workers, count));
    if (workers == 1) {
        for (Index i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<Index> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&] {
        for (Index i = next++; i < count; i = next++) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next = count;
            }
        }
    };
    std::vector<std::thread> threads;
    for (unsigned w = 1; w < workers; ++w) threads.emplace_back(run);
    run();
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace rcf
