#include "ntsdr/threading.hpp"

#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace ntsdr {

int thread_count() {
    if (const char* env = std::getenv("NTSDR_THREADS")) {
        try {
            int k = std::stoi(env);
            if (k < 1) k = 1;
            if (k > 256) k = 256;
            return k;
        } catch (...) {
            // fall through to hardware default on unparsable values
        }
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
    if (count == 0) return;
    std::size_t workers = static_cast<std::size_t>(thread_count());
    if (workers > count) workers = count;
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    // Contiguous chunks; remainder spread over the leading workers.
    std::size_t base = count / workers, extra = count % workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::size_t begin = 0;
    for (std::size_t w = 0; w < workers; ++w) {
        std::size_t len = base + (w < extra ? 1 : 0);
        std::size_t end = begin + len;
        pool.emplace_back([&fn, begin, end] {
            for (std::size_t i = begin; i < end; ++i) fn(i);
        });
        begin = end;
    }
    for (auto& t : pool) t.join();
}

} // namespace ntsdr
