#pragma once

#include <algorithm>
#include <cstddef>
#include <future>
#include <thread>
#include <vector>

namespace asterisk {

// Splits [0, n) into contiguous blocks, one task each. Callers must make sure
// blocks touch disjoint output; every element is then computed by exactly one
// thread in a fixed order, so results do not depend on scheduling or core
// count.
template <class Fn>
void parallel_for(std::size_t n, std::size_t grain, Fn&& fn) {
    const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    const std::size_t blocks = std::min(hw, n / std::max<std::size_t>(grain, 1));
    if (blocks <= 1 || n == 0) {
        if (n > 0) fn(std::size_t{0}, n);
        return;
    }
    const std::size_t chunk = (n + blocks - 1) / blocks;
    std::vector<std::future<void>> tasks;
    tasks.reserve(blocks - 1);
    std::size_t lo = chunk;
    for (; lo < n; lo += chunk) {
        tasks.push_back(std::async(std::launch::async, fn, lo, std::min(lo + chunk, n)));
    }
    fn(std::size_t{0}, std::min(chunk, n));
    for (auto& t : tasks) t.get();
}

}  // namespace asterisk
