#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace matstein {

/// Runs fn(i) for i in [0, n) over `threads` workers in contiguous chunks.
/// Each index must write only its own output slot, so the result does not
/// depend on the thread count.
inline void parallel_for(long n, int threads, const std::function<void(long)>& fn) {
    if (threads <= 1 || n < 2 * threads) {
        for (long i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    const long chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const long lo = t * chunk;
        const long hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (long i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

/// Pairwise tree reduction over [lo, hi): combine(reduce(lo,mid), reduce(mid,hi)).
/// The reduction order is fixed by the recursion, independent of threading,
/// so accumulated floating point results are bit-reproducible.
template <typename T, typename Leaf, typename Combine>
T pairwise_reduce(long lo, long hi, const Leaf& leaf, const Combine& combine) {
    if (hi - lo == 1) return leaf(lo);
    const long mid = lo + (hi - lo) / 2;
    T left = pairwise_reduce<T>(lo, mid, leaf, combine);
    T right = pairwise_reduce<T>(mid, hi, leaf, combine);
    return combine(std::move(left), std::move(right));
}

}  // namespace matstein
