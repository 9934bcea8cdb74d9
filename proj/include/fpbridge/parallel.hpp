#pragma once

#include <cstdint>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fpbridge {

inline int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

inline void set_threads(int n) {
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

// Replicates are split into fixed-size blocks; each block's partial result lands in its own
// slot and the caller folds slots in index order. Output is therefore independent of the
// thread count (block size is part of the result's definition, keep it stable per call site).
inline constexpr std::uint64_t kDefaultBlock = 4096;

template <class Result, class BlockFn>
std::vector<Result> run_blocks(std::uint64_t n_items, std::uint64_t block, BlockFn fn) {
    const std::int64_t n_blocks = block ? static_cast<std::int64_t>((n_items + block - 1) / block) : 0;
    std::vector<Result> out(static_cast<std::size_t>(n_blocks));
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (std::int64_t b = 0; b < n_blocks; ++b) {
        const std::uint64_t lo = static_cast<std::uint64_t>(b) * block;
        const std::uint64_t hi = lo + block < n_items ? lo + block : n_items;
        out[static_cast<std::size_t>(b)] = fn(lo, hi);
    }
    return out;
}

} // namespace fpbridge
