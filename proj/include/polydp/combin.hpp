#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace polydp {

/// Saturation sentinel for binomial arithmetic; anything at or above this
/// value means "too large to enumerate" and must only be compared, never
/// used as an exact count.
inline constexpr std::uint64_t kCountSaturated = std::numeric_limits<std::uint64_t>::max() / 4;

/// C(n, k) with saturating arithmetic.
inline std::uint64_t binomial(int n, int k) {
    if (k < 0 || n < 0 || k > n) return 0;
    if (k > n - k) k = n - k;
    std::uint64_t r = 1;
    for (int i = 1; i <= k; ++i) {
        // r * (n - k + i) / i is always integral at this point.
        std::uint64_t num = static_cast<std::uint64_t>(n - k + i);
        if (r > kCountSaturated / num) return kCountSaturated;
        r = r * num / static_cast<std::uint64_t>(i);
    }
    return r;
}

/// C(n, <= k) = sum_{j=0..k} C(n, j), saturating.
inline std::uint64_t binomial_sum(int n, int k) {
    std::uint64_t total = 0;
    for (int j = 0; j <= k && j <= n; ++j) {
        std::uint64_t b = binomial(n, j);
        if (b >= kCountSaturated || total > kCountSaturated - b) return kCountSaturated;
        total += b;
    }
    return total;
}

/// Visits every r-element subset of {0..n-1} in lexicographic order.
/// The span passed to `fn` is only valid for the duration of the call.
template <class F>
void for_each_combination(int n, int r, F&& fn) {
    if (r < 0 || r > n) return;
    std::vector<int> c(static_cast<std::size_t>(r));
    for (int i = 0; i < r; ++i) c[static_cast<std::size_t>(i)] = i;
    while (true) {
        fn(std::span<const int>(c));
        int i = r - 1;
        while (i >= 0 && c[static_cast<std::size_t>(i)] == n - r + i) --i;
        if (i < 0) break;
        ++c[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < r; ++j) c[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j - 1)] + 1;
    }
}

/// Graded enumeration: all subsets of {0..n-1} of size 0..t, ordered by
/// size first and lexicographically within a size. This is the canonical
/// monomial order used everywhere in the library (serialization, simplex
/// vector layout).
template <class F>
void for_each_subset_up_to(int n, int t, F&& fn) {
    for (int r = 0; r <= t && r <= n; ++r) for_each_combination(n, r, fn);
}

/// Rank of `set` (sorted, distinct, 0-based) in the graded-lex order over
/// subsets of {0..n-1} with size <= |set|.
inline std::uint64_t subset_rank(std::span<const int> set, int n) {
    const int r = static_cast<int>(set.size());
    std::uint64_t rank = 0;
    for (int s = 0; s < r; ++s) rank += binomial(n, s);
    // Lexicographic rank among size-r combinations.
    int prev = -1;
    for (int i = 0; i < r; ++i) {
        for (int v = prev + 1; v < set[static_cast<std::size_t>(i)]; ++v) rank += binomial(n - 1 - v, r - 1 - i);
        prev = set[static_cast<std::size_t>(i)];
    }
    return rank;
}

}  // namespace polydp
