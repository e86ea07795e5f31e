#include "mspec/edit_distance.hpp"

#include <algorithm>
#include <cstdlib>
#include <vector>

namespace mspec {

std::optional<int> edit_distance(std::span<const TokenId> a, std::span<const TokenId> b, int cap) {
    if (cap < 0) {
        return std::nullopt;
    }
    const int n = static_cast<int>(a.size());
    const int m = static_cast<int>(b.size());
    if (std::abs(n - m) > cap) {
        return std::nullopt;
    }
    const int big = cap + 1;

    // row i holds D[i][j] for j in [i - cap, i + cap], stored at j - i + cap
    const int width = 2 * cap + 1;
    std::vector<int> prev(width, big), cur(width, big);
    for (int j = 0; j <= std::min(m, cap); ++j) {
        prev[j + cap] = j;
    }
    for (int i = 1; i <= n; ++i) {
        std::fill(cur.begin(), cur.end(), big);
        const int jlo = std::max(0, i - cap);
        const int jhi = std::min(m, i + cap);
        int row_min = big;
        for (int j = jlo; j <= jhi; ++j) {
            const int s = j - i + cap;
            int v;
            if (j == 0) {
                v = i;
            } else {
                // diagonal: D[i-1][j-1] sits at the same band slot in prev
                v = prev[s] + (a[i - 1] == b[j - 1] ? 0 : 1);
                if (s + 1 < width) {
                    v = std::min(v, prev[s + 1] + 1); // D[i-1][j]
                }
                if (s > 0) {
                    v = std::min(v, cur[s - 1] + 1); // D[i][j-1]
                }
            }
            cur[s] = std::min(v, big);
            row_min = std::min(row_min, cur[s]);
        }
        if (row_min > cap) {
            return std::nullopt;
        }
        std::swap(prev, cur);
    }
    const int d = prev[m - n + cap];
    if (d > cap) {
        return std::nullopt;
    }
    return d;
}

} // namespace mspec
