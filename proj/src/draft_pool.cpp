#include "mspec/draft_pool.hpp"

#include "mspec/edit_distance.hpp"
#include "mspec/rng.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <unordered_set>

namespace mspec {

static int anchor_len(int k, int tolerance) {
    return k / (tolerance + 1);
}

DraftPool::DraftPool(int num_paths, int suffix_len, int max_tolerance)
    : suffix_len_(suffix_len), max_tolerance_(max_tolerance), paths_(num_paths) {
    if (num_paths < 1 || suffix_len < 1 || max_tolerance < 0) {
        throw std::invalid_argument("DraftPool: bad dimensions");
    }
    std::vector<int> lens = {suffix_len};
    for (int e = 1; e <= max_tolerance; ++e) {
        const int a = anchor_len(suffix_len, e);
        if (a >= 1) {
            lens.push_back(a);
        }
    }
    std::sort(lens.begin(), lens.end());
    lens.erase(std::unique(lens.begin(), lens.end()), lens.end());
    for (int len : lens) {
        GramIndex idx;
        idx.gram_len = len;
        idx.per_path.assign(num_paths, 0);
        indexes_.push_back(std::move(idx));
    }
}

std::uint64_t DraftPool::gram_hash(std::span<const TokenRecord> recs) {
    std::uint64_t h = recs.size();
    for (const auto & r : recs) {
        h = hash_combine(h, r.token);
    }
    return h;
}

std::uint64_t DraftPool::gram_hash(std::span<const TokenId> toks) {
    std::uint64_t h = toks.size();
    for (TokenId t : toks) {
        h = hash_combine(h, t);
    }
    return h;
}

DraftPool::GramIndex * DraftPool::index_for(int gram_len) {
    for (auto & idx : indexes_) {
        if (idx.gram_len == gram_len) {
            return &idx;
        }
    }
    return nullptr;
}

const DraftPool::GramIndex * DraftPool::index_for(int gram_len) const {
    for (const auto & idx : indexes_) {
        if (idx.gram_len == gram_len) {
            return &idx;
        }
    }
    return nullptr;
}

void DraftPool::index_append(int path_id, const TokenRecord & record) {
    auto & hist = paths_.at(path_id);
    hist.push_back(record);
    const int end = static_cast<int>(hist.size());
    for (auto & idx : indexes_) {
        if (end < idx.gram_len) {
            continue;
        }
        std::span<const TokenRecord> gram(hist.data() + end - idx.gram_len, idx.gram_len);
        idx.postings[gram_hash(gram)].push_back({path_id, end});
        ++idx.per_path[path_id];
    }
}

std::size_t DraftPool::total_tokens() const {
    std::size_t n = 0;
    for (const auto & p : paths_) {
        n += p.size();
    }
    return n;
}

std::size_t DraftPool::window_count(int path_id, int gram_len) const {
    const auto * idx = index_for(gram_len);
    return idx ? idx->per_path.at(path_id) : 0;
}

bool DraftPool::gram_equal(int path_id, int end, std::span<const TokenId> gram) const {
    const auto & hist = paths_[path_id];
    const int start = end - static_cast<int>(gram.size());
    for (std::size_t i = 0; i < gram.size(); ++i) {
        if (hist[start + i].token != gram[i]) {
            return false;
        }
    }
    return true;
}

CandidateContinuation DraftPool::harvest(int path_id, int match_end, int distance, int max_len) const {
    const auto & hist = paths_[path_id];
    const int stop = std::min<int>(static_cast<int>(hist.size()), match_end + max_len);
    CandidateContinuation c;
    c.hit = {path_id, match_end, distance};
    c.tokens.assign(hist.begin() + match_end, hist.begin() + stop);
    return c;
}

std::vector<CandidateContinuation> DraftPool::query(std::span<const TokenId> query_suffix, int requesting_path,
                                                    int tolerance, int max_len) const {
    if (static_cast<int>(query_suffix.size()) != suffix_len_) {
        throw std::invalid_argument("DraftPool::query: suffix must have exactly k tokens");
    }
    if (tolerance < 0 || tolerance > max_tolerance_) {
        throw std::invalid_argument("DraftPool::query: tolerance outside the indexed range");
    }
    if (max_len < 1) {
        return {};
    }
    if (tolerance == 0) {
        return query_exact(query_suffix, requesting_path, max_len);
    }
    return query_fuzzy(query_suffix, requesting_path, tolerance, max_len);
}

std::vector<CandidateContinuation> DraftPool::query_exact(std::span<const TokenId> q, int requesting_path,
                                                          int max_len) const {
    std::vector<CandidateContinuation> out;
    const auto * idx = index_for(suffix_len_);
    auto it = idx->postings.find(gram_hash(q));
    if (it == idx->postings.end()) {
        return out;
    }
    for (const auto & p : it->second) {
        if (p.path_id == requesting_path) {
            continue;
        }
        if (p.end >= static_cast<int>(paths_[p.path_id].size())) {
            continue; // live end: nothing to continue with
        }
        if (!gram_equal(p.path_id, p.end, q)) {
            continue;
        }
        out.push_back(harvest(p.path_id, p.end, 0, max_len));
    }
    std::sort(out.begin(), out.end(), [](const auto & a, const auto & b) {
        return std::tie(a.hit.source_path, a.hit.match_end) < std::tie(b.hit.source_path, b.hit.match_end);
    });
    return out;
}

std::vector<CandidateContinuation> DraftPool::query_fuzzy(std::span<const TokenId> q, int requesting_path,
                                                          int tolerance, int max_len) const {
    const int k = suffix_len_;
    const int a = anchor_len(k, tolerance);

    // (path, match_end) -> lowest distance
    std::map<std::pair<int, int>, int> best;
    std::unordered_set<std::uint64_t> tried;

    auto try_window = [&](int path, int start, int end) {
        const auto & hist = paths_[path];
        if (start < 0 || end <= start || end >= static_cast<int>(hist.size())) {
            return;
        }
        const std::uint64_t key = (static_cast<std::uint64_t>(path) << 42) ^
                                  (static_cast<std::uint64_t>(start) << 21) ^ static_cast<std::uint64_t>(end);
        if (!tried.insert(key).second) {
            return;
        }
        std::vector<TokenId> window;
        window.reserve(end - start);
        for (int i = start; i < end; ++i) {
            window.push_back(hist[i].token);
        }
        if (auto d = edit_distance(q, window, tolerance)) {
            auto [it, inserted] = best.try_emplace({path, end}, *d);
            if (!inserted && *d < it->second) {
                it->second = *d;
            }
        }
    };

    auto try_start = [&](int path, int start) {
        for (int len = std::max(1, k - tolerance); len <= k + tolerance; ++len) {
            try_window(path, start, start + len);
        }
    };

    if (a < 1) {
        // tolerance >= k: no anchor survives, scan everything
        for (int j = 0; j < num_paths(); ++j) {
            if (j == requesting_path) {
                continue;
            }
            for (int s = 0; s < static_cast<int>(paths_[j].size()); ++s) {
                try_start(j, s);
            }
        }
    } else {
        const auto * idx = index_for(a);
        for (int piece = 0; piece <= tolerance; ++piece) {
            const int offset = piece * a;
            std::span<const TokenId> gram = q.subspan(offset, a);
            auto it = idx->postings.find(gram_hash(gram));
            if (it == idx->postings.end()) {
                continue;
            }
            for (const auto & p : it->second) {
                if (p.path_id == requesting_path || !gram_equal(p.path_id, p.end, gram)) {
                    continue;
                }
                const int aligned = p.end - a - offset;
                for (int s = aligned - tolerance; s <= aligned + tolerance; ++s) {
                    try_start(p.path_id, s);
                }
            }
        }
    }

    std::vector<CandidateContinuation> out;
    out.reserve(best.size());
    for (const auto & [pos, d] : best) {
        out.push_back(harvest(pos.first, pos.second, d, max_len));
    }
    return out;
}

} // namespace mspec
