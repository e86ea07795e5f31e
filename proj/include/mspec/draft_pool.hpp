#pragma once

#include "mspec/types.hpp"

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

namespace mspec {

struct MatchHit {
    int source_path = 0;
    int match_end   = 0; // exclusive end of the matched window in the source path
    int distance    = 0;

    bool operator==(const MatchHit &) const = default;
};

struct CandidateContinuation {
    MatchHit                 hit;
    std::vector<TokenRecord> tokens; // up to L records starting at hit.match_end
};

// Incremental index over every path's history answering cross-path suffix queries.
//
// Exact queries use a k-gram index. Queries with tolerance e >= 1 split the query
// into e + 1 disjoint pieces of length floor(k / (e + 1)); any window within e
// edits keeps at least one piece intact, so every piece occurrence seeds the
// windows it could belong to and banded DP confirms them.
class DraftPool {
  public:
    DraftPool(int num_paths, int suffix_len, int max_tolerance);

    void index_append(int path_id, const TokenRecord & record);

    // Continuations (capped at max_len) following windows of other paths within
    // `tolerance` edits of query. Sorted by (source_path, match_end).
    std::vector<CandidateContinuation> query(std::span<const TokenId> query_suffix, int requesting_path,
                                             int tolerance, int max_len) const;

    int  num_paths() const { return static_cast<int>(paths_.size()); }
    int  suffix_len() const { return suffix_len_; }
    int  max_tolerance() const { return max_tolerance_; }

    const std::vector<TokenRecord> & history(int path_id) const { return paths_.at(path_id); }
    std::size_t total_tokens() const;

    // number of registered windows of the given gram length for a path
    std::size_t window_count(int path_id, int gram_len) const;

  private:
    struct Posting {
        int path_id;
        int end; // exclusive end of the gram
    };

    struct GramIndex {
        int gram_len = 0;
        std::unordered_map<std::uint64_t, std::vector<Posting>> postings;
        std::vector<std::size_t> per_path;
    };

    static std::uint64_t gram_hash(std::span<const TokenRecord> recs);
    static std::uint64_t gram_hash(std::span<const TokenId> toks);

    GramIndex *       index_for(int gram_len);
    const GramIndex * index_for(int gram_len) const;

    bool gram_equal(int path_id, int end, std::span<const TokenId> gram) const;

    std::vector<CandidateContinuation> query_exact(std::span<const TokenId> q, int requesting_path,
                                                   int max_len) const;
    std::vector<CandidateContinuation> query_fuzzy(std::span<const TokenId> q, int requesting_path,
                                                   int tolerance, int max_len) const;

    CandidateContinuation harvest(int path_id, int match_end, int distance, int max_len) const;

    int suffix_len_;
    int max_tolerance_;
    std::vector<std::vector<TokenRecord>> paths_;
    std::vector<GramIndex> indexes_;
};

} // namespace mspec
