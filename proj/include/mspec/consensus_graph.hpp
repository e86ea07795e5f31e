#pragma once

#include "mspec/draft_pool.hpp"
#include "mspec/types.hpp"

#include <map>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mspec {

class EmptyPool : public std::runtime_error {
  public:
    EmptyPool() : std::runtime_error("no draft candidates") {}
};

struct EdgeStats {
    double prob_sum = 0.0; // sum of stored probabilities of the successor occurrence
    int    count    = 0;   // witnessing candidates
};

struct DraftSequence {
    std::vector<TokenId> tokens;

    bool operator==(const DraftSequence &) const = default;
};

// Layered DAG: layer d holds the distinct tokens found at offset d of any
// candidate; identical tokens within a layer share one node.
class ConsensusGraph {
  public:
    ConsensusGraph(std::span<const CandidateContinuation> candidates, double alpha, int max_len);

    int    num_layers() const { return static_cast<int>(layers_.size()); }
    double alpha() const { return alpha_; }
    int    num_candidates() const { return num_candidates_; }

    // sorted distinct tokens of layer d
    const std::vector<TokenId> & layer(int d) const { return layers_.at(d); }
    std::size_t node_count() const;

    // edges leaving layer d, keyed (u, v)
    const std::map<std::pair<TokenId, TokenId>, EdgeStats> & edges(int d) const { return edges_.at(d); }
    std::size_t edge_count() const;

    // alpha * prob_sum + (1 - alpha) * count / (witnesses of all edges leaving u)
    double weight(int d, TokenId u, TokenId v) const;
    // sum over candidates starting with v of alpha * prob + (1 - alpha) / |candidates|
    double root_score(TokenId v) const;

    DraftSequence extract(int max_len) const;

    // Line format:
    //   graph layers=<n> candidates=<c> alpha=<a>
    //   node <layer> <token> [root_score]
    //   edge <layer> <u> <v> count=<c> prob_sum=<p> weight=<w>
    void dump(std::ostream & os) const;

  private:
    double alpha_;
    int    num_candidates_;
    std::vector<std::vector<TokenId>> layers_;
    std::vector<std::map<std::pair<TokenId, TokenId>, EdgeStats>> edges_;
    std::vector<std::map<TokenId, int>> out_total_; // per layer: u -> witnesses of edges leaving u
    std::map<TokenId, double> root_scores_;
};

// Prefix tree over the candidates: shared prefixes share a branch, but equal
// tokens reached through different prefixes stay separate nodes.
class ConsensusTree {
  public:
    struct Node {
        TokenId token  = 0;
        int     depth  = 0;
        int     parent = -1;
        double  prob_sum = 0.0; // witnesses of the edge parent -> this
        int     count    = 0;
        std::map<TokenId, int> children;
    };

    ConsensusTree(std::span<const CandidateContinuation> candidates, double alpha, int max_len);

    std::size_t node_count() const { return nodes_.size() - 1; }
    const std::vector<Node> & nodes() const { return nodes_; } // index 0 is the virtual root

    double weight(int child) const;
    DraftSequence extract(int max_len) const;
    void dump(std::ostream & os) const;

  private:
    double alpha_;
    int    num_candidates_;
    std::vector<Node> nodes_;
};

// Best single candidate: alpha * mean prob + (1 - alpha), then lower match
// distance, then lower (source_path, match_end).
DraftSequence build_list(std::span<const CandidateContinuation> candidates, double alpha, int max_len);

// Dispatches to the configured structure. Throws EmptyPool for no candidates.
DraftSequence extract_draft(PoolStructure structure, std::span<const CandidateContinuation> candidates,
                            double alpha, int max_len, std::ostream * dump = nullptr);

} // namespace mspec
