#include "mspec/consensus_graph.hpp"

#include <algorithm>
#include <cstdio>

namespace mspec {

static std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

// higher score first, then lower token id
static bool better(double score, TokenId tok, double best_score, TokenId best_tok) {
    return score > best_score || (score == best_score && tok < best_tok);
}

ConsensusGraph::ConsensusGraph(std::span<const CandidateContinuation> candidates, double alpha, int max_len)
    : alpha_(alpha), num_candidates_(static_cast<int>(candidates.size())) {
    if (candidates.empty()) {
        throw EmptyPool();
    }
    int depth = 0;
    for (const auto & c : candidates) {
        depth = std::max(depth, std::min<int>(max_len, static_cast<int>(c.tokens.size())));
    }
    layers_.resize(depth);
    edges_.resize(depth);
    out_total_.resize(depth);

    const double root_freq = 1.0 / static_cast<double>(candidates.size());
    for (const auto & c : candidates) {
        const int n = std::min<int>(max_len, static_cast<int>(c.tokens.size()));
        if (n == 0) {
            continue;
        }
        root_scores_[c.tokens[0].token] += alpha * c.tokens[0].prob + (1.0 - alpha) * root_freq;
        for (int d = 0; d < n; ++d) {
            layers_[d].push_back(c.tokens[d].token);
            if (d + 1 < n) {
                auto & e = edges_[d][{c.tokens[d].token, c.tokens[d + 1].token}];
                e.prob_sum += c.tokens[d + 1].prob;
                e.count += 1;
                out_total_[d][c.tokens[d].token] += 1;
            }
        }
    }
    for (auto & l : layers_) {
        std::sort(l.begin(), l.end());
        l.erase(std::unique(l.begin(), l.end()), l.end());
    }
}

std::size_t ConsensusGraph::node_count() const {
    std::size_t n = 0;
    for (const auto & l : layers_) {
        n += l.size();
    }
    return n;
}

std::size_t ConsensusGraph::edge_count() const {
    std::size_t n = 0;
    for (const auto & e : edges_) {
        n += e.size();
    }
    return n;
}

double ConsensusGraph::weight(int d, TokenId u, TokenId v) const {
    const auto & layer_edges = edges_.at(d);
    auto it = layer_edges.find({u, v});
    if (it == layer_edges.end()) {
        return 0.0;
    }
    const double freq = static_cast<double>(it->second.count) / out_total_[d].at(u);
    return alpha_ * it->second.prob_sum + (1.0 - alpha_) * freq;
}

double ConsensusGraph::root_score(TokenId v) const {
    auto it = root_scores_.find(v);
    return it == root_scores_.end() ? 0.0 : it->second;
}

DraftSequence ConsensusGraph::extract(int max_len) const {
    DraftSequence draft;
    if (layers_.empty() || max_len < 1) {
        return draft;
    }
    TokenId cur = 0;
    double best = -1.0;
    for (const auto & [tok, score] : root_scores_) {
        if (better(score, tok, best, cur)) {
            best = score;
            cur = tok;
        }
    }
    draft.tokens.push_back(cur);
    for (int d = 0; d + 1 < num_layers() && static_cast<int>(draft.tokens.size()) < max_len; ++d) {
        const auto & layer_edges = edges_[d];
        // edges keyed (u, v): successors of cur are a contiguous range
        auto it = layer_edges.lower_bound({cur, 0});
        bool found = false;
        TokenId next = 0;
        double next_w = -1.0;
        for (; it != layer_edges.end() && it->first.first == cur; ++it) {
            const double w = weight(d, cur, it->first.second);
            if (!found || better(w, it->first.second, next_w, next)) {
                found = true;
                next_w = w;
                next = it->first.second;
            }
        }
        if (!found) {
            break; // leaf
        }
        draft.tokens.push_back(next);
        cur = next;
    }
    return draft;
}

void ConsensusGraph::dump(std::ostream & os) const {
    os << "graph layers=" << num_layers() << " candidates=" << num_candidates_ << " alpha=" << fmt(alpha_) << '\n';
    for (int d = 0; d < num_layers(); ++d) {
        for (TokenId t : layers_[d]) {
            os << "node " << d << ' ' << t;
            if (d == 0) {
                os << ' ' << fmt(root_score(t));
            }
            os << '\n';
        }
    }
    for (int d = 0; d < num_layers(); ++d) {
        for (const auto & [uv, e] : edges_[d]) {
            os << "edge " << d << ' ' << uv.first << ' ' << uv.second << " count=" << e.count
               << " prob_sum=" << fmt(e.prob_sum) << " weight=" << fmt(weight(d, uv.first, uv.second)) << '\n';
        }
    }
}

ConsensusTree::ConsensusTree(std::span<const CandidateContinuation> candidates, double alpha, int max_len)
    : alpha_(alpha), num_candidates_(static_cast<int>(candidates.size())) {
    if (candidates.empty()) {
        throw EmptyPool();
    }
    nodes_.push_back(Node{0, -1, -1, 0.0, 0, {}});
    for (const auto & c : candidates) {
        const int n = std::min<int>(max_len, static_cast<int>(c.tokens.size()));
        int at = 0;
        for (int d = 0; d < n; ++d) {
            const TokenId t = c.tokens[d].token;
            auto it = nodes_[at].children.find(t);
            int child;
            if (it == nodes_[at].children.end()) {
                child = static_cast<int>(nodes_.size());
                nodes_[at].children.emplace(t, child);
                nodes_.push_back(Node{t, d, at, 0.0, 0, {}});
            } else {
                child = it->second;
            }
            nodes_[child].prob_sum += c.tokens[d].prob;
            nodes_[child].count += 1;
            at = child;
        }
    }
}

double ConsensusTree::weight(int child) const {
    const Node & n = nodes_.at(child);
    if (n.parent == 0) {
        // root children score like the DAG's layer 0
        return alpha_ * n.prob_sum + (1.0 - alpha_) * n.count / static_cast<double>(num_candidates_);
    }
    int out_total = 0;
    for (const auto & [tok, idx] : nodes_[n.parent].children) {
        out_total += nodes_[idx].count;
    }
    return alpha_ * n.prob_sum + (1.0 - alpha_) * n.count / static_cast<double>(out_total);
}

DraftSequence ConsensusTree::extract(int max_len) const {
    DraftSequence draft;
    int at = 0;
    while (static_cast<int>(draft.tokens.size()) < max_len && !nodes_[at].children.empty()) {
        int best = -1;
        double best_w = -1.0;
        for (const auto & [tok, idx] : nodes_[at].children) {
            const double w = weight(idx);
            if (best < 0 || better(w, tok, best_w, nodes_[best].token)) {
                best = idx;
                best_w = w;
            }
        }
        draft.tokens.push_back(nodes_[best].token);
        at = best;
    }
    return draft;
}

void ConsensusTree::dump(std::ostream & os) const {
    os << "tree nodes=" << node_count() << " candidates=" << num_candidates_ << " alpha=" << fmt(alpha_) << '\n';
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
        const auto & n = nodes_[i];
        os << "tnode " << i << " parent=" << n.parent << " depth=" << n.depth << " token=" << n.token
           << " count=" << n.count << " prob_sum=" << fmt(n.prob_sum) << " weight=" << fmt(weight(static_cast<int>(i)))
           << '\n';
    }
}

DraftSequence build_list(std::span<const CandidateContinuation> candidates, double alpha, int max_len) {
    if (candidates.empty()) {
        throw EmptyPool();
    }
    const CandidateContinuation * best = nullptr;
    double best_score = 0.0;
    for (const auto & c : candidates) {
        if (c.tokens.empty()) {
            continue;
        }
        double mean = 0.0;
        for (const auto & r : c.tokens) {
            mean += r.prob;
        }
        mean /= static_cast<double>(c.tokens.size());
        const double score = alpha * mean + (1.0 - alpha);
        bool take = best == nullptr || score > best_score;
        if (!take && score == best_score) {
            take = std::tie(c.hit.distance, c.hit.source_path, c.hit.match_end) <
                   std::tie(best->hit.distance, best->hit.source_path, best->hit.match_end);
        }
        if (take) {
            best = &c;
            best_score = score;
        }
    }
    DraftSequence draft;
    if (best == nullptr) {
        return draft;
    }
    const int n = std::min<int>(max_len, static_cast<int>(best->tokens.size()));
    for (int i = 0; i < n; ++i) {
        draft.tokens.push_back(best->tokens[i].token);
    }
    return draft;
}

DraftSequence extract_draft(PoolStructure structure, std::span<const CandidateContinuation> candidates,
                            double alpha, int max_len, std::ostream * dump) {
    switch (structure) {
        case PoolStructure::dag: {
            ConsensusGraph g(candidates, alpha, max_len);
            if (dump) {
                g.dump(*dump);
            }
            return g.extract(max_len);
        }
        case PoolStructure::tree: {
            ConsensusTree t(candidates, alpha, max_len);
            if (dump) {
                t.dump(*dump);
            }
            return t.extract(max_len);
        }
        case PoolStructure::list: {
            auto d = build_list(candidates, alpha, max_len);
            if (dump) {
                *dump << "list tokens=" << d.tokens.size() << '\n';
            }
            return d;
        }
    }
    throw EmptyPool();
}

} // namespace mspec
