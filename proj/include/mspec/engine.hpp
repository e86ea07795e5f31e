#pragma once

#include "mspec/consensus_graph.hpp"
#include "mspec/draft_pool.hpp"
#include "mspec/model.hpp"
#include "mspec/rng.hpp"
#include "mspec/types.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace mspec {

struct VerificationResult {
    int                      accepted_len = 0; // tau
    std::vector<TokenRecord> emitted;
};

// Samples position by position from the model, accepting draft tokens while they
// equal the sampled token. Emits the first mismatching sample as the correction,
// or one bonus sample after a fully accepted draft. Stops early after EOS or once
// max_emit tokens have been emitted.
VerificationResult verify_draft(const LanguageModel & model, std::span<const TokenId> prefix,
                                const DraftSequence & draft, double temperature, RngStream & rng,
                                int max_emit);

struct StepRecord {
    int         round      = 0;
    int         path_id    = 0;
    int         draft_len  = 0; // 0 for a vanilla step
    int         accepted   = 0;
    int         emitted    = 0;
    int         candidates = 0;
    bool        queried    = false; // the pool was consulted this step
    double      draft_us   = 0.0; // query + structure build + extraction

    // timing is excluded: it is the one nondeterministic field
    bool same_outcome(const StepRecord & o) const {
        return round == o.round && path_id == o.path_id && draft_len == o.draft_len && accepted == o.accepted &&
               emitted == o.emitted && candidates == o.candidates && queried == o.queried;
    }
};

struct SessionTrace {
    EngineConfig            config;
    std::vector<StepRecord> steps;
    std::vector<PathState>  paths;
    std::string             answer;

    bool same_outcome(const SessionTrace & o) const;
};

// Answer label of a finished path: the last non-EOS token, or "" if there is none.
std::string path_answer(const PathState & path, TokenId eos);

// One decoding session over N paths sharing a draft pool. Queries within a round
// see the pool as it was at round start; emitted tokens reach the pool in
// end_round(), so results do not depend on the order paths are stepped in.
class Session {
  public:
    Session(const EngineConfig & cfg, const LanguageModel & model, std::uint64_t prompt_context,
            bool drafting = true);

    StepRecord decode_step(int path_id);
    void       end_round();

    // one step for every unfinished path, then end_round()
    void run_round();
    bool done() const;

    int                      round() const { return round_; }
    const PathState &        path(int path_id) const { return paths_.at(path_id); }
    const DraftPool &        pool() const { return pool_; }
    const std::vector<StepRecord> & steps() const { return steps_; }

    void set_graph_dump(std::ostream * os) { dump_ = os; }

    SessionTrace finish() const;

  private:
    EngineConfig               cfg_;
    const LanguageModel &      model_;
    bool                       drafting_;
    std::vector<TokenId>       prompt_;
    std::vector<PathState>     paths_;
    std::vector<std::vector<TokenId>> contexts_; // prompt + generated tokens per path
    std::vector<RngStream>     rngs_;
    DraftPool                  pool_;
    std::vector<std::vector<TokenRecord>> pending_;
    std::vector<StepRecord>    steps_;
    int                        round_ = 0;
    std::ostream *             dump_  = nullptr;
};

SessionTrace run_session(const EngineConfig & cfg, const LanguageModel & model, std::uint64_t prompt_context,
                         std::ostream * graph_dump = nullptr);

// Same schedule without drafting: every step samples exactly one token.
SessionTrace run_vanilla(const EngineConfig & cfg, const LanguageModel & model, std::uint64_t prompt_context);

// JSON Lines: one "config" record, one "step" record per step, one "path" record
// per path, one "answer" record. Field list in docs/trace_format.md.
void         write_trace(std::ostream & os, const SessionTrace & trace, bool include_timing = true);
SessionTrace read_trace(std::istream & is);

} // namespace mspec
