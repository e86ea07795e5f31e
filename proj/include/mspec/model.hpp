#pragma once

#include "mspec/rng.hpp"
#include "mspec/types.hpp"

#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace mspec {

struct Distribution {
    std::vector<double> probs;

    // non-negative entries summing to 1 within tol
    bool valid(double tol = 1e-9) const;
};

class InvalidToken : public std::out_of_range {
  public:
    InvalidToken(TokenId token, std::size_t vocab)
        : std::out_of_range("token " + std::to_string(token) + " outside vocabulary of size " +
                            std::to_string(vocab)) {}
};

// p^(1/T) renormalized; computed relative to the max entry so T -> 0+ stays finite.
Distribution apply_temperature(std::span<const double> probs, double temperature);

// Inverse CDF in ascending token-id order; consumes exactly one variate.
TokenId sample(const Distribution & dist, RngStream & rng);

// Conditional language model over integer token ids. Implementations must be
// deterministic in (prefix, temperature) and safe to call from several threads.
class LanguageModel {
  public:
    virtual ~LanguageModel() = default;

    virtual std::size_t vocab_size() const = 0;
    virtual TokenId     eos_token() const  = 0;

    // conditioning tokens standing in for a prompt, selected by an opaque label
    virtual std::vector<TokenId> prompt_tokens(std::uint64_t prompt_context) const = 0;

    virtual Distribution conditional(std::span<const TokenId> prefix, double temperature) const = 0;
};

struct SimModelSpec {
    std::size_t   vocab_size         = 64;
    int           order              = 3;
    std::uint64_t transition_seed    = 1;
    double        base_concentration = 0.25;
    TokenId       eos_token          = 0;
    double        eos_prob           = 0.0;
    std::size_t   stage_size         = 0; // 0: every token reachable from every context

    bool operator==(const SimModelSpec &) const = default;
};

SimModelSpec validate_model_spec(const SimModelSpec & spec);
void         apply_model_keys(SimModelSpec & spec, const KeyValues & kv);
KeyValues    model_to_key_values(const SimModelSpec & spec);

// Order-m Markov model with seeded random rows.
//
// Row construction for a context (the last `order` tokens of the prefix):
//   key  = transition_seed mixed with each context token via hash_combine, in
//          order; if the prefix is shorter than `order` the missing leading
//          positions are filled with the sentinel value vocab_size.
//   for i = 0 .. vocab_size-1 (one variate consumed per i, used or not):
//          u_i = uniform variate number i of RngStream(key), mapped to (0, 1] as 1 - u
//          w_i = (-ln u_i)^(1 / base_concentration)   if i is in the support, else 0
//   row[i] = (1 - eos_prob) * w_i / sum(w),   then row[eos_token] += eos_prob
// Smaller base_concentration gives more peaked rows.
//
// The support is every token except eos_token. With stage_size > 0 the
// vocabulary is cut into consecutive stages of stage_size ids and the chain
// only moves forward: after token x (stage s, offset o) the support is the
// tokens of stage s with offset > o plus the entry tokens of stage s + 1; after
// the last stage the only entry token is eos_token. An empty context enters
// stage 0, and prompts are drawn from stage 0. Variates for entry tokens come
// from RngStream(hash_combine(transition_seed ^ kStageSalt, s + 1)) instead of
// the context stream, so every context leaving stage s ranks the entries of
// stage s + 1 the same way. eos_prob is added on top of the row in both modes.
class SimModel : public LanguageModel {
  public:
    static constexpr std::uint64_t kStageSalt = 0x5354414745ULL;

    explicit SimModel(SimModelSpec spec);

    std::size_t vocab_size() const override { return spec_.vocab_size; }
    TokenId     eos_token() const override { return spec_.eos_token; }
    const SimModelSpec & spec() const { return spec_; }

    std::vector<TokenId> prompt_tokens(std::uint64_t prompt_context) const override;
    Distribution         conditional(std::span<const TokenId> prefix, double temperature) const override;

    // untempered row for the context ending `prefix`
    std::vector<double> base_row(std::span<const TokenId> prefix) const;

    // tokens drawn from the variate weights after `prefix` (eos_prob aside)
    bool in_support(std::span<const TokenId> prefix, TokenId next) const;
    std::size_t num_stages() const;

  private:
    std::uint64_t       context_key(std::span<const TokenId> prefix) const;
    std::size_t         next_stage(std::span<const TokenId> prefix) const;
    std::vector<double> build_row(std::uint64_t key, std::span<const TokenId> prefix) const;

    SimModelSpec spec_;

    mutable std::mutex                                            cache_mutex_;
    mutable std::unordered_map<std::uint64_t, std::shared_ptr<const std::vector<double>>> cache_;
};

} // namespace mspec
