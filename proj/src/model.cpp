#include "mspec/model.hpp"

#include <algorithm>
#include <cmath>

namespace mspec {

bool Distribution::valid(double tol) const {
    double sum = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0)) {
            return false;
        }
        sum += p;
    }
    return std::fabs(sum - 1.0) <= tol;
}

Distribution apply_temperature(std::span<const double> probs, double temperature) {
    Distribution out;
    out.probs.assign(probs.size(), 0.0);
    if (temperature == 1.0) {
        out.probs.assign(probs.begin(), probs.end());
        return out;
    }
    double max_log = -INFINITY;
    for (double p : probs) {
        if (p > 0.0) {
            max_log = std::max(max_log, std::log(p));
        }
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] > 0.0) {
            out.probs[i] = std::exp((std::log(probs[i]) - max_log) / temperature);
            sum += out.probs[i];
        }
    }
    for (double & p : out.probs) {
        p /= sum;
    }
    return out;
}

TokenId sample(const Distribution & dist, RngStream & rng) {
    const double u = rng.uniform();
    double cum = 0.0;
    TokenId last_nonzero = 0;
    for (std::size_t i = 0; i < dist.probs.size(); ++i) {
        if (dist.probs[i] > 0.0) {
            last_nonzero = static_cast<TokenId>(i);
        }
        cum += dist.probs[i];
        if (u < cum) {
            return static_cast<TokenId>(i);
        }
    }
    // rounding left the cumulative sum just below u
    return last_nonzero;
}

SimModelSpec validate_model_spec(const SimModelSpec & spec) {
    if (spec.vocab_size < 2) {
        throw ConfigError("vocab_size", "must be >= 2");
    }
    if (spec.order < 1) {
        throw ConfigError("order", "must be >= 1");
    }
    if (!(spec.base_concentration > 0.0) || !std::isfinite(spec.base_concentration)) {
        throw ConfigError("base_concentration", "must be positive");
    }
    if (spec.eos_token >= spec.vocab_size) {
        throw ConfigError("eos_token", "must be < vocab_size");
    }
    if (!(spec.eos_prob >= 0.0 && spec.eos_prob < 1.0)) {
        throw ConfigError("eos_prob", "must lie in [0, 1)");
    }
    if (spec.stage_size == 1 || spec.stage_size >= spec.vocab_size) {
        throw ConfigError("stage_size", "must be 0 or in [2, vocab_size)");
    }
    if (spec.stage_size > 0 && spec.vocab_size % spec.stage_size == 1 && spec.eos_token == spec.vocab_size - 1) {
        throw ConfigError("stage_size", "the last stage holds only eos");
    }
    return spec;
}

void apply_model_keys(SimModelSpec & spec, const KeyValues & kv) {
    spec.vocab_size         = static_cast<std::size_t>(kv_int(kv, "vocab_size", static_cast<long long>(spec.vocab_size)));
    spec.order              = static_cast<int>(kv_int(kv, "order", spec.order));
    spec.transition_seed    = kv_u64(kv, "transition_seed", spec.transition_seed);
    spec.base_concentration = kv_double(kv, "base_concentration", spec.base_concentration);
    spec.eos_token          = static_cast<TokenId>(kv_int(kv, "eos_token", spec.eos_token));
    spec.eos_prob           = kv_double(kv, "eos_prob", spec.eos_prob);
    spec.stage_size         = static_cast<std::size_t>(kv_int(kv, "stage_size", static_cast<long long>(spec.stage_size)));
}

KeyValues model_to_key_values(const SimModelSpec & spec) {
    return {
        {"vocab_size",         std::to_string(spec.vocab_size)},
        {"order",              std::to_string(spec.order)},
        {"transition_seed",    std::to_string(spec.transition_seed)},
        {"base_concentration", format_double(spec.base_concentration)},
        {"eos_token",          std::to_string(spec.eos_token)},
        {"eos_prob",           format_double(spec.eos_prob)},
        {"stage_size",         std::to_string(spec.stage_size)},
    };
}

SimModel::SimModel(SimModelSpec spec) : spec_(validate_model_spec(spec)) {}

std::vector<TokenId> SimModel::prompt_tokens(std::uint64_t prompt_context) const {
    std::vector<TokenId> out;
    RngStream rng = RngStream::derive(spec_.transition_seed ^ 0x70726f6d7074ULL, prompt_context);
    while (out.size() < static_cast<std::size_t>(spec_.order)) {
        const std::size_t range = spec_.stage_size == 0 ? spec_.vocab_size : spec_.stage_size;
        const auto t = static_cast<TokenId>(rng.next_u64() % range);
        if (t != spec_.eos_token) {
            out.push_back(t);
        }
    }
    return out;
}

std::uint64_t SimModel::context_key(std::span<const TokenId> prefix) const {
    const std::size_t order = static_cast<std::size_t>(spec_.order);
    std::uint64_t key = spec_.transition_seed;
    for (std::size_t i = 0; i < order; ++i) {
        // position i of the context window; window ends at prefix.size()
        const std::size_t need = order - i;
        std::uint64_t tok = spec_.vocab_size;
        if (prefix.size() >= need) {
            tok = prefix[prefix.size() - need];
            if (tok >= spec_.vocab_size) {
                throw InvalidToken(static_cast<TokenId>(tok), spec_.vocab_size);
            }
        }
        key = hash_combine(key, tok);
    }
    return key;
}

std::size_t SimModel::num_stages() const {
    const std::size_t st = spec_.stage_size;
    return st == 0 ? 1 : (spec_.vocab_size + st - 1) / st;
}

// stage whose entry tokens follow `prefix`; num_stages() stands for "eos"
std::size_t SimModel::next_stage(std::span<const TokenId> prefix) const {
    if (prefix.empty()) {
        return 0;
    }
    return prefix.back() / spec_.stage_size + 1;
}

bool SimModel::in_support(std::span<const TokenId> prefix, TokenId next) const {
    if (next >= spec_.vocab_size) {
        return false;
    }
    const std::size_t st = spec_.stage_size;
    if (st == 0) {
        return next != spec_.eos_token;
    }
    const std::size_t entry = next_stage(prefix);
    if (next == spec_.eos_token) {
        return entry == num_stages();
    }
    if (!prefix.empty() && next / st == prefix.back() / st) {
        return next % st > prefix.back() % st;
    }
    return next / st == entry;
}

std::vector<double> SimModel::build_row(std::uint64_t key, std::span<const TokenId> prefix) const {
    std::vector<double> row(spec_.vocab_size, 0.0);
    const std::size_t st = spec_.stage_size;
    const std::size_t entry = st == 0 ? 0 : next_stage(prefix);
    RngStream rng(key);
    RngStream stage_rng(hash_combine(spec_.transition_seed ^ kStageSalt, entry));
    const double inv_conc = 1.0 / spec_.base_concentration;
    double sum = 0.0;
    for (std::size_t i = 0; i < spec_.vocab_size; ++i) {
        double u = 1.0 - rng.uniform();
        const double u_stage = 1.0 - stage_rng.uniform();
        const auto tok = static_cast<TokenId>(i);
        if (!in_support(prefix, tok)) {
            continue;
        }
        const bool entry_token = st > 0 && (tok == spec_.eos_token || prefix.empty() || i / st != prefix.back() / st);
        if (entry_token) {
            u = u_stage;
        }
        const double w = std::pow(-std::log(u), inv_conc);
        row[i] = w;
        sum += w;
    }
    const double scale = (1.0 - spec_.eos_prob) / sum;
    for (std::size_t i = 0; i < spec_.vocab_size; ++i) {
        row[i] *= scale;
    }
    row[spec_.eos_token] += spec_.eos_prob;
    return row;
}

std::vector<double> SimModel::base_row(std::span<const TokenId> prefix) const {
    for (TokenId t : prefix) {
        if (t >= spec_.vocab_size) {
            throw InvalidToken(t, spec_.vocab_size);
        }
    }
    const std::uint64_t key = context_key(prefix);
    {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        if (auto it = cache_.find(key); it != cache_.end()) {
            return *it->second;
        }
    }
    auto row = std::make_shared<const std::vector<double>>(build_row(key, prefix));
    std::lock_guard<std::mutex> lock(cache_mutex_);
    cache_.emplace(key, row);
    return *row;
}

Distribution SimModel::conditional(std::span<const TokenId> prefix, double temperature) const {
    const auto row = base_row(prefix);
    return apply_temperature(row, temperature);
}

} // namespace mspec
