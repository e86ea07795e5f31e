#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace mspec {

using TokenId = std::uint32_t;

// One emitted token and the sampling probability it was drawn with
// (post-temperature, i.e. the distribution actually sampled from).
struct TokenRecord {
    TokenId token = 0;
    double  prob  = 1.0;

    bool operator==(const TokenRecord &) const = default;
};

struct PathState {
    int                      path_id  = 0;
    std::vector<TokenRecord> records;
    bool                     finished = false;

    std::vector<TokenId> tokens() const;
};

enum class PoolStructure { dag, tree, list };

const char *   to_string(PoolStructure s);
PoolStructure  parse_structure(const std::string & s);

class ConfigError : public std::runtime_error {
  public:
    ConfigError(std::string field, const std::string & what)
        : std::runtime_error(field + ": " + what), field_(std::move(field)) {}

    const std::string & field() const { return field_; }

  private:
    std::string field_;
};

struct EngineConfig {
    int           num_paths      = 8;
    int           suffix_len     = 4;
    int           max_draft_len  = 6;
    int           edit_tolerance = 1;
    double        alpha          = 1.0;
    double        temperature    = 0.8;
    int           max_seq_len    = 128;
    std::uint64_t rng_seed       = 0;
    PoolStructure pool_structure = PoolStructure::dag;
    bool          fuzzy          = true;

    // tolerance actually used by the matcher
    int effective_tolerance() const { return fuzzy ? edit_tolerance : 0; }

    bool operator==(const EngineConfig &) const = default;
};

// Throws ConfigError naming the first violated field; otherwise returns cfg unchanged.
EngineConfig validate_config(const EngineConfig & cfg);

// Flat key=value representation. Unknown keys are left for other consumers.
using KeyValues = std::map<std::string, std::string>;

KeyValues    parse_key_values(const std::string & text);
KeyValues    read_key_value_file(const std::string & path);

void         apply_engine_keys(EngineConfig & cfg, const KeyValues & kv);
KeyValues    engine_to_key_values(const EngineConfig & cfg);
std::string  serialize_key_values(const KeyValues & kv);

// helpers shared by the config parsers
long long     kv_int(const KeyValues & kv, const std::string & key, long long def);
std::uint64_t kv_u64(const KeyValues & kv, const std::string & key, std::uint64_t def);
double        kv_double(const KeyValues & kv, const std::string & key, double def);
bool          kv_bool(const KeyValues & kv, const std::string & key, bool def);
std::string   format_double(double v);

} // namespace mspec
