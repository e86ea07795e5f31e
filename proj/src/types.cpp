#include "mspec/types.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace mspec {

std::vector<TokenId> PathState::tokens() const {
    std::vector<TokenId> out;
    out.reserve(records.size());
    for (const auto & r : records) {
        out.push_back(r.token);
    }
    return out;
}

const char * to_string(PoolStructure s) {
    switch (s) {
        case PoolStructure::dag:  return "dag";
        case PoolStructure::tree: return "tree";
        case PoolStructure::list: return "list";
    }
    return "dag";
}

PoolStructure parse_structure(const std::string & s) {
    if (s == "dag")  return PoolStructure::dag;
    if (s == "tree") return PoolStructure::tree;
    if (s == "list") return PoolStructure::list;
    throw ConfigError("pool_structure", "expected dag, tree or list, got '" + s + "'");
}

EngineConfig validate_config(const EngineConfig & cfg) {
    if (cfg.num_paths < 2) {
        throw ConfigError("num_paths", "consensus needs at least 2 paths");
    }
    if (cfg.suffix_len < 1) {
        throw ConfigError("suffix_len", "must be >= 1");
    }
    if (cfg.max_draft_len < 1) {
        throw ConfigError("max_draft_len", "must be >= 1");
    }
    if (cfg.edit_tolerance < 0) {
        throw ConfigError("edit_tolerance", "must be >= 0");
    }
    if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) {
        throw ConfigError("alpha", "must lie in [0, 1]");
    }
    if (!(cfg.temperature > 0.0) || !std::isfinite(cfg.temperature)) {
        throw ConfigError("temperature", "must be a positive finite number");
    }
    if (cfg.max_seq_len < 1) {
        throw ConfigError("max_seq_len", "must be >= 1");
    }
    return cfg;
}

static std::string trim(const std::string & s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

KeyValues parse_key_values(const std::string & text) {
    KeyValues kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno), "expected key=value");
        }
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

KeyValues read_key_value_file(const std::string & path) {
    std::ifstream f(path);
    if (!f) {
        throw std::runtime_error("cannot open config file '" + path + "'");
    }
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_key_values(ss.str());
}

long long kv_int(const KeyValues & kv, const std::string & key, long long def) {
    auto it = kv.find(key);
    if (it == kv.end()) {
        return def;
    }
    char * end = nullptr;
    errno = 0;
    const long long v = std::strtoll(it->second.c_str(), &end, 10);
    if (errno != 0 || end == it->second.c_str() || *end != '\0') {
        throw ConfigError(key, "expected an integer, got '" + it->second + "'");
    }
    return v;
}

std::uint64_t kv_u64(const KeyValues & kv, const std::string & key, std::uint64_t def) {
    auto it = kv.find(key);
    if (it == kv.end()) {
        return def;
    }
    char * end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(it->second.c_str(), &end, 10);
    if (errno != 0 || end == it->second.c_str() || *end != '\0' || it->second[0] == '-') {
        throw ConfigError(key, "expected an unsigned integer, got '" + it->second + "'");
    }
    return v;
}

double kv_double(const KeyValues & kv, const std::string & key, double def) {
    auto it = kv.find(key);
    if (it == kv.end()) {
        return def;
    }
    char * end = nullptr;
    errno = 0;
    const double v = std::strtod(it->second.c_str(), &end);
    if (errno != 0 || end == it->second.c_str() || *end != '\0') {
        throw ConfigError(key, "expected a number, got '" + it->second + "'");
    }
    return v;
}

bool kv_bool(const KeyValues & kv, const std::string & key, bool def) {
    auto it = kv.find(key);
    if (it == kv.end()) {
        return def;
    }
    const auto & v = it->second;
    if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "off" || v == "no") return false;
    throw ConfigError(key, "expected a boolean, got '" + v + "'");
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void apply_engine_keys(EngineConfig & cfg, const KeyValues & kv) {
    cfg.num_paths      = static_cast<int>(kv_int(kv, "num_paths", cfg.num_paths));
    cfg.suffix_len     = static_cast<int>(kv_int(kv, "suffix_len", cfg.suffix_len));
    cfg.max_draft_len  = static_cast<int>(kv_int(kv, "max_draft_len", cfg.max_draft_len));
    cfg.edit_tolerance = static_cast<int>(kv_int(kv, "edit_tolerance", cfg.edit_tolerance));
    cfg.alpha          = kv_double(kv, "alpha", cfg.alpha);
    cfg.temperature    = kv_double(kv, "temperature", cfg.temperature);
    cfg.max_seq_len    = static_cast<int>(kv_int(kv, "max_seq_len", cfg.max_seq_len));
    cfg.rng_seed       = kv_u64(kv, "rng_seed", cfg.rng_seed);
    cfg.fuzzy          = kv_bool(kv, "fuzzy", cfg.fuzzy);
    if (auto it = kv.find("pool_structure"); it != kv.end()) {
        cfg.pool_structure = parse_structure(it->second);
    }
}

KeyValues engine_to_key_values(const EngineConfig & cfg) {
    return {
        {"num_paths",      std::to_string(cfg.num_paths)},
        {"suffix_len",     std::to_string(cfg.suffix_len)},
        {"max_draft_len",  std::to_string(cfg.max_draft_len)},
        {"edit_tolerance", std::to_string(cfg.edit_tolerance)},
        {"alpha",          format_double(cfg.alpha)},
        {"temperature",    format_double(cfg.temperature)},
        {"max_seq_len",    std::to_string(cfg.max_seq_len)},
        {"rng_seed",       std::to_string(cfg.rng_seed)},
        {"pool_structure", to_string(cfg.pool_structure)},
        {"fuzzy",          cfg.fuzzy ? "true" : "false"},
    };
}

std::string serialize_key_values(const KeyValues & kv) {
    std::string out;
    for (const auto & [k, v] : kv) {
        out += k;
        out += '=';
        out += v;
        out += '\n';
    }
    return out;
}

} // namespace mspec
