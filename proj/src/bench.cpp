#include "mspec/bench.hpp"

#include "mspec/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace mspec {

const char * to_string(SweepAxis a) {
    switch (a) {
        case SweepAxis::draft_len:   return "draft_len";
        case SweepAxis::temperature: return "temperature";
        case SweepAxis::num_paths:   return "num_paths";
        case SweepAxis::structure:   return "structure";
        case SweepAxis::fuzzy:       return "fuzzy";
    }
    return "draft_len";
}

SweepAxis parse_axis(const std::string & s) {
    for (auto a : {SweepAxis::draft_len, SweepAxis::temperature, SweepAxis::num_paths, SweepAxis::structure,
                   SweepAxis::fuzzy}) {
        if (s == to_string(a)) {
            return a;
        }
    }
    throw ConfigError("axis", "unknown axis '" + s + "'");
}

std::vector<std::pair<int, int>> budget_grid(int budget, int max_draft_len) {
    std::vector<std::pair<int, int>> out;
    for (int l = std::min(budget, max_draft_len); l >= 1; --l) {
        if (budget % l == 0 && budget / l >= 2) {
            out.emplace_back(l, budget / l);
        }
    }
    return out;
}

static int parse_int_value(const std::string & field, const std::string & v) {
    KeyValues kv{{field, v}};
    return static_cast<int>(kv_int(kv, field, 0));
}

EngineConfig cell_config(const SweepSpec & spec, const std::string & value) {
    EngineConfig cfg = spec.base;
    switch (spec.axis) {
        case SweepAxis::draft_len:
            cfg.max_draft_len = parse_int_value("max_draft_len", value);
            if (spec.budget_lock) {
                if (cfg.max_draft_len < 1 || *spec.budget_lock % cfg.max_draft_len != 0) {
                    throw ConfigError("budget_lock", "draft length " + value + " does not divide the budget");
                }
                cfg.num_paths = *spec.budget_lock / cfg.max_draft_len;
            }
            break;
        case SweepAxis::num_paths:
            cfg.num_paths = parse_int_value("num_paths", value);
            if (spec.budget_lock) {
                if (cfg.num_paths < 1 || *spec.budget_lock % cfg.num_paths != 0) {
                    throw ConfigError("budget_lock", "path count " + value + " does not divide the budget");
                }
                cfg.max_draft_len = *spec.budget_lock / cfg.num_paths;
            }
            break;
        case SweepAxis::temperature:
            cfg.temperature = kv_double(KeyValues{{"temperature", value}}, "temperature", 0.0);
            break;
        case SweepAxis::structure:
            cfg.pool_structure = parse_structure(value);
            break;
        case SweepAxis::fuzzy:
            cfg.fuzzy = kv_bool(KeyValues{{"fuzzy", value}}, "fuzzy", true);
            break;
    }
    if (spec.budget_lock && cfg.max_draft_len * cfg.num_paths != *spec.budget_lock) {
        throw ConfigError("budget_lock", "max_draft_len * num_paths must equal " + std::to_string(*spec.budget_lock));
    }
    return validate_config(cfg);
}

std::uint64_t trial_seed(std::uint64_t base_seed, int trial) {
    return hash_combine(base_seed, static_cast<std::uint64_t>(trial));
}

std::uint64_t trial_prompt(std::uint64_t base_prompt, int trial) {
    return hash_combine(base_prompt ^ 0x5eedULL, static_cast<std::uint64_t>(trial));
}

SweepSpec validate_sweep(const SweepSpec & spec) {
    if (spec.values.empty()) {
        throw ConfigError("values", "must not be empty");
    }
    if (spec.trials < 1) {
        throw ConfigError("trials", "must be >= 1");
    }
    if (spec.budget_lock && *spec.budget_lock < 1) {
        throw ConfigError("budget_lock", "must be positive");
    }
    validate_model_spec(spec.model);
    for (const auto & v : spec.values) {
        cell_config(spec, v);
    }
    return spec;
}

static std::vector<std::string> split_list(const std::string & s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) {
            out.push_back(item.substr(b, e - b + 1));
        }
    }
    return out;
}

SweepSpec parse_sweep(const KeyValues & kv) {
    SweepSpec spec;
    apply_engine_keys(spec.base, kv);
    apply_model_keys(spec.model, kv);
    spec.prompt_context = kv_u64(kv, "prompt_context", spec.prompt_context);
    if (auto it = kv.find("axis"); it != kv.end()) {
        spec.axis = parse_axis(it->second);
    } else {
        throw ConfigError("axis", "missing");
    }
    spec.trials = static_cast<int>(kv_int(kv, "trials", spec.trials));
    spec.warmup = kv_bool(kv, "warmup", spec.warmup);
    if (kv.count("budget_lock")) {
        spec.budget_lock = static_cast<int>(kv_int(kv, "budget_lock", 0));
    }
    if (auto it = kv.find("values"); it != kv.end()) {
        spec.values = split_list(it->second);
    } else if (spec.budget_lock && spec.axis == SweepAxis::draft_len) {
        for (auto [l, n] : budget_grid(*spec.budget_lock, spec.base.max_draft_len)) {
            spec.values.push_back(std::to_string(l));
        }
    } else if (spec.budget_lock && spec.axis == SweepAxis::num_paths) {
        for (auto [l, n] : budget_grid(*spec.budget_lock, spec.base.max_draft_len)) {
            spec.values.push_back(std::to_string(n));
        }
    }
    return validate_sweep(spec);
}

static double percentile(std::vector<double> v, double q) {
    if (v.empty()) {
        return 0.0;
    }
    std::sort(v.begin(), v.end());
    const auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size()))) - 1;
    return v[std::min(idx, v.size() - 1)];
}

SweepCell summarize(const std::string & axis, const std::string & value, const std::vector<SessionTrace> & traces) {
    SweepCell cell;
    cell.axis = axis;
    cell.value = value;
    cell.trial_count = static_cast<int>(traces.size());
    if (traces.empty()) {
        return cell;
    }
    cell.draft_len = traces.front().config.max_draft_len;
    cell.num_paths = traces.front().config.num_paths;

    std::vector<double> accept;
    std::vector<double> timings;
    double tps_sum = 0.0;
    for (const auto & t : traces) {
        long long tau = 0, emitted = 0;
        for (const auto & s : t.steps) {
            tau += s.accepted;
            emitted += s.emitted;
            if (s.queried) {
                timings.push_back(s.draft_us);
            }
        }
        const double n = t.steps.empty() ? 1.0 : static_cast<double>(t.steps.size());
        accept.push_back(static_cast<double>(tau) / n);
        tps_sum += static_cast<double>(emitted) / n;
    }
    double mean = 0.0;
    for (double a : accept) {
        mean += a;
    }
    mean /= static_cast<double>(accept.size());
    double var = 0.0;
    if (accept.size() > 1) {
        for (double a : accept) {
            var += (a - mean) * (a - mean);
        }
        var /= static_cast<double>(accept.size() - 1);
    }
    cell.mean_accept_len = mean;
    cell.std_accept_len = std::sqrt(var);
    cell.tokens_per_step = tps_sum / static_cast<double>(traces.size());
    double tsum = 0.0;
    for (double x : timings) {
        tsum += x;
    }
    cell.mean_draft_us = timings.empty() ? 0.0 : tsum / static_cast<double>(timings.size());
    cell.p95_draft_us = percentile(timings, 0.95);
    return cell;
}

SweepResult run_sweep(const SweepSpec & raw) {
    const SweepSpec spec = validate_sweep(raw);
    const SimModel model(spec.model);
    SweepResult res;
    if (spec.warmup) {
        EngineConfig cfg = cell_config(spec, spec.values.front());
        cfg.rng_seed = trial_seed(spec.base.rng_seed, -1);
        run_session(cfg, model, trial_prompt(spec.prompt_context, -1));
    }
    for (const auto & value : spec.values) {
        const EngineConfig base = cell_config(spec, value);
        std::vector<SessionTrace> traces;
        for (int t = 0; t < spec.trials; ++t) {
            EngineConfig cfg = base;
            cfg.rng_seed = trial_seed(spec.base.rng_seed, t);
            traces.push_back(run_session(cfg, model, trial_prompt(spec.prompt_context, t)));
        }
        res.cells.push_back(summarize(to_string(spec.axis), value, traces));
    }
    return res;
}

SweepResult run_ablation(const EngineConfig & base, const SimModelSpec & model_spec, std::uint64_t prompt_context,
                         int trials) {
    SweepResult res;
    const SimModel model(validate_model_spec(model_spec));
    bool warm = false;
    for (auto structure : {PoolStructure::dag, PoolStructure::tree, PoolStructure::list}) {
        for (bool fuzzy : {true, false}) {
            EngineConfig cell = base;
            cell.pool_structure = structure;
            cell.fuzzy = fuzzy;
            validate_config(cell);
            if (!warm) {
                EngineConfig w = cell;
                w.rng_seed = trial_seed(base.rng_seed, -1);
                run_session(w, model, trial_prompt(prompt_context, -1));
                warm = true;
            }
            std::vector<SessionTrace> traces;
            for (int t = 0; t < trials; ++t) {
                EngineConfig cfg = cell;
                cfg.rng_seed = trial_seed(base.rng_seed, t);
                traces.push_back(run_session(cfg, model, trial_prompt(prompt_context, t)));
            }
            res.cells.push_back(
                summarize("ablation", std::string(to_string(structure)) + (fuzzy ? "+fuzzy" : "+exact"), traces));
        }
    }
    return res;
}

static std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

static std::string csv_field(const std::string & s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    return out + "\"";
}

std::string render(const SweepResult & result, OutputFormat format) {
    if (format == OutputFormat::csv) {
        std::string out = std::string(kCsvHeader) + "\n";
        for (const auto & c : result.cells) {
            out += csv_field(c.axis) + ',' + csv_field(c.value) + ',' + std::to_string(c.trial_count) + ',' +
                   fixed6(c.mean_accept_len) + ',' + fixed6(c.std_accept_len) + ',' + fixed6(c.mean_draft_us) + ',' +
                   fixed6(c.tokens_per_step) + '\n';
        }
        return out;
    }
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto & c : result.cells) {
        nlohmann::ordered_json row;
        row["axis"] = c.axis;
        row["value"] = c.value;
        row["trial_count"] = c.trial_count;
        row["mean_accept_len"] = c.mean_accept_len;
        row["std_accept_len"] = c.std_accept_len;
        row["mean_draft_us"] = c.mean_draft_us;
        row["tokens_per_step"] = c.tokens_per_step;
        rows.push_back(std::move(row));
    }
    return rows.dump(2) + "\n";
}

void emit(const SweepResult & result, OutputFormat format, const std::string & path) {
    const std::string text = render(result, format);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw std::runtime_error("cannot open '" + path + "' for writing: " + std::strerror(errno));
    }
    f << text;
    f.flush();
    if (!f) {
        throw std::runtime_error("write failed for '" + path + "'");
    }
}

SweepResult parse_json_result(const std::string & text) {
    SweepResult res;
    const auto rows = nlohmann::json::parse(text);
    for (const auto & row : rows) {
        SweepCell c;
        c.axis = row.at("axis");
        c.value = row.at("value");
        c.trial_count = row.at("trial_count");
        c.mean_accept_len = row.at("mean_accept_len");
        c.std_accept_len = row.at("std_accept_len");
        c.mean_draft_us = row.at("mean_draft_us");
        c.tokens_per_step = row.at("tokens_per_step");
        res.cells.push_back(std::move(c));
    }
    return res;
}

} // namespace mspec
