#pragma once

#include "mspec/engine.hpp"
#include "mspec/model.hpp"
#include "mspec/types.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mspec {

enum class SweepAxis { draft_len, temperature, num_paths, structure, fuzzy };

const char * to_string(SweepAxis a);
SweepAxis    parse_axis(const std::string & s);

struct SweepSpec {
    EngineConfig             base;
    SimModelSpec             model;
    std::uint64_t            prompt_context = 0;
    SweepAxis                axis           = SweepAxis::draft_len;
    std::vector<std::string> values;
    int                      trials = 1;
    std::optional<int>       budget_lock; // L * N held at this value
    bool                     warmup = true;
};

struct SweepCell {
    std::string axis;
    std::string value;
    int         trial_count     = 0;
    double      mean_accept_len = 0.0; // mean tau per decode step
    double      std_accept_len  = 0.0; // across trials
    double      mean_draft_us   = 0.0; // per drafting step
    double      tokens_per_step = 0.0;

    // not part of the emitted schema
    int    draft_len   = 0;
    int    num_paths   = 0;
    double p95_draft_us = 0.0;
};

struct SweepResult {
    std::vector<SweepCell> cells;
};

// Every (L, N) with L * N == budget, 1 <= L <= max_draft_len, N >= 2, L descending.
std::vector<std::pair<int, int>> budget_grid(int budget, int max_draft_len);

// Engine config for one cell; throws ConfigError if the value is invalid for the axis.
EngineConfig cell_config(const SweepSpec & spec, const std::string & value);

// rng seed and prompt for a trial; the same across cells so cells are paired
std::uint64_t trial_seed(std::uint64_t base_seed, int trial);
std::uint64_t trial_prompt(std::uint64_t base_prompt, int trial);

SweepSpec   validate_sweep(const SweepSpec & spec);
SweepSpec   parse_sweep(const KeyValues & kv);
SweepResult run_sweep(const SweepSpec & spec);

// structure x fuzzy grid at the base config; axis label "ablation", values like "dag+fuzzy"
SweepResult run_ablation(const EngineConfig & base, const SimModelSpec & model, std::uint64_t prompt_context,
                         int trials);

// Statistics for one cell from its per-trial traces.
SweepCell summarize(const std::string & axis, const std::string & value, const std::vector<SessionTrace> & traces);

enum class OutputFormat { csv, json };

inline constexpr const char * kCsvHeader =
    "axis,value,trial_count,mean_accept_len,std_accept_len,mean_draft_us,tokens_per_step";

std::string render(const SweepResult & result, OutputFormat format);
void        emit(const SweepResult & result, OutputFormat format, const std::string & path);
SweepResult parse_json_result(const std::string & text);

} // namespace mspec
