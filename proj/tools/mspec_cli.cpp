// mspec: run multi-sample speculative decoding sessions and sweeps on the simulated model.

#include "mspec/bench.hpp"
#include "mspec/engine.hpp"
#include "mspec/model.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>

using namespace mspec;

namespace {

const std::vector<std::string> kEngineKeys = {"num_paths",   "suffix_len",  "max_draft_len", "edit_tolerance",
                                              "alpha",       "temperature", "max_seq_len",   "rng_seed",
                                              "pool_structure", "fuzzy"};
const std::vector<std::string> kModelKeys  = {"vocab_size", "order", "transition_seed", "base_concentration",
                                              "eos_token",  "eos_prob", "stage_size"};

struct ConfigFlags {
    std::string                        config_file;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option *> options;

    void attach(CLI::App & app) {
        app.add_option("--config", config_file, "flat key=value config file");
        auto add = [&](const std::string & key) {
            std::string flag = "--" + key;
            for (auto & c : flag) {
                if (c == '_') c = '-';
            }
            options[key] = app.add_option(flag, values[key], key);
        };
        for (const auto & k : kEngineKeys) add(k);
        for (const auto & k : kModelKeys) add(k);
        add("prompt_context");
    }

    KeyValues collect() const {
        KeyValues kv;
        if (!config_file.empty()) {
            kv = read_key_value_file(config_file);
        }
        for (const auto & [k, opt] : options) {
            if (opt->count() > 0) {
                kv[k] = values.at(k);
            }
        }
        return kv;
    }
};

OutputFormat parse_format(const std::string & s) {
    if (s == "csv") return OutputFormat::csv;
    if (s == "json") return OutputFormat::json;
    throw ConfigError("format", "expected csv or json");
}

void write_result(const SweepResult & res, const std::string & format, const std::string & out) {
    const auto fmt = parse_format(format);
    if (out.empty() || out == "-") {
        std::cout << render(res, fmt);
    } else {
        emit(res, fmt, out);
    }
}

int cmd_run(const ConfigFlags & flags, bool vanilla, const std::string & trace_path, const std::string & dump_path) {
    const KeyValues kv = flags.collect();
    EngineConfig cfg;
    apply_engine_keys(cfg, kv);
    SimModelSpec spec;
    apply_model_keys(spec, kv);
    const std::uint64_t prompt = kv_u64(kv, "prompt_context", 0);
    const SimModel model(spec);

    std::ofstream dump_file;
    std::ostream * dump = nullptr;
    if (dump_path == "-") {
        dump = &std::cerr;
    } else if (!dump_path.empty()) {
        dump_file.open(dump_path);
        if (!dump_file) {
            throw std::runtime_error("cannot open '" + dump_path + "'");
        }
        dump = &dump_file;
    }

    const SessionTrace trace = vanilla ? run_vanilla(cfg, model, prompt) : run_session(cfg, model, prompt, dump);

    if (!trace_path.empty()) {
        std::ofstream f(trace_path);
        if (!f) {
            throw std::runtime_error("cannot open '" + trace_path + "'");
        }
        write_trace(f, trace);
    }

    const SweepCell s = summarize("run", vanilla ? "vanilla" : to_string(cfg.pool_structure), {trace});
    long long tokens = 0;
    for (const auto & p : trace.paths) {
        tokens += static_cast<long long>(p.records.size());
    }
    std::cout << "paths=" << trace.paths.size() << " tokens=" << tokens << " steps=" << trace.steps.size()
              << " accept_len=" << s.mean_accept_len << " tokens_per_step=" << s.tokens_per_step
              << " mean_draft_us=" << s.mean_draft_us << " p95_draft_us=" << s.p95_draft_us
              << " answer=" << trace.answer << '\n';
    return 0;
}

} // namespace

int main(int argc, char ** argv) {
    CLI::App app{"multi-sample speculative decoding on a simulated model"};
    app.require_subcommand(1);

    ConfigFlags run_flags;
    bool vanilla = false;
    std::string trace_path, dump_path;
    auto * run = app.add_subcommand("run", "run a single decoding session");
    run_flags.attach(*run);
    run->add_flag("--vanilla", vanilla, "disable drafting");
    run->add_option("--trace", trace_path, "write the session trace (JSON Lines)");
    run->add_option("--dump-graph", dump_path, "write per-step draft structure dumps ('-' for stderr)");

    std::string sweep_file, sweep_format = "csv", sweep_out;
    auto * sweep = app.add_subcommand("sweep", "run a sweep described by a key=value file");
    sweep->add_option("spec", sweep_file, "sweep file")->required();
    sweep->add_option("--format", sweep_format, "csv or json");
    sweep->add_option("--out", sweep_out, "output path (default stdout)");

    ConfigFlags ablate_flags;
    int ablate_trials = 20;
    std::string ablate_format = "csv", ablate_out;
    auto * ablate = app.add_subcommand("ablate", "structure x fuzzy ablation grid");
    ablate_flags.attach(*ablate);
    ablate->add_option("--trials", ablate_trials, "seeded trials per cell");
    ablate->add_option("--format", ablate_format, "csv or json");
    ablate->add_option("--out", ablate_out, "output path (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            return cmd_run(run_flags, vanilla, trace_path, dump_path);
        }
        if (*sweep) {
            const SweepSpec spec = parse_sweep(read_key_value_file(sweep_file));
            write_result(run_sweep(spec), sweep_format, sweep_out);
            return 0;
        }
        if (*ablate) {
            const KeyValues kv = ablate_flags.collect();
            EngineConfig cfg;
            apply_engine_keys(cfg, kv);
            SimModelSpec spec;
            apply_model_keys(spec, kv);
            validate_config(cfg);
            write_result(run_ablation(cfg, spec, kv_u64(kv, "prompt_context", 0), ablate_trials), ablate_format,
                         ablate_out);
            return 0;
        }
    } catch (const ConfigError & e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception & e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
