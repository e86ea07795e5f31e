// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Every tolerance and suite parameter is pinned below.

#include "mspec/bench.hpp"
#include "mspec/consensus_graph.hpp"
#include "mspec/draft_pool.hpp"
#include "mspec/engine.hpp"
#include "mspec/model.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace mspec;

namespace {

constexpr int    kLosslessConfigs   = 1000;
constexpr int    kMatcherCorpora    = 500;
constexpr int    kExtractionSets    = 500;
constexpr int    kTrendTrials       = 64;   // seeds per cell for the trend criteria
constexpr double kDagOverListMin    = 0.05; // relative
constexpr double kNTrendMin         = 0.10; // N=16 over N=2, relative
constexpr double kLatencyP95MaxUs   = 1000.0;
constexpr int    kLatencyHistoryMax = 1000;

// ablation and sample-count suite
SimModelSpec trend_model() {
    SimModelSpec m;
    m.vocab_size         = 32;
    m.order              = 1;
    m.transition_seed    = 1;
    m.base_concentration = 0.5;
    return m;
}

EngineConfig trend_config() {
    EngineConfig c;
    c.num_paths     = 8;
    c.max_draft_len = 6;
    c.temperature   = 0.8;
    c.max_seq_len   = 128;
    return c;
}

// temperature suite: staged topology, so greedy rollouts do not cycle
SimModelSpec temperature_model() {
    SimModelSpec m;
    m.vocab_size         = 512;
    m.order              = 1;
    m.transition_seed    = 1;
    m.base_concentration = 0.2;
    m.stage_size         = 16;
    return m;
}

const std::vector<std::string> kTemperatureGrid = {"0.05", "0.1", "0.2", "0.3", "0.5", "0.8", "1.2", "2"};

struct Outcome {
    bool        pass;
    std::string detail;
};

int g_failures = 0;

void report(int id, const char * name, const Outcome & o, double secs) {
    std::printf("%s criterion %d (%s): %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) {
        ++g_failures;
    }
}

void run(int id, const char * name, const std::function<Outcome()> & fn) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = fn();
    } catch (const std::exception & e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report(id, name, o, secs);
}

std::string fmt(const char * f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), f, a, b, c);
    return buf;
}

// progress and bounds over one trace; counts violations
struct BoundsTally {
    long steps      = 0;
    long violations = 0;
    void check(const SessionTrace & t) {
        std::vector<long> emitted(t.paths.size(), 0);
        for (const auto & s : t.steps) {
            ++steps;
            if (s.emitted < 1 || s.accepted > s.draft_len || s.draft_len > t.config.max_draft_len) {
                ++violations;
            }
            emitted[s.path_id] += s.emitted;
        }
        for (std::size_t i = 0; i < t.paths.size(); ++i) {
            if (emitted[i] != static_cast<long>(t.paths[i].records.size())) {
                ++violations;
            }
        }
    }
};

BoundsTally g_bounds;

Outcome lossless() {
    std::mt19937_64 gen(20240601);
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); };
    auto real = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen); };
    int mismatches = 0;
    for (int i = 0; i < kLosslessConfigs; ++i) {
        SimModelSpec m;
        m.vocab_size         = static_cast<std::size_t>(pick(2, 64));
        m.order              = pick(1, 3);
        m.transition_seed    = gen();
        m.base_concentration = real(0.05, 1.5);
        m.eos_token          = static_cast<TokenId>(pick(0, static_cast<int>(m.vocab_size) - 1));
        m.eos_prob           = pick(0, 2) == 0 ? 0.0 : real(0.0, 0.1);
        if (m.vocab_size >= 8 && pick(0, 3) == 0) {
            m.stage_size = static_cast<std::size_t>(pick(2, static_cast<int>(m.vocab_size) / 2));
            if (m.vocab_size % m.stage_size == 1 && m.eos_token == m.vocab_size - 1) {
                m.eos_token = 0;
            }
        }
        EngineConfig c;
        c.num_paths      = pick(2, 8);
        c.suffix_len     = pick(1, 5);
        c.max_draft_len  = pick(1, 8);
        c.edit_tolerance = pick(0, 2);
        c.alpha          = pick(0, 2) * 0.5;
        c.temperature    = real(0.05, 2.0);
        c.max_seq_len    = pick(1, 128);
        c.rng_seed       = gen();
        c.pool_structure = static_cast<PoolStructure>(pick(0, 2));
        c.fuzzy          = pick(0, 1) == 1;
        SimModel model(m);
        const std::uint64_t prompt = gen();
        const auto spec_trace = run_session(c, model, prompt);
        const auto van_trace  = run_vanilla(c, model, prompt);
        g_bounds.check(spec_trace);
        g_bounds.check(van_trace);
        for (int p = 0; p < c.num_paths; ++p) {
            if (spec_trace.paths[p].tokens() != van_trace.paths[p].tokens()) {
                ++mismatches;
                break;
            }
        }
    }
    return {mismatches == 0, std::to_string(kLosslessConfigs) + " configs, " + std::to_string(mismatches) +
                                 " with differing paths"};
}

Outcome matcher() {
    std::mt19937_64 gen(777);
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); };
    long queries = 0, mismatches = 0, hits = 0;
    for (int i = 0; i < kMatcherCorpora; ++i) {
        const int n_paths = pick(2, 5);
        const int k       = pick(1, 6);
        const int vocab   = pick(2, 8);
        const int max_len = pick(1, 8);
        DraftPool pool(n_paths, k, 2);
        std::vector<std::vector<TokenRecord>> paths(n_paths);
        for (int p = 0; p < n_paths; ++p) {
            const int len = pick(0, 40);
            for (int t = 0; t < len; ++t) {
                TokenRecord r{static_cast<TokenId>(pick(0, vocab - 1)), pick(1, 8) / 8.0};
                paths[p].push_back(r);
                pool.index_append(p, r);
            }
        }
        for (int q = 0; q < 4; ++q) {
            const int req = pick(0, n_paths - 1);
            std::vector<TokenId> query;
            if (q % 2 == 0 && static_cast<int>(paths[req].size()) >= k) {
                for (int t = static_cast<int>(paths[req].size()) - k; t < static_cast<int>(paths[req].size()); ++t) {
                    query.push_back(paths[req][t].token);
                }
            } else {
                for (int t = 0; t < k; ++t) query.push_back(static_cast<TokenId>(pick(0, vocab - 1)));
            }
            for (int eps = 0; eps <= 2; ++eps) {
                const auto got  = oracle::to_hits(pool.query(query, req, eps, max_len));
                const auto want = oracle::scan_hits(paths, query, req, eps, max_len);
                ++queries;
                hits += static_cast<long>(want.size());
                if (got != want) ++mismatches;
            }
        }
    }
    return {mismatches == 0, std::to_string(queries) + " queries over " + std::to_string(kMatcherCorpora) +
                                 " corpora (" + std::to_string(hits) + " oracle hits), " + std::to_string(mismatches) +
                                 " mismatches"};
}

Outcome extraction() {
    std::mt19937_64 gen(4242);
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); };
    int mismatches = 0, checks = 0;
    for (int i = 0; i < kExtractionSets; ++i) {
        const int n     = pick(1, 12);
        const int vocab = pick(1, 5);
        std::vector<CandidateContinuation> cands;
        for (int c = 0; c < n; ++c) {
            CandidateContinuation cc;
            cc.hit = {pick(0, 7), pick(1, 50), pick(0, 2)};
            const int len = pick(1, 8);
            for (int t = 0; t < len; ++t) {
                cc.tokens.push_back({static_cast<TokenId>(pick(0, vocab - 1)), pick(1, 8) / 8.0});
            }
            cands.push_back(cc);
        }
        const double alpha   = pick(0, 4) * 0.25;
        const int    max_len = pick(1, 8);
        checks += 3;
        if (extract_draft(PoolStructure::dag, cands, alpha, max_len) != oracle::dag_draft(cands, alpha, max_len)) {
            ++mismatches;
        }
        if (extract_draft(PoolStructure::tree, cands, alpha, max_len) != oracle::tree_draft(cands, alpha, max_len)) {
            ++mismatches;
        }
        if (extract_draft(PoolStructure::list, cands, alpha, max_len) != oracle::list_draft(cands, alpha, max_len)) {
            ++mismatches;
        }
    }
    return {mismatches == 0, std::to_string(kExtractionSets) + " candidate sets, " + std::to_string(checks) +
                                 " structure checks, " + std::to_string(mismatches) + " mismatches"};
}

const SweepCell & cell(const SweepResult & r, const std::string & value) {
    for (const auto & c : r.cells) {
        if (c.value == value) return c;
    }
    throw std::runtime_error("missing cell " + value);
}

Outcome ablation() {
    const auto r = run_ablation(trend_config(), trend_model(), 0, kTrendTrials);
    const double dag   = cell(r, "dag+fuzzy").mean_accept_len;
    const double tree  = cell(r, "tree+fuzzy").mean_accept_len;
    const double list  = cell(r, "list+fuzzy").mean_accept_len;
    const double exact = cell(r, "dag+exact").mean_accept_len;
    const bool ok = dag >= tree && tree >= list && dag >= exact && dag >= list * (1.0 + kDagOverListMin);
    std::string d = fmt("dag=%.4f tree=%.4f list=%.4f", dag, tree, list) +
                    fmt(" dag+exact=%.4f dag/list=%.3f", exact, dag / list) +
                    " (" + std::to_string(kTrendTrials) + " seeds)";
    return {ok, d};
}

SweepSpec trend_sweep(SweepAxis axis, std::vector<std::string> values) {
    SweepSpec s;
    s.base   = trend_config();
    s.model  = trend_model();
    s.axis   = axis;
    s.values = std::move(values);
    s.trials = kTrendTrials;
    return s;
}

Outcome sample_count() {
    const auto r = run_sweep(trend_sweep(SweepAxis::num_paths, {"2", "4", "8", "16"}));
    bool mono = true;
    std::string d;
    for (std::size_t i = 0; i < r.cells.size(); ++i) {
        d += "N=" + r.cells[i].value + ":" + fmt("%.4f ", r.cells[i].mean_accept_len);
        if (i > 0 && r.cells[i].mean_accept_len < r.cells[i - 1].mean_accept_len) mono = false;
    }
    const double gain = r.cells.back().mean_accept_len / r.cells.front().mean_accept_len - 1.0;
    d += fmt("gain=%.3f", gain);
    return {mono && gain >= kNTrendMin, d};
}

Outcome temperature() {
    SweepSpec s;
    s.base             = trend_config();
    s.base.max_seq_len = 256;
    s.model            = temperature_model();
    s.axis             = SweepAxis::temperature;
    s.values           = kTemperatureGrid;
    s.trials           = kTrendTrials;
    const auto r = run_sweep(s);
    std::size_t best = 0;
    std::string d;
    for (std::size_t i = 0; i < r.cells.size(); ++i) {
        d += "T=" + r.cells[i].value + ":" + fmt("%.4f ", r.cells[i].mean_accept_len);
        if (r.cells[i].mean_accept_len > r.cells[best].mean_accept_len) best = i;
    }
    d += "argmax T=" + r.cells[best].value;
    return {best > 0 && best + 1 < r.cells.size(), d};
}

// drop the timing column, which is the one nondeterministic field
std::string strip_timing(const std::string & csv) {
    std::istringstream in(csv);
    std::string line, out;
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string x;
        while (std::getline(ls, x, ',')) f.push_back(x);
        if (f.size() == 7) f.erase(f.begin() + 5);
        for (std::size_t i = 0; i < f.size(); ++i) out += (i ? "," : "") + f[i];
        out += '\n';
    }
    return out;
}

Outcome budget() {
    KeyValues kv = parse_key_values(
        "axis=draft_len\nbudget_lock=24\ntrials=3\nvocab_size=32\norder=1\nbase_concentration=0.5\nmax_seq_len=64\n");
    const SweepSpec spec = parse_sweep(kv);
    const auto grid = budget_grid(24, spec.base.max_draft_len);
    const std::vector<std::pair<int, int>> want = {{6, 4}, {4, 6}, {3, 8}, {2, 12}, {1, 24}};
    if (grid != want) return {false, "budget grid differs from the exact-product pairs"};
    const auto r = run_sweep(spec);
    for (const auto & c : r.cells) {
        if (c.draft_len * c.num_paths != 24) return {false, "cell " + c.value + " breaks L*N=24"};
        if (c.mean_accept_len > c.draft_len) return {false, "cell " + c.value + " accept length above L"};
    }
    const std::string got = strip_timing(render(r, OutputFormat::csv));
    std::ifstream f(MSPEC_GOLDEN_DIR "/budget24.csv");
    if (!f) return {false, "golden file missing; got:\n" + got};
    std::stringstream golden;
    golden << f.rdbuf();
    if (strip_timing(golden.str()) != got) return {false, "csv differs from golden:\n" + got};
    return {true, std::to_string(r.cells.size()) + " cells (6,4) (4,6) (3,8) (2,12) (1,24) match golden csv"};
}

Outcome bounds() {
    return {g_bounds.violations == 0 && g_bounds.steps > 0,
            std::to_string(g_bounds.steps) + " steps checked, " + std::to_string(g_bounds.violations) + " violations"};
}

Outcome latency() {
    std::vector<double> us;
    const SimModel model(trend_model());
    for (int n : {8, 16}) {
        for (int t = 0; t < 8; ++t) {
            EngineConfig c   = trend_config();
            c.num_paths      = n;
            c.max_seq_len    = kLatencyHistoryMax / n;
            c.rng_seed       = trial_seed(99, t);
            const auto trace = run_session(c, model, trial_prompt(0, t));
            g_bounds.check(trace);
            for (const auto & s : trace.steps) {
                if (s.queried) us.push_back(s.draft_us);
            }
        }
    }
    if (us.empty()) return {false, "no drafting steps"};
    std::sort(us.begin(), us.end());
    const double p95 = us[static_cast<std::size_t>(std::ceil(0.95 * us.size())) - 1];
    return {p95 < kLatencyP95MaxUs, fmt("p95=%.1fus median=%.1fus", p95, us[us.size() / 2]) + " over " +
                                        std::to_string(us.size()) + " drafting steps"};
}

} // namespace

int main() {
    run(1, "lossless equivalence", lossless);
    run(2, "matcher oracle", matcher);
    run(3, "extraction oracle", extraction);
    run(4, "ablation ordering", ablation);
    run(5, "sample-count trend", sample_count);
    run(6, "temperature trend", temperature);
    run(7, "budget convention", budget);
    run(9, "draft latency", latency);
    run(8, "progress and bounds", bounds);
    std::printf("%d criteria failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
