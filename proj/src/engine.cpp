#include "mspec/engine.hpp"

#include "mspec/aggregate.hpp"

#include <json.hpp>

#include <chrono>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace mspec {

VerificationResult verify_draft(const LanguageModel & model, std::span<const TokenId> prefix,
                                const DraftSequence & draft, double temperature, RngStream & rng,
                                int max_emit) {
    VerificationResult res;
    std::vector<TokenId> ctx(prefix.begin(), prefix.end());
    const std::size_t n_draft = draft.tokens.size();
    for (std::size_t p = 0; static_cast<int>(res.emitted.size()) < max_emit; ++p) {
        const Distribution dist = model.conditional(ctx, temperature);
        const TokenId s = sample(dist, rng);
        res.emitted.push_back({s, dist.probs[s]});
        ctx.push_back(s);
        const bool matched = p < n_draft && draft.tokens[p] == s;
        if (matched) {
            ++res.accepted_len;
        }
        if (!matched || s == model.eos_token()) {
            break;
        }
    }
    return res;
}

bool SessionTrace::same_outcome(const SessionTrace & o) const {
    if (!(config == o.config) || answer != o.answer || steps.size() != o.steps.size() || paths.size() != o.paths.size()) {
        return false;
    }
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (!steps[i].same_outcome(o.steps[i])) {
            return false;
        }
    }
    for (std::size_t i = 0; i < paths.size(); ++i) {
        if (paths[i].path_id != o.paths[i].path_id || paths[i].finished != o.paths[i].finished ||
            paths[i].records != o.paths[i].records) {
            return false;
        }
    }
    return true;
}

std::string path_answer(const PathState & path, TokenId eos) {
    for (auto it = path.records.rbegin(); it != path.records.rend(); ++it) {
        if (it->token != eos) {
            return std::to_string(it->token);
        }
    }
    return {};
}

Session::Session(const EngineConfig & cfg, const LanguageModel & model, std::uint64_t prompt_context, bool drafting)
    : cfg_(validate_config(cfg)),
      model_(model),
      drafting_(drafting),
      prompt_(model.prompt_tokens(prompt_context)),
      pool_(cfg_.num_paths, cfg_.suffix_len, cfg_.effective_tolerance()) {
    paths_.resize(cfg_.num_paths);
    for (int i = 0; i < cfg_.num_paths; ++i) {
        paths_[i].path_id = i;
        contexts_.push_back(prompt_);
        rngs_.push_back(RngStream::derive(cfg_.rng_seed, static_cast<std::uint64_t>(i)));
    }
    pending_.resize(cfg_.num_paths);
}

StepRecord Session::decode_step(int path_id) {
    PathState & path = paths_.at(path_id);
    if (path.finished) {
        throw std::logic_error("decode_step on a finished path");
    }
    StepRecord rec;
    rec.round = round_;
    rec.path_id = path_id;

    const int len = static_cast<int>(path.records.size());
    const int remaining = cfg_.max_seq_len - len;
    const int max_draft = drafting_ ? std::min(cfg_.max_draft_len, remaining - 1) : 0;
    const int k = cfg_.suffix_len;

    DraftSequence draft;
    if (max_draft >= 1 && len >= k) {
        const auto t0 = std::chrono::steady_clock::now();
        rec.queried = true;
        std::span<const TokenId> ctx(contexts_[path_id]);
        auto cands = pool_.query(ctx.subspan(ctx.size() - k), path_id, cfg_.effective_tolerance(), max_draft);
        if (!cands.empty()) {
            int dmin = cands.front().hit.distance;
            for (const auto & c : cands) dmin = std::min(dmin, c.hit.distance);
            std::erase_if(cands, [&](const auto & c) { return c.hit.distance != dmin; });
        }
        rec.candidates = static_cast<int>(cands.size());
        if (!cands.empty()) {
            if (dump_) {
                *dump_ << "step round=" << round_ << " path=" << path_id << '\n';
            }
            draft = extract_draft(cfg_.pool_structure, cands, cfg_.alpha, max_draft, dump_);
        }
        const auto t1 = std::chrono::steady_clock::now();
        rec.draft_us = std::chrono::duration<double, std::micro>(t1 - t0).count();
    }
    rec.draft_len = static_cast<int>(draft.tokens.size());

    const VerificationResult vr =
        verify_draft(model_, contexts_[path_id], draft, cfg_.temperature, rngs_[path_id], remaining);
    rec.accepted = vr.accepted_len;
    rec.emitted = static_cast<int>(vr.emitted.size());

    for (const auto & r : vr.emitted) {
        path.records.push_back(r);
        contexts_[path_id].push_back(r.token);
        pending_[path_id].push_back(r);
    }
    if ((!vr.emitted.empty() && vr.emitted.back().token == model_.eos_token()) ||
        static_cast<int>(path.records.size()) >= cfg_.max_seq_len) {
        path.finished = true;
    }
    steps_.push_back(rec);
    return rec;
}

void Session::end_round() {
    for (int i = 0; i < cfg_.num_paths; ++i) {
        for (const auto & r : pending_[i]) {
            pool_.index_append(i, r);
        }
        pending_[i].clear();
    }
    ++round_;
}

void Session::run_round() {
    for (int i = 0; i < cfg_.num_paths; ++i) {
        if (!paths_[i].finished) {
            decode_step(i);
        }
    }
    end_round();
}

bool Session::done() const {
    for (const auto & p : paths_) {
        if (!p.finished) {
            return false;
        }
    }
    return true;
}

SessionTrace Session::finish() const {
    SessionTrace t;
    t.config = cfg_;
    t.steps = steps_;
    t.paths = paths_;
    std::vector<std::string> answers;
    for (const auto & p : paths_) {
        answers.push_back(path_answer(p, model_.eos_token()));
    }
    t.answer = majority_vote(answers);
    return t;
}

static SessionTrace run(const EngineConfig & cfg, const LanguageModel & model, std::uint64_t prompt_context,
                        bool drafting, std::ostream * dump) {
    Session s(cfg, model, prompt_context, drafting);
    s.set_graph_dump(dump);
    while (!s.done()) {
        s.run_round();
    }
    return s.finish();
}

SessionTrace run_session(const EngineConfig & cfg, const LanguageModel & model, std::uint64_t prompt_context,
                         std::ostream * graph_dump) {
    return run(cfg, model, prompt_context, true, graph_dump);
}

SessionTrace run_vanilla(const EngineConfig & cfg, const LanguageModel & model, std::uint64_t prompt_context) {
    return run(cfg, model, prompt_context, false, nullptr);
}

using nlohmann::json;

void write_trace(std::ostream & os, const SessionTrace & trace, bool include_timing) {
    json cfg = {{"type", "config"}};
    for (const auto & [k, v] : engine_to_key_values(trace.config)) {
        cfg[k] = v;
    }
    os << cfg.dump() << '\n';
    for (const auto & s : trace.steps) {
        json j = {{"type", "step"},          {"round", s.round},         {"path", s.path_id},
                  {"draft_len", s.draft_len}, {"accepted", s.accepted},   {"emitted", s.emitted},
                  {"candidates", s.candidates}, {"queried", s.queried}};
        if (include_timing) {
            j["draft_us"] = s.draft_us;
        }
        os << j.dump() << '\n';
    }
    for (const auto & p : trace.paths) {
        json toks = json::array(), probs = json::array();
        for (const auto & r : p.records) {
            toks.push_back(r.token);
            probs.push_back(r.prob);
        }
        os << json{{"type", "path"}, {"path", p.path_id}, {"finished", p.finished}, {"tokens", toks}, {"probs", probs}}.dump()
           << '\n';
    }
    os << json{{"type", "answer"}, {"label", trace.answer}}.dump() << '\n';
}

SessionTrace read_trace(std::istream & is) {
    SessionTrace t;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) {
            continue;
        }
        const json j = json::parse(line);
        const std::string type = j.at("type");
        if (type == "config") {
            KeyValues kv;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (it.key() != "type") {
                    kv[it.key()] = it.value().get<std::string>();
                }
            }
            apply_engine_keys(t.config, kv);
        } else if (type == "step") {
            StepRecord s;
            s.round = j.at("round");
            s.path_id = j.at("path");
            s.draft_len = j.at("draft_len");
            s.accepted = j.at("accepted");
            s.emitted = j.at("emitted");
            s.candidates = j.at("candidates");
            s.queried = j.at("queried");
            s.draft_us = j.value("draft_us", 0.0);
            t.steps.push_back(s);
        } else if (type == "path") {
            PathState p;
            p.path_id = j.at("path");
            p.finished = j.at("finished");
            const auto & toks = j.at("tokens");
            const auto & probs = j.at("probs");
            if (toks.size() != probs.size()) {
                throw std::runtime_error("trace: tokens/probs length mismatch");
            }
            for (std::size_t i = 0; i < toks.size(); ++i) {
                p.records.push_back({toks[i].get<TokenId>(), probs[i].get<double>()});
            }
            t.paths.push_back(std::move(p));
        } else if (type == "answer") {
            t.answer = j.at("label");
        } else {
            throw std::runtime_error("trace: unknown record type '" + type + "'");
        }
    }
    return t;
}

} // namespace mspec
