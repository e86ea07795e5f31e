#include "mspec/model.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace mspec;

TEST_CASE("temperature 1 is the identity") {
    const std::vector<double> row = {0.5, 0.5, 0.0};
    CHECK(apply_temperature(row, 1.0).probs == row);
}

TEST_CASE("temperature towards 0 approaches the argmax") {
    const std::vector<double> row = {0.6, 0.4};
    const auto d = apply_temperature(row, 0.01);
    CHECK(d.probs[0] == doctest::Approx(1.0));
    CHECK(d.probs[1] < 1e-12);
    const auto tiny = apply_temperature(row, 1e-6);
    CHECK(tiny.valid());
    CHECK(tiny.probs[0] == 1.0);
}

TEST_CASE("temperature keeps zeros and normalization") {
    const std::vector<double> row = {0.2, 0.0, 0.3, 0.5};
    for (double t : {0.1, 0.5, 2.0, 10.0}) {
        const auto d = apply_temperature(row, t);
        CHECK(d.valid());
        CHECK(d.probs[1] == 0.0);
    }
    // p^(1/T): T=0.5 squares then renormalizes
    const auto sq = apply_temperature(row, 0.5);
    CHECK(sq.probs[0] == doctest::Approx(0.04 / 0.38));
    CHECK(sq.probs[3] == doctest::Approx(0.25 / 0.38));
}

// RngStream whose first variate is exactly u
static RngStream stream_with_first(double u) {
    for (std::uint64_t key = 0;; ++key) {
        RngStream r(key);
        RngStream probe = r;
        if (std::fabs(probe.uniform() - u) < 1e-3) {
            return r;
        }
    }
}

TEST_CASE("sample examples") {
    RngStream rng(5);
    CHECK(sample(Distribution{{1.0}}, rng) == 0);
    CHECK(sample(Distribution{{0.0, 1.0}}, rng) == 1);

    RngStream half = stream_with_first(0.5);
    RngStream probe = half;
    const double u = probe.uniform();
    REQUIRE(u > 0.25);
    CHECK(sample(Distribution{{0.25, 0.75}}, half) == 1);

    RngStream low = stream_with_first(0.1);
    CHECK(sample(Distribution{{0.25, 0.75}}, low) == 0);
}

TEST_CASE("sample consumes exactly one variate") {
    RngStream rng(99);
    std::mt19937_64 gen(1);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> p(1 + i % 9);
        double sum = 0.0;
        for (auto & x : p) sum += (x = std::uniform_real_distribution<double>(0.0, 1.0)(gen));
        for (auto & x : p) x /= sum;
        const auto before = rng.consumed();
        sample(Distribution{p}, rng);
        CHECK(rng.consumed() == before + 1);
    }
}

TEST_CASE("sample never returns a zero-probability token") {
    RngStream rng(3);
    const Distribution d{{0.3, 0.0, 0.7, 0.0}};
    for (int i = 0; i < 2000; ++i) {
        const TokenId t = sample(d, rng);
        CHECK((t == 0 || t == 2));
    }
}

TEST_CASE("seeded row for vocab 16, order 2, seed 42, prefix [3, 7]") {
    // values recomputed from the documented row construction by the oracle
    const double expected[16] = {
        0,
        0.03772413918102329,
        0.0001195790770708458,
        0.028306702769603499,
        2.6063723107466972e-05,
        1.9676939835904591e-07,
        0.080132302615666853,
        0.00047118760722690041,
        0.24684296414452817,
        0.37217903997137958,
        0.00033839193939062736,
        0.10373467224525805,
        0.10966641995580083,
        8.0273260723095666e-08,
        1.8641492667010623e-06,
        0.020456395578018129,
    };
    SimModelSpec spec;
    spec.vocab_size = 16;
    spec.order = 2;
    spec.transition_seed = 42;
    const SimModel model(spec);
    const std::vector<TokenId> prefix = {3, 7};
    const auto row = model.base_row(prefix);
    const auto ref = oracle::sim_row(42, 16, 2, 0.25, 0, 0.0, prefix);
    REQUIRE(row.size() == 16);
    for (int i = 0; i < 16; ++i) {
        CHECK(ref[i] == expected[i]);
        CHECK(row[i] == doctest::Approx(expected[i]).epsilon(1e-12));
    }
    // only the last `order` tokens matter
    const std::vector<TokenId> longer = {9, 1, 3, 7};
    CHECK(model.base_row(longer) == row);
    CHECK(model.conditional(prefix, 1.0).probs == row);
}

TEST_CASE("rows match the oracle across specs and prefixes") {
    std::mt19937_64 gen(8);
    for (int i = 0; i < 200; ++i) {
        SimModelSpec s;
        s.vocab_size = 2 + gen() % 40;
        s.order = 1 + static_cast<int>(gen() % 3);
        s.transition_seed = gen();
        s.base_concentration = 0.1 + (gen() % 100) / 50.0;
        s.eos_token = static_cast<TokenId>(gen() % s.vocab_size);
        s.eos_prob = (gen() % 3) * 0.05;
        const SimModel m(s);
        std::vector<TokenId> prefix(gen() % 6);
        for (auto & t : prefix) t = static_cast<TokenId>(gen() % s.vocab_size);
        const auto row = m.base_row(prefix);
        const auto ref = oracle::sim_row(s.transition_seed, s.vocab_size, s.order, s.base_concentration,
                                         s.eos_token, s.eos_prob, prefix);
        for (std::size_t k = 0; k < row.size(); ++k) {
            CHECK(row[k] == doctest::Approx(ref[k]).epsilon(1e-12));
        }
    }
}

TEST_CASE("conditional is normalized and reproducible") {
    std::mt19937_64 gen(21);
    for (std::size_t stage : {0, 4}) {
        SimModelSpec s;
        s.vocab_size = 32;
        s.order = 2;
        s.stage_size = stage;
        s.eos_prob = 0.02;
        const SimModel a(s), b(s);
        for (int i = 0; i < 300; ++i) {
            std::vector<TokenId> prefix(gen() % 5);
            for (auto & t : prefix) t = static_cast<TokenId>(gen() % 32);
            const double temp = 0.05 + (gen() % 100) / 40.0;
            const auto d = a.conditional(prefix, temp);
            CHECK(d.valid());
            CHECK(d.probs == b.conditional(prefix, temp).probs);
            CHECK(d.probs == a.conditional(prefix, temp).probs);
        }
    }
}

TEST_CASE("invalid tokens are rejected") {
    const SimModel m(SimModelSpec{});
    const std::vector<TokenId> bad = {1, 64};
    CHECK_THROWS_AS(m.conditional(bad, 1.0), InvalidToken);
    const std::vector<TokenId> early_bad = {64, 1, 2, 3};
    CHECK_THROWS_AS(m.conditional(early_bad, 1.0), InvalidToken);
}

TEST_CASE("model spec validation") {
    auto field = [](SimModelSpec s) -> std::string {
        try {
            validate_model_spec(s);
        } catch (const ConfigError & e) {
            return e.field();
        }
        return "";
    };
    SimModelSpec s;
    CHECK(field(s) == "");
    s.eos_token = 64;
    CHECK(field(s) == "eos_token");
    s = {};
    s.eos_prob = 1.0;
    CHECK(field(s) == "eos_prob");
    s = {};
    s.base_concentration = 0.0;
    CHECK(field(s) == "base_concentration");
    s = {};
    s.stage_size = 64;
    CHECK(field(s) == "stage_size");
    s = {};
    s.vocab_size = 17;
    s.stage_size = 4;
    s.eos_token = 16;
    CHECK(field(s) == "stage_size");
}

TEST_CASE("staged rows only move forward and end in eos") {
    SimModelSpec s;
    s.vocab_size = 24;
    s.order = 1;
    s.stage_size = 8;
    const SimModel m(s);
    CHECK(m.num_stages() == 3);
    for (TokenId x = 1; x < 24; ++x) {
        const std::vector<TokenId> prefix = {x};
        const auto row = m.base_row(prefix);
        double sum = 0.0;
        for (TokenId y = 0; y < 24; ++y) {
            sum += row[y];
            if (row[y] > 0.0) {
                const bool same_stage_later = y / 8 == x / 8 && y % 8 > x % 8 && y != 0;
                const bool next_stage = y / 8 == x / 8 + 1 && y != 0;
                const bool eos = y == 0 && x / 8 == 2;
                CHECK((same_stage_later || next_stage || eos));
            }
        }
        CHECK(sum == doctest::Approx(1.0));
    }
    // contexts leaving the same stage rank the next stage's entries identically
    const std::vector<TokenId> a = {3}, b = {5};
    const auto ra = m.base_row(a), rb = m.base_row(b);
    for (TokenId y = 8; y < 16; ++y) {
        REQUIRE(ra[y] > 0.0);
        CHECK(ra[y] / ra[8] == doctest::Approx(rb[y] / rb[8]));
    }
    // prompts start in stage 0 and avoid eos
    for (std::uint64_t p = 0; p < 20; ++p) {
        for (TokenId t : m.prompt_tokens(p)) {
            CHECK(t < 8);
            CHECK(t != 0);
        }
    }
}

TEST_CASE("rng streams") {
    RngStream a = RngStream::derive(7, 0), b = RngStream::derive(7, 1), c = RngStream::derive(7, 0);
    CHECK(a.key() != b.key());
    for (int i = 0; i < 10; ++i) {
        const double u = a.uniform();
        CHECK(u == c.uniform());
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    CHECK(a.consumed() == 10);
}
