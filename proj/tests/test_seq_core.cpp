#include <doctest.h>

#include <random>
#include <set>
#include <sstream>

#include "ssa/error.hpp"
#include "ssa/seq_core.hpp"

using namespace ssa;

namespace {

StateSequence binary_seq(const std::string& id, std::vector<State> s) {
    return {id, Alphabet::binary(), std::move(s)};
}

std::string violations_text(const ValidationError& e) {
    std::string out;
    for (const auto& v : e.violations()) out += v + "\n";
    return out;
}

}  // namespace

TEST_CASE("extended alphabet has eight labels with RAS as the lowest bit") {
    auto ea = Alphabet::extended(kDefaultChannels);
    REQUIRE(ea->size() == 8);
    CHECK(ea->symbols() == std::vector<std::string>{"None", "RAS", "BB", "RAS+BB", "AA", "RAS+AA", "BB+AA",
                                                    "RAS+BB+AA"});
    CHECK(ea->channel_arity() == 3u);
    CHECK(ea->index_of("RAS+AA") == State{5});
    CHECK_FALSE(ea->index_of("AA+RAS").has_value());
    CHECK_FALSE(Alphabet::binary()->channel_arity().has_value());
    CHECK(Alphabet::binary()->is_binary());
}

TEST_CASE("extended alphabet size is 2^c") {
    std::vector<std::string> names;
    for (int c = 1; c <= 5; ++c) {
        names.push_back("D" + std::to_string(c));
        auto ea = Alphabet::extended(names);
        CHECK(ea->size() == (std::size_t{1} << c));
        std::set<std::string> unique(ea->symbols().begin(), ea->symbols().end());
        CHECK(unique.size() == ea->size());
    }
}

TEST_CASE("alphabet rejects bad labels") {
    CHECK_THROWS_AS(Alphabet({}), ValidationError);
    CHECK_THROWS_AS(Alphabet({"a", "a"}), ValidationError);
    CHECK_THROWS_AS(Alphabet({"a", ""}), ValidationError);
}

TEST_CASE("combine_channels on single weeks") {
    auto ea = Alphabet::extended(kDefaultChannels);
    auto combine1 = [&](State ras, State bb, State aa) {
        std::vector<StateSequence> ch = {binary_seq("p", {ras}), binary_seq("p", {bb}), binary_seq("p", {aa})};
        auto out = combine_channels(ch, ea);
        REQUIRE(out.length() == 1);
        return ea->label(out.states[0]);
    };
    CHECK(combine1(1, 0, 0) == "RAS");
    CHECK(combine1(0, 0, 0) == "None");
    CHECK(combine1(1, 1, 1) == "RAS+BB+AA");
    CHECK(combine1(0, 1, 1) == "BB+AA");
}

TEST_CASE("combine_channels over 52 weeks stays inside the alphabet and keeps the subject id") {
    auto ea = Alphabet::extended(kDefaultChannels);
    std::mt19937_64 rng(7);
    std::bernoulli_distribution coin(0.5);
    std::vector<StateSequence> ch;
    for (int c = 0; c < 3; ++c) {
        std::vector<State> s(52);
        for (auto& x : s) x = coin(rng) ? 1 : 0;
        ch.push_back(binary_seq("P9", s));
    }
    auto out = combine_channels(ch, ea);
    CHECK(out.subject_id == "P9");
    CHECK(out.length() == 52);
    for (State s : out.states) CHECK(s < 8);
}

TEST_CASE("combine and project are inverse on random triples") {
    auto ea = Alphabet::extended(kDefaultChannels);
    std::mt19937_64 rng(11);
    std::bernoulli_distribution coin(0.4);
    for (int rep = 0; rep < 1000; ++rep) {
        std::vector<StateSequence> ch;
        for (int c = 0; c < 3; ++c) {
            std::vector<State> s(1 + rep % 60);
            for (auto& x : s) x = coin(rng) ? 1 : 0;
            ch.push_back(binary_seq("x", s));
        }
        auto combined = combine_channels(ch, ea);
        for (std::size_t c = 0; c < 3; ++c) REQUIRE(project_channel(combined, c).states == ch[c].states);
    }
}

TEST_CASE("decode_state is a bijection over the eight states") {
    std::set<std::vector<State>> seen;
    for (State s = 0; s < 8; ++s) {
        auto bits = decode_state(s, 3);
        REQUIRE(bits.size() == 3);
        CHECK(bits[0] + 2 * bits[1] + 4 * bits[2] == s);
        seen.insert(bits);
    }
    CHECK(seen.size() == 8);
}

TEST_CASE("combine_channels errors") {
    auto ea = Alphabet::extended(kDefaultChannels);
    SUBCASE("length mismatch reports every length") {
        std::vector<StateSequence> ch = {binary_seq("p", std::vector<State>(52)),
                                         binary_seq("p", std::vector<State>(51)),
                                         binary_seq("p", std::vector<State>(52))};
        try {
            combine_channels(ch, ea);
            FAIL("expected rejection");
        } catch (const ValidationError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("RAS=52") != std::string::npos);
            CHECK(msg.find("BB=51") != std::string::npos);
            CHECK(msg.find("AA=52") != std::string::npos);
        }
    }
    SUBCASE("non-binary channel") {
        auto tri = std::make_shared<const Alphabet>(std::vector<std::string>{"a", "b", "c"});
        std::vector<StateSequence> ch = {binary_seq("p", {0}), {"p", tri, {2}}, binary_seq("p", {0})};
        CHECK_THROWS_AS(combine_channels(ch, ea), ValidationError);
    }
    SUBCASE("wrong channel count") {
        std::vector<StateSequence> ch = {binary_seq("p", {0}), binary_seq("p", {0})};
        CHECK_THROWS_AS(combine_channels(ch, ea), ValidationError);
    }
}

TEST_CASE("validate_set") {
    auto ea = Alphabet::extended(kDefaultChannels);
    auto seq = [&](const std::string& id, std::size_t len) { return StateSequence{id, ea, std::vector<State>(len, 3)}; };

    SUBCASE("three valid sequences") {
        auto set = validate_set({seq("a", 52), seq("b", 52), seq("c", 52)});
        CHECK(set.size() == 3);
        CHECK(set.length() == 52);
        CHECK(set.alphabet()->size() == 8);
    }
    SUBCASE("duplicate id is listed") {
        try {
            validate_set({seq("a", 52), seq("dup", 52), seq("dup", 52)});
            FAIL("expected rejection");
        } catch (const ValidationError& e) {
            CHECK(violations_text(e).find("dup") != std::string::npos);
        }
    }
    SUBCASE("short sequence is named") {
        try {
            validate_set({seq("a", 52), seq("short", 51), seq("c", 52)});
            FAIL("expected rejection");
        } catch (const ValidationError& e) {
            CHECK(violations_text(e).find("short") != std::string::npos);
        }
    }
    SUBCASE("several problems are all reported") {
        try {
            validate_set({seq("a", 52), seq("a", 52), seq("b", 50)});
            FAIL("expected rejection");
        } catch (const ValidationError& e) {
            CHECK(e.violations().size() >= 2);
        }
    }
    SUBCASE("empty input") { CHECK_THROWS_AS(validate_set({}), ValidationError); }
    SUBCASE("alphabet mismatch") {
        CHECK_THROWS_AS(validate_set({seq("a", 3), binary_seq("b", {0, 1, 0})}), ValidationError);
    }
    SUBCASE("state outside the alphabet") {
        auto bad = seq("b", 52);
        bad.states[10] = 8;
        CHECK_THROWS_AS(validate_set({seq("a", 52), bad}), ValidationError);
    }
}

TEST_CASE("sequence CSV round trip") {
    auto ea = Alphabet::extended(kDefaultChannels);
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> u(0, 7);
    std::vector<StateSequence> seqs;
    for (int i = 0; i < 20; ++i) {
        std::vector<State> s(52);
        for (auto& x : s) x = static_cast<State>(u(rng));
        seqs.push_back({"S" + std::to_string(i), ea, s});
    }
    auto set = validate_set(seqs);
    std::stringstream buf;
    write_sequence_csv(buf, set);
    const std::string text = buf.str();
    CHECK(text.rfind("subject_id,w1,w2,", 0) == 0);
    auto back = read_sequence_csv(buf, ea);
    REQUIRE(back.size() == set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
        CHECK(back[i].subject_id == set[i].subject_id);
        CHECK(back[i].states == set[i].states);
    }
}

TEST_CASE("sequence CSV rejects unknown labels") {
    std::istringstream in("subject_id,w1,w2\nA,None,RAS+XX\n");
    CHECK_THROWS_AS(read_sequence_csv(in, Alphabet::extended(kDefaultChannels)), ValidationError);
}
