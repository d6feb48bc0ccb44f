#include "prbox/circuit.hpp"
#include "prbox/errors.hpp"

#include <doctest.h>

#include <random>

using namespace prbox;

namespace {

TruthTable table_of(std::vector<InputBit> vars, int (*f)(unsigned)) {
    TruthTable t{std::move(vars), {}};
    t.values.resize(std::size_t{1} << t.vars.size());
    for (unsigned i = 0; i < t.values.size(); ++i) t.values[i] = static_cast<std::uint8_t>(f(i) & 1);
    return t;
}

std::vector<std::uint8_t> bits_of(unsigned index, int n) {
    std::vector<std::uint8_t> a(n);
    for (int v = 0; v < n; ++v) a[v] = (index >> v) & 1;
    return a;
}

}  // namespace

TEST_SUITE("circuit") {

TEST_CASE("ownership helpers") {
    const auto bits = contiguous_bits(3, 2);
    REQUIRE(bits.size() == 6);
    CHECK(bits[0] == InputBit{"x1_0", 0, 0});
    CHECK(bits[3] == InputBit{"x2_1", 1, 1});
    CHECK(bits[5] == InputBit{"x3_1", 2, 1});
    CHECK(party_input_sizes(bits, 3) == std::vector<int>{4, 4, 4});

    const int counts[] = {1, 0, 2};
    const auto split = split_bits(counts);
    REQUIRE(split.size() == 3);
    CHECK(split[0].party == 0);
    CHECK(split[1].party == 2);
    CHECK(split[2].bit == 1);
    CHECK(party_input_sizes(split, 3) == std::vector<int>{2, 1, 4});
}

TEST_CASE("single NAND gate") {
    const auto c = NandCircuit::make(contiguous_bits(2, 1), {{Signal::input(0), Signal::input(1)}}, Signal::gate(0));
    CHECK(gate_count(c) == 1);
    for (unsigned i = 0; i < 4; ++i) {
        const auto a = bits_of(i, 2);
        CHECK(eval_circuit(c, a) == 1 - (a[0] & a[1]));
    }
}

TEST_CASE("construction rejects forward references and prunes dead gates") {
    CHECK_THROWS(NandCircuit::make(contiguous_bits(2, 1), {{Signal::gate(1), Signal::input(0)}, {Signal::input(0), Signal::input(1)}},
                                   Signal::gate(1)));
    CHECK_THROWS(NandCircuit::make(contiguous_bits(2, 1), {{Signal::input(2), Signal::input(0)}}, Signal::gate(0)));
    const auto c = NandCircuit::make(contiguous_bits(2, 1),
                                     {{Signal::input(0), Signal::input(0)}, {Signal::input(0), Signal::input(1)}},
                                     Signal::gate(1));
    CHECK(gate_count(c) == 1);
    CHECK(c.output() == Signal::gate(0));
}

TEST_CASE("synthesis reproduces common functions") {
    const auto and2 = table_of(contiguous_bits(2, 1), [](unsigned i) { return int((i & 1) & (i >> 1)); });
    const auto xor2 = table_of(contiguous_bits(2, 1), [](unsigned i) { return int((i ^ (i >> 1)) & 1); });
    const auto maj3 = table_of(contiguous_bits(3, 1), [](unsigned i) { return std::popcount(i) >= 2 ? 1 : 0; });
    const auto eq22 = table_of(contiguous_bits(2, 2), [](unsigned i) { return (i & 3) == (i >> 2) ? 1 : 0; });
    const auto ip22 = table_of(contiguous_bits(2, 2), [](unsigned i) { return std::popcount(i & (i >> 2) & 3) & 1; });
    const auto one = table_of(contiguous_bits(3, 1), [](unsigned) { return 1; });
    for (const TruthTable* t : {&and2, &xor2, &maj3, &eq22, &ip22, &one}) {
        const NandCircuit c = synthesize_nand(*t);
        CHECK(truth_table(c) == *t);
        for (unsigned i = 0; i < t->values.size(); ++i) CHECK(eval_circuit(c, bits_of(i, t->n_vars())) == t->values[i]);
    }
    CHECK(gate_count(synthesize_nand(one)) == 0);
    CHECK(gate_count(synthesize_nand(and2)) <= 2);
}

TEST_CASE("synthesis of random functions") {
    std::mt19937_64 rng(7);
    for (int n = 1; n <= 6; ++n) {
        for (int trial = 0; trial < 10; ++trial) {
            TruthTable t{contiguous_bits(n, 1), std::vector<std::uint8_t>(std::size_t{1} << n)};
            for (auto& v : t.values) v = rng() & 1;
            const NandCircuit c = synthesize_nand(t);
            CHECK(truth_table(c) == t);
        }
    }
}

TEST_CASE("gate values agree with the output") {
    const auto maj = table_of(contiguous_bits(3, 1), [](unsigned i) { return std::popcount(i) >= 2 ? 1 : 0; });
    const NandCircuit c = synthesize_nand(maj);
    for (unsigned i = 0; i < 8; ++i) {
        const auto a = bits_of(i, 3);
        const auto g = eval_gates(c, a);
        REQUIRE(g.size() == c.gates().size());
        for (std::size_t k = 0; k < g.size(); ++k) {
            auto value = [&](Signal s) -> int {
                switch (s.kind) {
                case Signal::Kind::Input: return a[s.index];
                case Signal::Kind::Gate: return g[s.index];
                default: return s.index;
                }
            };
            CHECK(g[k] == 1 - (value(c.gates()[k].left) & value(c.gates()[k].right)));
        }
        CHECK(eval_circuit(c, a) == maj.values[i]);
    }
}

TEST_CASE("netlist round trip") {
    const auto c = parse_netlist("g0 = NAND(x1_0, x2_0)\ng1 = NAND(g0, 1)\noutput = g1\n");
    CHECK(gate_count(c) == 2);
    for (unsigned i = 0; i < 4; ++i) {
        const auto a = bits_of(i, 2);
        CHECK(eval_circuit(c, a) == (a[0] & a[1]));
    }
    CHECK(parse_netlist(to_netlist(c)) == c);
    CHECK(c.inputs()[1].party == 1);
    CHECK_THROWS_AS(parse_netlist("g0 = NAND(y, x1_0)\n"), ParseError);
    CHECK_THROWS_AS(parse_netlist("g0 = AND(x1_0, x1_1)\n"), ParseError);
}

TEST_CASE("truth table cap") {
    std::vector<Gate> gates{{Signal::input(0), Signal::input(kTruthTableCap)}};
    const auto c = NandCircuit::make(contiguous_bits(kTruthTableCap + 1, 1), gates, Signal::gate(0));
    CHECK_THROWS_AS(truth_table(c), TooLarge);
}

}
