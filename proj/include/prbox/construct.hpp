#pragma once

#include "prbox/box.hpp"
#include "prbox/circuit.hpp"
#include "prbox/wiring.hpp"

#include <optional>
#include <span>
#include <vector>

namespace prbox {

/// PR instances of one NAND gate: B_ij for every ordered pair i != j. In
/// B_ij party i holds side 0 and feeds its share of the left operand; party j
/// holds side 1 and feeds its share of the right operand.
struct NandBlockLayout {
    int parties = 0;
    int first_instance = 0;

    static int boxes_per_gate(int parties) { return parties * (parties - 1); }
    int instance(int i, int j) const { return first_instance + i * (parties - 1) + (j < i ? j : j - 1); }
    /// Constant added by each party: 1 for the first party, 0 elsewhere.
    static int flag(int party) { return party == 0 ? 1 : 0; }
};

struct BlockBranch {
    std::vector<int> a;  // per party
    std::vector<int> b;  // b[i*n+j]: side-0 output of B_ij (unused on the diagonal)
    std::vector<int> c;  // c[i*n+j]: side-1 output of B_ij
    Rational p;
};

/// Runs one block on shares beta, gamma and returns every branch of its
/// n(n-1) PR boxes. Throws ShapeMismatch unless both have one bit per party.
std::vector<BlockBranch> nand_block(int parties, std::span<const int> beta, std::span<const int> gamma);

struct CompileOptions {
    /// Fault injection: party whose constant flag is flipped, or -1.
    int flip_flag = -1;
};

struct CompiledProtocol {
    ValidatedProtocol protocol;
    NandCircuit circuit;
    std::vector<InputBit> ownership;  // per circuit input
    int parties = 0;
    int gate_count = 0;
    int pr_boxes = 0;
    std::vector<NandBlockLayout> blocks;  // per gate
};

/// Wiring protocol whose induced box is the full-correlation box of the
/// circuit. `ownership[v]` gives the party and bit position of circuit input
/// v; bits of each party must be 0..count-1. Throws UnownedInputBit.
CompiledProtocol compile(const NandCircuit& circuit, int parties, std::span<const InputBit> ownership,
                         const CompileOptions& options = {});
/// Uses the ownership recorded in the circuit's inputs.
CompiledProtocol compile(const NandCircuit& circuit, int parties, const CompileOptions& options = {});

/// Full-correlation box with parity f(x) under the given ownership.
Box full_correlation_target(const NandCircuit& circuit, int parties, std::span<const InputBit> ownership);

/// Circuit assignment for a tuple of party inputs.
std::vector<std::uint8_t> assignment_for(std::span<const InputBit> ownership, std::span<const int> x);

struct SimulationVerdict {
    struct Difference {
        std::vector<int> x;
        std::vector<int> a;
        Rational expected;
        Rational actual;
    };
    bool match = true;
    std::optional<Difference> first_difference;
};

/// Exact comparison of the induced box with `target`; throws ShapeMismatch.
SimulationVerdict verify_simulation(const ValidatedProtocol& protocol, const Box& target, unsigned threads = 1);

struct Message {
    int from = 0;
    int to = 0;
    int bit = 0;
};

struct CcResult {
    int value = 0;
    std::vector<Message> transcript;
    int bits_communicated = 0;
    int boxes_consumed = 0;
};

/// One run of the protocol on x (box outcomes drawn from `seed`); every other
/// party sends its output bit to the first, who sums them.
CcResult solve_cc(const CompiledProtocol& compiled, std::span<const int> x, std::uint64_t seed = 0);

} // namespace prbox
