#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace prbox {

/// A named circuit input owned by one party. `bit` is the position of this
/// variable inside the owner's input integer (little-endian).
struct InputBit {
    std::string name;
    int party = 0;
    int bit = 0;

    friend bool operator==(const InputBit&, const InputBit&) = default;
};

/// Conventional names "x<party+1>_<bit>" for n parties owning m bits each;
/// variable p*m + b belongs to party p.
std::vector<InputBit> contiguous_bits(int n, int m);

/// `counts[p]` consecutive variables for each party, in party order.
std::vector<InputBit> split_bits(std::span<const int> counts);

/// Per-party input alphabet sizes implied by an ownership map (2^bits owned).
std::vector<int> party_input_sizes(std::span<const InputBit> inputs, int parties);

/// A Boolean function given by its values on all assignments. Variable v is
/// bit v of the assignment index.
struct TruthTable {
    std::vector<InputBit> vars;
    std::vector<std::uint8_t> values;

    int n_vars() const { return static_cast<int>(vars.size()); }

    friend bool operator==(const TruthTable&, const TruthTable&) = default;
};

/// Reference to a circuit input, an earlier gate, or a constant.
struct Signal {
    enum class Kind : std::uint8_t { Input, Gate, Constant };
    Kind kind = Kind::Constant;
    int index = 0;  // input index, gate index, or the constant's value

    static Signal input(int i) { return {Kind::Input, i}; }
    static Signal gate(int g) { return {Kind::Gate, g}; }
    static Signal constant(int v) { return {Kind::Constant, v & 1}; }

    friend auto operator<=>(const Signal&, const Signal&) = default;
};

struct Gate {
    Signal left;
    Signal right;

    friend bool operator==(const Gate&, const Gate&) = default;
};

/// A DAG of NAND gates in topological order. Construction rejects forward
/// references and removes gates that do not reach the output.
class NandCircuit {
public:
    static NandCircuit make(std::vector<InputBit> inputs, std::vector<Gate> gates, Signal output);

    const std::vector<InputBit>& inputs() const noexcept { return inputs_; }
    const std::vector<Gate>& gates() const noexcept { return gates_; }
    Signal output() const noexcept { return output_; }

    /// False when the circuit was too wide to check exhaustively on load.
    bool verified() const noexcept { return verified_; }
    void set_verified(bool v) noexcept { verified_ = v; }

    friend bool operator==(const NandCircuit& a, const NandCircuit& b) {
        return a.inputs_ == b.inputs_ && a.gates_ == b.gates_ && a.output_ == b.output_;
    }

private:
    std::vector<InputBit> inputs_;
    std::vector<Gate> gates_;
    Signal output_;
    bool verified_ = true;
};

inline constexpr int kTruthTableCap = 20;

/// NAND(q, r) = q r + 1 evaluated gate by gate. `assignment` has one bit per input.
int eval_circuit(const NandCircuit& circuit, std::span<const std::uint8_t> assignment);

/// Value of every gate under one assignment (instrumented evaluation).
std::vector<std::uint8_t> eval_gates(const NandCircuit& circuit, std::span<const std::uint8_t> assignment);

/// Shannon expansion into multiplexers lowered to NAND, with structural
/// hashing and double-negation elimination. The result is checked against
/// the table before it is returned.
NandCircuit synthesize_nand(const TruthTable& table);

/// Live NAND gates (the circuit is always pruned).
inline int gate_count(const NandCircuit& circuit) { return static_cast<int>(circuit.gates().size()); }

/// Exhaustive evaluation; TooLarge beyond kTruthTableCap variables.
TruthTable truth_table(const NandCircuit& circuit);

/// Name of a signal as used by the JSON and netlist formats.
std::string signal_name(const NandCircuit& circuit, Signal s);

/// Parses lines like `g3 = NAND(x1_0, g2)`. Inputs must be named
/// x<party>_<bit> (party counted from 1); `0` and `1` denote constants. An
/// optional `output = <ref>` line picks the output, otherwise the last gate.
NandCircuit parse_netlist(const std::string& text);

std::string to_netlist(const NandCircuit& circuit);

} // namespace prbox
