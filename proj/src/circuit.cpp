#include "prbox/circuit.hpp"

#include "prbox/errors.hpp"

#include <algorithm>
#include <map>
#include <regex>
#include <sstream>
#include <unordered_map>

namespace prbox {

std::vector<InputBit> contiguous_bits(int n, int m) {
    std::vector<int> counts(n, m);
    return split_bits(counts);
}

std::vector<InputBit> split_bits(std::span<const int> counts) {
    std::vector<InputBit> bits;
    for (std::size_t p = 0; p < counts.size(); ++p) {
        for (int b = 0; b < counts[p]; ++b) {
            bits.push_back({"x" + std::to_string(p + 1) + "_" + std::to_string(b), static_cast<int>(p), b});
        }
    }
    return bits;
}

std::vector<int> party_input_sizes(std::span<const InputBit> inputs, int parties) {
    std::vector<int> bits(parties, 0);
    for (const auto& in : inputs) {
        if (in.party < 0 || in.party >= parties) throw UnownedInputBit("input " + in.name + " has no owner");
        bits[in.party] = std::max(bits[in.party], in.bit + 1);
    }
    std::vector<int> sizes(parties);
    for (int p = 0; p < parties; ++p) sizes[p] = 1 << bits[p];
    return sizes;
}

namespace {

void check_inputs(const std::vector<InputBit>& inputs) {
    std::map<std::pair<int, int>, std::string> owned;
    std::map<std::string, int> names;
    for (const auto& in : inputs) {
        if (in.party < 0 || in.bit < 0) throw UnownedInputBit("input " + in.name + " has no valid owner");
        if (!owned.emplace(std::pair{in.party, in.bit}, in.name).second) {
            throw ParseError("two inputs claim party " + std::to_string(in.party + 1) + " bit " + std::to_string(in.bit));
        }
        if (!names.emplace(in.name, 0).second) throw ParseError("duplicate input name " + in.name);
    }
}

} // namespace

NandCircuit NandCircuit::make(std::vector<InputBit> inputs, std::vector<Gate> gates, Signal output) {
    check_inputs(inputs);
    auto check_ref = [&](Signal s, int limit) {
        switch (s.kind) {
        case Signal::Kind::Input:
            if (s.index < 0 || s.index >= static_cast<int>(inputs.size())) throw ParseError("unknown input reference");
            break;
        case Signal::Kind::Gate:
            if (s.index < 0 || s.index >= limit) throw ParseError("gate reference is not topologically ordered");
            break;
        case Signal::Kind::Constant:
            if (s.index != 0 && s.index != 1) throw ParseError("constants are 0 or 1");
            break;
        }
    };
    for (int g = 0; g < static_cast<int>(gates.size()); ++g) {
        check_ref(gates[g].left, g);
        check_ref(gates[g].right, g);
    }
    check_ref(output, static_cast<int>(gates.size()));

    // Prune gates that do not feed the output and renumber the rest.
    std::vector<bool> live(gates.size(), false);
    if (output.kind == Signal::Kind::Gate) live[output.index] = true;
    for (int g = static_cast<int>(gates.size()) - 1; g >= 0; --g) {
        if (!live[g]) continue;
        for (Signal s : {gates[g].left, gates[g].right}) {
            if (s.kind == Signal::Kind::Gate) live[s.index] = true;
        }
    }
    std::vector<int> renumber(gates.size(), -1);
    std::vector<Gate> kept;
    auto remap = [&](Signal s) {
        return s.kind == Signal::Kind::Gate ? Signal::gate(renumber[s.index]) : s;
    };
    for (std::size_t g = 0; g < gates.size(); ++g) {
        if (!live[g]) continue;
        renumber[g] = static_cast<int>(kept.size());
        kept.push_back({remap(gates[g].left), remap(gates[g].right)});
    }
    NandCircuit c;
    c.inputs_ = std::move(inputs);
    c.gates_ = std::move(kept);
    c.output_ = remap(output);
    return c;
}

std::vector<std::uint8_t> eval_gates(const NandCircuit& circuit, std::span<const std::uint8_t> assignment) {
    if (assignment.size() != circuit.inputs().size()) {
        throw MissingAssignment("assignment has " + std::to_string(assignment.size()) + " bits, circuit has " +
                                std::to_string(circuit.inputs().size()) + " inputs");
    }
    std::vector<std::uint8_t> value(circuit.gates().size());
    auto get = [&](Signal s) -> int {
        switch (s.kind) {
        case Signal::Kind::Input: return assignment[s.index] & 1;
        case Signal::Kind::Gate: return value[s.index];
        case Signal::Kind::Constant: return s.index;
        }
        return 0;
    };
    for (std::size_t g = 0; g < circuit.gates().size(); ++g) {
        const auto& gate = circuit.gates()[g];
        value[g] = static_cast<std::uint8_t>((get(gate.left) & get(gate.right)) ^ 1);
    }
    return value;
}

int eval_circuit(const NandCircuit& circuit, std::span<const std::uint8_t> assignment) {
    const auto value = eval_gates(circuit, assignment);
    const Signal out = circuit.output();
    switch (out.kind) {
    case Signal::Kind::Input: return assignment[out.index] & 1;
    case Signal::Kind::Gate: return value[out.index];
    case Signal::Kind::Constant: return out.index;
    }
    return 0;
}

TruthTable truth_table(const NandCircuit& circuit) {
    const int n = static_cast<int>(circuit.inputs().size());
    if (n > kTruthTableCap) throw TooLarge("truth table variables", static_cast<std::uint64_t>(n), kTruthTableCap);
    const std::size_t rows = std::size_t{1} << n;
    TruthTable t{circuit.inputs(), std::vector<std::uint8_t>(rows)};

    // Bit-parallel: 64 assignments per word.
    const std::size_t words = (rows + 63) / 64;
    std::vector<std::uint64_t> gate_words(circuit.gates().size());
    for (std::size_t w = 0; w < words; ++w) {
        auto input_word = [&](int v) {
            std::uint64_t word = 0;
            for (int k = 0; k < 64; ++k) {
                const std::size_t row = w * 64 + k;
                if (row < rows && ((row >> v) & 1)) word |= std::uint64_t{1} << k;
            }
            return word;
        };
        auto get = [&](Signal s) -> std::uint64_t {
            switch (s.kind) {
            case Signal::Kind::Input: return input_word(s.index);
            case Signal::Kind::Gate: return gate_words[s.index];
            case Signal::Kind::Constant: return s.index ? ~std::uint64_t{0} : 0;
            }
            return 0;
        };
        for (std::size_t g = 0; g < circuit.gates().size(); ++g) {
            gate_words[g] = ~(get(circuit.gates()[g].left) & get(circuit.gates()[g].right));
        }
        const std::uint64_t out = get(circuit.output());
        for (int k = 0; k < 64; ++k) {
            const std::size_t row = w * 64 + k;
            if (row < rows) t.values[row] = static_cast<std::uint8_t>((out >> k) & 1);
        }
    }
    return t;
}

namespace {

class NandBuilder {
public:
    Signal nand(Signal a, Signal b) {
        if (a > b) std::swap(a, b);
        if (a.kind == Signal::Kind::Constant) return a.index == 0 ? Signal::constant(1) : negate(b);
        if (a == b) return negate(a);
        if (is_not_of(a, b) || is_not_of(b, a)) return Signal::constant(1);
        return intern(a, b);
    }

    Signal negate(Signal a) {
        if (a.kind == Signal::Kind::Constant) return Signal::constant(a.index ^ 1);
        if (a.kind == Signal::Kind::Gate) {
            const Gate& g = gates_[a.index];
            if (g.left == g.right) return g.left;  // NOT NOT x = x
        }
        return intern(a, a);
    }

    Signal and_(Signal a, Signal b) { return negate(nand(a, b)); }
    Signal or_(Signal a, Signal b) { return nand(negate(a), negate(b)); }

    Signal mux(Signal s, Signal hi, Signal lo) {
        if (hi == lo) return hi;
        const bool hc = hi.kind == Signal::Kind::Constant;
        const bool lc = lo.kind == Signal::Kind::Constant;
        if (hc && lc) return hi.index ? s : negate(s);
        if (hc) return hi.index ? or_(s, lo) : and_(negate(s), lo);
        if (lc) return lo.index ? or_(negate(s), hi) : and_(s, hi);
        return nand(nand(s, hi), nand(negate(s), lo));
    }

    std::vector<Gate> take() { return std::move(gates_); }

private:
    bool is_not_of(Signal maybe_not, Signal x) const {
        if (maybe_not.kind != Signal::Kind::Gate) return false;
        const Gate& g = gates_[maybe_not.index];
        return g.left == g.right && g.left == x;
    }

    Signal intern(Signal a, Signal b) {
        const auto key = std::pair{a, b};
        if (auto it = cache_.find(key); it != cache_.end()) return Signal::gate(it->second);
        const int id = static_cast<int>(gates_.size());
        gates_.push_back({a, b});
        cache_.emplace(key, id);
        return Signal::gate(id);
    }

    std::vector<Gate> gates_;
    std::map<std::pair<Signal, Signal>, int> cache_;
};

} // namespace

NandCircuit synthesize_nand(const TruthTable& table) {
    const int n = table.n_vars();
    if (n > kTruthTableCap) throw TooLarge("truth table variables", static_cast<std::uint64_t>(n), kTruthTableCap);
    if (table.values.size() != (std::size_t{1} << n)) throw DimensionMismatch("truth table has wrong length");

    NandBuilder builder;
    // Memo over (number of leading variables, sub-table contents).
    std::map<std::pair<int, std::vector<std::uint8_t>>, Signal> memo;
    auto expand = [&](auto&& self, int k, std::vector<std::uint8_t> sub) -> Signal {
        if (k == 0) return Signal::constant(sub[0]);
        if (std::all_of(sub.begin(), sub.end(), [&](std::uint8_t v) { return v == sub[0]; })) {
            return Signal::constant(sub[0]);
        }
        auto key = std::pair{k, sub};
        if (auto it = memo.find(key); it != memo.end()) return it->second;
        const std::size_t half = sub.size() / 2;
        std::vector<std::uint8_t> lo(sub.begin(), sub.begin() + half);
        std::vector<std::uint8_t> hi(sub.begin() + half, sub.end());
        const Signal lo_sig = self(self, k - 1, std::move(lo));
        const Signal hi_sig = self(self, k - 1, std::move(hi));
        const Signal s = builder.mux(Signal::input(k - 1), hi_sig, lo_sig);
        memo.emplace(std::move(key), s);
        return s;
    };
    std::vector<std::uint8_t> values(table.values.size());
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = table.values[i] & 1;
    const Signal out = expand(expand, n, values);
    NandCircuit c = NandCircuit::make(table.vars, builder.take(), out);
    if (truth_table(c).values != values) throw Error("synthesised circuit disagrees with its truth table");
    return c;
}

std::string signal_name(const NandCircuit& circuit, Signal s) {
    switch (s.kind) {
    case Signal::Kind::Input: return circuit.inputs()[s.index].name;
    case Signal::Kind::Gate: return "g" + std::to_string(s.index);
    case Signal::Kind::Constant: return std::to_string(s.index);
    }
    return {};
}

NandCircuit parse_netlist(const std::string& text) {
    static const std::regex gate_re(R"(^\s*(g\d+)\s*=\s*NAND\s*\(\s*([A-Za-z0-9_]+)\s*,\s*([A-Za-z0-9_]+)\s*\)\s*$)");
    static const std::regex output_re(R"(^\s*output\s*=\s*([A-Za-z0-9_]+)\s*$)");
    static const std::regex input_re(R"(^x(\d+)_(\d+)$)");

    std::vector<InputBit> inputs;
    std::unordered_map<std::string, Signal> names;
    std::vector<Gate> gates;
    std::string output_name;

    auto resolve = [&](const std::string& ref, int line_no) -> Signal {
        if (ref == "0" || ref == "1") return Signal::constant(ref == "1");
        if (auto it = names.find(ref); it != names.end()) return it->second;
        std::smatch m;
        if (std::regex_match(ref, m, input_re)) {
            const int party = std::stoi(m[1]) - 1;
            if (party < 0) throw UnownedInputBit("input " + ref + " names party 0; parties count from 1");
            inputs.push_back({ref, party, std::stoi(m[2])});
            const Signal s = Signal::input(static_cast<int>(inputs.size()) - 1);
            names.emplace(ref, s);
            return s;
        }
        throw ParseError("line " + std::to_string(line_no) + ": unknown reference '" + ref + "'");
    };

    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::smatch m;
        if (std::regex_match(line, m, gate_re)) {
            const std::string id = m[1];
            if (id != "g" + std::to_string(gates.size())) {
                throw ParseError("line " + std::to_string(line_no) + ": expected gate g" + std::to_string(gates.size()));
            }
            const Signal l = resolve(m[2], line_no);
            const Signal r = resolve(m[3], line_no);
            gates.push_back({l, r});
            names.emplace(id, Signal::gate(static_cast<int>(gates.size()) - 1));
        } else if (std::regex_match(line, m, output_re)) {
            output_name = m[1];
        } else {
            throw ParseError("line " + std::to_string(line_no) + ": cannot parse '" + line + "'");
        }
    }
    Signal out;
    if (!output_name.empty()) {
        out = resolve(output_name, line_no);
    } else if (!gates.empty()) {
        out = Signal::gate(static_cast<int>(gates.size()) - 1);
    } else {
        throw ParseError("netlist has no gates and no output line");
    }
    NandCircuit c = NandCircuit::make(std::move(inputs), std::move(gates), out);
    if (c.inputs().size() <= static_cast<std::size_t>(kTruthTableCap)) {
        (void)truth_table(c);
    } else {
        c.set_verified(false);
    }
    return c;
}

std::string to_netlist(const NandCircuit& circuit) {
    std::ostringstream out;
    for (std::size_t g = 0; g < circuit.gates().size(); ++g) {
        const auto& gate = circuit.gates()[g];
        out << "g" << g << " = NAND(" << signal_name(circuit, gate.left) << ", " << signal_name(circuit, gate.right)
            << ")\n";
    }
    out << "output = " << signal_name(circuit, circuit.output()) << "\n";
    return out.str();
}

} // namespace prbox
