#include "prbox/construct.hpp"

#include "prbox/errors.hpp"

#include <boost/container/small_vector.hpp>

#include <algorithm>
#include <bit>
#include <cstring>
#include <set>
#include <unordered_map>

namespace prbox {

std::vector<BlockBranch> nand_block(int parties, std::span<const int> beta, std::span<const int> gamma) {
    const int n = parties;
    if (n <= 0 || static_cast<int>(beta.size()) != n || static_cast<int>(gamma.size()) != n) {
        throw ShapeMismatch("nand block needs one beta and one gamma bit per party");
    }
    const auto pr = BoxTemplate::pr();
    std::vector<BlockBranch> branches{{std::vector<int>(n), std::vector<int>(n * n), std::vector<int>(n * n), 1}};
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const int in[2] = {beta[i] & 1, gamma[j] & 1};
            const int none[2] = {0, 0};
            std::vector<BlockBranch> next;
            for (const auto& br : branches) {
                for (const auto& out : pr->resolve(0b11, 0, in, none)) {
                    BlockBranch nb = br;
                    nb.b[i * n + j] = out.outputs[0];
                    nb.c[i * n + j] = out.outputs[1];
                    nb.p *= out.p;
                    next.push_back(std::move(nb));
                }
            }
            branches = std::move(next);
        }
    }
    for (auto& br : branches) {
        for (int i = 0; i < n; ++i) {
            int a = (beta[i] & gamma[i] & 1) ^ NandBlockLayout::flag(i);
            for (int j = 0; j < n; ++j) {
                if (j != i) a ^= br.b[i * n + j] ^ br.c[j * n + i];
            }
            br.a[i] = a;
        }
    }
    return branches;
}

std::vector<std::uint8_t> assignment_for(std::span<const InputBit> ownership, std::span<const int> x) {
    std::vector<std::uint8_t> assignment(ownership.size());
    for (std::size_t v = 0; v < ownership.size(); ++v) {
        assignment[v] = static_cast<std::uint8_t>(x[ownership[v].party] >> ownership[v].bit & 1);
    }
    return assignment;
}

namespace {

void check_ownership(const NandCircuit& circuit, int parties, std::span<const InputBit> ownership) {
    if (parties <= 0) throw ShapeMismatch("need at least one party");
    if (ownership.size() != circuit.inputs().size()) {
        throw ShapeMismatch("ownership map must cover every circuit input");
    }
    std::vector<std::set<int>> bits(parties);
    for (const auto& o : ownership) {
        if (o.party < 0 || o.party >= parties) {
            throw UnownedInputBit("input " + o.name + " is not owned by any of the " + std::to_string(parties) +
                                  " parties");
        }
        if (o.bit < 0 || !bits[o.party].insert(o.bit).second) {
            throw UnownedInputBit("input " + o.name + " has an invalid or repeated bit position");
        }
    }
    for (int p = 0; p < parties; ++p) {
        if (!bits[p].empty() && *bits[p].rbegin() != static_cast<int>(bits[p].size()) - 1) {
            throw UnownedInputBit("bits of party " + std::to_string(p + 1) + " are not contiguous from 0");
        }
        if (bits[p].size() > 20) {
            throw TooLarge("input bits of one party", bits[p].size(), 20);
        }
    }
}

using Shares = boost::container::small_vector<std::int8_t, 48>;

struct Step {
    int offset;  // instance offset within the block
    int side;
    bool right;  // feeds the share of the right operand
};

// Builds one party's decision graph. Nodes are keyed by everything the
// remaining moves depend on, so equivalent histories share a node.
class PartyBuilder {
public:
    PartyBuilder(const NandCircuit& c, int parties, int party, std::span<const InputBit> ownership, int flag)
        : c_(c), n_(parties), party_(party), ownership_(ownership), flag_(flag) {
        const int k = static_cast<int>(c.gates().size());
        last_use_.assign(k, -1);
        for (int g = 0; g < k; ++g) {
            for (Signal s : {c.gates()[g].left, c.gates()[g].right}) {
                if (s.kind == Signal::Kind::Gate) last_use_[s.index] = g;
            }
        }
        if (c.output().kind == Signal::Kind::Gate) last_use_[c.output().index] = k;
        const NandBlockLayout layout{n_, 0};
        for (int i = 0; i < n_; ++i) {
            for (int j = 0; j < n_; ++j) {
                if (i == j) continue;
                if (i == party_) steps_.push_back({layout.instance(i, j), 0, false});
                if (j == party_) steps_.push_back({layout.instance(i, j), 1, true});
            }
        }
        std::sort(steps_.begin(), steps_.end(), [](const Step& a, const Step& b) { return a.offset < b.offset; });
    }

    int root(int x, int mask) {
        Shares shares(c_.gates().size(), -1);
        return build(0, 0, 0, std::move(shares), x, mask);
    }

    std::vector<StrategyNode> take() { return std::move(nodes_); }

private:
    int share(Signal s, const Shares& shares, int x) const {
        switch (s.kind) {
        case Signal::Kind::Input: {
            const auto& o = ownership_[s.index];
            return o.party == party_ ? (x >> o.bit & 1) : 0;
        }
        case Signal::Kind::Constant: return party_ == 0 ? s.index : 0;
        case Signal::Kind::Gate: return shares[s.index];
        }
        return 0;
    }

    int build(int g, int s, int acc, Shares shares, int x, int mask) {
        const int k = static_cast<int>(c_.gates().size());
        while (g < k && s == static_cast<int>(steps_.size())) {
            const Gate& gate = c_.gates()[g];
            const int a = acc ^ (share(gate.left, shares, x) & share(gate.right, shares, x)) ^ flag_;
            shares[g] = static_cast<std::int8_t>(a);
            for (int h = 0; h <= g; ++h) {
                if (last_use_[h] == g) shares[h] = -1;
            }
            ++g;
            s = 0;
            acc = 0;
        }
        std::string key(8 + shares.size(), '\0');
        const std::int32_t head[2] = {g << 8 | s << 2 | acc << 1 | mask, x};
        std::memcpy(key.data(), head, sizeof head);
        std::memcpy(key.data() + 8, shares.data(), shares.size());
        if (auto it = memo_.find(key); it != memo_.end()) return it->second;

        int id = static_cast<int>(nodes_.size());
        if (g == k) {
            nodes_.push_back(StrategyNode::stop(share(c_.output(), shares, x) ^ mask));
        } else {
            const Step& st = steps_[s];
            const Gate& gate = c_.gates()[g];
            const int input = share(st.right ? gate.right : gate.left, shares, x);
            const int instance = g * NandBlockLayout::boxes_per_gate(n_) + st.offset;
            nodes_.push_back(StrategyNode::use(instance, st.side, input, {0, 0}));
            for (int o = 0; o < 2; ++o) {
                const int child = build(g, s + 1, acc ^ o, shares, x, mask);
                nodes_[id].next[o] = child;
            }
        }
        memo_.emplace(std::move(key), id);
        return id;
    }

    const NandCircuit& c_;
    int n_;
    int party_;
    std::span<const InputBit> ownership_;
    int flag_;
    std::vector<int> last_use_;
    std::vector<Step> steps_;
    std::vector<StrategyNode> nodes_;
    std::unordered_map<std::string, int> memo_;
};

} // namespace

CompiledProtocol compile(const NandCircuit& circuit, int parties, std::span<const InputBit> ownership,
                         const CompileOptions& options) {
    check_ownership(circuit, parties, ownership);
    const int n = parties;
    const int k = gate_count(circuit);
    const int per_gate = NandBlockLayout::boxes_per_gate(n);

    WiringProtocol pr;
    pr.parties = n;
    pr.input_sizes = party_input_sizes(ownership, n);
    pr.output_sizes.assign(n, 2);

    // A gate output is already uniformly shared; otherwise the parties add a
    // shared even-parity mask so the outputs are uniform.
    std::vector<int> masks{0};
    if (circuit.output().kind != Signal::Kind::Gate && n > 1) {
        masks.clear();
        for (int t = 0; t < (1 << n); ++t) {
            if (std::popcount(static_cast<unsigned>(t)) % 2 == 0) masks.push_back(t);
        }
    }
    pr.randomness = SharedRandomness::uniform(masks.size());

    std::vector<NandBlockLayout> blocks;
    for (int g = 0; g < k; ++g) {
        blocks.push_back({n, g * per_gate});
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (i != j) pr.bank.push_back({BoxTemplate::pr(), {i, j}});
            }
        }
    }
    for (int p = 0; p < n; ++p) {
        const int flag = NandBlockLayout::flag(p) ^ (options.flip_flag == p ? 1 : 0);
        PartyBuilder builder(circuit, n, p, ownership, flag);
        auto s = std::make_shared<PartyStrategy>();
        s->party = p;
        s->lambda_count = static_cast<int>(masks.size());
        s->input_size = pr.input_sizes[p];
        for (std::size_t l = 0; l < masks.size(); ++l) {
            for (int x = 0; x < s->input_size; ++x) s->roots.push_back(builder.root(x, masks[l] >> p & 1));
        }
        s->nodes = builder.take();
        pr.strategies.push_back(std::move(s));
    }
    return CompiledProtocol{ValidatedProtocol::check(std::move(pr)),
                            circuit,
                            std::vector<InputBit>(ownership.begin(), ownership.end()),
                            n,
                            k,
                            k * per_gate,
                            std::move(blocks)};
}

CompiledProtocol compile(const NandCircuit& circuit, int parties, const CompileOptions& options) {
    return compile(circuit, parties, circuit.inputs(), options);
}

Box full_correlation_target(const NandCircuit& circuit, int parties, std::span<const InputBit> ownership) {
    check_ownership(circuit, parties, ownership);
    return full_correlation_box(party_input_sizes(ownership, parties), [&](std::span<const int> x) {
        return eval_circuit(circuit, assignment_for(ownership, x));
    });
}

SimulationVerdict verify_simulation(const ValidatedProtocol& protocol, const Box& target, unsigned threads) {
    const auto& pr = protocol.protocol();
    if (pr.input_sizes != target.input_sizes() || pr.output_sizes != target.output_sizes()) {
        throw ShapeMismatch("protocol and target box have different shapes");
    }
    const Box induced = induced_box(protocol, threads);
    SimulationVerdict v;
    for (std::size_t x = 0; x < target.inputs().size() && v.match; ++x) {
        for (std::size_t a = 0; a < target.outputs().size(); ++a) {
            if (induced.prob(x, a) != target.prob(x, a)) {
                v.match = false;
                v.first_difference = SimulationVerdict::Difference{target.inputs().decode(x), target.outputs().decode(a),
                                                                   target.prob(x, a), induced.prob(x, a)};
                break;
            }
        }
    }
    return v;
}

CcResult solve_cc(const CompiledProtocol& compiled, std::span<const int> x, std::uint64_t seed) {
    const auto& pr = compiled.protocol.protocol();
    const SampleCounts run = execute_sample(compiled.protocol, x, seed, 1);
    const auto hit = std::find(run.counts.begin(), run.counts.end(), 1u) - run.counts.begin();
    const auto a = run.outputs.decode(static_cast<std::size_t>(hit));

    CcResult r;
    r.value = a[0];
    for (int p = 1; p < pr.parties; ++p) {
        r.transcript.push_back({p, 0, a[p]});
        r.value ^= a[p];
    }
    r.bits_communicated = static_cast<int>(r.transcript.size());

    // Instances reachable from the parties' roots on this input.
    std::set<int> touched;
    for (int p = 0; p < pr.parties; ++p) {
        const auto& s = *pr.strategies[p];
        std::vector<int> stack;
        std::vector<char> seen(s.nodes.size(), 0);
        for (int l = 0; l < s.lambda_count; ++l) stack.push_back(s.root(l, x[p]));
        while (!stack.empty()) {
            const int node = stack.back();
            stack.pop_back();
            if (seen[node]) continue;
            seen[node] = 1;
            if (s.nodes[node].is_stop()) continue;
            touched.insert(s.nodes[node].instance);
            for (int nxt : s.nodes[node].next) stack.push_back(nxt);
        }
    }
    r.boxes_consumed = static_cast<int>(touched.size());
    return r;
}

} // namespace prbox
