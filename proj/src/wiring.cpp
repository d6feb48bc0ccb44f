#include "prbox/wiring.hpp"

#include "prbox/errors.hpp"
#include "prbox/parallel.hpp"

#include <boost/container/small_vector.hpp>

#include <algorithm>
#include <bit>
#include <functional>
#include <map>
#include <numeric>
#include <random>

namespace prbox {

// ---------------------------------------------------------------------------
// BoxTemplate

BoxTemplate::BoxTemplate(std::string name, Box box) : name_(std::move(name)), box_(std::move(box)) {}

std::shared_ptr<const BoxTemplate> BoxTemplate::make(std::string name, Box box) {
    if (!check_no_signaling(box).ok) throw Error("box template '" + name + "' is signaling");
    const int s = box.parties();
    if (s > 6) throw TooLarge("box template sides", static_cast<std::uint64_t>(s), 6);
    auto t = std::shared_ptr<BoxTemplate>(new BoxTemplate(std::move(name), std::move(box)));
    const Box& b = t->box_;
    const std::uint32_t full = (1u << s) - 1;
    t->kernels_.resize(static_cast<std::size_t>(1) << (2 * s));
    for (std::uint32_t r = 1; r <= full; ++r) {
        for (std::uint32_t d = 0; d <= full; ++d) {
            if (r & d) continue;
            Kernel k;
            std::vector<int> key_sizes;
            for (int side = 0; side < s; ++side) {
                if ((r | d) >> side & 1) {
                    k.input_sides.push_back(side);
                    key_sizes.push_back(b.input_sizes()[side]);
                }
            }
            for (int side = 0; side < s; ++side) {
                if (d >> side & 1) {
                    k.output_sides.push_back(side);
                    key_sizes.push_back(b.output_sizes()[side]);
                }
            }
            k.key = MixedRadix(key_sizes);
            k.branches.resize(k.key.size());
            std::vector<int> resolve_sides;
            std::vector<int> resolve_sizes;
            for (int side = 0; side < s; ++side) {
                if (r >> side & 1) {
                    resolve_sides.push_back(side);
                    resolve_sizes.push_back(b.output_sizes()[side]);
                }
            }
            const MixedRadix resolve_codec(resolve_sizes);
            for (std::size_t key = 0; key < k.key.size(); ++key) {
                std::vector<int> x(s, 0);
                for (std::size_t i = 0; i < k.input_sides.size(); ++i) x[k.input_sides[i]] = k.key.digit(key, static_cast<int>(i));
                const std::size_t xi = b.inputs().encode(x);
                std::vector<Rational> joint(resolve_codec.size());
                Rational denom = 0;
                for (std::size_t a = 0; a < b.outputs().size(); ++a) {
                    const Rational& p = b.prob(xi, a);
                    if (p.is_zero()) continue;
                    bool match = true;
                    for (std::size_t i = 0; i < k.output_sides.size() && match; ++i) {
                        const int want = k.key.digit(key, static_cast<int>(k.input_sides.size() + i));
                        match = b.outputs().digit(a, k.output_sides[i]) == want;
                    }
                    if (!match) continue;
                    std::size_t ri = 0;
                    for (std::size_t i = 0; i < resolve_sides.size(); ++i) {
                        ri += static_cast<std::size_t>(b.outputs().digit(a, resolve_sides[i])) *
                              resolve_codec.stride(static_cast<int>(i));
                    }
                    joint[ri] += p;
                    denom += p;
                }
                if (denom.is_zero()) continue;  // conditioning event impossible
                for (std::size_t ri = 0; ri < joint.size(); ++ri) {
                    if (joint[ri].is_zero()) continue;
                    BoxTemplate::Branch br{resolve_codec.decode(ri), joint[ri] / denom};
                    if (numerator(br.p) <= INT64_MAX && denominator(br.p) <= INT64_MAX) {
                        br.num = numerator(br.p).convert_to<std::int64_t>();
                        br.den = denominator(br.p).convert_to<std::int64_t>();
                    }
                    k.branches[key].push_back(std::move(br));
                }
            }
            t->kernels_[(static_cast<std::size_t>(r) << s) | d] = std::move(k);
        }
    }
    return t;
}

std::shared_ptr<const BoxTemplate> BoxTemplate::pr() {
    static const std::shared_ptr<const BoxTemplate> instance = make("PR", pr_box());
    return instance;
}

std::span<const BoxTemplate::Branch> BoxTemplate::resolve(std::uint32_t resolve_mask, std::uint32_t done_mask,
                                                          std::span<const int> inputs,
                                                          std::span<const int> outputs) const {
    const Kernel& k = kernels_[(static_cast<std::size_t>(resolve_mask) << sides()) | done_mask];
    std::size_t key = 0;
    for (std::size_t i = 0; i < k.input_sides.size(); ++i) {
        key += static_cast<std::size_t>(inputs[k.input_sides[i]]) * k.key.stride(static_cast<int>(i));
    }
    for (std::size_t i = 0; i < k.output_sides.size(); ++i) {
        key += static_cast<std::size_t>(outputs[k.output_sides[i]]) *
               k.key.stride(static_cast<int>(k.input_sides.size() + i));
    }
    return k.branches[key];
}

SharedRandomness SharedRandomness::uniform(std::size_t count) {
    return {std::vector<Rational>(count, Rational(1) / Rational(count))};
}

Rational OutcomeDistribution::total() const {
    Rational s = 0;
    for (const auto& p : probs) s += p;
    return s;
}

PartyStrategy constant_strategy(int party, int lambda_count, int input_size, std::span<const int> table) {
    PartyStrategy s;
    s.party = party;
    s.lambda_count = lambda_count;
    s.input_size = input_size;
    std::map<int, int> node_for_output;
    for (int v : table) {
        auto [it, fresh] = node_for_output.emplace(v, static_cast<int>(s.nodes.size()));
        if (fresh) s.nodes.push_back(StrategyNode::stop(v));
        s.roots.push_back(it->second);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Validation

std::string to_string(ValidationVerdict::Kind kind) {
    switch (kind) {
    case ValidationVerdict::Kind::Ok: return "Ok";
    case ValidationVerdict::Kind::Shape: return "Shape";
    case ValidationVerdict::Kind::BadReference: return "BadReference";
    case ValidationVerdict::Kind::NotOwner: return "NotOwner";
    case ValidationVerdict::Kind::DoubleUse: return "DoubleUse";
    case ValidationVerdict::Kind::BadInput: return "BadInput";
    case ValidationVerdict::Kind::BadOutput: return "BadOutput";
    case ValidationVerdict::Kind::Randomness: return "Randomness";
    }
    return "?";
}

namespace {

ValidationVerdict violation(ValidationVerdict::Kind kind, std::string message, int party = -1, int lambda = -1,
                            int x = -1, int step = -1) {
    ValidationVerdict v;
    v.kind = kind;
    v.message = std::move(message);
    v.party = party;
    v.lambda = lambda;
    v.x = x;
    v.step = step;
    return v;
}

// Walk from the given roots: every reachable node, in topological order,
// carrying the set of instances used on some path from a root to it. A node
// reusing a member of its set repeats an instance on some root's walk.
ValidationVerdict walk_strategy(const WiringProtocol& pr, const PartyStrategy& s, std::span<const int> roots,
                                int lambda, int x) {
    const int p = s.party;
    const std::size_t words = (pr.bank.size() + 63) / 64;

    // Iterative DFS for a post-order; a back edge is a reused instance.
    std::vector<int> order;
    std::vector<std::uint8_t> colour(s.nodes.size(), 0);
    std::vector<int> depth(s.nodes.size(), -1);
    std::vector<std::pair<int, std::size_t>> stack;
    for (int root : roots) {
        if (colour[root] != 0) continue;
        stack.emplace_back(root, 0);
        colour[root] = 1;
        depth[root] = 0;
        while (!stack.empty()) {
            auto& [node, child] = stack.back();
            const auto& nd = s.nodes[node];
            if (child < nd.next.size()) {
                const int nxt = nd.next[child++];
                if (colour[nxt] == 1) {
                    return violation(ValidationVerdict::Kind::DoubleUse, "cycle in decision graph revisits instance " +
                                     std::to_string(nd.instance), p, lambda, x, depth[node] + 1);
                }
                if (colour[nxt] == 0) {
                    colour[nxt] = 1;
                    depth[nxt] = depth[node] + 1;
                    stack.emplace_back(nxt, 0);
                }
            } else {
                colour[node] = 2;
                order.push_back(node);
                stack.pop_back();
            }
        }
    }
    std::reverse(order.begin(), order.end());
    std::vector<std::uint64_t> used(s.nodes.size() * words, 0);
    for (int node : order) {
        const auto& nd = s.nodes[node];
        if (nd.is_stop()) continue;
        const std::uint64_t* mine = used.data() + static_cast<std::size_t>(node) * words;
        const std::size_t inst = static_cast<std::size_t>(nd.instance);
        if (mine[inst / 64] >> (inst % 64) & 1) {
            return violation(ValidationVerdict::Kind::DoubleUse,
                             "instance " + std::to_string(inst) + " used twice on one path", p, lambda, x, depth[node]);
        }
        for (int nxt : nd.next) {
            std::uint64_t* theirs = used.data() + static_cast<std::size_t>(nxt) * words;
            for (std::size_t w = 0; w < words; ++w) theirs[w] |= mine[w];
            theirs[inst / 64] |= std::uint64_t{1} << (inst % 64);
        }
    }
    return {};
}

} // namespace

ValidationVerdict validate_protocol(const WiringProtocol& pr) {
    using K = ValidationVerdict::Kind;
    const int n = pr.parties;
    if (n <= 0 || static_cast<int>(pr.input_sizes.size()) != n || static_cast<int>(pr.output_sizes.size()) != n ||
        static_cast<int>(pr.strategies.size()) != n) {
        return violation(K::Shape, "need one input alphabet, output alphabet and strategy per party");
    }
    for (int p = 0; p < n; ++p) {
        if (pr.input_sizes[p] <= 0 || pr.output_sizes[p] <= 0) return violation(K::Shape, "empty alphabet", p);
    }
    if (pr.randomness.weights.empty()) return violation(K::Randomness, "shared randomness has empty support");
    Rational total = 0;
    for (const auto& w : pr.randomness.weights) {
        if (w < 0) return violation(K::Randomness, "negative weight " + to_string(w));
        total += w;
    }
    if (total != 1) return violation(K::Randomness, "weights sum to " + to_string(total));
    for (std::size_t i = 0; i < pr.bank.size(); ++i) {
        const auto& inst = pr.bank[i];
        if (!inst.box || static_cast<int>(inst.owners.size()) != inst.box->sides()) {
            return violation(K::Shape, "bank instance " + std::to_string(i) + " needs one owner per side");
        }
        std::vector<int> owners = inst.owners;
        std::sort(owners.begin(), owners.end());
        if (std::adjacent_find(owners.begin(), owners.end()) != owners.end() || owners.front() < 0 ||
            owners.back() >= n) {
            return violation(K::Shape, "bank instance " + std::to_string(i) + " has invalid owners");
        }
    }
    for (int p = 0; p < n; ++p) {
        const auto& sp = pr.strategies[p];
        if (!sp || sp->party != p) return violation(K::Shape, "strategy slot holds another party's strategy", p);
        const auto& s = *sp;
        if (s.lambda_count != pr.randomness.size() || s.input_size != pr.input_sizes[p] ||
            s.roots.size() != static_cast<std::size_t>(s.lambda_count) * s.input_size) {
            return violation(K::Shape, "strategy roots do not cover every (lambda, x)", p);
        }
        const int count = static_cast<int>(s.nodes.size());
        for (int r : s.roots) {
            if (r < 0 || r >= count) return violation(K::BadReference, "root points outside the node list", p);
        }
        for (int i = 0; i < count; ++i) {
            const auto& nd = s.nodes[i];
            if (nd.is_stop()) {
                if (nd.output < 0 || nd.output >= pr.output_sizes[p]) {
                    return violation(K::BadOutput, "node " + std::to_string(i) + " outputs " + std::to_string(nd.output), p);
                }
                continue;
            }
            if (nd.instance >= static_cast<int>(pr.bank.size())) {
                return violation(K::BadReference, "node " + std::to_string(i) + " names a missing instance", p);
            }
            const auto& inst = pr.bank[nd.instance];
            if (nd.side < 0 || nd.side >= inst.box->sides() || inst.owners[nd.side] != p) {
                return violation(K::NotOwner, "node " + std::to_string(i) + " uses a side of instance " +
                                 std::to_string(nd.instance) + " that party " + std::to_string(p) + " does not hold", p);
            }
            if (nd.input < 0 || nd.input >= inst.box->input_size(nd.side)) {
                return violation(K::BadInput, "node " + std::to_string(i) + " feeds input " + std::to_string(nd.input), p);
            }
            if (static_cast<int>(nd.next.size()) != inst.box->output_size(nd.side)) {
                return violation(K::BadReference, "node " + std::to_string(i) + " needs one successor per box output", p);
            }
            for (int nxt : nd.next) {
                if (nxt < 0 || nxt >= count) return violation(K::BadReference, "successor outside the node list", p);
            }
        }
        if (walk_strategy(pr, s, s.roots, -1, -1).ok()) continue;
        for (int l = 0; l < s.lambda_count; ++l) {
            for (int x = 0; x < s.input_size; ++x) {
                const int root = s.root(l, x);
                if (auto v = walk_strategy(pr, s, std::span<const int>(&root, 1), l, x); !v.ok()) return v;
            }
        }
    }
    return {};
}

ValidatedProtocol ValidatedProtocol::check(WiringProtocol protocol) {
    const auto verdict = validate_protocol(protocol);
    if (!verdict.ok()) {
        throw ProtocolInvalid(to_string(verdict.kind) + ": " + verdict.message +
                              (verdict.party >= 0 ? " (party " + std::to_string(verdict.party) + ")" : ""));
    }
    return ValidatedProtocol(std::make_shared<const WiringProtocol>(std::move(protocol)));
}

// ---------------------------------------------------------------------------
// Execution engine

namespace {

struct Record {
    std::int32_t instance;
    std::int32_t side;
    std::int32_t input;
    std::int32_t output;  // -1 while pending
};

// State layout: one slot per party (node index, or -1 - output once stopped)
// followed by open instance records, four ints each, sorted.
using StateKey = boost::container::small_vector<std::int32_t, 24>;
using PartySlots = boost::container::small_vector<std::int32_t, 8>;
using Records = boost::container::small_vector<Record, 8>;

// Exact fraction of machine integers. Arithmetic throws Overflow instead of
// rounding; callers then redo the work with Rational.
struct Overflow {};

struct Small {
    std::int64_t num = 0;
    std::int64_t den = 1;
};

using u128 = unsigned __int128;

u128 gcd128(u128 a, u128 b) {
    while (b != 0) {
        a %= b;
        std::swap(a, b);
    }
    return a;
}

Small normalize(u128 num, u128 den) {
    if (num == 0) return {0, 1};
    const u128 g = gcd128(num, den);
    num /= g;
    den /= g;
    if (num > INT64_MAX || den > INT64_MAX) throw Overflow{};
    return {static_cast<std::int64_t>(num), static_cast<std::int64_t>(den)};
}

Small operator*(Small a, Small b) {
    return normalize(static_cast<u128>(a.num) * static_cast<u128>(b.num),
                     static_cast<u128>(a.den) * static_cast<u128>(b.den));
}

Small operator+(Small a, Small b) {
    if (a.den == b.den) return normalize(static_cast<u128>(a.num) + static_cast<u128>(b.num), static_cast<u128>(a.den));
    return normalize(static_cast<u128>(a.num) * static_cast<u128>(b.den) + static_cast<u128>(b.num) * static_cast<u128>(a.den),
                     static_cast<u128>(a.den) * static_cast<u128>(b.den));
}

template <typename W>
struct Arith;

template <>
struct Arith<Small> {
    static Small from(const Rational& r) {
        const Integer& n = numerator(r);
        const Integer& d = denominator(r);
        if (n < 0 || n > INT64_MAX || d > INT64_MAX) throw Overflow{};
        return {n.convert_to<std::int64_t>(), d.convert_to<std::int64_t>()};
    }
    static Small branch(const BoxTemplate::Branch& b) {
        if (b.den == 0) throw Overflow{};
        return {b.num, b.den};
    }
    static Rational to_rational(const Small& s) { return Rational(Integer(s.num)) / Rational(Integer(s.den)); }
};

template <>
struct Arith<Rational> {
    static Rational from(const Rational& r) { return r; }
    static const Rational& branch(const BoxTemplate::Branch& b) { return b.p; }
    static Rational to_rational(const Rational& r) { return r; }
};

class Engine {
public:
    explicit Engine(const WiringProtocol& pr) : pr_(pr), n_(pr.parties), outputs_(pr.output_sizes) {}

    const MixedRadix& outputs() const { return outputs_; }

    StateKey initial(int lambda, std::span<const int> x) const {
        StateKey st(n_);
        for (int p = 0; p < n_; ++p) {
            const auto& s = *pr_.strategies[p];
            st[p] = settle(s, s.root(lambda, x[p]));
        }
        return st;
    }

    bool terminal(const StateKey& st) const {
        for (int p = 0; p < n_; ++p) {
            if (st[p] >= 0) return false;
        }
        return true;
    }

    std::size_t output_index(const StateKey& st) const {
        std::size_t idx = 0;
        for (int p = 0; p < n_; ++p) idx += static_cast<std::size_t>(-1 - st[p]) * outputs_.stride(p);
        return idx;
    }

    // Fires one instance and reports each successor with the branch taken.
    template <typename Emit>
    void step(const StateKey& st, Emit&& emit) const {
        PartySlots party(st.begin(), st.begin() + n_);
        Records records;
        for (std::size_t i = n_; i < st.size(); i += 4) records.push_back({st[i], st[i + 1], st[i + 2], st[i + 3]});

        // Every running party commits the input of its current move.
        for (int p = 0; p < n_; ++p) {
            if (party[p] < 0) continue;
            const auto& nd = pr_.strategies[p]->nodes[party[p]];
            if (!find(records, nd.instance, nd.side)) records.push_back({nd.instance, nd.side, nd.input, -1});
        }
        std::sort(records.begin(), records.end(), [](const Record& a, const Record& b) {
            return a.instance != b.instance ? a.instance < b.instance : a.side < b.side;
        });

        int fire = -1;
        int first_pending = -1;
        for (std::size_t i = 0; i < records.size();) {
            const int inst = records[i].instance;
            std::size_t j = i;
            bool pending = false;
            while (j < records.size() && records[j].instance == inst) pending |= records[j++].output < 0;
            if (pending) {
                if (first_pending < 0) first_pending = inst;
                const auto& bi = pr_.bank[inst];
                bool ready = true;
                for (int side = 0; side < bi.box->sides() && ready; ++side) {
                    ready = find(records, inst, side) || party[bi.owners[side]] < 0;
                }
                if (ready) {
                    fire = inst;
                    break;
                }
            }
            i = j;
        }
        if (fire < 0) fire = first_pending;
        if (fire < 0) throw Error("execution stalled with no committed move");

        const auto& bi = pr_.bank[fire];
        const int sides = bi.box->sides();
        int inputs[8] = {};
        int outs[8] = {};
        std::uint32_t resolve_mask = 0, done_mask = 0;
        for (const auto& r : records) {
            if (r.instance != fire) continue;
            inputs[r.side] = r.input;
            if (r.output < 0) {
                resolve_mask |= 1u << r.side;
            } else {
                done_mask |= 1u << r.side;
                outs[r.side] = r.output;
            }
        }
        const auto branches = bi.box->resolve(resolve_mask, done_mask, std::span<const int>(inputs, sides),
                                              std::span<const int>(outs, sides));
        for (const auto& br : branches) {
            PartySlots np = party;
            Records nr = records;
            int k = 0;
            for (int side = 0; side < sides; ++side) {
                if (!(resolve_mask >> side & 1)) continue;
                const int out = br.outputs[k++];
                for (auto& r : nr) {
                    if (r.instance == fire && r.side == side) r.output = out;
                }
                const int owner = bi.owners[side];
                const auto& s = *pr_.strategies[owner];
                np[owner] = settle(s, s.nodes[np[owner]].next[out]);
            }
            emit(pack(np, nr), br);
        }
    }

private:
    static bool find(const Records& records, int instance, int side) {
        for (const auto& r : records) {
            if (r.instance == instance && r.side == side) return true;
        }
        return false;
    }

    static std::int32_t settle(const PartyStrategy& s, int node) {
        const auto& nd = s.nodes[node];
        return nd.is_stop() ? -1 - nd.output : node;
    }

    // Drops instances that can no longer influence anything: every side either
    // resolved or held by a party that has stopped.
    StateKey pack(const PartySlots& party, const Records& records) const {
        StateKey st(party.begin(), party.end());
        for (std::size_t i = 0; i < records.size();) {
            const int inst = records[i].instance;
            std::size_t j = i;
            while (j < records.size() && records[j].instance == inst) ++j;
            const auto& bi = pr_.bank[inst];
            bool closed = true;
            for (int side = 0; side < bi.box->sides() && closed; ++side) {
                bool resolved = false;
                for (std::size_t k = i; k < j; ++k) resolved |= records[k].side == side && records[k].output >= 0;
                closed = resolved || party[bi.owners[side]] < 0;
            }
            if (!closed) {
                for (std::size_t k = i; k < j; ++k) {
                    st.insert(st.end(), {records[k].instance, records[k].side, records[k].input, records[k].output});
                }
            }
            i = j;
        }
        return st;
    }

    const WiringProtocol& pr_;
    int n_;
    MixedRadix outputs_;
};

void check_inputs(const WiringProtocol& pr, std::span<const int> x) {
    if (static_cast<int>(x.size()) != pr.parties) throw DimensionMismatch("one input per party required");
    for (int p = 0; p < pr.parties; ++p) {
        if (x[p] < 0 || x[p] >= pr.input_sizes[p]) throw DimensionMismatch("input out of range");
    }
}

// Sorts by state and sums the weights of equal states; `scratch` keeps its
// capacity between calls.
template <typename W>
void merge(std::vector<std::pair<StateKey, W>>& states, std::vector<std::pair<StateKey, W>>& scratch,
           std::vector<std::uint32_t>& order) {
    if (states.size() < 2) return;
    order.resize(states.size());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return states[a].first < states[b].first; });
    scratch.clear();
    for (std::uint32_t i : order) {
        if (!scratch.empty() && scratch.back().first == states[i].first) {
            scratch.back().second = scratch.back().second + states[i].second;
        } else {
            scratch.push_back(std::move(states[i]));
        }
    }
    std::swap(states, scratch);
}

template <typename W>
std::vector<Rational> run_exact(const Engine& engine, const WiringProtocol& pr, std::span<const int> x) {
    std::vector<W> dist(engine.outputs().size());
    std::vector<std::pair<StateKey, W>> frontier, next, scratch;
    std::vector<std::uint32_t> order;
    for (int l = 0; l < pr.randomness.size(); ++l) {
        if (pr.randomness.weights[l].is_zero()) continue;
        frontier.emplace_back(engine.initial(l, x), Arith<W>::from(pr.randomness.weights[l]));
    }
    merge(frontier, scratch, order);
    while (!frontier.empty()) {
        next.clear();
        for (const auto& [st, p] : frontier) {
            if (engine.terminal(st)) {
                auto& slot = dist[engine.output_index(st)];
                slot = slot + p;
                continue;
            }
            engine.step(st, [&](StateKey&& succ, const BoxTemplate::Branch& br) {
                next.emplace_back(std::move(succ), p * Arith<W>::branch(br));
            });
        }
        merge(next, scratch, order);
        std::swap(frontier, next);
    }
    std::vector<Rational> probs;
    probs.reserve(dist.size());
    for (const auto& w : dist) probs.push_back(Arith<W>::to_rational(w));
    return probs;
}

} // namespace

OutcomeDistribution execute_exact(const ValidatedProtocol& vp, std::span<const int> x) {
    const WiringProtocol& pr = vp.protocol();
    check_inputs(pr, x);
    const Engine engine(pr);
    OutcomeDistribution dist{engine.outputs(), {}};
    try {
        dist.probs = run_exact<Small>(engine, pr, x);
    } catch (const Overflow&) {
        dist.probs = run_exact<Rational>(engine, pr, x);
    }
    return dist;
}

Box induced_box(const ValidatedProtocol& vp, unsigned threads) {
    const WiringProtocol& pr = vp.protocol();
    const MixedRadix in(pr.input_sizes);
    const MixedRadix out(pr.output_sizes);
    std::vector<std::vector<Rational>> rows(in.size());
    parallel_for(in.size(), threads, [&](std::size_t xi) {
        const auto x = in.decode(xi);
        rows[xi] = execute_exact(vp, x).probs;
    });
    std::vector<Rational> table;
    table.reserve(in.size() * out.size());
    for (auto& r : rows) std::move(r.begin(), r.end(), std::back_inserter(table));
    Box box = Box::make(pr.input_sizes, pr.output_sizes, std::move(table));
    if (!check_no_signaling(box).ok) throw Error("wiring protocol induced a signaling box");
    return box;
}

namespace {

// Branch hit by the uniform draw r / 2^64: the first whose cumulative mass
// exceeds it. Zero-mass entries never win since the running sum stays put.
std::size_t pick_rational(std::uint64_t r, std::span<const Rational> weights) {
    static const Rational scale = Rational(Integer(1) << 64);
    const Rational u = Rational(Integer(r)) / scale;
    Rational acc = 0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i].is_zero()) continue;
        acc += weights[i];
        last = i;
        if (u < acc) return i;
    }
    return last;
}

std::size_t pick_branch(std::uint64_t r, std::span<const BoxTemplate::Branch* const> branches) {
    try {
        Small acc;
        for (std::size_t i = 0; i < branches.size(); ++i) {
            acc = acc + Arith<Small>::branch(*branches[i]);
            // r / 2^64 < num / den
            if (static_cast<u128>(r) * static_cast<u128>(acc.den) < static_cast<u128>(acc.num) << 64) return i;
        }
        return branches.size() - 1;
    } catch (const Overflow&) {
        std::vector<Rational> weights;
        for (const auto* b : branches) weights.push_back(b->p);
        return pick_rational(r, weights);
    }
}

} // namespace

SampleCounts execute_sample(const ValidatedProtocol& vp, std::span<const int> x, std::uint64_t seed,
                            std::uint64_t runs) {
    const WiringProtocol& pr = vp.protocol();
    check_inputs(pr, x);
    const Engine engine(pr);
    SampleCounts counts{engine.outputs(), std::vector<std::uint64_t>(engine.outputs().size(), 0), runs};
    std::mt19937_64 rng(seed);
    std::vector<StateKey> successors;
    std::vector<const BoxTemplate::Branch*> taken;
    for (std::uint64_t run = 0; run < runs; ++run) {
        const std::size_t l = pick_rational(rng(), pr.randomness.weights);
        StateKey st = engine.initial(static_cast<int>(l), x);
        while (!engine.terminal(st)) {
            successors.clear();
            taken.clear();
            engine.step(st, [&](StateKey&& succ, const BoxTemplate::Branch& br) {
                successors.push_back(std::move(succ));
                taken.push_back(&br);
            });
            st = std::move(successors[pick_branch(rng(), taken)]);
        }
        ++counts.counts[engine.output_index(st)];
    }
    return counts;
}

// ---------------------------------------------------------------------------
// Strategy enumeration

namespace {

struct OwnedSide {
    int instance;
    int side;
    int inputs;
    int outputs;
};

std::vector<OwnedSide> owned_sides(int party, const std::vector<BankInstance>& bank) {
    std::vector<OwnedSide> sides;
    for (std::size_t i = 0; i < bank.size(); ++i) {
        for (int s = 0; s < bank[i].box->sides(); ++s) {
            if (bank[i].owners[s] == party) {
                sides.push_back({static_cast<int>(i), s, bank[i].box->input_size(s), bank[i].box->output_size(s)});
            }
        }
    }
    return sides;
}

std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
    if (a != 0 && b > UINT64_MAX / a) return UINT64_MAX;
    return a * b;
}

std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) { return a > UINT64_MAX - b ? UINT64_MAX : a + b; }

std::uint64_t sat_pow(std::uint64_t a, int e) {
    std::uint64_t r = 1;
    for (int i = 0; i < e; ++i) r = sat_mul(r, a);
    return r;
}

// Number of decision trees available once `used` sides are spent.
std::uint64_t tree_count(const std::vector<OwnedSide>& sides, std::uint32_t used, int output_size, bool reduced,
                         std::map<std::uint32_t, std::uint64_t>& memo) {
    if (auto it = memo.find(used); it != memo.end()) return it->second;
    std::uint64_t total = static_cast<std::uint64_t>(output_size);
    for (std::size_t i = 0; i < sides.size(); ++i) {
        if (used >> i & 1) continue;
        const std::uint64_t child = tree_count(sides, used | (1u << i), output_size, reduced, memo);
        std::uint64_t tuples = sat_pow(child, sides[i].outputs);
        if (reduced) tuples = tuples == UINT64_MAX ? tuples : tuples - child;
        total = sat_add(total, sat_mul(static_cast<std::uint64_t>(sides[i].inputs), tuples));
    }
    memo[used] = total;
    return total;
}

using Tree = std::vector<StrategyNode>;  // root at index 0, local indices

void append_tree(Tree& into, const Tree& t) {
    const int offset = static_cast<int>(into.size());
    for (StrategyNode nd : t) {
        for (int& n : nd.next) n += offset;
        into.push_back(std::move(nd));
    }
}

const std::vector<Tree>& trees_for(const std::vector<OwnedSide>& sides, std::uint32_t used, int output_size,
                                   bool reduced, std::map<std::uint32_t, std::vector<Tree>>& memo) {
    if (auto it = memo.find(used); it != memo.end()) return it->second;
    std::vector<Tree> out;
    for (int a = 0; a < output_size; ++a) out.push_back({StrategyNode::stop(a)});
    for (std::size_t i = 0; i < sides.size(); ++i) {
        if (used >> i & 1) continue;
        const auto& children = trees_for(sides, used | (1u << i), output_size, reduced, memo);
        const MixedRadix tuples(std::vector<int>(sides[i].outputs, static_cast<int>(children.size())));
        for (int y = 0; y < sides[i].inputs; ++y) {
            for (std::size_t code = 0; code < tuples.size(); ++code) {
                const auto pick = tuples.decode(code);
                if (reduced && std::all_of(pick.begin(), pick.end(), [&](int c) { return c == pick[0]; })) continue;
                Tree t{StrategyNode::use(sides[i].instance, sides[i].side, y, std::vector<int>(sides[i].outputs))};
                for (int alpha = 0; alpha < sides[i].outputs; ++alpha) {
                    t[0].next[alpha] = static_cast<int>(t.size());
                    append_tree(t, children[pick[alpha]]);
                }
                out.push_back(std::move(t));
            }
        }
    }
    return memo.emplace(used, std::move(out)).first->second;
}

} // namespace

std::uint64_t StrategyEnumerator::count_party(int party, const std::vector<BankInstance>& bank, const Options& o) {
    const auto sides = owned_sides(party, bank);
    if (sides.size() > 16) return UINT64_MAX;
    std::map<std::uint32_t, std::uint64_t> memo;
    return sat_pow(tree_count(sides, 0, o.output_sizes[party], o.reduced, memo), o.input_sizes[party]);
}

std::uint64_t StrategyEnumerator::count_profiles(int parties, const std::vector<BankInstance>& bank, const Options& o) {
    std::uint64_t total = 1;
    for (int p = 0; p < parties; ++p) total = sat_mul(total, count_party(p, bank, o));
    return total;
}

StrategyEnumerator::StrategyEnumerator(int parties, std::vector<BankInstance> bank, Options options)
    : parties_(parties), bank_(std::move(bank)), options_(std::move(options)) {
    if (static_cast<int>(options_.input_sizes.size()) != parties ||
        static_cast<int>(options_.output_sizes.size()) != parties) {
        throw DimensionMismatch("one measurement and output alphabet per party");
    }
    total_ = count_profiles(parties_, bank_, options_);
    if (total_ > options_.cap) throw TooLarge("strategy profiles", total_, options_.cap);

    per_party_.resize(parties_);
    for (int p = 0; p < parties_; ++p) {
        const auto sides = owned_sides(p, bank_);
        std::map<std::uint32_t, std::vector<Tree>> memo;
        const auto& trees = trees_for(sides, 0, options_.output_sizes[p], options_.reduced, memo);
        const MixedRadix choice(std::vector<int>(options_.input_sizes[p], static_cast<int>(trees.size())));
        for (std::size_t code = 0; code < choice.size(); ++code) {
            auto s = std::make_shared<PartyStrategy>();
            s->party = p;
            s->lambda_count = 1;
            s->input_size = options_.input_sizes[p];
            for (int x = 0; x < s->input_size; ++x) {
                s->roots.push_back(static_cast<int>(s->nodes.size()));
                append_tree(s->nodes, trees[choice.digit(code, x)]);
            }
            per_party_[p].push_back(std::move(s));
        }
    }
}

std::vector<std::size_t> StrategyEnumerator::decode(std::uint64_t index) const {
    std::vector<std::size_t> pick(parties_);
    for (int p = 0; p < parties_; ++p) {
        pick[p] = static_cast<std::size_t>(index % per_party_[p].size());
        index /= per_party_[p].size();
    }
    return pick;
}

WiringProtocol StrategyEnumerator::profile(std::uint64_t index) const {
    WiringProtocol pr;
    pr.parties = parties_;
    pr.input_sizes = options_.input_sizes;
    pr.output_sizes = options_.output_sizes;
    pr.bank = bank_;
    const auto pick = decode(index);
    for (int p = 0; p < parties_; ++p) pr.strategies.push_back(per_party_[p][pick[p]]);
    return pr;
}

} // namespace prbox
