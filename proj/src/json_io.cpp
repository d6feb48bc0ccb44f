#include "prbox/json_io.hpp"

#include "prbox/errors.hpp"

#include <functional>
#include <map>
#include <sstream>
#include <unordered_map>

namespace prbox::json_io {

namespace {

template <typename F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string(what) + ": " + e.what());
    }
}

std::vector<int> int_list(const Json& j) { return j.get<std::vector<int>>(); }

Json int_array(std::span<const int> v) { return Json(std::vector<int>(v.begin(), v.end())); }

} // namespace

Json parse(const std::string& text) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what());
    }
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json rational(const Rational& r) { return to_string(r); }

Rational rational_from(const Json& j) {
    if (j.is_string()) return parse_rational(j.get<std::string>());
    if (j.is_number_integer()) return Rational(j.get<long long>());
    throw ParseError("probabilities must be \"num/den\" strings");
}

Json box_to_json(const Box& box) {
    Json j;
    j["parties"] = box.parties();
    j["inputs"] = box.input_sizes();
    j["outputs"] = box.output_sizes();
    Json table = Json::array();
    for (std::size_t x = 0; x < box.inputs().size(); ++x) {
        const auto xs = box.inputs().decode(x);
        for (std::size_t a = 0; a < box.outputs().size(); ++a) {
            const auto& p = box.prob(x, a);
            if (p == 0) continue;
            table.push_back({{"x", xs}, {"a", box.outputs().decode(a)}, {"p", rational(p)}});
        }
    }
    j["table"] = std::move(table);
    return j;
}

Box box_from_json(const Json& j) {
    return guarded("box", [&] {
        const auto inputs = int_list(j.at("inputs"));
        const auto outputs = int_list(j.at("outputs"));
        if (j.contains("parties") && j.at("parties").get<int>() != static_cast<int>(inputs.size())) {
            throw DimensionMismatch("\"parties\" disagrees with the alphabets");
        }
        std::vector<Box::Entry> entries;
        for (const auto& e : j.at("table")) {
            entries.push_back({int_list(e.at("x")), int_list(e.at("a")), rational_from(e.at("p"))});
        }
        return Box::make_sparse(inputs, outputs, entries);
    });
}

Json distribution_to_json(const OutcomeDistribution& d, std::span<const int> x) {
    Json j;
    j["x"] = int_array(x);
    j["outputs"] = d.outputs.sizes();
    Json table = Json::array();
    for (std::size_t a = 0; a < d.probs.size(); ++a) {
        if (d.probs[a] == 0) continue;
        table.push_back({{"a", d.outputs.decode(a)}, {"p", rational(d.probs[a])}});
    }
    j["table"] = std::move(table);
    return j;
}

Json sample_to_json(const SampleCounts& s, std::span<const int> x, std::uint64_t seed) {
    Json j;
    j["x"] = int_array(x);
    j["seed"] = seed;
    j["runs"] = s.runs;
    Json counts = Json::array();
    for (std::size_t a = 0; a < s.counts.size(); ++a) {
        if (s.counts[a] == 0) continue;
        counts.push_back({{"a", s.outputs.decode(a)}, {"count", s.counts[a]}});
    }
    j["counts"] = std::move(counts);
    return j;
}

Json circuit_to_json(const NandCircuit& c) {
    Json j;
    Json inputs = Json::array();
    for (const auto& in : c.inputs()) inputs.push_back({{"name", in.name}, {"party", in.party + 1}, {"bit", in.bit}});
    j["inputs"] = std::move(inputs);
    Json gates = Json::array();
    for (const auto& g : c.gates()) gates.push_back({{"l", signal_name(c, g.left)}, {"r", signal_name(c, g.right)}});
    j["gates"] = std::move(gates);
    j["output"] = signal_name(c, c.output());
    j["constants"] = {{"0", 0}, {"1", 1}};
    return j;
}

NandCircuit circuit_from_json(const Json& j) {
    return guarded("circuit", [&] {
        std::vector<InputBit> inputs;
        std::map<std::string, Signal> names;
        for (const auto& in : j.at("inputs")) {
            InputBit b;
            b.name = in.at("name").get<std::string>();
            b.party = in.at("party").get<int>() - 1;
            if (in.contains("bit")) {
                b.bit = in.at("bit").get<int>();
            } else {
                int count = 0;
                for (const auto& prev : inputs) count += prev.party == b.party;
                b.bit = count;
            }
            if (b.party < 0) throw ParseError("parties are counted from 1");
            if (!names.emplace(b.name, Signal::input(static_cast<int>(inputs.size()))).second) {
                throw ParseError("duplicate input name " + b.name);
            }
            inputs.push_back(b);
        }
        names.emplace("0", Signal::constant(0));
        names.emplace("1", Signal::constant(1));
        if (j.contains("constants")) {
            for (const auto& [name, value] : j.at("constants").items()) {
                const int v = value.get<int>();
                if (v != 0 && v != 1) throw ParseError("constant " + name + " is not a bit");
                const auto it = names.find(name);
                if (it != names.end() && !(it->second == Signal::constant(v))) {
                    throw ParseError("constant " + name + " clashes with another signal");
                }
                names.emplace(name, Signal::constant(v));
            }
        }
        std::vector<Gate> gates;
        auto ref = [&](const Json& r) {
            const auto name = r.get<std::string>();
            const auto it = names.find(name);
            if (it == names.end()) throw ParseError("unknown signal " + name);
            return it->second;
        };
        for (const auto& g : j.at("gates")) {
            const Gate gate{ref(g.at("l")), ref(g.at("r"))};
            names["g" + std::to_string(gates.size())] = Signal::gate(static_cast<int>(gates.size()));
            gates.push_back(gate);
        }
        const Signal out = j.contains("output") ? ref(j.at("output"))
                                                : (gates.empty() ? throw ParseError("circuit has no output")
                                                                 : Signal::gate(static_cast<int>(gates.size()) - 1));
        return NandCircuit::make(std::move(inputs), std::move(gates), out);
    });
}

Json truth_table_to_json(const TruthTable& t) {
    Json j;
    Json vars = Json::array();
    for (const auto& v : t.vars) vars.push_back({{"name", v.name}, {"party", v.party + 1}, {"bit", v.bit}});
    j["vars"] = std::move(vars);
    std::string bits;
    for (auto v : t.values) bits.push_back(v ? '1' : '0');
    j["values"] = bits;
    return j;
}

namespace {

Json node_action(const StrategyNode& n) {
    if (n.is_stop()) return {{"stop", n.output}};
    return {{"use", {{"instance", n.instance}, {"side", n.side}, {"input", n.input}}}};
}

std::uint64_t tree_size(const PartyStrategy& s, int node, std::vector<std::uint64_t>& memo) {
    if (memo[node] != 0) return memo[node];
    std::uint64_t total = 1;
    for (int nx : s.nodes[node].next) {
        total += tree_size(s, nx, memo);
        if (total > (std::uint64_t{1} << 62)) break;
    }
    return memo[node] = total;
}

Json strategy_to_json(const PartyStrategy& s, std::uint64_t cap) {
    Json j;
    j["party"] = s.party;
    j["lambdas"] = s.lambda_count;
    j["inputs"] = s.input_size;
    std::vector<std::uint64_t> memo(s.nodes.size(), 0);
    std::uint64_t total = 0;
    for (int r : s.roots) {
        total += tree_size(s, r, memo);
        if (total > cap) break;
    }
    if (total <= cap) {
        Json table = Json::object();
        std::string history;
        std::function<void(const std::string&, int)> walk = [&](const std::string& key, int node) {
            const auto& n = s.nodes[node];
            table[key] = node_action(n);
            for (std::size_t o = 0; o < n.next.size(); ++o) {
                const bool root = key.back() == ':';
                walk(key + (root ? "" : ",") + std::to_string(o), n.next[o]);
            }
        };
        for (int l = 0; l < s.lambda_count; ++l) {
            for (int x = 0; x < s.input_size; ++x) {
                walk(std::to_string(l) + ":" + std::to_string(x) + ":", s.root(l, x));
            }
        }
        j["table"] = std::move(table);
    } else {
        Json nodes = Json::array();
        for (const auto& n : s.nodes) {
            Json e = node_action(n);
            if (!n.is_stop()) e["next"] = n.next;
            nodes.push_back(std::move(e));
        }
        j["nodes"] = std::move(nodes);
        j["roots"] = s.roots;
    }
    return j;
}

class NodeInterner {
public:
    explicit NodeInterner(PartyStrategy& s) : s_(s) {}

    int add(StrategyNode n) {
        std::string key = std::to_string(n.instance) + "/" + std::to_string(n.side) + "/" + std::to_string(n.input) +
                          "/" + std::to_string(n.output);
        for (int nx : n.next) key += "/" + std::to_string(nx);
        const auto [it, fresh] = ids_.emplace(key, static_cast<int>(s_.nodes.size()));
        if (fresh) s_.nodes.push_back(std::move(n));
        return it->second;
    }

private:
    PartyStrategy& s_;
    std::unordered_map<std::string, int> ids_;
};

StrategyNode action_from(const Json& a) {
    if (a.contains("stop")) return StrategyNode::stop(a.at("stop").get<int>());
    const auto& u = a.at("use");
    return StrategyNode::use(u.at("instance").get<int>(), u.at("side").get<int>(), u.at("input").get<int>(), {});
}

PartyStrategy strategy_from_json(const Json& j, const std::vector<BankInstance>& bank) {
    PartyStrategy s;
    s.party = j.at("party").get<int>();
    s.lambda_count = j.at("lambdas").get<int>();
    s.input_size = j.at("inputs").get<int>();
    if (s.lambda_count < 1 || s.input_size < 1) throw ParseError("strategy needs lambdas and inputs");
    if (j.contains("nodes")) {
        for (const auto& n : j.at("nodes")) {
            auto node = action_from(n);
            if (!node.is_stop()) node.next = int_list(n.at("next"));
            s.nodes.push_back(std::move(node));
        }
        s.roots = int_list(j.at("roots"));
        return s;
    }
    const auto& table = j.at("table");
    NodeInterner interner(s);
    std::function<int(const std::string&, int)> build = [&](const std::string& key, int depth) -> int {
        if (depth > 64) throw ParseError("decision table is too deep");
        if (!table.contains(key)) throw ParseError("decision table has no entry for " + key);
        auto node = action_from(table.at(key));
        if (!node.is_stop()) {
            if (node.instance < 0 || node.instance >= static_cast<int>(bank.size()) || node.side < 0 ||
                node.side >= bank[node.instance].box->sides()) {
                throw ParseError("decision table entry " + key + " names no bank side");
            }
            const int outs = bank[node.instance].box->output_size(node.side);
            const bool root = key.back() == ':';
            for (int o = 0; o < outs; ++o) node.next.push_back(build(key + (root ? "" : ",") + std::to_string(o), depth + 1));
        }
        return interner.add(std::move(node));
    };
    for (int l = 0; l < s.lambda_count; ++l) {
        for (int x = 0; x < s.input_size; ++x) {
            s.roots.push_back(build(std::to_string(l) + ":" + std::to_string(x) + ":", 0));
        }
    }
    return s;
}

} // namespace

Json protocol_to_json(const WiringProtocol& p, std::uint64_t table_cap) {
    Json j;
    j["parties"] = p.parties;
    j["inputs"] = p.input_sizes;
    j["outputs"] = p.output_sizes;
    Json lambda = Json::array();
    for (const auto& w : p.randomness.weights) lambda.push_back(rational(w));
    j["randomness"] = std::move(lambda);
    Json bank = Json::array();
    for (const auto& inst : p.bank) {
        Json e;
        e["template"] = inst.box->name();
        if (inst.box != BoxTemplate::pr()) e["box"] = box_to_json(inst.box->box());
        e["owners"] = inst.owners;
        bank.push_back(std::move(e));
    }
    j["bank"] = std::move(bank);
    Json strategies = Json::array();
    for (const auto& s : p.strategies) strategies.push_back(strategy_to_json(*s, table_cap));
    j["strategies"] = std::move(strategies);
    return j;
}

WiringProtocol protocol_from_json(const Json& j) {
    return guarded("protocol", [&] {
        WiringProtocol p;
        p.parties = j.at("parties").get<int>();
        p.input_sizes = int_list(j.at("inputs"));
        p.output_sizes = int_list(j.at("outputs"));
        if (j.contains("randomness")) {
            p.randomness.weights.clear();
            for (const auto& w : j.at("randomness")) p.randomness.weights.push_back(rational_from(w));
        }
        std::map<std::string, std::shared_ptr<const BoxTemplate>> templates{{"PR", BoxTemplate::pr()}};
        for (const auto& e : j.at("bank")) {
            const auto name = e.at("template").get<std::string>();
            std::shared_ptr<const BoxTemplate> t;
            if (e.contains("box")) {
                t = BoxTemplate::make(name, box_from_json(e.at("box")));
            } else {
                const auto it = templates.find(name);
                if (it == templates.end()) throw ParseError("unknown box template " + name);
                t = it->second;
            }
            p.bank.push_back({t, int_list(e.at("owners"))});
        }
        for (const auto& s : j.at("strategies")) {
            p.strategies.push_back(std::make_shared<const PartyStrategy>(strategy_from_json(s, p.bank)));
        }
        return p;
    });
}

Json verdict_to_json(const ValidationVerdict& v) {
    Json j;
    j["valid"] = v.ok();
    if (!v.ok()) {
        j["kind"] = to_string(v.kind);
        j["party"] = v.party;
        j["lambda"] = v.lambda;
        j["x"] = v.x;
        j["step"] = v.step;
        j["message"] = v.message;
    }
    return j;
}

Json locality_to_json(const Box& box, const LocalityVerdict& v) {
    Json j;
    j["local"] = v.local;
    if (v.local) {
        Json d = Json::array();
        for (const auto& [r, w] : v.decomposition) d.push_back({{"response", r}, {"weight", rational(w)}});
        j["decomposition"] = std::move(d);
    } else {
        Json c = Json::array();
        const std::size_t outs = box.outputs().size();
        for (std::size_t i = 0; i < v.certificate.size(); ++i) {
            if (v.certificate[i] == 0) continue;
            c.push_back({{"x", box.inputs().decode(i / outs)},
                         {"a", box.outputs().decode(i % outs)},
                         {"c", rational(v.certificate[i])}});
        }
        j["certificate"] = std::move(c);
        j["certificate_value"] = rational(v.certificate_value);
    }
    return j;
}

Json signaling_to_json(const NoSignalingVerdict& v) {
    Json j;
    j["nonsignaling"] = v.ok;
    if (v.witness) {
        const auto& w = *v.witness;
        j["witness"] = {{"party", w.party},
                        {"input", w.input},
                        {"other_input", w.other_input},
                        {"context", w.context},
                        {"others_outputs", w.others_outputs},
                        {"p_input", rational(w.p_input)},
                        {"p_other_input", rational(w.p_other_input)}};
    }
    return j;
}

Json relabeling_to_json(const Relabeling& r) {
    return {{"parties", r.party_permutation}, {"inputs", r.input_permutation}, {"outputs", r.output_permutation}};
}

Json vertex_report_to_json(const VertexReport& r) {
    Json j;
    j["box"] = box_to_json(r.vertex);
    j["class"] = to_string(r.kind);
    j["genuine"] = r.genuine;
    if (r.f.empty()) {
        j["f"] = nullptr;
    } else {
        std::string bits;
        for (auto v : r.f) bits.push_back(v ? '1' : '0');
        j["f"] = bits;
    }
    j["relabeling"] = r.relabeling ? relabeling_to_json(*r.relabeling) : Json(nullptr);
    if (r.reduction) {
        j["reduction"] = {{"party", r.reduction->party},
                          {"input", r.reduction->input},
                          {"reduced", vertex_report_to_json(*r.reduction->reduced)}};
    }
    return j;
}

Json constraints_to_json(const ConstraintSet& s) {
    Json j;
    j["parties"] = s.parties();
    j["settings"] = s.settings();
    Json cs = Json::array();
    for (const auto& c : s.constraints()) {
        Json terms = Json::array();
        for (const auto& t : c.terms) terms.push_back({{"party", t.party}, {"setting", t.setting}});
        cs.push_back({{"terms", std::move(terms)}, {"target", c.target}});
    }
    j["constraints"] = std::move(cs);
    return j;
}

ConstraintSet constraints_from_json(const Json& j) {
    return guarded("constraints", [&] {
        std::vector<ParityConstraint> cs;
        for (const auto& c : j.at("constraints")) {
            ParityConstraint pc;
            for (const auto& t : c.at("terms")) pc.terms.push_back({t.at("party").get<int>(), t.at("setting").get<int>()});
            pc.target = c.at("target").get<int>();
            cs.push_back(std::move(pc));
        }
        return ConstraintSet::make(j.at("parties").get<int>(), std::move(cs), j.value("settings", 2));
    });
}

Json ghz_to_json(const GhzVerdict& v) {
    Json j;
    j["satisfying_assignments"] = v.satisfying;
    j["space"] = v.space;
    j["max_satisfiable"] = v.max_satisfiable;
    j["best_assignment"] = v.best_assignment;
    return j;
}

Json search_report_to_json(const SearchReport& r, bool timing) {
    Json j;
    j["boxes"] = r.boxes;
    j["assignments_tested"] = r.assignments_tested;
    j["strategies_tested"] = r.strategies_tested;
    j["success"] = r.success;
    j["reduced"] = r.reduced;
    j["symmetric"] = r.symmetric;
    j["reduction"] = r.reduction;
    if (r.counterexample) {
        Json pairs = Json::array();
        for (const auto& [a, b] : r.counterexample->pairs) pairs.push_back({a, b});
        j["counterexample"] = {{"pairs", std::move(pairs)},
                               {"profile", r.counterexample->profile},
                               {"protocol", protocol_to_json(r.counterexample->protocol)}};
    }
    if (timing) j["runtime_s"] = r.runtime_s;
    return j;
}

Json cc_to_json(const CcResult& r) {
    Json j;
    j["value"] = r.value;
    j["bits_communicated"] = r.bits_communicated;
    j["boxes_consumed"] = r.boxes_consumed;
    Json t = Json::array();
    for (const auto& m : r.transcript) t.push_back({{"from", m.from}, {"to", m.to}, {"bit", m.bit}});
    j["transcript"] = std::move(t);
    return j;
}

} // namespace prbox::json_io
