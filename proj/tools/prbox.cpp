#include "schemas.hpp"

#include "prbox/cluster.hpp"
#include "prbox/construct.hpp"
#include "prbox/errors.hpp"
#include "prbox/json_io.hpp"
#include "prbox/parallel.hpp"
#include "prbox/polytope.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <sstream>

namespace {

using namespace prbox;
using json_io::Json;

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::uint64_t env_cap(const char* name, std::uint64_t fallback) {
    const char* v = std::getenv(name);
    if (v == nullptr || *v == '\0') return fallback;
    try {
        std::size_t used = 0;
        const auto n = std::stoull(v, &used);
        if (used != std::string(v).size()) throw std::invalid_argument(name);
        return n;
    } catch (const std::exception&) {
        throw UsageError(std::string(name) + " must be a nonnegative integer");
    }
}

std::string read_input(const std::string& path) {
    if (path.empty() || path == "-") {
        return {std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
    }
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<int> int_csv(const std::string& text, const char* what) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(item, &used));
            if (used != item.size()) throw std::invalid_argument(what);
        } catch (const std::exception&) {
            throw UsageError(std::string(what) + " must be comma-separated integers");
        }
    }
    return out;
}

std::vector<std::uint8_t> bit_string(const std::string& text, const char* what) {
    std::vector<std::uint8_t> out;
    for (char c : text) {
        if (c != '0' && c != '1') throw UsageError(std::string(what) + " must be a string of 0 and 1");
        out.push_back(static_cast<std::uint8_t>(c - '0'));
    }
    return out;
}

NandCircuit read_circuit(const std::string& path) {
    const auto text = read_input(path);
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') return json_io::circuit_from_json(json_io::parse(text));
    return parse_netlist(text);
}

Box read_box(const std::string& path) { return json_io::box_from_json(json_io::parse(read_input(path))); }

/// A protocol document, or a compile report carrying one under "protocol".
WiringProtocol read_protocol(const std::string& path) {
    const Json j = json_io::parse(read_input(path));
    if (j.is_object() && j.contains("protocol") && !j.contains("parties")) return json_io::protocol_from_json(j.at("protocol"));
    return json_io::protocol_from_json(j);
}

int parties_of(const NandCircuit& c) {
    int n = 1;
    for (const auto& in : c.inputs()) n = std::max(n, in.party + 1);
    return n;
}

struct Context {
    unsigned threads = default_threads();
    bool schema = false;
};

/// A leaf command: its schema name and its action.
struct Leaf {
    CLI::App* app;
    std::string schema;
    std::function<int()> run;
};

void emit(const Json& j) { std::cout << json_io::dump(j); }

} // namespace

int main(int argc, char** argv) {
    Context ctx;
    CLI::App app{"Exact simulator and verifier for nonsignaling boxes"};
    app.require_subcommand(0, 1);
    app.fallthrough();
    app.add_option("--threads", ctx.threads, "worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--schema", ctx.schema, "print the JSON schema of the command's output and exit");

    std::vector<Leaf> leaves;
    std::string input = "-";
    auto with_input = [&](CLI::App* sub) {
        sub->add_option("-i,--input", input, "input file, - for standard input");
    };

    // box
    auto* box = app.add_subcommand("box", "box utilities")->require_subcommand(1);
    {
        auto* check = box->add_subcommand("check", "validate a box and test no-signaling");
        with_input(check);
        leaves.push_back({check, "signaling", [&] {
                              const auto b = read_box(input);
                              const auto v = check_no_signaling(b);
                              emit(json_io::signaling_to_json(v));
                              return v.ok ? kOk : kFailed;
                          }});

        auto* local = box->add_subcommand("local", "decide locality exactly");
        with_input(local);
        static std::uint64_t local_cap = 0;
        local->add_option("--cap", local_cap, "deterministic strategy cap");
        leaves.push_back({local, "locality", [&] {
                              const auto b = read_box(input);
                              const auto cap = local_cap ? local_cap : env_cap("PRBOX_LOCAL_CAP", 1'000'000);
                              emit(json_io::locality_to_json(b, is_local(b, cap)));
                              return kOk;
                          }});

        auto* marg = box->add_subcommand("marginal", "marginal of a subset of parties");
        with_input(marg);
        static std::string subset;
        static std::string fix;
        marg->add_option("--parties", subset, "kept parties, comma separated");
        marg->add_option("--fix", fix, "inputs of the other parties, comma separated");
        leaves.push_back({marg, "marginal", [&] {
                              if (subset.empty()) throw UsageError("--parties is required");
                              const auto b = read_box(input);
                              std::optional<std::vector<int>> complement;
                              if (!fix.empty()) complement = int_csv(fix, "--fix");
                              const auto m = marginal(b, int_csv(subset, "--parties"), complement);
                              Json j;
                              j["parties"] = m.parties;
                              j["box"] = json_io::box_to_json(m.box);
                              emit(j);
                              return kOk;
                          }});

        auto* chsh = box->add_subcommand("chsh", "CHSH value of a two-party binary box");
        with_input(chsh);
        leaves.push_back({chsh, "chsh", [&] {
                              emit(Json{{"chsh", json_io::rational(chsh_value(read_box(input)))}});
                              return kOk;
                          }});

        auto* make = box->add_subcommand("make", "construct a standard box")->require_subcommand(1);
        leaves.push_back({make->add_subcommand("pr", "the PR box"), "box", [&] {
                              emit(json_io::box_to_json(pr_box()));
                              return kOk;
                          }});
        auto* fc = make->add_subcommand("fullcorr", "full-correlation box of a truth table");
        static int fc_parties = 2;
        static int fc_bits = 1;
        static std::string fc_table;
        fc->add_option("--parties", fc_parties, "number of parties")->check(CLI::PositiveNumber);
        fc->add_option("--bits", fc_bits, "input bits per party")->check(CLI::NonNegativeNumber);
        fc->add_option("--table", fc_table, "values of f on all assignments, variable p*bits+b is bit b of party p");
        leaves.push_back({fc, "box", [&] {
                              const auto t = bit_string(fc_table, "--table");
                              if (fc_parties * fc_bits > kTruthTableCap) throw UsageError("too many input bits");
                              if (t.size() != (std::size_t{1} << (fc_parties * fc_bits))) {
                                  throw UsageError("--table needs 2^(parties*bits) values");
                              }
                              emit(json_io::box_to_json(full_correlation_box(fc_parties, fc_bits, t)));
                              return kOk;
                          }});
        leaves.push_back({make->add_subcommand("cluster", "five-party cluster-state box"), "box", [&] {
                              emit(json_io::box_to_json(cluster_box()));
                              return kOk;
                          }});
    }

    // circuit
    auto* circuit = app.add_subcommand("circuit", "NAND circuits")->require_subcommand(1);
    {
        auto* synth = circuit->add_subcommand("synth", "NAND circuit for a truth table");
        static std::string table;
        static int parties = 0;
        static int bits = 0;
        static std::string split;
        synth->add_option("--table", table, "values of f on all assignments");
        synth->add_option("--parties", parties, "parties owning --bits bits each");
        synth->add_option("--bits", bits, "bits per party");
        synth->add_option("--split", split, "bits owned by each party, comma separated");
        leaves.push_back({synth, "circuit", [&] {
                              std::vector<InputBit> vars;
                              if (!split.empty()) {
                                  vars = split_bits(int_csv(split, "--split"));
                              } else if (parties > 0) {
                                  vars = contiguous_bits(parties, bits);
                              } else {
                                  throw UsageError("give --split or --parties and --bits");
                              }
                              const auto t = bit_string(table, "--table");
                              if (vars.size() > static_cast<std::size_t>(kTruthTableCap) ||
                                  t.size() != (std::size_t{1} << vars.size())) {
                                  throw UsageError("--table needs 2^variables values");
                              }
                              emit(json_io::circuit_to_json(synthesize_nand(TruthTable{vars, t})));
                              return kOk;
                          }});

        auto* eval = circuit->add_subcommand("eval", "evaluate a circuit on one assignment");
        with_input(eval);
        static std::string assignment;
        eval->add_option("--assignment", assignment, "one bit per circuit input, in input order");
        leaves.push_back({eval, "eval", [&] {
                              const auto c = read_circuit(input);
                              const auto a = bit_string(assignment, "--assignment");
                              if (a.size() != c.inputs().size()) throw UsageError("--assignment needs one bit per input");
                              const auto gates = eval_gates(c, a);
                              Json j;
                              j["value"] = eval_circuit(c, a);
                              j["gates"] = std::vector<int>(gates.begin(), gates.end());
                              emit(j);
                              return kOk;
                          }});

        auto* tt = circuit->add_subcommand("table", "truth table of a circuit");
        with_input(tt);
        leaves.push_back({tt, "truth_table", [&] {
                              emit(json_io::truth_table_to_json(truth_table(read_circuit(input))));
                              return kOk;
                          }});
    }

    // compile
    {
        auto* comp = app.add_subcommand("compile", "PR-box protocol for a circuit's full-correlation box");
        with_input(comp);
        static int parties = 0;
        static bool emit_protocol = false;
        static bool skip_verify = false;
        comp->add_option("--parties", parties, "number of parties (default: highest owner)");
        comp->add_flag("--emit-protocol", emit_protocol, "include the protocol");
        comp->add_flag("--skip-verify", skip_verify, "do not compare the induced box with the target");
        leaves.push_back({comp, "compile", [&] {
                              const auto c = read_circuit(input);
                              const int n = parties > 0 ? parties : parties_of(c);
                              const auto compiled = compile(c, n);
                              Json j;
                              j["f"] = json_io::circuit_to_json(c);
                              j["n"] = n;
                              j["k"] = compiled.gate_count;
                              j["k_bound"] = "upper";
                              j["pr_boxes"] = compiled.pr_boxes;
                              bool ok = true;
                              if (skip_verify) {
                                  j["verified"] = nullptr;
                              } else {
                                  const auto target = full_correlation_target(c, n, compiled.ownership);
                                  const auto v = verify_simulation(compiled.protocol, target, ctx.threads);
                                  ok = v.match;
                                  j["verified"] = v.match;
                              }
                              if (emit_protocol) {
                                  j["protocol"] = json_io::protocol_to_json(compiled.protocol.protocol(),
                                                                            env_cap("PRBOX_TABLE_CAP", 100'000));
                              }
                              emit(j);
                              return ok ? kOk : kFailed;
                          }});
    }

    // simulate
    {
        auto* sim = app.add_subcommand("simulate", "run a protocol");
        with_input(sim);
        static bool exact = false;
        static bool sample = false;
        static std::string x;
        static std::optional<std::uint64_t> seed;
        static std::uint64_t runs = 10'000;
        sim->add_flag("--exact", exact, "exact distribution (default)");
        sim->add_flag("--sample", sample, "Monte-Carlo counts");
        sim->add_option("--x", x, "input tuple, comma separated; omitted: the whole induced box");
        sim->add_option("--seed", seed, "seed for --sample");
        sim->add_option("--runs", runs, "runs for --sample");
        leaves.push_back({sim, "simulate", [&] {
                              if (exact && sample) throw UsageError("--exact and --sample exclude each other");
                              const auto vp = ValidatedProtocol::check(read_protocol(input));
                              if (sample) {
                                  if (!seed) throw UsageError("--sample needs --seed");
                                  if (x.empty()) throw UsageError("--sample needs --x");
                                  const auto xs = int_csv(x, "--x");
                                  emit(json_io::sample_to_json(execute_sample(vp, xs, *seed, runs), xs, *seed));
                                  return kOk;
                              }
                              if (seed) std::cerr << "warning: --seed is ignored in exact mode\n";
                              if (x.empty()) {
                                  emit(json_io::box_to_json(induced_box(vp, ctx.threads)));
                              } else {
                                  const auto xs = int_csv(x, "--x");
                                  emit(json_io::distribution_to_json(execute_exact(vp, xs), xs));
                              }
                              return kOk;
                          }});
    }

    // verify
    {
        auto* ver = app.add_subcommand("verify", "validate a protocol and compare it with a target box");
        with_input(ver);
        static std::string target;
        ver->add_option("--target", target, "box the protocol should induce");
        leaves.push_back({ver, "verify", [&] {
                              auto p = read_protocol(input);
                              const auto v = validate_protocol(p);
                              Json j = json_io::verdict_to_json(v);
                              if (!v.ok()) {
                                  emit(j);
                                  return kFailed;
                              }
                              if (target.empty()) {
                                  emit(j);
                                  return kOk;
                              }
                              std::ifstream probe(target);
                              if (!probe) throw UsageError("cannot read " + target);
                              const auto t = read_box(target);
                              const auto vp = ValidatedProtocol::check(std::move(p));
                              const auto s = verify_simulation(vp, t, ctx.threads);
                              j["match"] = s.match;
                              if (s.first_difference) {
                                  const auto& d = *s.first_difference;
                                  j["first_difference"] = {{"x", d.x},
                                                           {"a", d.a},
                                                           {"expected", json_io::rational(d.expected)},
                                                           {"actual", json_io::rational(d.actual)}};
                              }
                              emit(j);
                              return s.match ? kOk : kFailed;
                          }});
    }

    // cc
    {
        auto* cc = app.add_subcommand("cc", "distributed evaluation of a circuit with PR boxes and one round of bits");
        with_input(cc);
        static int parties = 0;
        static std::string x;
        static std::uint64_t seed = 0;
        cc->add_option("--parties", parties, "number of parties (default: highest owner)");
        cc->add_option("--x", x, "party inputs, comma separated");
        cc->add_option("--seed", seed, "seed for the box outcomes");
        leaves.push_back({cc, "cc", [&] {
                              if (x.empty()) throw UsageError("--x is required");
                              const auto c = read_circuit(input);
                              const int n = parties > 0 ? parties : parties_of(c);
                              const auto compiled = compile(c, n);
                              const auto xs = int_csv(x, "--x");
                              const auto sizes = compiled.protocol->input_sizes;
                              if (xs.size() != sizes.size()) throw UsageError("--x needs one input per party");
                              for (std::size_t p = 0; p < xs.size(); ++p) {
                                  if (xs[p] < 0 || xs[p] >= sizes[p]) throw UsageError("--x out of range");
                              }
                              const auto r = solve_cc(compiled, xs, seed);
                              Json j = json_io::cc_to_json(r);
                              j["expected"] = eval_circuit(c, assignment_for(compiled.ownership, xs));
                              emit(j);
                              return r.value == j["expected"].get<int>() ? kOk : kFailed;
                          }});
    }

    // polytope
    auto* poly = app.add_subcommand("polytope", "no-signaling polytopes")->require_subcommand(1);
    {
        static std::string inputs = "2,2";
        static std::string outputs = "2,2";
        auto caps = [] {
            PolytopeCaps c;
            c.max_inputs = static_cast<int>(env_cap("PRBOX_POLYTOPE_MAX_INPUTS", 3));
            c.max_outputs = static_cast<int>(env_cap("PRBOX_POLYTOPE_MAX_OUTPUTS", 2));
            return c;
        };
        auto shape = [](CLI::App* sub) {
            sub->add_option("--inputs", inputs, "input alphabet sizes, comma separated");
            sub->add_option("--outputs", outputs, "output alphabet sizes, comma separated");
        };
        auto* vert = poly->add_subcommand("vertices", "enumerate vertices");
        shape(vert);
        leaves.push_back({vert, "vertices", [&, caps] {
                              const auto h = build_h_rep(int_csv(inputs, "--inputs"), int_csv(outputs, "--outputs"), caps());
                              const auto vs = enumerate_vertices(h);
                              Json j;
                              j["inputs"] = h.input_sizes;
                              j["outputs"] = h.output_sizes;
                              j["dimension"] = h.dimension();
                              j["count"] = vs.size();
                              Json arr = Json::array();
                              for (const auto& v : vs) arr.push_back(json_io::box_to_json(v));
                              j["vertices"] = std::move(arr);
                              emit(j);
                              return kOk;
                          }});

        auto* cls = poly->add_subcommand("classify", "classify every vertex of a shape, or one box");
        shape(cls);
        static std::string single;
        cls->add_option("--box", single, "classify only this box");
        leaves.push_back({cls, "classify", [&, caps] {
                              std::vector<VertexReport> reports;
                              if (!single.empty()) {
                                  reports.push_back(classify_vertex(read_box(single)));
                              } else {
                                  const auto h =
                                      build_h_rep(int_csv(inputs, "--inputs"), int_csv(outputs, "--outputs"), caps());
                                  reports = classify_vertices(enumerate_vertices(h), ctx.threads);
                              }
                              Json j;
                              j["count"] = reports.size();
                              Json counts = Json::object();
                              for (auto k : {VertexClass::LocalDeterministic, VertexClass::PrEquivalent,
                                             VertexClass::FullCorrelation, VertexClass::Other}) {
                                  counts[to_string(k)] = 0;
                              }
                              std::size_t genuine = 0;
                              Json arr = Json::array();
                              for (const auto& r : reports) {
                                  counts[to_string(r.kind)] = counts[to_string(r.kind)].get<int>() + 1;
                                  genuine += r.genuine && r.kind != VertexClass::LocalDeterministic;
                                  arr.push_back(json_io::vertex_report_to_json(r));
                              }
                              j["classes"] = std::move(counts);
                              j["genuine_nonlocal"] = genuine;
                              j["reports"] = std::move(arr);
                              emit(j);
                              return kOk;
                          }});

        auto* dec = poly->add_subcommand("decompose", "convex weights of a box over the vertices of its shape");
        with_input(dec);
        leaves.push_back({dec, "decompose", [&, caps] {
                              const auto b = read_box(input);
                              const auto h = build_h_rep(b.input_sizes(), b.output_sizes(), caps());
                              const auto vs = enumerate_vertices(h);
                              const auto w = decompose(b, vs);
                              Json arr = Json::array();
                              for (std::size_t i = 0; i < vs.size(); ++i) {
                                  if (w[i] == 0) continue;
                                  arr.push_back({{"index", i},
                                                 {"class", to_string(classify_vertex(vs[i]).kind)},
                                                 {"weight", json_io::rational(w[i])},
                                                 {"vertex", json_io::box_to_json(vs[i])}});
                              }
                              emit(Json{{"vertices", vs.size()}, {"weights", std::move(arr)}});
                              return kOk;
                          }});
    }

    // cluster
    auto* cluster = app.add_subcommand("cluster", "cluster-state parity constraints")->require_subcommand(1);
    {
        static std::string constraints_file;
        auto constraints = [] {
            if (constraints_file.empty()) return cluster_constraints();
            return json_io::constraints_from_json(json_io::parse(read_input(constraints_file)));
        };
        leaves.push_back({cluster->add_subcommand("constraints", "the six parity constraints"), "constraints", [] {
                              emit(json_io::constraints_to_json(cluster_constraints()));
                              return kOk;
                          }});
        auto* ghz = cluster->add_subcommand("ghz", "exhaustive local assignment check");
        ghz->add_option("--constraints", constraints_file, "constraint set file");
        leaves.push_back({ghz, "ghz", [constraints] {
                              emit(json_io::ghz_to_json(ghz_local_search(constraints())));
                              return kOk;
                          }});

        auto* search = cluster->add_subcommand("search", "exhaustive search for a PR-box protocol meeting the constraints");
        static int boxes = 1;
        static std::uint64_t cap = 0;
        static bool reduced = false;
        static bool symmetric = false;
        static bool timing = false;
        static std::vector<std::string> pairs;
        search->add_option("--boxes", boxes, "number of PR boxes")->check(CLI::NonNegativeNumber);
        search->add_option("--cap", cap, "strategy profile cap");
        search->add_flag("--reduced", reduced, "skip uses whose continuation ignores the box output");
        search->add_flag("--symmetric", symmetric, "one placement per symmetry orbit");
        search->add_flag("--timing", timing, "report the runtime");
        search->add_option("--pair", pairs, "owners of one box as i,j; repeat once per box, then per placement");
        search->add_option("--constraints", constraints_file, "constraint set file");
        leaves.push_back({search, "search", [&, constraints] {
                              SearchOptions o;
                              o.constraints = constraints();
                              o.cap = cap ? cap : env_cap("PRBOX_STRATEGY_CAP", 100'000'000);
                              o.reduced = reduced;
                              o.symmetric = symmetric;
                              o.threads = ctx.threads;
                              if (!pairs.empty()) {
                                  if (boxes == 0 || pairs.size() % boxes != 0) {
                                      throw UsageError("--pair count must be a multiple of --boxes");
                                  }
                                  PairAssignment current;
                                  for (const auto& p : pairs) {
                                      const auto v = int_csv(p, "--pair");
                                      if (v.size() != 2) throw UsageError("--pair takes two parties");
                                      current.emplace_back(v[0], v[1]);
                                      if (static_cast<int>(current.size()) == boxes) {
                                          o.assignments.push_back(std::move(current));
                                          current.clear();
                                      }
                                  }
                              }
                              const auto r = theorem2_search(boxes, o);
                              emit(json_io::search_report_to_json(r, timing));
                              return r.success ? kFailed : kOk;
                          }});
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    const Leaf* chosen = nullptr;
    for (const auto& leaf : leaves) {
        if (leaf.app->parsed()) chosen = &leaf;
    }

    const auto& schemas = prbox::cli::embedded_schemas();
    if (ctx.schema) {
        if (chosen == nullptr) {
            Json all = Json::object();
            for (const auto& [name, text] : schemas) all[name] = Json::parse(text);
            emit(all);
        } else {
            emit(Json::parse(schemas.at(chosen->schema)));
        }
        return kOk;
    }
    if (chosen == nullptr) {
        std::cerr << app.help();
        return kUsage;
    }

    try {
        return chosen->run();
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
    } catch (const TooLarge& e) {
        std::cerr << "limit exceeded: " << e.what() << "\n";
    } catch (const prbox::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
    } catch (const std::bad_alloc&) {
        std::cerr << "error: out of memory\n";
    }
    return kUsage;
}
