// One PASS/FAIL line per acceptance criterion; exit status 0 iff all pass.

#include "prbox/cluster.hpp"
#include "prbox/construct.hpp"
#include "prbox/errors.hpp"
#include "prbox/lp.hpp"
#include "prbox/parallel.hpp"
#include "prbox/polytope.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace prbox;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

unsigned threads() {
    if (const char* t = std::getenv("PRBOX_THREADS")) return static_cast<unsigned>(std::max(1, std::atoi(t)));
    return default_threads();
}

struct Failure {
    std::mutex mutex;
    std::string first;
    std::atomic<std::uint64_t> count{0};

    void add(const std::string& what) {
        if (count.fetch_add(1) == 0) {
            std::lock_guard lock(mutex);
            first = what;
        }
    }
    bool ok() const { return count.load() == 0; }
};

// Every induced box built anywhere below, for the closure check.
struct Closure {
    std::atomic<std::uint64_t> checked{0};
    Failure failure;

    void check(const Box& b, const std::string& origin) {
        checked.fetch_add(1);
        if (!check_no_signaling(b).ok) failure.add(origin);
    }
    // induced_box refuses signaling tables, so a throw is a closure failure too.
    std::optional<Box> induce(const ValidatedProtocol& vp, const std::string& origin) {
        try {
            Box b = induced_box(vp, 1);
            check(b, origin);
            return b;
        } catch (const Error& e) {
            checked.fetch_add(1);
            failure.add(origin + ": " + e.what());
            return std::nullopt;
        }
    }
};

Closure closure;
bool all_passed = true;

void report(int id, const std::string& title, bool pass, const std::string& detail) {
    all_passed = all_passed && pass;
    std::cout << (pass ? "PASS" : "FAIL") << " [" << id << "] " << title << ": " << detail << std::endl;
}

// ---------------------------------------------------------------- criterion 1, 2

// Variable v belongs to party owner[v]; bit positions follow variable order.
std::vector<InputBit> ownership_of(const std::vector<int>& owner) {
    std::vector<InputBit> vars;
    std::vector<int> next(8, 0);
    for (int o : owner) {
        vars.push_back({"x" + std::to_string(o + 1) + "_" + std::to_string(next[o]), o, next[o]});
        ++next[o];
    }
    return vars;
}

// Every assignment of n*m variables to n parties with m variables each.
std::vector<std::vector<int>> ownership_splits(int n, int m) {
    std::vector<std::vector<int>> out;
    const int vars = n * m;
    std::vector<int> owner(vars, 0);
    std::function<void(int, std::vector<int>&)> rec = [&](int v, std::vector<int>& used) {
        if (v == vars) {
            out.push_back(owner);
            return;
        }
        for (int p = 0; p < n; ++p) {
            if (used[p] == m) continue;
            owner[v] = p;
            ++used[p];
            rec(v + 1, used);
            --used[p];
        }
    };
    std::vector<int> used(n, 0);
    rec(0, used);
    return out;
}

struct SweepResult {
    std::uint64_t cases = 0;
    Failure exact;
    Failure resources;
};

void sweep(int n, int m, SweepResult& r) {
    const int vars = n * m;
    const auto splits = ownership_splits(n, m);
    const std::uint64_t functions = std::uint64_t{1} << (std::uint64_t{1} << vars);
    const std::uint64_t cases = functions * splits.size();
    r.cases += cases;
    parallel_for(cases, threads(), [&](std::size_t c) {
        const std::uint64_t code = c / splits.size();
        const auto& owner = splits[c % splits.size()];
        const auto vars_bits = ownership_of(owner);
        TruthTable t{vars_bits, std::vector<std::uint8_t>(std::size_t{1} << vars)};
        for (std::size_t i = 0; i < t.values.size(); ++i) t.values[i] = static_cast<std::uint8_t>(code >> i & 1);

        // The same function with variables renumbered to party p, bit b -> p*m + b.
        std::vector<std::uint8_t> contiguous(t.values.size());
        for (std::size_t idx = 0; idx < contiguous.size(); ++idx) {
            std::size_t a = 0;
            for (int v = 0; v < vars; ++v) a |= (idx >> (vars_bits[v].party * m + vars_bits[v].bit) & 1) << v;
            contiguous[idx] = t.values[a];
        }

        std::ostringstream id;
        id << "n=" << n << " m=" << m << " f=" << code << " split=";
        for (int o : owner) id << o;

        const auto circuit = synthesize_nand(t);
        const auto compiled = compile(circuit, n);
        const auto target = full_correlation_box(n, m, contiguous);
        const auto induced = closure.induce(compiled.protocol, "compiled " + id.str());
        if (!induced || !(*induced == target)) r.exact.add(id.str());

        const int expected_boxes = gate_count(circuit) * n * (n - 1);
        if (compiled.pr_boxes != expected_boxes || static_cast<int>(compiled.protocol->bank.size()) != expected_boxes) {
            r.resources.add(id.str() + ": bank size");
            return;
        }
        const MixedRadix inputs(std::vector<int>(n, 1 << m));
        for (std::size_t xi = 0; xi < inputs.size(); ++xi) {
            const auto x = inputs.decode(xi);
            std::vector<std::uint8_t> a(vars);
            std::size_t row = 0;
            for (int v = 0; v < vars; ++v) {
                a[v] = static_cast<std::uint8_t>(x[vars_bits[v].party] >> vars_bits[v].bit & 1);
                row |= static_cast<std::size_t>(a[v]) << v;
            }
            const auto cc = solve_cc(compiled, x, c * 131 + xi);
            if (cc.bits_communicated != n - 1 || cc.boxes_consumed != expected_boxes ||
                cc.value != eval_circuit(circuit, a) || cc.value != t.values[row]) {
                r.resources.add(id.str() + " x=" + std::to_string(xi));
                return;
            }
        }
    });
}

void criteria_1_2() {
    const auto t0 = Clock::now();
    SweepResult r;
    for (auto [n, m] : {std::pair{2, 0}, {2, 1}, {3, 0}, {3, 1}, {2, 2}}) sweep(n, m, r);
    const double dt = seconds_since(t0);
    std::ostringstream d1;
    d1 << r.cases << " cases over n in {2,3}, every function of n*m <= 4 bits, every ownership split; "
       << (r.exact.ok() ? "all induced boxes equal the target" : "first mismatch " + r.exact.first) << "; runtime "
       << dt << " s (budget 300 s" << (dt > 300 ? ", exceeded" : "") << ", " << threads() << " threads)";
    report(1, "compiled protocols induce the full-correlation box exactly", r.exact.ok(), d1.str());
    std::ostringstream d2;
    d2 << r.cases << " cases; bank = k*n(n-1), cc uses n-1 bits and every box, cc value = circuit value on every input"
       << (r.resources.ok() ? "" : "; first failure " + r.resources.first);
    report(2, "resource accounting", r.resources.ok(), d2.str());
}

// ---------------------------------------------------------------- criterion 3

void criterion_3() {
    const auto t0 = Clock::now();
    const Box pr = pr_box();
    const bool ns = check_no_signaling(pr).ok;
    const auto loc = is_local(pr);
    const bool chsh4 = chsh_value(pr) == 4;
    int deterministic = 0;
    int bounded = 0;
    for (int code = 0; code < 16; ++code) {
        const Response r{{code & 1, code >> 1 & 1}, {code >> 2 & 1, code >> 3 & 1}};
        const Rational v = chsh_value(deterministic_box({2, 2}, {2, 2}, r));
        ++deterministic;
        bounded += (v <= 2 && v >= -2);
    }
    std::ostringstream d;
    d << "no-signaling " << ns << ", local " << loc.local << ", CHSH " << to_string(chsh_value(pr)) << ", " << bounded
      << "/" << deterministic << " deterministic boxes within |CHSH| <= 2; " << seconds_since(t0) << " s";
    report(3, "PR box properties", ns && !loc.local && chsh4 && deterministic == 16 && bounded == 16, d.str());
}

// ---------------------------------------------------------------- criterion 4

void criterion_4() {
    std::mt19937_64 rng(4);
    int boxes = 0;
    int subsets = 0;
    bool ok = true;
    std::string first;
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 3);
        const int m = 1 + static_cast<int>(rng() % 2);
        std::vector<std::uint8_t> f(std::size_t{1} << (n * m));
        for (auto& v : f) v = static_cast<std::uint8_t>(rng() & 1);
        const Box b = full_correlation_box(n, m, f);
        ++boxes;
        for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
            std::vector<int> subset;
            for (int p = 0; p < n; ++p) {
                if (mask >> p & 1) subset.push_back(p);
            }
            const auto marg = marginal(b, subset);
            const Rational uniform = Rational(1) / Rational(Integer(1) << subset.size());
            ++subsets;
            for (const auto& p : marg.box.table()) {
                if (p != uniform) {
                    ok = false;
                    if (first.empty()) first = "trial " + std::to_string(trial) + " subset mask " + std::to_string(mask);
                }
            }
        }
    }
    report(4, "strict-subset marginals of full-correlation boxes are uniform", ok && boxes == 50,
           std::to_string(boxes) + " random boxes (n <= 4, m <= 2), " + std::to_string(subsets) + " marginals" +
               (ok ? "" : "; first failure " + first));
}

// ---------------------------------------------------------------- criterion 5

// Independent vertex oracle for the 2222 shape: a point is a vertex iff it is
// the unique solution of the equalities plus p = 0 on some set of cells.
std::set<std::vector<Rational>> tight_set_oracle() {
    constexpr int cells = 16;
    auto cell = [](int x, int y, int a, int b) { return ((x * 2 + y) * 4) + a + 2 * b; };
    std::vector<std::vector<Rational>> rows;
    std::vector<Rational> rhs;
    for (int x = 0; x < 2; ++x) {
        for (int y = 0; y < 2; ++y) {
            std::vector<Rational> r(cells);
            for (int a = 0; a < 2; ++a) {
                for (int b = 0; b < 2; ++b) r[cell(x, y, a, b)] = 1;
            }
            rows.push_back(r);
            rhs.push_back(1);
        }
    }
    for (int x = 0; x < 2; ++x) {
        for (int a = 0; a < 2; ++a) {
            std::vector<Rational> r(cells);
            for (int b = 0; b < 2; ++b) {
                r[cell(x, 0, a, b)] += 1;
                r[cell(x, 1, a, b)] -= 1;
            }
            rows.push_back(r);
            rhs.push_back(0);
        }
    }
    for (int y = 0; y < 2; ++y) {
        for (int b = 0; b < 2; ++b) {
            std::vector<Rational> r(cells);
            for (int a = 0; a < 2; ++a) {
                r[cell(0, y, a, b)] += 1;
                r[cell(1, y, a, b)] -= 1;
            }
            rows.push_back(r);
            rhs.push_back(0);
        }
    }
    std::set<std::vector<Rational>> vertices;
    for (unsigned zeros = 0; zeros < (1u << cells); ++zeros) {
        if (std::popcount(zeros) < 8) continue;
        std::vector<std::vector<Rational>> a = rows;
        std::vector<Rational> b = rhs;
        for (int c = 0; c < cells; ++c) {
            if (zeros >> c & 1) {
                std::vector<Rational> r(cells);
                r[c] = 1;
                a.push_back(r);
                b.push_back(0);
            }
        }
        // Gauss-Jordan; unique solution iff rank 16 and consistent.
        const int m = static_cast<int>(a.size());
        int rank = 0;
        std::vector<int> pivot_col;
        for (int col = 0; col < cells && rank < m; ++col) {
            int piv = -1;
            for (int r = rank; r < m; ++r) {
                if (a[r][col] != 0) {
                    piv = r;
                    break;
                }
            }
            if (piv < 0) continue;
            std::swap(a[piv], a[rank]);
            std::swap(b[piv], b[rank]);
            const Rational inv = 1 / a[rank][col];
            for (auto& v : a[rank]) v *= inv;
            b[rank] *= inv;
            for (int r = 0; r < m; ++r) {
                if (r == rank || a[r][col] == 0) continue;
                const Rational f = a[r][col];
                for (int k = 0; k < cells; ++k) a[r][k] -= f * a[rank][k];
                b[r] -= f * b[rank];
            }
            pivot_col.push_back(col);
            ++rank;
        }
        if (rank < cells) continue;
        bool consistent = true;
        for (int r = rank; r < m; ++r) consistent = consistent && b[r] == 0;
        if (!consistent) continue;
        std::vector<Rational> p(cells);
        for (int r = 0; r < rank; ++r) p[pivot_col[r]] = b[r];
        if (std::all_of(p.begin(), p.end(), [](const Rational& v) { return v >= 0; })) vertices.insert(p);
    }
    return vertices;
}

void criterion_5() {
    const auto t0 = Clock::now();
    bool ok = true;
    std::ostringstream d;

    const auto h = build_h_rep({2, 2}, {2, 2});
    const auto vs = enumerate_vertices(h);
    int local = 0;
    int nonlocal = 0;
    int pr_equivalent = 0;
    std::set<std::vector<Rational>> enumerated;
    for (const auto& v : vs) {
        // Reorder cells to the oracle's layout: x-major, then y, then a + 2b.
        std::vector<Rational> p(16);
        for (int x = 0; x < 2; ++x) {
            for (int y = 0; y < 2; ++y) {
                for (int a = 0; a < 2; ++a) {
                    for (int b = 0; b < 2; ++b) {
                        const int xs[2] = {x, y};
                        const int as[2] = {a, b};
                        p[(x * 2 + y) * 4 + a + 2 * b] = v.prob(xs, as);
                    }
                }
            }
        }
        enumerated.insert(p);
        const auto r = classify_vertex(v);
        if (r.kind == VertexClass::LocalDeterministic) {
            ++local;
        } else {
            ++nonlocal;
            if (r.kind == VertexClass::PrEquivalent && r.relabeling && relabel(v, *r.relabeling) == pr_box()) {
                ++pr_equivalent;
            }
        }
    }
    const auto oracle = tight_set_oracle();
    const bool oracle_match = oracle == enumerated && enumerated.size() == vs.size();
    ok = ok && local == 16 && nonlocal == 8 && pr_equivalent == 8 && oracle_match;
    d << "2222: " << vs.size() << " vertices, " << local << " local, " << nonlocal << " nonlocal, " << pr_equivalent
      << " mapped onto the PR box; oracle " << oracle.size() << " vertices, " << (oracle_match ? "identical" : "DIFFERENT");

    const auto h3 = build_h_rep({3, 3}, {2, 2});
    const auto vs3 = enumerate_vertices(h3);
    const auto reports = classify_vertices(vs3, threads());
    int genuine_nonlocal = 0;
    int full_correlation = 0;
    for (const auto& r : reports) {
        if (r.kind == VertexClass::LocalDeterministic || !r.genuine) continue;
        ++genuine_nonlocal;
        if (r.kind == VertexClass::FullCorrelation && r.relabeling && !r.f.empty()) ++full_correlation;
    }
    ok = ok && genuine_nonlocal > 0 && genuine_nonlocal == full_correlation;
    d << "; 3322: " << vs3.size() << " vertices, " << genuine_nonlocal << " genuine nonlocal, " << full_correlation
      << " in full-correlation form; " << seconds_since(t0) << " s (budget 600 s)";
    report(5, "no-signaling polytope vertices", ok, d.str());
}

// ---------------------------------------------------------------- criterion 6

void criterion_6() {
    const auto t0 = Clock::now();
    const auto v = ghz_local_search();
    // Second enumeration: a_i and a'_i as separate loops over integers.
    int independent = 0;
    for (int a = 0; a < 32; ++a) {
        for (int ap = 0; ap < 32; ++ap) {
            auto bit = [](int word, int i) { return word >> (i % 5) & 1; };
            bool all = true;
            for (int i = 0; i < 5; ++i) all = all && ((bit(a, i) + bit(ap, i + 1) + bit(a, i + 2)) % 2 == 0);
            all = all && (std::popcount(static_cast<unsigned>(ap)) % 2 == 1);
            independent += all;
        }
    }
    std::ostringstream d;
    d << v.satisfying << " of " << v.space << " assignments satisfy all six (independent count " << independent
      << "), at most " << v.max_satisfiable << " simultaneously; " << seconds_since(t0) * 1e3 << " ms";
    report(6, "GHZ paradox", v.satisfying == 0 && v.space == 1024 && independent == 0, d.str());
}

// ---------------------------------------------------------------- criterion 7

bool meets(const ValidatedProtocol& vp, const ConstraintSet& cs) {
    const DistributionSource src = [&](std::span<const int> x) { return execute_exact(vp, x); };
    for (const auto& c : cs.constraints()) {
        if (!satisfies(src, c, vp->input_sizes)) return false;
    }
    return true;
}

void criterion_7() {
    const auto t0 = Clock::now();
    SearchOptions o;
    o.threads = threads();
    const auto r = theorem2_search(1, o);
    const bool refuted = !r.success && r.assignments_tested == 10 && r.strategies_tested == 10 * 640'000;

    SearchOptions inv = o;
    inv.constraints = cluster_constraints().with_target(5, 0);
    const auto r1 = theorem2_search(1, inv);
    const auto r0 = theorem2_search(0, inv);
    bool witnesses = r1.success && r0.success && r1.counterexample && r0.counterexample;
    if (witnesses) {
        for (const auto* rr : {&r1, &r0}) {
            const auto vp = ValidatedProtocol::check(rr->counterexample->protocol);
            witnesses = witnesses && meets(vp, inv.constraints) && !meets(vp, cluster_constraints());
            closure.induce(vp, "search witness");
        }
        // The 0-box witness must be the all-zeros protocol.
        const auto& p0 = r0.counterexample->protocol;
        for (const auto& s : p0.strategies) {
            for (int root : s->roots) witnesses = witnesses && s->nodes[root].is_stop() && s->nodes[root].output == 0;
        }
    }
    std::ostringstream d;
    d << "1 box: " << r.assignments_tested << " placements, " << r.strategies_tested
      << " deterministic profiles, success " << r.success << "; target-flipped set: witness found with 1 box after "
      << r1.strategies_tested << " profiles and with 0 boxes after " << r0.strategies_tested << "; "
      << seconds_since(t0) << " s (budget 1800 s)";
    report(7, "no single PR box reproduces the cluster constraints", refuted && witnesses, d.str());

    // Closure over the search stream: every 64th profile of every placement.
    const auto t1 = Clock::now();
    StrategyEnumerator::Options eo;
    eo.input_sizes.assign(5, 2);
    eo.output_sizes.assign(5, 2);
    std::uint64_t sampled = 0;
    for (const auto& pairs : pair_assignments(5, 1)) {
        const StrategyEnumerator en(5, {{BoxTemplate::pr(), {pairs[0].first, pairs[0].second}}}, eo);
        const std::uint64_t stride = 64;
        const std::uint64_t count = (en.size() + stride - 1) / stride;
        parallel_for(count, threads(), [&](std::size_t i) {
            closure.induce(ValidatedProtocol::check(en.profile(i * stride)), "search profile " + std::to_string(i * stride));
        });
        sampled += count;
    }
    std::cerr << "search-stream closure sample: " << sampled << " profiles in " << seconds_since(t1) << " s\n";
}

// ---------------------------------------------------------------- criterion 8

// Strategy whose lambda-th block is `per_lambda[lambda]` (each single-lambda).
std::shared_ptr<const PartyStrategy> stack_lambdas(const std::vector<std::shared_ptr<const PartyStrategy>>& per_lambda) {
    auto s = std::make_shared<PartyStrategy>();
    s->party = per_lambda[0]->party;
    s->lambda_count = static_cast<int>(per_lambda.size());
    s->input_size = per_lambda[0]->input_size;
    for (const auto& part : per_lambda) {
        const int offset = static_cast<int>(s->nodes.size());
        for (auto node : part->nodes) {
            for (auto& nx : node.next) nx += offset;
            s->nodes.push_back(std::move(node));
        }
        for (int r : part->roots) s->roots.push_back(r + offset);
    }
    return s;
}

// Random adaptive strategy: each node stops or uses a random unused side the
// party owns, with a random input, and branches on every output.
std::shared_ptr<const PartyStrategy> random_strategy(int party, int input_size, int output_size,
                                                     const std::vector<BankInstance>& bank, std::mt19937_64& rng) {
    auto s = std::make_shared<PartyStrategy>();
    s->party = party;
    s->input_size = input_size;
    std::vector<std::pair<int, int>> owned;
    for (int i = 0; i < static_cast<int>(bank.size()); ++i) {
        for (int side = 0; side < bank[i].box->sides(); ++side) {
            if (bank[i].owners[side] == party) owned.emplace_back(i, side);
        }
    }
    std::function<int(std::uint32_t)> build = [&](std::uint32_t used) -> int {
        std::vector<std::size_t> free;
        for (std::size_t k = 0; k < owned.size(); ++k) {
            if (!(used >> k & 1)) free.push_back(k);
        }
        if (free.empty() || rng() % 4 == 0) {
            s->nodes.push_back(StrategyNode::stop(static_cast<int>(rng() % output_size)));
            return static_cast<int>(s->nodes.size()) - 1;
        }
        const std::size_t k = free[rng() % free.size()];
        const auto [inst, side] = owned[k];
        const auto& box = *bank[inst].box;
        const int input = static_cast<int>(rng() % box.input_size(side));
        std::vector<int> next;
        for (int o = 0; o < box.output_size(side); ++o) next.push_back(build(used | 1u << k));
        s->nodes.push_back(StrategyNode::use(inst, side, input, std::move(next)));
        return static_cast<int>(s->nodes.size()) - 1;
    };
    for (int x = 0; x < input_size; ++x) s->roots.push_back(build(0));
    return s;
}

WiringProtocol random_profile(int parties, std::vector<BankInstance> bank, std::vector<int> input_sizes,
                              std::vector<int> output_sizes, std::vector<Rational> lambda, std::mt19937_64& rng) {
    WiringProtocol p;
    p.parties = parties;
    p.input_sizes = input_sizes;
    p.output_sizes = output_sizes;
    p.randomness.weights = lambda;
    p.bank = bank;
    for (int q = 0; q < parties; ++q) {
        std::vector<std::shared_ptr<const PartyStrategy>> per_lambda;
        for (std::size_t l = 0; l < lambda.size(); ++l) {
            per_lambda.push_back(random_strategy(q, input_sizes[q], output_sizes[q], bank, rng));
        }
        p.strategies.push_back(stack_lambdas(per_lambda));
    }
    return p;
}

std::vector<std::pair<std::string, ValidatedProtocol>> corpus() {
    std::vector<std::pair<std::string, ValidatedProtocol>> out;
    auto add_compiled = [&](const std::string& name, int n, const std::vector<int>& counts, auto f) {
        const auto vars = split_bits(counts);
        TruthTable t{vars, std::vector<std::uint8_t>(std::size_t{1} << vars.size())};
        for (std::size_t i = 0; i < t.values.size(); ++i) t.values[i] = static_cast<std::uint8_t>(f(i) & 1);
        out.emplace_back(name, compile(synthesize_nand(t), n).protocol);
    };
    add_compiled("compiled AND", 2, {1, 1}, [](std::size_t i) { return (i & 1) & (i >> 1); });
    add_compiled("compiled XOR", 2, {1, 1}, [](std::size_t i) { return (i & 1) ^ (i >> 1); });
    add_compiled("compiled majority", 3, {1, 1, 1}, [](std::size_t i) { return std::popcount(i) >= 2; });
    add_compiled("compiled equality", 2, {2, 2}, [](std::size_t i) { return (i & 3) == (i >> 2); });
    add_compiled("compiled constant", 3, {1, 1, 1}, [](std::size_t) { return 1; });
    add_compiled("compiled inner product", 2, {2, 2},
                 [](std::size_t i) { return ((i & 1) & (i >> 2 & 1)) ^ ((i >> 1 & 1) & (i >> 3 & 1)); });

    std::mt19937_64 rng(8);
    const auto pr = BoxTemplate::pr();
    const std::vector<Rational> mix3{ratio(1, 2), ratio(1, 3), ratio(1, 6)};
    for (int k = 0; k < 4; ++k) {
        out.emplace_back("random 1-box profile " + std::to_string(k),
                         ValidatedProtocol::check(random_profile(3, {{pr, {k % 3, (k + 1) % 3}}}, {2, 2, 2}, {2, 2, 2},
                                                                 mix3, rng)));
    }
    for (int k = 0; k < 4; ++k) {
        out.emplace_back("random 2-box profile " + std::to_string(k),
                         ValidatedProtocol::check(random_profile(2, {{pr, {0, 1}}, {pr, {1, 0}}}, {2, 2}, {2, 2},
                                                                 {ratio(1, 4), ratio(3, 4)}, rng)));
    }

    const Box noisy = mix(std::vector<Box>{pr_box(), uniform_noise_box({2, 2}, {2, 2})}, std::vector<Rational>{ratio(3, 4), ratio(1, 4)});
    const auto noisy_t = BoxTemplate::make("noisy PR", noisy);
    for (int k = 0; k < 2; ++k) {
        out.emplace_back("noisy PR profile " + std::to_string(k),
                         ValidatedProtocol::check(
                             random_profile(2, {{noisy_t, {0, 1}}, {pr, {1, 0}}}, {2, 2}, {2, 2}, mix3, rng)));
    }
    const auto ghz_t = BoxTemplate::make("three-party parity", full_correlation_box({2, 2, 2}, [](std::span<const int> x) {
                                             return x[0] & x[1] & x[2];
                                         }));
    out.emplace_back("three-sided box profile",
                     ValidatedProtocol::check(random_profile(3, {{ghz_t, {0, 1, 2}}}, {2, 2, 2}, {2, 2, 2}, mix3, rng)));
    std::vector<Rational> z3(9 * 4);
    for (int x = 0; x < 4; ++x) {
        for (int a = 0; a < 3; ++a) {
            const int b = ((a - (x & 1) * (x >> 1)) % 3 + 3) % 3;
            z3[x * 9 + a + 3 * b] = ratio(1, 3);
        }
    }
    const auto z3_t = BoxTemplate::make("mod-3 box", Box::make({2, 2}, {3, 3}, z3));
    out.emplace_back("three-output box profile",
                     ValidatedProtocol::check(random_profile(2, {{z3_t, {0, 1}}}, {2, 2}, {3, 3}, {ratio(1, 1)}, rng)));
    out.emplace_back("mixed bank profile",
                     ValidatedProtocol::check(random_profile(3, {{pr, {0, 1}}, {z3_t, {1, 2}}}, {2, 2, 2}, {2, 3, 3},
                                                             {ratio(2, 3), ratio(1, 3)}, rng)));
    out.emplace_back("adaptive chain profile",
                     ValidatedProtocol::check(random_profile(3, {{pr, {0, 1}}, {pr, {1, 2}}}, {2, 2, 2}, {2, 2, 2},
                                                             {ratio(1, 2), ratio(1, 2)}, rng)));
    return out;
}

void criterion_8() {
    const auto t0 = Clock::now();
    const auto protocols = corpus();
    constexpr std::uint64_t runs = 100'000;
    std::vector<std::string> failures(protocols.size());
    std::vector<std::uint64_t> outcomes(protocols.size(), 0);
    parallel_for(protocols.size(), threads(), [&](std::size_t k) {
        const auto& [name, vp] = protocols[k];
        const auto induced = closure.induce(vp, name);
        if (!induced) {
            failures[k] = name + ": no induced box";
            return;
        }
        const MixedRadix inputs(vp->input_sizes);
        for (std::size_t xi = 0; xi < inputs.size(); ++xi) {
            const auto x = inputs.decode(xi);
            const auto exact = execute_exact(vp, x);
            const std::uint64_t seed = 1000 * k + xi;
            const auto s = execute_sample(vp, x, seed, runs);
            for (std::size_t a = 0; a < exact.probs.size(); ++a) {
                ++outcomes[k];
                const double p = exact.probs[a].convert_to<double>();
                const double c = static_cast<double>(s.counts[a]);
                if (exact.probs[a] == 0) {
                    if (s.counts[a] != 0 && failures[k].empty()) failures[k] = name + ": forbidden outcome sampled";
                    continue;
                }
                const double se = std::sqrt(runs * p * (1 - p));
                if (std::abs(c - runs * p) > 5 * se && failures[k].empty()) {
                    failures[k] = name + ": outcome " + std::to_string(a) + " off by more than 5 standard errors";
                }
            }
            if (xi == 0) {
                const auto again = execute_sample(vp, x, seed, runs);
                if (again.counts != s.counts && failures[k].empty()) failures[k] = name + ": seed not reproducible";
            }
        }
    });
    std::string first;
    for (const auto& f : failures) {
        if (!f.empty() && first.empty()) first = f;
    }
    std::uint64_t total = 0;
    for (auto o : outcomes) total += o;
    std::ostringstream d;
    d << protocols.size() << " protocols, " << total << " (x, a) cells at " << runs
      << " runs each input; repeated seeds reproduce counts" << (first.empty() ? "" : "; first failure " + first)
      << "; " << seconds_since(t0) << " s";
    report(8, "sampler agrees with exact execution", first.empty() && protocols.size() == 20, d.str());
}

} // namespace

int main() {
    std::cout << "acceptance run with " << threads() << " threads" << std::endl;
    try {
        criteria_1_2();
        criterion_3();
        criterion_4();
        criterion_5();
        criterion_6();
        criterion_7();
        criterion_8();
        std::ostringstream d;
        d << closure.checked.load() << " induced boxes checked (compiled sweep, sampler corpus, search witnesses, "
          << "every 64th profile of the 1-box search)"
          << (closure.failure.ok() ? "" : "; first failure " + closure.failure.first);
        report(9, "induced boxes are nonsignaling", closure.failure.ok(), d.str());
    } catch (const std::exception& e) {
        std::cout << "FAIL aborted: " << e.what() << std::endl;
        return 1;
    }
    return all_passed ? 0 : 1;
}
