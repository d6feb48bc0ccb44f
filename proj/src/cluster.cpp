#include "prbox/cluster.hpp"

#include "prbox/errors.hpp"
#include "prbox/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <set>

namespace prbox {

ConstraintSet ConstraintSet::make(int parties, std::vector<ParityConstraint> constraints, int settings) {
    if (parties < 1 || settings < 1) throw ShapeMismatch("constraint set needs parties and settings");
    for (const auto& c : constraints) {
        if (c.target != 0 && c.target != 1) throw ShapeMismatch("parity target must be 0 or 1");
        std::vector<bool> seen(parties, false);
        for (const auto& t : c.terms) {
            if (t.party < 0 || t.party >= parties) throw ShapeMismatch("constraint party out of range");
            if (t.setting < 0 || t.setting >= settings) throw ShapeMismatch("constraint setting out of range");
            if (seen[t.party]) throw ShapeMismatch("party listed twice in one constraint");
            seen[t.party] = true;
        }
    }
    ConstraintSet s;
    s.parties_ = parties;
    s.settings_ = settings;
    s.constraints_ = std::move(constraints);
    return s;
}

ConstraintSet ConstraintSet::rotated(int shift) const {
    auto out = *this;
    for (auto& c : out.constraints_) {
        for (auto& t : c.terms) t.party = ((t.party + shift) % parties_ + parties_) % parties_;
    }
    return out;
}

ConstraintSet ConstraintSet::with_target(std::size_t index, int target) const {
    auto out = *this;
    out.constraints_.at(index).target = target;
    return out;
}

namespace {

using CanonicalConstraint = std::pair<std::vector<std::pair<int, int>>, int>;

std::set<CanonicalConstraint> canonical(const ConstraintSet& s) {
    std::set<CanonicalConstraint> out;
    for (const auto& c : s.constraints()) {
        std::vector<std::pair<int, int>> terms;
        for (const auto& t : c.terms) terms.emplace_back(t.party, t.setting);
        std::sort(terms.begin(), terms.end());
        out.emplace(std::move(terms), c.target);
    }
    return out;
}

} // namespace

bool ConstraintSet::same_as(const ConstraintSet& other) const {
    return parties_ == other.parties_ && settings_ == other.settings_ && canonical(*this) == canonical(other);
}

ConstraintSet cluster_constraints() {
    constexpr int n = 5;
    std::vector<ParityConstraint> cs;
    for (int i = 0; i < n; ++i) {
        cs.push_back({{{i, 0}, {(i + 1) % n, 1}, {(i + 2) % n, 0}}, 0});
    }
    ParityConstraint all;
    for (int i = 0; i < n; ++i) all.terms.push_back({i, 1});
    all.target = 1;
    cs.push_back(std::move(all));
    return ConstraintSet::make(n, std::move(cs));
}

bool satisfies(const DistributionSource& source, const ParityConstraint& constraint,
               const std::vector<int>& input_sizes) {
    const int n = static_cast<int>(input_sizes.size());
    std::vector<int> fixed(n, -1);
    for (const auto& t : constraint.terms) {
        if (t.party < 0 || t.party >= n || t.setting < 0 || t.setting >= input_sizes[t.party]) {
            throw ShapeMismatch("constraint does not fit the input alphabets");
        }
        if (fixed[t.party] >= 0) throw ShapeMismatch("party listed twice in one constraint");
        fixed[t.party] = t.setting;
    }
    std::vector<int> free_sizes;
    std::vector<int> free_parties;
    for (int p = 0; p < n; ++p) {
        if (fixed[p] < 0) {
            free_parties.push_back(p);
            free_sizes.push_back(input_sizes[p]);
        }
    }
    const MixedRadix completions(free_sizes);
    std::vector<int> x = fixed;
    for (std::size_t c = 0; c < completions.size(); ++c) {
        for (std::size_t k = 0; k < free_parties.size(); ++k) {
            x[free_parties[k]] = completions.digit(c, static_cast<int>(k));
        }
        const auto dist = source(x);
        if (dist.outputs.digits() != n) throw ShapeMismatch("distribution has the wrong number of parties");
        for (const auto& t : constraint.terms) {
            if (dist.outputs.sizes()[t.party] != 2) throw ShapeMismatch("parity needs binary outputs");
        }
        for (std::size_t a = 0; a < dist.probs.size(); ++a) {
            if (dist.probs[a] == 0) continue;
            int parity = 0;
            for (const auto& t : constraint.terms) parity ^= dist.outputs.digit(a, t.party);
            if (parity != constraint.target) return false;
        }
    }
    return true;
}

GhzVerdict ghz_local_search(const ConstraintSet& constraints) {
    const int n = constraints.parties();
    const int s = constraints.settings();
    if (s != 2) throw ShapeMismatch("local search expects two settings per party");
    GhzVerdict v;
    v.space = std::uint64_t{1} << (n * s);
    v.max_satisfiable = -1;
    for (std::uint64_t bits = 0; bits < v.space; ++bits) {
        int count = 0;
        for (const auto& c : constraints.constraints()) {
            int parity = 0;
            for (const auto& t : c.terms) parity ^= static_cast<int>((bits >> (t.party * s + t.setting)) & 1);
            if (parity == c.target) ++count;
        }
        if (count == static_cast<int>(constraints.constraints().size())) ++v.satisfying;
        if (count > v.max_satisfiable) {
            v.max_satisfiable = count;
            v.best_assignment.assign(n * s, 0);
            for (int k = 0; k < n * s; ++k) v.best_assignment[k] = static_cast<int>((bits >> k) & 1);
        }
    }
    return v;
}

namespace {

// i^phase * X^x Z^z on five qubits.
struct Pauli {
    unsigned x = 0;
    unsigned z = 0;
    int phase = 0;
};

Pauli multiply(const Pauli& a, const Pauli& b) {
    return {a.x ^ b.x, a.z ^ b.z, (a.phase + b.phase + 2 * std::popcount(a.z & b.x)) % 4};
}

} // namespace

Box cluster_box() {
    constexpr int n = 5;
    std::vector<Pauli> generators;
    for (int i = 0; i < n; ++i) {
        generators.push_back({1u << i, (1u << ((i + n - 1) % n)) | (1u << ((i + 1) % n)), 0});
    }
    std::vector<Pauli> group;
    for (unsigned subset = 0; subset < (1u << n); ++subset) {
        Pauli p;
        for (int i = 0; i < n; ++i) {
            if (subset & (1u << i)) p = multiply(p, generators[i]);
        }
        group.push_back(p);
    }

    const std::vector<int> sizes(n, 2);
    const MixedRadix inputs(sizes);
    const MixedRadix outputs(sizes);
    std::vector<Rational> table(inputs.size() * outputs.size());
    for (unsigned xs = 0; xs < inputs.size(); ++xs) {
        std::vector<std::pair<unsigned, int>> rules;  // support, parity
        for (const auto& g : group) {
            if (g.x & g.z) continue;
            if ((g.x & ~xs) != 0 || (g.z & xs) != 0) continue;
            rules.emplace_back(g.x | g.z, g.phase == 2 ? 1 : 0);
        }
        std::vector<unsigned> allowed;
        for (unsigned a = 0; a < outputs.size(); ++a) {
            bool ok = true;
            for (const auto& [support, parity] : rules) {
                if ((std::popcount(a & support) & 1) != parity) ok = false;
            }
            if (ok) allowed.push_back(a);
        }
        for (unsigned a : allowed) {
            table[xs * outputs.size() + a] = Rational(1, static_cast<long>(allowed.size()));
        }
    }
    return Box::make(sizes, sizes, std::move(table));
}

std::vector<PairAssignment> pair_assignments(int parties, int boxes, bool symmetric) {
    if (parties < 2 || boxes < 0) throw ShapeMismatch("pair assignments need two parties");
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < parties; ++i) {
        for (int j = i + 1; j < parties; ++j) pairs.emplace_back(i, j);
    }
    std::vector<PairAssignment> out;
    const MixedRadix choice(std::vector<int>(boxes, static_cast<int>(pairs.size())));
    for (std::size_t code = 0; code < choice.size(); ++code) {
        PairAssignment a;
        for (int b = 0; b < boxes; ++b) a.push_back(pairs[choice.digit(code, b)]);
        if (symmetric) {
            auto key = [&](PairAssignment v, int shift) {
                for (auto& [i, j] : v) {
                    i = (i + shift) % parties;
                    j = (j + shift) % parties;
                    if (i > j) std::swap(i, j);
                }
                std::sort(v.begin(), v.end());
                return v;
            };
            const auto own = key(a, 0);
            if (own != a) continue;
            bool minimal = true;
            for (int shift = 1; shift < parties && minimal; ++shift) {
                if (key(a, shift) < own) minimal = false;
            }
            if (!minimal) continue;
        }
        out.push_back(std::move(a));
    }
    return out;
}

namespace {

std::vector<BankInstance> bank_for(const PairAssignment& pairs, const std::shared_ptr<const BoxTemplate>& box) {
    if (box->sides() != 2) throw ShapeMismatch("box placements assume two-sided boxes");
    std::vector<BankInstance> bank;
    for (const auto& [i, j] : pairs) bank.push_back({box, {i, j}});
    return bank;
}

bool meets_all(const ValidatedProtocol& vp, const ConstraintSet& constraints) {
    const auto& sizes = vp->input_sizes;
    const DistributionSource source = [&](std::span<const int> x) { return execute_exact(vp, x); };
    for (const auto& c : constraints.constraints()) {
        if (!satisfies(source, c, sizes)) return false;
    }
    return true;
}

} // namespace

SearchReport theorem2_search(int boxes, const SearchOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    const int n = options.constraints.parties();
    if (boxes < 0) throw ShapeMismatch("box count must be nonnegative");
    if (options.symmetric && options.assignments.empty() && !options.constraints.rotated(1).same_as(options.constraints)) {
        throw ShapeMismatch("symmetric placements need a constraint set invariant under cyclic shifts");
    }

    std::vector<PairAssignment> assignments = options.assignments;
    if (assignments.empty()) assignments = pair_assignments(n, boxes, options.symmetric);
    for (const auto& a : assignments) {
        if (static_cast<int>(a.size()) != boxes) throw ShapeMismatch("assignment does not place every box");
        for (const auto& [i, j] : a) {
            if (i < 0 || j < 0 || i >= n || j >= n || i == j) throw ShapeMismatch("bad box placement");
        }
    }

    StrategyEnumerator::Options eo;
    eo.input_sizes.assign(n, options.constraints.settings());
    eo.output_sizes.assign(n, 2);
    eo.cap = options.cap;
    eo.reduced = options.reduced;

    std::uint64_t total = 0;
    for (const auto& a : assignments) {
        const auto count = StrategyEnumerator::count_profiles(n, bank_for(a, options.box), eo);
        total = count > UINT64_MAX - total ? UINT64_MAX : total + count;
    }
    if (total > options.cap) throw TooLarge("strategy profiles over all placements", total, options.cap);

    std::vector<StrategyEnumerator> enumerators;
    std::vector<std::uint64_t> offsets;
    std::uint64_t running = 0;
    for (const auto& a : assignments) {
        enumerators.emplace_back(n, bank_for(a, options.box), eo);
        offsets.push_back(running);
        running += enumerators.back().size();
    }

    // Chunks never straddle two placements so each is served by one enumerator.
    struct Chunk {
        std::size_t assignment;
        std::uint64_t begin;
        std::uint64_t end;
    };
    constexpr std::uint64_t chunk_size = 2048;
    std::vector<Chunk> chunks;
    for (std::size_t k = 0; k < enumerators.size(); ++k) {
        for (std::uint64_t b = 0; b < enumerators[k].size(); b += chunk_size) {
            chunks.push_back({k, b, std::min(enumerators[k].size(), b + chunk_size)});
        }
    }

    std::atomic<std::uint64_t> best{UINT64_MAX};
    parallel_for(chunks.size(), options.threads, [&](std::size_t ci) {
        const auto& ch = chunks[ci];
        const auto& en = enumerators[ch.assignment];
        for (std::uint64_t i = ch.begin; i < ch.end; ++i) {
            const std::uint64_t global = offsets[ch.assignment] + i;
            if (global >= best.load(std::memory_order_relaxed)) return;
            const auto vp = ValidatedProtocol::check(en.profile(i));
            if (meets_all(vp, options.constraints)) {
                std::uint64_t cur = best.load();
                while (global < cur && !best.compare_exchange_weak(cur, global)) {
                }
                return;
            }
        }
    });

    SearchReport r;
    r.boxes = boxes;
    r.reduced = options.reduced;
    r.symmetric = options.symmetric;
    r.reduction =
        "shared randomness is not enumerated: a mixture meets a probability-one parity event only if every "
        "deterministic component does";
    if (options.reduced) {
        r.reduction += "; uses whose continuation ignores the box output are skipped, as deleting them leaves "
                       "every output distribution unchanged";
    }
    if (options.symmetric) {
        r.reduction += "; one box placement per orbit of cyclic party shifts and box relabelings";
    }
    const std::uint64_t found = best.load();
    if (found == UINT64_MAX) {
        r.assignments_tested = assignments.size();
        r.strategies_tested = total;
    } else {
        std::size_t k = 0;
        while (k + 1 < offsets.size() && offsets[k + 1] <= found) ++k;
        r.success = true;
        r.assignments_tested = k + 1;
        r.strategies_tested = found + 1;
        r.counterexample = Counterexample{assignments[k], found - offsets[k], enumerators[k].profile(found - offsets[k])};
    }
    r.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

} // namespace prbox
