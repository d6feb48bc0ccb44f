#include "prbox/polytope.hpp"

#include "prbox/errors.hpp"
#include "prbox/lp.hpp"
#include "prbox/parallel.hpp"

#include <algorithm>
#include <bit>
#include <numeric>

namespace prbox {

namespace {

// Normalization and no-signaling equalities for any number of parties,
// before redundancy elimination.
lp::Matrix raw_equalities(const MixedRadix& in, const MixedRadix& out, std::vector<Rational>& rhs) {
    const int n = in.digits();
    const std::size_t cells = in.size() * out.size();
    std::vector<std::vector<Rational>> rows;
    for (std::size_t x = 0; x < in.size(); ++x) {
        std::vector<Rational> row(cells);
        for (std::size_t a = 0; a < out.size(); ++a) row[x * out.size() + a] = 1;
        rows.push_back(std::move(row));
        rhs.push_back(1);
    }
    // Party p's input must not move the marginal of everybody else.
    for (int p = 0; p < n; ++p) {
        for (std::size_t x = 0; x < in.size(); ++x) {
            if (in.digit(x, p) == 0) continue;
            const std::size_t x0 = x - static_cast<std::size_t>(in.digit(x, p)) * in.stride(p);
            for (std::size_t a = 0; a < out.size(); ++a) {
                if (out.digit(a, p) != 0) continue;  // a ranges over the others' outputs
                std::vector<Rational> row(cells);
                for (int ap = 0; ap < out.sizes()[p]; ++ap) {
                    const std::size_t ai = a + static_cast<std::size_t>(ap) * out.stride(p);
                    row[x * out.size() + ai] += 1;
                    row[x0 * out.size() + ai] -= 1;
                }
                rows.push_back(std::move(row));
                rhs.push_back(0);
            }
        }
    }
    lp::Matrix m(static_cast<int>(rows.size()), static_cast<int>(cells));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < cells; ++c) m(static_cast<int>(r), static_cast<int>(c)) = rows[r][c];
    }
    return m;
}

HRepresentation h_rep_any(const std::vector<int>& input_sizes, const std::vector<int>& output_sizes) {
    const MixedRadix in(input_sizes), out(output_sizes);
    std::vector<Rational> raw_rhs;
    lp::Matrix raw = raw_equalities(in, out, raw_rhs);

    // Augmented RREF removes redundant rows and yields a particular solution.
    lp::Matrix aug(raw.rows, raw.cols + 1);
    for (int r = 0; r < raw.rows; ++r) {
        for (int c = 0; c < raw.cols; ++c) aug(r, c) = raw(r, c);
        aug(r, raw.cols) = raw_rhs[r];
    }
    const auto pivots = lp::row_reduce(aug);
    HRepresentation h;
    h.input_sizes = input_sizes;
    h.output_sizes = output_sizes;
    const int rank = static_cast<int>(pivots.size());
    if (rank > 0 && pivots.back() == raw.cols) throw Error("no-signaling equalities are inconsistent");
    h.equalities = lp::Matrix(rank, raw.cols);
    h.rhs.resize(rank);
    h.particular.assign(raw.cols, 0);
    for (int r = 0; r < rank; ++r) {
        for (int c = 0; c < raw.cols; ++c) h.equalities(r, c) = aug(r, c);
        h.rhs[r] = aug(r, raw.cols);
        h.particular[pivots[r]] = aug(r, raw.cols);
    }
    h.basis = lp::null_space(h.equalities);
    return h;
}

// Rank of the basis rows at the given cells.
int tight_rank(const HRepresentation& h, const std::vector<int>& cells) {
    lp::Matrix m(static_cast<int>(cells.size()), h.dimension());
    for (std::size_t r = 0; r < cells.size(); ++r) {
        for (int c = 0; c < h.dimension(); ++c) m(static_cast<int>(r), c) = h.basis(cells[r], c);
    }
    return lp::rank(m);
}

bool extremal_in(const HRepresentation& h, std::span<const Rational> table) {
    for (int r = 0; r < h.equalities.rows; ++r) {
        Rational s = 0;
        for (int c = 0; c < h.cells(); ++c) s += h.equalities(r, c) * table[c];
        if (s != h.rhs[r]) return false;
    }
    std::vector<int> zero;
    for (int c = 0; c < h.cells(); ++c) {
        if (table[c] < 0) return false;
        if (table[c].is_zero()) zero.push_back(c);
    }
    return tight_rank(h, zero) == h.dimension();
}

struct Ray {
    std::vector<Integer> y;
    std::uint64_t zeros = 0;
};

void make_primitive(std::vector<Integer>& v) {
    Integer g = 0;
    for (const auto& e : v) g = gcd(g, abs(e));
    if (g > 1) {
        for (auto& e : v) e /= g;
    }
}

Integer dot(const std::vector<Integer>& a, const std::vector<Integer>& b) {
    Integer s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].is_zero() && !b[i].is_zero()) s += a[i] * b[i];
    }
    return s;
}

} // namespace

int no_signaling_dimension(const std::vector<int>& input_sizes, const std::vector<int>& output_sizes) {
    long prod = 1;
    for (std::size_t p = 0; p < input_sizes.size(); ++p) prod *= input_sizes[p] * (output_sizes[p] - 1) + 1;
    return static_cast<int>(prod - 1);
}

HRepresentation build_h_rep(const std::vector<int>& input_sizes, const std::vector<int>& output_sizes,
                            const PolytopeCaps& caps) {
    if (input_sizes.size() != 2 || output_sizes.size() != 2) {
        throw WrongShape("polytope enumeration is bipartite only");
    }
    for (int p = 0; p < 2; ++p) {
        if (input_sizes[p] <= 0 || output_sizes[p] <= 0) throw DimensionMismatch("alphabets must be nonempty");
        if (input_sizes[p] > caps.max_inputs) {
            throw TooLarge("inputs per party", static_cast<std::uint64_t>(input_sizes[p]),
                           static_cast<std::uint64_t>(caps.max_inputs));
        }
        if (output_sizes[p] > caps.max_outputs) {
            throw TooLarge("outputs per party", static_cast<std::uint64_t>(output_sizes[p]),
                           static_cast<std::uint64_t>(caps.max_outputs));
        }
    }
    const std::uint64_t cells = static_cast<std::uint64_t>(input_sizes[0]) * input_sizes[1] * output_sizes[0] *
                                output_sizes[1];
    if (cells > 64) throw TooLarge("table cells", cells, 64);
    HRepresentation h = h_rep_any(input_sizes, output_sizes);
    if (h.dimension() != no_signaling_dimension(input_sizes, output_sizes)) {
        throw Error("no-signaling polytope has dimension " + std::to_string(h.dimension()) + ", expected " +
                    std::to_string(no_signaling_dimension(input_sizes, output_sizes)));
    }
    return h;
}

std::vector<Box> enumerate_vertices(const HRepresentation& h) {
    const int cells = h.cells();
    const int d = h.dimension();
    const int dim = d + 1;  // homogenizing coordinate first
    if (cells > 64) throw TooLarge("table cells", static_cast<std::uint64_t>(cells), 64);

    // Cell i reads p_i = particular_i * t0 + basis_i . t >= 0; scaled to integers.
    std::vector<std::vector<Integer>> rows(cells, std::vector<Integer>(dim));
    for (int i = 0; i < cells; ++i) {
        std::vector<Rational> r(dim);
        r[0] = h.particular[i];
        for (int c = 0; c < d; ++c) r[c + 1] = h.basis(i, c);
        Integer l = 1;
        for (const auto& e : r) l = lcm(l, denominator(e));
        for (int c = 0; c < dim; ++c) rows[i][c] = numerator(r[c]) * (l / denominator(r[c]));
        make_primitive(rows[i]);
    }

    // Initial cone from dim independent rows: its rays are the columns of the inverse.
    std::vector<int> chosen;
    {
        lp::Matrix work(0, dim);
        for (int i = 0; i < cells && static_cast<int>(chosen.size()) < dim; ++i) {
            lp::Matrix trial(work.rows + 1, dim);
            std::copy(work.data.begin(), work.data.end(), trial.data.begin());
            for (int c = 0; c < dim; ++c) trial(work.rows, c) = Rational(rows[i][c]);
            if (lp::rank(trial) == trial.rows) {
                work = std::move(trial);
                chosen.push_back(i);
            }
        }
        if (static_cast<int>(chosen.size()) != dim) throw Error("polytope is not full-dimensional in its hull");
    }
    std::vector<Ray> rays;
    {
        lp::Matrix aug(dim, 2 * dim);
        for (int r = 0; r < dim; ++r) {
            for (int c = 0; c < dim; ++c) aug(r, c) = Rational(rows[chosen[r]][c]);
            aug(r, dim + r) = 1;
        }
        lp::row_reduce(aug);
        for (int j = 0; j < dim; ++j) {
            std::vector<Rational> col(dim);
            Integer l = 1;
            for (int r = 0; r < dim; ++r) {
                col[r] = aug(r, dim + j);
                l = lcm(l, denominator(col[r]));
            }
            Ray ray;
            ray.y.resize(dim);
            for (int r = 0; r < dim; ++r) ray.y[r] = numerator(col[r]) * (l / denominator(col[r]));
            make_primitive(ray.y);
            for (int r = 0; r < dim; ++r) {
                if (r != j) ray.zeros |= std::uint64_t{1} << chosen[r];
            }
            rays.push_back(std::move(ray));
        }
    }

    std::vector<char> done(cells, 0);
    for (int i : chosen) done[i] = 1;
    for (int i = 0; i < cells; ++i) {
        if (done[i]) continue;
        done[i] = 1;
        std::vector<Integer> value(rays.size());
        std::vector<std::size_t> pos, neg;
        std::vector<Ray> next;
        for (std::size_t r = 0; r < rays.size(); ++r) {
            value[r] = dot(rows[i], rays[r].y);
            if (value[r] > 0) {
                pos.push_back(r);
            } else if (value[r] < 0) {
                neg.push_back(r);
            }
        }
        for (std::size_t r = 0; r < rays.size(); ++r) {
            if (value[r] >= 0) {
                Ray keep = rays[r];
                if (value[r].is_zero()) keep.zeros |= std::uint64_t{1} << i;
                next.push_back(std::move(keep));
            }
        }
        for (std::size_t pi : pos) {
            for (std::size_t ni : neg) {
                const std::uint64_t common = rays[pi].zeros & rays[ni].zeros;
                if (std::popcount(common) < d - 1) continue;
                bool adjacent = true;
                for (std::size_t r = 0; r < rays.size() && adjacent; ++r) {
                    if (r != pi && r != ni && (common & ~rays[r].zeros) == 0) adjacent = false;
                }
                if (!adjacent) continue;
                Ray fresh;
                fresh.y.resize(dim);
                for (int c = 0; c < dim; ++c) fresh.y[c] = value[pi] * rays[ni].y[c] - value[ni] * rays[pi].y[c];
                make_primitive(fresh.y);
                fresh.zeros = common | (std::uint64_t{1} << i);
                next.push_back(std::move(fresh));
            }
        }
        rays = std::move(next);
    }

    std::vector<Box> vertices;
    for (const auto& ray : rays) {
        if (ray.y[0] <= 0) throw Error("unbounded direction in a bounded polytope");
        std::vector<Rational> t(d);
        for (int c = 0; c < d; ++c) t[c] = Rational(ray.y[c + 1]) / Rational(ray.y[0]);
        std::vector<Rational> table(cells);
        for (int i = 0; i < cells; ++i) {
            Rational v = h.particular[i];
            for (int c = 0; c < d; ++c) {
                if (!h.basis(i, c).is_zero()) v += h.basis(i, c) * t[c];
            }
            table[i] = v;
        }
        if (!extremal_in(h, table)) throw Error("double description produced a non-extremal point");
        Box b = Box::make(h.input_sizes, h.output_sizes, std::move(table));
        if (!check_no_signaling(b).ok) throw Error("double description produced a signaling point");
        vertices.push_back(std::move(b));
    }
    std::sort(vertices.begin(), vertices.end(),
              [](const Box& a, const Box& b) { return a.table() < b.table(); });
    if (std::adjacent_find(vertices.begin(), vertices.end()) != vertices.end()) {
        throw Error("double description produced a duplicate vertex");
    }
    return vertices;
}

bool is_vertex(const Box& box) {
    if (!check_no_signaling(box).ok) return false;
    std::uint64_t cells = box.table().size();
    if (cells > 4096) throw TooLarge("table cells", cells, 4096);
    const HRepresentation h = h_rep_any(box.input_sizes(), box.output_sizes());
    return extremal_in(h, box.table());
}

std::string to_string(VertexClass c) {
    switch (c) {
    case VertexClass::LocalDeterministic: return "local-deterministic";
    case VertexClass::PrEquivalent: return "PR-equivalent";
    case VertexClass::FullCorrelation: return "full-correlation";
    case VertexClass::Other: return "other";
    }
    return "?";
}

std::vector<Relabeling> relabeling_group(const Box& shape) {
    const int n = shape.parties();
    std::vector<std::vector<int>> party_perms;
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    do {
        bool ok = true;
        for (int p = 0; p < n && ok; ++p) {
            ok = shape.input_sizes()[p] == shape.input_sizes()[perm[p]] &&
                 shape.output_sizes()[p] == shape.output_sizes()[perm[p]];
        }
        if (ok) party_perms.push_back(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));

    // Local choices, one slot per party input permutation and per (party, input) output permutation.
    std::vector<std::vector<std::vector<int>>> choices;
    auto all_perms = [](int k) {
        std::vector<std::vector<int>> out;
        std::vector<int> q(k);
        std::iota(q.begin(), q.end(), 0);
        do out.push_back(q);
        while (std::next_permutation(q.begin(), q.end()));
        return out;
    };
    for (int p = 0; p < n; ++p) choices.push_back(all_perms(shape.input_sizes()[p]));
    for (int p = 0; p < n; ++p) {
        for (int x = 0; x < shape.input_sizes()[p]; ++x) choices.push_back(all_perms(shape.output_sizes()[p]));
    }
    std::vector<int> radix;
    for (const auto& c : choices) radix.push_back(static_cast<int>(c.size()));
    const MixedRadix local(radix);
    if (local.size() * party_perms.size() > 1'000'000) {
        throw TooLarge("relabeling group", local.size() * party_perms.size(), 1'000'000);
    }

    std::vector<Relabeling> group;
    for (const auto& pp : party_perms) {
        for (std::size_t code = 0; code < local.size(); ++code) {
            Relabeling r;
            r.party_permutation = pp;
            int slot = 0;
            for (int p = 0; p < n; ++p) r.input_permutation.push_back(choices[slot][local.digit(code, slot)]), ++slot;
            r.output_permutation.resize(n);
            for (int p = 0; p < n; ++p) {
                for (int x = 0; x < shape.input_sizes()[p]; ++x) {
                    r.output_permutation[p].push_back(choices[slot][local.digit(code, slot)]);
                    ++slot;
                }
            }
            group.push_back(std::move(r));
        }
    }
    return group;
}

namespace {

// relabel(box, r) == target, without building the relabeled box.
bool relabels_to(const Box& box, const Relabeling& r, const Box& target) {
    const int n = box.parties();
    std::vector<int> nx(n), na(n);
    for (std::size_t x = 0; x < box.inputs().size(); ++x) {
        for (int p = 0; p < n; ++p) nx[r.party_permutation[p]] = r.input_permutation[p][box.inputs().digit(x, p)];
        const std::size_t tx = target.inputs().encode(nx);
        for (std::size_t a = 0; a < box.outputs().size(); ++a) {
            for (int p = 0; p < n; ++p) {
                na[r.party_permutation[p]] = r.output_permutation[p][box.inputs().digit(x, p)][box.outputs().digit(a, p)];
            }
            if (box.prob(x, a) != target.prob(tx, target.outputs().encode(na))) return false;
        }
    }
    return true;
}

// Parity function when the box is uniform on tuples of one parity per input.
std::optional<std::vector<std::uint8_t>> full_correlation_form(const Box& box) {
    for (int o : box.output_sizes()) {
        if (o != 2) return std::nullopt;
    }
    std::vector<std::uint8_t> f(box.inputs().size());
    for (std::size_t x = 0; x < box.inputs().size(); ++x) {
        for (std::size_t a = 0; a < box.outputs().size(); ++a) {
            if (!box.prob(x, a).is_zero()) {
                f[x] = static_cast<std::uint8_t>(std::popcount(a) & 1);
                break;
            }
        }
    }
    const Box canonical = full_correlation_box(box.input_sizes(), [&](std::span<const int> xs) {
        return static_cast<int>(f[box.inputs().encode(xs)]);
    });
    if (canonical != box) return std::nullopt;
    return f;
}

bool deterministic(const Box& box) {
    return std::all_of(box.table().begin(), box.table().end(), [](const Rational& p) { return p == 0 || p == 1; });
}

VertexReport classify_checked(const Box& box) {
    VertexReport report{box, VertexClass::Other, false, {}, std::nullopt, std::nullopt};
    if (deterministic(box)) {
        report.kind = VertexClass::LocalDeterministic;
        report.genuine = false;
        return report;
    }

    // First party input with an output of zero marginal probability.
    std::optional<std::pair<int, int>> fixed;
    for (int p = 0; p < box.parties() && !fixed; ++p) {
        const Box single = marginal(box, {p}).box;
        for (int x = 0; x < box.input_sizes()[p] && !fixed; ++x) {
            for (int a = 0; a < box.output_sizes()[p]; ++a) {
                if (single.prob(static_cast<std::size_t>(x), static_cast<std::size_t>(a)).is_zero()) {
                    fixed = std::pair{p, x};
                    break;
                }
            }
        }
    }
    report.genuine = !fixed.has_value();

    if (report.genuine) {
        if (auto f = full_correlation_form(box)) {
            report.kind = VertexClass::FullCorrelation;
            report.f = *f;
            report.relabeling = Relabeling::identity(box);
            if (box.input_sizes() == std::vector<int>{2, 2} && box.output_sizes() == std::vector<int>{2, 2}) {
                const Box pr = pr_box();
                for (const auto& r : relabeling_group(box)) {
                    if (relabels_to(box, r, pr)) {
                        report.kind = VertexClass::PrEquivalent;
                        report.f = {0, 0, 0, 1};
                        report.relabeling = r;
                        break;
                    }
                }
            }
            return report;
        }
        for (const auto& r : relabeling_group(box)) {
            const Box moved = relabel(box, r);
            if (auto f = full_correlation_form(moved)) {
                report.kind = VertexClass::FullCorrelation;
                report.f = *f;
                report.relabeling = r;
                return report;
            }
        }
        report.kind = VertexClass::Other;
        return report;
    }

    const auto [party, input] = *fixed;
    if (box.input_sizes()[party] < 2) {
        report.kind = VertexClass::Other;
        return report;
    }
    auto reduced = std::make_shared<VertexReport>(classify_checked(remove_input(box, party, input)));
    report.kind = reduced->kind;
    report.reduction = VertexReport::Reduction{party, input, std::move(reduced)};
    return report;
}

} // namespace

VertexReport classify_vertex(const Box& box) {
    if (!is_vertex(box)) throw NotAVertex("box is not a vertex of its no-signaling polytope");
    return classify_checked(box);
}

std::vector<VertexReport> classify_vertices(const std::vector<Box>& vertices, unsigned threads) {
    std::vector<std::optional<VertexReport>> slots(vertices.size());
    parallel_for(vertices.size(), threads, [&](std::size_t i) { slots[i] = classify_vertex(vertices[i]); });
    std::vector<VertexReport> out;
    out.reserve(slots.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

std::vector<Rational> decompose(const Box& box, const std::vector<Box>& vertices) {
    if (vertices.empty()) throw Infeasible("no vertices to decompose over");
    const std::size_t cells = box.table().size();
    lp::Matrix a(static_cast<int>(cells + 1), static_cast<int>(vertices.size()));
    std::vector<Rational> b(cells + 1);
    for (std::size_t j = 0; j < vertices.size(); ++j) {
        if (!vertices[j].same_shape(box)) throw ShapeMismatch("vertex shape differs from the box");
        for (std::size_t c = 0; c < cells; ++c) a(static_cast<int>(c), static_cast<int>(j)) = vertices[j].table()[c];
        a(static_cast<int>(cells), static_cast<int>(j)) = 1;
    }
    for (std::size_t c = 0; c < cells; ++c) b[c] = box.table()[c];
    b[cells] = 1;
    auto result = lp::find_nonnegative_solution(a, b);
    if (!result.feasible) throw Infeasible("box is not a convex combination of the given vertices");
    return result.solution;
}

} // namespace prbox
