#include "prbox/box.hpp"

#include "prbox/errors.hpp"
#include "prbox/lp.hpp"

#include <algorithm>
#include <bit>
#include <numeric>

namespace prbox {

std::string to_string(const Rational& r) {
    return boost::multiprecision::numerator(r).str() + "/" +
           boost::multiprecision::denominator(r).str();
}

Rational parse_rational(std::string_view text) {
    auto parse_int = [&](std::string_view s) {
        if (s.empty()) throw ParseError("empty integer in rational '" + std::string(text) + "'");
        std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
        if (i == s.size()) throw ParseError("bad rational '" + std::string(text) + "'");
        for (; i < s.size(); ++i) {
            if (s[i] < '0' || s[i] > '9') throw ParseError("bad rational '" + std::string(text) + "'");
        }
        return Integer(std::string(s));
    };
    const auto slash = text.find('/');
    if (slash == std::string_view::npos) return Rational(parse_int(text));
    const Integer num = parse_int(text.substr(0, slash));
    const Integer den = parse_int(text.substr(slash + 1));
    if (den == 0) throw ParseError("zero denominator in '" + std::string(text) + "'");
    return Rational(num, den);
}

MixedRadix::MixedRadix(std::vector<int> sizes) : sizes_(std::move(sizes)) {
    strides_.resize(sizes_.size());
    total_ = 1;
    for (std::size_t i = 0; i < sizes_.size(); ++i) {
        if (sizes_[i] <= 0) throw DimensionMismatch("alphabet sizes must be positive");
        strides_[i] = total_;
        total_ *= static_cast<std::size_t>(sizes_[i]);
    }
}

std::size_t MixedRadix::encode(std::span<const int> digits) const {
    if (digits.size() != sizes_.size()) throw DimensionMismatch("tuple has wrong length");
    std::size_t index = 0;
    for (std::size_t i = 0; i < digits.size(); ++i) {
        if (digits[i] < 0 || digits[i] >= sizes_[i]) throw DimensionMismatch("tuple entry out of range");
        index += static_cast<std::size_t>(digits[i]) * strides_[i];
    }
    return index;
}

std::vector<int> MixedRadix::decode(std::size_t index) const {
    std::vector<int> out(sizes_.size());
    for (std::size_t i = 0; i < sizes_.size(); ++i) {
        out[i] = static_cast<int>(index % static_cast<std::size_t>(sizes_[i]));
        index /= static_cast<std::size_t>(sizes_[i]);
    }
    return out;
}

Box Box::make(std::vector<int> input_sizes, std::vector<int> output_sizes, std::vector<Rational> table) {
    if (input_sizes.empty() || input_sizes.size() != output_sizes.size()) {
        throw DimensionMismatch("need one input and one output alphabet per party");
    }
    MixedRadix in(std::move(input_sizes));
    MixedRadix out(std::move(output_sizes));
    if (table.size() != in.size() * out.size()) {
        throw DimensionMismatch("table has " + std::to_string(table.size()) + " entries, expected " +
                                std::to_string(in.size() * out.size()));
    }
    for (std::size_t x = 0; x < in.size(); ++x) {
        Rational sum = 0;
        for (std::size_t a = 0; a < out.size(); ++a) {
            const Rational& p = table[x * out.size() + a];
            if (p < 0) {
                throw NegativeProbability("P(a=" + std::to_string(a) + "|x=" + std::to_string(x) +
                                          ") = " + to_string(p));
            }
            sum += p;
        }
        if (sum != 1) {
            throw NotNormalized("row x=" + std::to_string(x) + " sums to " + to_string(sum));
        }
    }
    return Box(std::move(in), std::move(out), std::move(table));
}

Box Box::make_sparse(std::vector<int> input_sizes, std::vector<int> output_sizes,
                     std::span<const Entry> entries) {
    if (input_sizes.empty() || input_sizes.size() != output_sizes.size()) {
        throw DimensionMismatch("need one input and one output alphabet per party");
    }
    const MixedRadix in(input_sizes);
    const MixedRadix out(output_sizes);
    std::vector<Rational> table(in.size() * out.size());
    std::vector<bool> seen(table.size(), false);
    for (const auto& e : entries) {
        const std::size_t idx = in.encode(e.x) * out.size() + out.encode(e.a);
        if (seen[idx]) throw DimensionMismatch("duplicate table entry");
        seen[idx] = true;
        table[idx] = e.p;
    }
    return make(std::move(input_sizes), std::move(output_sizes), std::move(table));
}

Box pr_box() {
    return full_correlation_box({2, 2}, [](std::span<const int> x) { return x[0] & x[1]; });
}

Box full_correlation_box(std::vector<int> input_sizes, const std::function<int(std::span<const int>)>& f) {
    const int n = static_cast<int>(input_sizes.size());
    const MixedRadix in(input_sizes);
    const MixedRadix out(std::vector<int>(n, 2));
    const Rational weight = Rational(1) / Rational(Integer(1) << (n - 1));
    std::vector<Rational> table(in.size() * out.size());
    for (std::size_t x = 0; x < in.size(); ++x) {
        const auto xs = in.decode(x);
        const int parity = f(xs) & 1;
        for (std::size_t a = 0; a < out.size(); ++a) {
            if ((std::popcount(a) & 1) == parity) table[x * out.size() + a] = weight;
        }
    }
    return Box::make(std::move(input_sizes), std::vector<int>(n, 2), std::move(table));
}

Box full_correlation_box(int n, int m, std::span<const std::uint8_t> truth_table) {
    if (n <= 0 || m < 0) throw DimensionMismatch("need n >= 1 and m >= 0");
    if (truth_table.size() != (std::size_t{1} << (n * m))) {
        throw DimensionMismatch("truth table must have 2^(n*m) entries");
    }
    return full_correlation_box(std::vector<int>(n, 1 << m), [&](std::span<const int> x) {
        std::size_t assignment = 0;
        for (int p = 0; p < n; ++p) assignment |= static_cast<std::size_t>(x[p]) << (p * m);
        return static_cast<int>(truth_table[assignment]);
    });
}

Box uniform_noise_box(std::vector<int> input_sizes, std::vector<int> output_sizes) {
    const MixedRadix in(input_sizes);
    const MixedRadix out(output_sizes);
    const Rational p = Rational(1) / Rational(out.size());
    return Box::make(std::move(input_sizes), std::move(output_sizes),
                     std::vector<Rational>(in.size() * out.size(), p));
}

Box deterministic_box(std::vector<int> input_sizes, std::vector<int> output_sizes, const Response& response) {
    const MixedRadix in(input_sizes);
    const MixedRadix out(output_sizes);
    if (response.size() != input_sizes.size()) throw DimensionMismatch("one response per party");
    std::vector<Rational> table(in.size() * out.size());
    std::vector<int> a(input_sizes.size());
    for (std::size_t x = 0; x < in.size(); ++x) {
        const auto xs = in.decode(x);
        for (std::size_t p = 0; p < xs.size(); ++p) {
            if (response[p].size() != static_cast<std::size_t>(input_sizes[p])) {
                throw DimensionMismatch("response table has wrong length");
            }
            a[p] = response[p][xs[p]];
        }
        table[x * out.size() + out.encode(a)] = 1;
    }
    return Box::make(std::move(input_sizes), std::move(output_sizes), std::move(table));
}

Box mix(std::span<const Box> boxes, std::span<const Rational> weights) {
    if (boxes.empty() || boxes.size() != weights.size()) throw DimensionMismatch("one weight per box");
    std::vector<Rational> table(boxes[0].table().size());
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        if (!boxes[i].same_shape(boxes[0])) throw ShapeMismatch("mixture of boxes with different shapes");
        if (weights[i].is_zero()) continue;
        for (std::size_t k = 0; k < table.size(); ++k) table[k] += weights[i] * boxes[i].table()[k];
    }
    return Box::make(boxes[0].input_sizes(), boxes[0].output_sizes(), std::move(table));
}

NoSignalingVerdict check_no_signaling(const Box& box) {
    const int n = box.parties();
    const auto& in = box.inputs();
    const auto& out = box.outputs();
    // It suffices that, for every party, summing out its output yields a table
    // independent of its own input.
    for (int p = 0; p < n; ++p) {
        const std::size_t in_stride = in.stride(p);
        const std::size_t out_stride = out.stride(p);
        const int out_size = box.output_sizes()[p];
        for (std::size_t x = 0; x < in.size(); ++x) {
            if (in.digit(x, p) != 0) continue;
            for (std::size_t a = 0; a < out.size(); ++a) {
                if (out.digit(a, p) != 0) continue;
                Rational base = 0;
                for (int ap = 0; ap < out_size; ++ap) base += box.prob(x, a + ap * out_stride);
                for (int xp = 1; xp < box.input_sizes()[p]; ++xp) {
                    const std::size_t x2 = x + xp * in_stride;
                    Rational other = 0;
                    for (int ap = 0; ap < out_size; ++ap) other += box.prob(x2, a + ap * out_stride);
                    if (other != base) {
                        SignalingWitness w;
                        w.party = p;
                        w.input = 0;
                        w.other_input = xp;
                        w.context = in.decode(x);
                        auto as = out.decode(a);
                        as.erase(as.begin() + p);
                        w.others_outputs = std::move(as);
                        w.p_input = base;
                        w.p_other_input = other;
                        return {false, std::move(w)};
                    }
                }
            }
        }
    }
    return {true, std::nullopt};
}

PartyMarginal marginal(const Box& box, std::vector<int> subset, std::optional<std::vector<int>> complement_inputs) {
    const int n = box.parties();
    std::vector<bool> in_subset(n, false);
    for (int p : subset) {
        if (p < 0 || p >= n || in_subset[p]) throw DimensionMismatch("invalid party subset");
        in_subset[p] = true;
    }
    if (subset.empty()) throw DimensionMismatch("empty party subset");
    std::vector<int> complement;
    for (int p = 0; p < n; ++p) {
        if (!in_subset[p]) complement.push_back(p);
    }
    if (complement_inputs && complement_inputs->size() != complement.size()) {
        throw DimensionMismatch("one input per complement party required");
    }

    std::vector<int> sub_in, sub_out;
    for (int p : subset) {
        sub_in.push_back(box.input_sizes()[p]);
        sub_out.push_back(box.output_sizes()[p]);
    }
    const MixedRadix sin(sub_in), sout(sub_out);
    const MixedRadix comp_in([&] {
        std::vector<int> s;
        for (int p : complement) s.push_back(box.input_sizes()[p]);
        return s;
    }());

    // Marginal table for one fixed assignment of the complement inputs.
    auto table_for = [&](std::span<const int> comp) {
        std::vector<Rational> t(sin.size() * sout.size());
        std::vector<int> x(n);
        for (std::size_t c = 0; c < complement.size(); ++c) x[complement[c]] = comp[c];
        for (std::size_t xs = 0; xs < sin.size(); ++xs) {
            for (std::size_t i = 0; i < subset.size(); ++i) x[subset[i]] = sin.digit(xs, static_cast<int>(i));
            const std::size_t xi = box.inputs().encode(x);
            for (std::size_t a = 0; a < box.outputs().size(); ++a) {
                const Rational& p = box.prob(xi, a);
                if (p.is_zero()) continue;
                std::size_t as = 0;
                for (std::size_t i = 0; i < subset.size(); ++i) {
                    as += static_cast<std::size_t>(box.outputs().digit(a, subset[i])) * sout.stride(static_cast<int>(i));
                }
                t[xs * sout.size() + as] += p;
            }
        }
        return t;
    };

    std::vector<Rational> table;
    if (complement_inputs) {
        table = table_for(*complement_inputs);
    } else {
        table = table_for(std::vector<int>(complement.size(), 0));
        for (std::size_t c = 1; c < comp_in.size(); ++c) {
            if (table_for(comp_in.decode(c)) != table) {
                throw SignalingAmbiguity("marginal depends on the complement's inputs");
            }
        }
    }
    return {std::move(subset), Box::make(std::move(sub_in), std::move(sub_out), std::move(table))};
}

std::uint64_t deterministic_strategy_count(const Box& box) {
    long double approx = 1;
    std::uint64_t count = 1;
    for (int p = 0; p < box.parties(); ++p) {
        for (int x = 0; x < box.input_sizes()[p]; ++x) {
            approx *= box.output_sizes()[p];
            if (approx > 1.8e19L) return UINT64_MAX;
            count *= static_cast<std::uint64_t>(box.output_sizes()[p]);
        }
    }
    return count;
}

namespace {

// Enumerates deterministic strategies as one digit per (party, input) slot.
struct StrategySpace {
    std::vector<int> slot_party;
    std::vector<int> slot_input;
    MixedRadix codes;

    explicit StrategySpace(const Box& box) {
        std::vector<int> sizes;
        for (int p = 0; p < box.parties(); ++p) {
            for (int x = 0; x < box.input_sizes()[p]; ++x) {
                slot_party.push_back(p);
                slot_input.push_back(x);
                sizes.push_back(box.output_sizes()[p]);
            }
        }
        codes = MixedRadix(std::move(sizes));
    }

    Response response(const Box& box, std::size_t code) const {
        Response r(box.parties());
        for (int p = 0; p < box.parties(); ++p) r[p].resize(box.input_sizes()[p]);
        for (int s = 0; s < codes.digits(); ++s) r[slot_party[s]][slot_input[s]] = codes.digit(code, s);
        return r;
    }
};

std::size_t response_output(const Box& box, const Response& r, std::size_t x) {
    std::size_t a = 0;
    for (int p = 0; p < box.parties(); ++p) {
        a += static_cast<std::size_t>(r[p][box.inputs().digit(x, p)]) * box.outputs().stride(p);
    }
    return a;
}

} // namespace

LocalityVerdict is_local(const Box& box, std::uint64_t cap) {
    const std::uint64_t count = deterministic_strategy_count(box);
    if (count > cap) throw TooLarge("deterministic strategies", count, cap);
    const StrategySpace space(box);
    const std::size_t rows = box.inputs().size();
    const std::size_t outs = box.outputs().size();
    const std::size_t cells = rows * outs;

    // Presolve: a strategy that puts mass on a zero cell cannot carry weight.
    std::vector<std::size_t> live;
    std::vector<Response> responses;
    for (std::size_t code = 0; code < count; ++code) {
        Response r = space.response(box, code);
        bool ok = true;
        for (std::size_t x = 0; x < rows && ok; ++x) ok = !box.prob(x, response_output(box, r, x)).is_zero();
        if (ok) {
            live.push_back(code);
            responses.push_back(std::move(r));
        }
    }
    std::vector<std::size_t> positive_cells;
    for (std::size_t c = 0; c < cells; ++c) {
        if (!box.table()[c].is_zero()) positive_cells.push_back(c);
    }
    std::vector<long> cell_row(cells, -1);
    for (std::size_t i = 0; i < positive_cells.size(); ++i) cell_row[positive_cells[i]] = static_cast<long>(i);

    lp::Matrix a(static_cast<int>(positive_cells.size()), static_cast<int>(live.size()));
    std::vector<Rational> b(positive_cells.size());
    for (std::size_t i = 0; i < positive_cells.size(); ++i) b[i] = box.table()[positive_cells[i]];
    for (std::size_t j = 0; j < live.size(); ++j) {
        for (std::size_t x = 0; x < rows; ++x) {
            const std::size_t cell = x * outs + response_output(box, responses[j], x);
            a(static_cast<int>(cell_row[cell]), static_cast<int>(j)) = 1;
        }
    }

    LocalityVerdict verdict;
    lp::Feasibility feas;
    if (live.empty()) {
        feas.feasible = false;
        feas.farkas.assign(positive_cells.size(), Rational(1));
    } else {
        feas = lp::find_nonnegative_solution(a, b);
    }
    if (feas.feasible) {
        verdict.local = true;
        for (std::size_t j = 0; j < live.size(); ++j) {
            if (!feas.solution[j].is_zero()) verdict.decomposition.emplace_back(responses[j], feas.solution[j]);
        }
        if (expand_local(box, verdict.decomposition) != box) throw Error("locality decomposition does not re-expand");
        return verdict;
    }

    // Lift the reduced certificate: zero cells get a penalty large enough to
    // keep every presolved-away strategy at or below zero.
    Rational penalty = 1;
    for (const auto& y : feas.farkas) penalty += abs(y);
    verdict.local = false;
    verdict.certificate.assign(cells, -penalty);
    for (std::size_t i = 0; i < positive_cells.size(); ++i) verdict.certificate[positive_cells[i]] = feas.farkas[i];
    Rational value = 0;
    for (std::size_t c = 0; c < cells; ++c) value += verdict.certificate[c] * box.table()[c];
    verdict.certificate_value = value;
    return verdict;
}

Box expand_local(const Box& shape, const std::vector<std::pair<Response, Rational>>& weights) {
    std::vector<Rational> table(shape.table().size());
    const std::size_t outs = shape.outputs().size();
    for (const auto& [r, w] : weights) {
        for (std::size_t x = 0; x < shape.inputs().size(); ++x) table[x * outs + response_output(shape, r, x)] += w;
    }
    return Box::make(shape.input_sizes(), shape.output_sizes(), std::move(table));
}

Rational chsh_value(const Box& box) {
    if (box.parties() != 2 || box.input_sizes() != std::vector<int>{2, 2} ||
        box.output_sizes() != std::vector<int>{2, 2}) {
        throw WrongShape("CHSH needs a 2-party box with binary inputs and outputs");
    }
    Rational value = 0;
    for (int x1 = 0; x1 < 2; ++x1) {
        for (int x2 = 0; x2 < 2; ++x2) {
            Rational corr = 0;
            for (int a1 = 0; a1 < 2; ++a1) {
                for (int a2 = 0; a2 < 2; ++a2) {
                    const int x[] = {x1, x2};
                    const int a[] = {a1, a2};
                    const Rational& p = box.prob(x, a);
                    if ((a1 ^ a2) == 0) corr += p; else corr -= p;
                }
            }
            if (x1 & x2) value -= corr; else value += corr;
        }
    }
    return value;
}

Relabeling Relabeling::identity(const Box& box) {
    Relabeling r;
    const int n = box.parties();
    r.party_permutation.resize(n);
    std::iota(r.party_permutation.begin(), r.party_permutation.end(), 0);
    r.input_permutation.resize(n);
    r.output_permutation.resize(n);
    for (int p = 0; p < n; ++p) {
        r.input_permutation[p].resize(box.input_sizes()[p]);
        std::iota(r.input_permutation[p].begin(), r.input_permutation[p].end(), 0);
        r.output_permutation[p].resize(box.input_sizes()[p]);
        for (auto& perm : r.output_permutation[p]) {
            perm.resize(box.output_sizes()[p]);
            std::iota(perm.begin(), perm.end(), 0);
        }
    }
    return r;
}

bool Relabeling::is_identity() const {
    auto iota_like = [](const std::vector<int>& v) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (v[i] != static_cast<int>(i)) return false;
        }
        return true;
    };
    if (!iota_like(party_permutation)) return false;
    for (const auto& v : input_permutation) {
        if (!iota_like(v)) return false;
    }
    for (const auto& per_party : output_permutation) {
        for (const auto& v : per_party) {
            if (!iota_like(v)) return false;
        }
    }
    return true;
}

namespace {

bool is_permutation_of_range(const std::vector<int>& v, int size) {
    if (static_cast<int>(v.size()) != size) return false;
    std::vector<bool> seen(size, false);
    for (int e : v) {
        if (e < 0 || e >= size || seen[e]) return false;
        seen[e] = true;
    }
    return true;
}

} // namespace

Box relabel(const Box& box, const Relabeling& rl) {
    const int n = box.parties();
    if (!is_permutation_of_range(rl.party_permutation, n) || static_cast<int>(rl.input_permutation.size()) != n ||
        static_cast<int>(rl.output_permutation.size()) != n) {
        throw ShapeMismatch("relabeling does not match the number of parties");
    }
    for (int p = 0; p < n; ++p) {
        if (!is_permutation_of_range(rl.input_permutation[p], box.input_sizes()[p]) ||
            static_cast<int>(rl.output_permutation[p].size()) != box.input_sizes()[p]) {
            throw ShapeMismatch("input relabeling is not a bijection");
        }
        for (const auto& perm : rl.output_permutation[p]) {
            if (!is_permutation_of_range(perm, box.output_sizes()[p])) {
                throw ShapeMismatch("output relabeling is not a bijection");
            }
        }
    }
    std::vector<int> new_in(n), new_out(n);
    for (int p = 0; p < n; ++p) {
        new_in[rl.party_permutation[p]] = box.input_sizes()[p];
        new_out[rl.party_permutation[p]] = box.output_sizes()[p];
    }
    const MixedRadix nin(new_in), nout(new_out);
    std::vector<Rational> table(box.table().size());
    std::vector<int> nx(n), na(n);
    for (std::size_t x = 0; x < box.inputs().size(); ++x) {
        const auto xs = box.inputs().decode(x);
        for (int p = 0; p < n; ++p) nx[rl.party_permutation[p]] = rl.input_permutation[p][xs[p]];
        const std::size_t nxi = nin.encode(nx);
        for (std::size_t a = 0; a < box.outputs().size(); ++a) {
            const auto as = box.outputs().decode(a);
            for (int p = 0; p < n; ++p) na[rl.party_permutation[p]] = rl.output_permutation[p][xs[p]][as[p]];
            table[nxi * nout.size() + nout.encode(na)] = box.prob(x, a);
        }
    }
    return Box::make(std::move(new_in), std::move(new_out), std::move(table));
}

Box remove_input(const Box& box, int party, int input) {
    if (party < 0 || party >= box.parties() || input < 0 || input >= box.input_sizes()[party] ||
        box.input_sizes()[party] < 2) {
        throw ShapeMismatch("cannot remove that input");
    }
    std::vector<int> new_in = box.input_sizes();
    --new_in[party];
    const MixedRadix nin(new_in);
    std::vector<Rational> table;
    table.reserve(nin.size() * box.outputs().size());
    for (std::size_t x = 0; x < nin.size(); ++x) {
        auto xs = nin.decode(x);
        if (xs[party] >= input) ++xs[party];
        const auto row = box.row(box.inputs().encode(xs));
        table.insert(table.end(), row.begin(), row.end());
    }
    return Box::make(std::move(new_in), box.output_sizes(), std::move(table));
}

} // namespace prbox
