#pragma once

#include "prbox/rational.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace prbox {

/// Mixed-radix codec for tuples; digit 0 is least significant.
class MixedRadix {
public:
    MixedRadix() = default;
    explicit MixedRadix(std::vector<int> sizes);

    std::size_t size() const noexcept { return total_; }
    int digits() const noexcept { return static_cast<int>(sizes_.size()); }
    const std::vector<int>& sizes() const noexcept { return sizes_; }

    std::size_t encode(std::span<const int> digits) const;
    std::vector<int> decode(std::size_t index) const;
    int digit(std::size_t index, int position) const {
        return static_cast<int>((index / strides_[position]) % sizes_[position]);
    }
    std::size_t stride(int position) const { return strides_[position]; }

private:
    std::vector<int> sizes_;
    std::vector<std::size_t> strides_;
    std::size_t total_ = 1;
};

/// An n-party conditional distribution P(a|x) with exact entries.
///
/// The table is dense: row `x` (an input tuple) holds one probability per
/// output tuple. Instances are immutable and always validated.
class Box {
public:
    struct Entry {
        std::vector<int> x;
        std::vector<int> a;
        Rational p;
    };

    /// Validates shapes, nonnegativity and per-row normalization.
    static Box make(std::vector<int> input_sizes, std::vector<int> output_sizes,
                    std::vector<Rational> table);
    /// Like make(), but entries that are not listed are zero.
    static Box make_sparse(std::vector<int> input_sizes, std::vector<int> output_sizes,
                           std::span<const Entry> entries);

    int parties() const noexcept { return inputs_.digits(); }
    const std::vector<int>& input_sizes() const noexcept { return inputs_.sizes(); }
    const std::vector<int>& output_sizes() const noexcept { return outputs_.sizes(); }
    const MixedRadix& inputs() const noexcept { return inputs_; }
    const MixedRadix& outputs() const noexcept { return outputs_; }

    const Rational& prob(std::size_t x_index, std::size_t a_index) const {
        return table_[x_index * outputs_.size() + a_index];
    }
    const Rational& prob(std::span<const int> x, std::span<const int> a) const {
        return prob(inputs_.encode(x), outputs_.encode(a));
    }
    std::span<const Rational> row(std::size_t x_index) const {
        return {table_.data() + x_index * outputs_.size(), outputs_.size()};
    }
    const std::vector<Rational>& table() const noexcept { return table_; }

    bool same_shape(const Box& other) const {
        return input_sizes() == other.input_sizes() && output_sizes() == other.output_sizes();
    }
    friend bool operator==(const Box& a, const Box& b) {
        return a.same_shape(b) && a.table_ == b.table_;
    }

private:
    Box(MixedRadix inputs, MixedRadix outputs, std::vector<Rational> table)
        : inputs_(std::move(inputs)), outputs_(std::move(outputs)), table_(std::move(table)) {}

    MixedRadix inputs_;
    MixedRadix outputs_;
    std::vector<Rational> table_;
};

/// The PR box: uniform on a1 ^ a2 == x1 & x2.
Box pr_box();

/// Binary-output box whose output parity equals f(x) and whose outputs are
/// otherwise uniform: each of the 2^(n-1) tuples of the right parity has
/// probability 1/2^(n-1).
Box full_correlation_box(std::vector<int> input_sizes,
                         const std::function<int(std::span<const int>)>& f);

/// n parties with m-bit inputs each. Bit b of party p's input is variable
/// p*m + b of `truth_table` (little-endian within the party).
Box full_correlation_box(int n, int m, std::span<const std::uint8_t> truth_table);

Box uniform_noise_box(std::vector<int> input_sizes, std::vector<int> output_sizes);

/// response[p][x_p] is party p's output on input x_p.
Box deterministic_box(std::vector<int> input_sizes, std::vector<int> output_sizes,
                      const std::vector<std::vector<int>>& response);

/// Convex combination sum_i w_i * boxes_i; weights must be nonnegative and sum to 1.
Box mix(std::span<const Box> boxes, std::span<const Rational> weights);

struct SignalingWitness {
    int party = 0;
    int input = 0;
    int other_input = 0;
    std::vector<int> context;         // full input tuple with `party` at `input`
    std::vector<int> others_outputs;  // outputs of all parties except `party`
    Rational p_input;
    Rational p_other_input;
};

struct NoSignalingVerdict {
    bool ok = true;
    std::optional<SignalingWitness> witness;
};

/// Exact test that no party's input influences the marginal of the others.
NoSignalingVerdict check_no_signaling(const Box& box);

/// Marginal distribution of a subset of parties, itself a valid box.
struct PartyMarginal {
    std::vector<int> parties;
    Box box;
};

/// Without `complement_inputs` the box must not signal across the cut
/// (otherwise SignalingAmbiguity). With them, the complement's inputs are
/// fixed explicitly (one per party outside `subset`, in party order).
PartyMarginal marginal(const Box& box, std::vector<int> subset,
                       std::optional<std::vector<int>> complement_inputs = std::nullopt);

/// A deterministic local strategy: response[p][x_p] = output of party p.
using Response = std::vector<std::vector<int>>;

struct LocalityVerdict {
    bool local = false;
    /// Nonzero weights over deterministic strategies when local.
    std::vector<std::pair<Response, Rational>> decomposition;
    /// When nonlocal: coefficients c over table cells (x-major, like Box::table)
    /// with c.D <= 0 for every deterministic box D and c.P > 0.
    std::vector<Rational> certificate;
    Rational certificate_value;
};

std::uint64_t deterministic_strategy_count(const Box& box);

/// Exact decision via linear feasibility over all deterministic strategies.
LocalityVerdict is_local(const Box& box, std::uint64_t cap = 1'000'000);

/// Re-expand a decomposition or evaluate a certificate; used to audit verdicts.
Box expand_local(const Box& shape, const std::vector<std::pair<Response, Rational>>& weights);

/// Sum over x of (-1)^(x1 x2) E(x1, x2), outputs encoded as (-1)^a.
Rational chsh_value(const Box& box);

/// Maps old labels to new ones: party p becomes party_permutation[p]; input x
/// of party p becomes input_permutation[p][x]; output a of party p on input x
/// becomes output_permutation[p][x][a]. Indices refer to the *old* party.
struct Relabeling {
    std::vector<int> party_permutation;
    std::vector<std::vector<int>> input_permutation;
    std::vector<std::vector<std::vector<int>>> output_permutation;

    static Relabeling identity(const Box& box);
    bool is_identity() const;
};

Box relabel(const Box& box, const Relabeling& relabeling);

/// Drops input `input` of `party`; used for the genuine-two-output reduction.
Box remove_input(const Box& box, int party, int input);

} // namespace prbox
