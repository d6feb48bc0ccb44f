#pragma once

#include "prbox/box.hpp"
#include "prbox/rational.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace prbox {

/// A nonsignaling box that can be instantiated in a bank. Each party of the
/// underlying box is a "side". Conditional distributions needed by the
/// executor are tabulated once at construction.
class BoxTemplate {
public:
    struct Branch {
        std::vector<int> outputs;  // one per resolved side, in side order
        Rational p;
        std::int64_t num = 0;  // p as machine integers; den is 0 when it does not fit
        std::int64_t den = 0;
    };

    /// Throws Error if `box` signals (one-sided use would be ill-defined).
    static std::shared_ptr<const BoxTemplate> make(std::string name, Box box);
    static std::shared_ptr<const BoxTemplate> pr();

    const std::string& name() const noexcept { return name_; }
    const Box& box() const noexcept { return box_; }
    int sides() const noexcept { return box_.parties(); }
    int input_size(int side) const { return box_.input_sizes()[side]; }
    int output_size(int side) const { return box_.output_sizes()[side]; }

    /// Distribution of the outputs of the `resolve` sides given the inputs of
    /// `resolve | done` and the outputs already produced on `done`; sides in
    /// neither set are marginalised. `inputs`/`outputs` are indexed by side.
    std::span<const Branch> resolve(std::uint32_t resolve_mask, std::uint32_t done_mask, std::span<const int> inputs,
                                    std::span<const int> outputs) const;

private:
    BoxTemplate(std::string name, Box box);

    struct Kernel {
        std::vector<int> input_sides;   // sides whose inputs key the table
        std::vector<int> output_sides;  // done sides whose outputs key the table
        MixedRadix key;
        std::vector<std::vector<Branch>> branches;
    };

    std::string name_;
    Box box_;
    std::vector<Kernel> kernels_;  // indexed by resolve_mask * 2^sides + done_mask
};

/// One box instance: template plus the party holding each side.
struct BankInstance {
    std::shared_ptr<const BoxTemplate> box;
    std::vector<int> owners;
};

/// Decision-graph node. Use nodes feed `input` into side `side` of bank
/// instance `instance` and continue at next[output]; stop nodes emit `output`.
struct StrategyNode {
    int instance = -1;
    int side = -1;
    int input = 0;
    int output = 0;
    std::vector<int> next;

    bool is_stop() const noexcept { return instance < 0; }
    static StrategyNode stop(int output) { return StrategyNode{-1, -1, 0, output, {}}; }
    static StrategyNode use(int instance, int side, int input, std::vector<int> next) {
        return StrategyNode{instance, side, input, 0, std::move(next)};
    }

    friend bool operator==(const StrategyNode&, const StrategyNode&) = default;
};

/// A party's adaptive strategy as an extensional decision graph: a root for
/// every (lambda, x), and moves that depend only on lambda, x and the outputs
/// seen so far. Histories leading to the same node share it.
struct PartyStrategy {
    int party = 0;
    int lambda_count = 1;
    int input_size = 2;
    std::vector<StrategyNode> nodes;
    std::vector<int> roots;  // roots[lambda * input_size + x]

    int root(int lambda, int x) const { return roots[static_cast<std::size_t>(lambda) * input_size + x]; }

    friend bool operator==(const PartyStrategy&, const PartyStrategy&) = default;
};

struct SharedRandomness {
    std::vector<Rational> weights;  // P(lambda) for lambda = 0..size-1

    static SharedRandomness single() { return {{Rational(1)}}; }
    static SharedRandomness uniform(std::size_t count);
    int size() const noexcept { return static_cast<int>(weights.size()); }
};

struct WiringProtocol {
    int parties = 0;
    std::vector<int> input_sizes;
    std::vector<int> output_sizes;
    SharedRandomness randomness = SharedRandomness::single();
    std::vector<BankInstance> bank;
    std::vector<std::shared_ptr<const PartyStrategy>> strategies;
};

struct ValidationVerdict {
    enum class Kind { Ok, Shape, BadReference, NotOwner, DoubleUse, BadInput, BadOutput, Randomness };
    Kind kind = Kind::Ok;
    int party = -1;
    int lambda = -1;
    int x = -1;
    int step = -1;
    std::string message;

    bool ok() const noexcept { return kind == Kind::Ok; }
};

std::string to_string(ValidationVerdict::Kind kind);

/// Checks every (lambda, x) walk of every party: references exist, each
/// instance is owned by the party using it, and no instance side is used
/// twice on any path.
ValidationVerdict validate_protocol(const WiringProtocol& protocol);

/// A protocol that passed validate_protocol; the only thing the executors accept.
class ValidatedProtocol {
public:
    /// Throws ProtocolInvalid with the first violation.
    static ValidatedProtocol check(WiringProtocol protocol);

    const WiringProtocol& protocol() const noexcept { return *protocol_; }
    const WiringProtocol* operator->() const noexcept { return protocol_.get(); }

private:
    explicit ValidatedProtocol(std::shared_ptr<const WiringProtocol> p) : protocol_(std::move(p)) {}
    std::shared_ptr<const WiringProtocol> protocol_;
};

/// Exact distribution over output tuples for one input tuple.
struct OutcomeDistribution {
    MixedRadix outputs;
    std::vector<Rational> probs;

    const Rational& operator[](std::span<const int> a) const { return probs[outputs.encode(a)]; }
    Rational total() const;
};

/// Enumerates lambda and every box branch, merging identical joint states.
/// Boxes fire once every side is committed (or its owner has stopped); a
/// deadlock is broken by resolving the lowest-indexed pending instance from
/// its marginal, later sides being conditioned on it.
OutcomeDistribution execute_exact(const ValidatedProtocol& protocol, std::span<const int> x);

/// Table of execute_exact over all inputs, checked to be nonsignaling.
Box induced_box(const ValidatedProtocol& protocol, unsigned threads = 1);

struct SampleCounts {
    MixedRadix outputs;
    std::vector<std::uint64_t> counts;
    std::uint64_t runs = 0;
};

/// Monte-Carlo execution with the same branch semantics; deterministic in `seed`.
SampleCounts execute_sample(const ValidatedProtocol& protocol, std::span<const int> x, std::uint64_t seed,
                            std::uint64_t runs);

/// Every deterministic (single-lambda) profile of adaptive strategies over a
/// fixed bank. Profiles are addressed by index so the stream can be split.
class StrategyEnumerator {
public:
    struct Options {
        std::vector<int> input_sizes;   // measurement alphabets, per party
        std::vector<int> output_sizes;  // output alphabets, per party
        std::uint64_t cap = 100'000'000;
        /// Skip use-nodes whose continuation ignores the box output; such a
        /// use can be deleted without changing any output distribution.
        bool reduced = false;
    };

    /// Throws TooLarge when the profile count exceeds the cap.
    StrategyEnumerator(int parties, std::vector<BankInstance> bank, Options options);

    /// Profile count, possibly above the cap (saturates at UINT64_MAX).
    static std::uint64_t count_profiles(int parties, const std::vector<BankInstance>& bank, const Options& options);
    /// Strategies available to one party.
    static std::uint64_t count_party(int party, const std::vector<BankInstance>& bank, const Options& options);

    std::uint64_t size() const noexcept { return total_; }
    const std::vector<std::shared_ptr<const PartyStrategy>>& party_strategies(int party) const {
        return per_party_[party];
    }
    /// Strategy index of each party in profile `index`.
    std::vector<std::size_t> decode(std::uint64_t index) const;
    WiringProtocol profile(std::uint64_t index) const;
    const std::vector<BankInstance>& bank() const noexcept { return bank_; }

private:
    int parties_;
    std::vector<BankInstance> bank_;
    Options options_;
    std::vector<std::vector<std::shared_ptr<const PartyStrategy>>> per_party_;
    std::uint64_t total_ = 0;
};

/// Strategy that stops at once with output table[lambda * input_size + x].
PartyStrategy constant_strategy(int party, int lambda_count, int input_size, std::span<const int> table);

} // namespace prbox
