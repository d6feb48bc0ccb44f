#pragma once

#include "prbox/box.hpp"
#include "prbox/wiring.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace prbox {

struct ParityTerm {
    int party = 0;
    int setting = 0;

    friend bool operator==(const ParityTerm&, const ParityTerm&) = default;
};

/// The outputs of the listed parties, each measured at its setting, sum to
/// `target` mod 2.
struct ParityConstraint {
    std::vector<ParityTerm> terms;
    int target = 0;

    friend bool operator==(const ParityConstraint&, const ParityConstraint&) = default;
};

class ConstraintSet {
public:
    /// Throws ShapeMismatch for out-of-range parties or settings, or a party
    /// listed twice in one constraint.
    static ConstraintSet make(int parties, std::vector<ParityConstraint> constraints, int settings = 2);

    int parties() const noexcept { return parties_; }
    int settings() const noexcept { return settings_; }
    const std::vector<ParityConstraint>& constraints() const noexcept { return constraints_; }

    /// Party p becomes party (p + shift) mod n.
    ConstraintSet rotated(int shift) const;
    /// Same constraints with one target replaced.
    ConstraintSet with_target(std::size_t index, int target) const;
    /// Equal as sets of constraints (terms compared as sets).
    bool same_as(const ConstraintSet& other) const;

private:
    int parties_ = 0;
    int settings_ = 2;
    std::vector<ParityConstraint> constraints_;
};

/// Five cyclic constraints a_i + a'_{i+1} + a_{i+2} = 0 followed by
/// a'_1 + ... + a'_5 = 1; setting 0 reads a_i, setting 1 reads a'_i.
ConstraintSet cluster_constraints();

using DistributionSource = std::function<OutcomeDistribution(std::span<const int>)>;

/// True iff the parity event has probability exactly 1 for every choice of
/// the unconstrained parties' settings. Throws ShapeMismatch.
bool satisfies(const DistributionSource& source, const ParityConstraint& constraint,
               const std::vector<int>& input_sizes);

struct GhzVerdict {
    std::uint64_t space = 0;
    std::uint64_t satisfying = 0;  // assignments meeting every constraint
    int max_satisfiable = 0;
    std::vector<int> best_assignment;  // bit 2p+s is party p's output at setting s
};

/// Every local deterministic assignment of one output per (party, setting).
GhzVerdict ghz_local_search(const ConstraintSet& constraints = cluster_constraints());

/// Box of Pauli statistics of the five-qubit ring cluster state: for each
/// setting tuple, outputs are uniform on the tuples obeying every stabilizer
/// whose support is measured in its own basis (setting 0 = Z, 1 = X).
Box cluster_box();

using PairAssignment = std::vector<std::pair<int, int>>;  // owners of each box

/// All ways to place `boxes` two-sided boxes among `parties`. With
/// `symmetric`, one representative per orbit of cyclic party rotations and
/// box relabelings.
std::vector<PairAssignment> pair_assignments(int parties, int boxes, bool symmetric = false);

struct SearchOptions {
    ConstraintSet constraints = cluster_constraints();
    std::shared_ptr<const BoxTemplate> box = BoxTemplate::pr();
    std::vector<PairAssignment> assignments;  // empty: all of them
    std::uint64_t cap = 100'000'000;
    bool reduced = false;
    bool symmetric = false;
    unsigned threads = 1;
};

struct Counterexample {
    PairAssignment pairs;
    std::uint64_t profile = 0;
    WiringProtocol protocol;
};

struct SearchReport {
    int boxes = 0;
    std::uint64_t assignments_tested = 0;
    std::uint64_t strategies_tested = 0;
    bool success = false;
    bool reduced = false;
    bool symmetric = false;
    std::optional<Counterexample> counterexample;
    std::string reduction;
    double runtime_s = 0;
};

/// Tests every deterministic strategy profile over every box placement.
/// Shared randomness is not enumerated: a mixture meets a probability-one
/// event only if each of its deterministic components does. Throws TooLarge
/// when the total profile count exceeds the cap.
SearchReport theorem2_search(int boxes, const SearchOptions& options = {});

} // namespace prbox
