#pragma once

#include "prbox/box.hpp"
#include "prbox/lp.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace prbox {

struct PolytopeCaps {
    int max_inputs = 3;
    int max_outputs = 2;
};

/// The no-signaling polytope of one shape in H-form. Variables are table
/// cells (x-major, as in Box::table); the equalities are normalization plus
/// no-signaling, reduced to full row rank; the inequalities are p >= 0.
/// The affine hull is parametrized as p = particular + basis * t.
struct HRepresentation {
    std::vector<int> input_sizes;
    std::vector<int> output_sizes;
    lp::Matrix equalities;
    std::vector<Rational> rhs;
    std::vector<Rational> particular;
    lp::Matrix basis;  // cells x dimension

    int cells() const { return equalities.cols; }
    int dimension() const { return basis.cols; }
};

/// Closed form for bipartite shapes: prod_p (m_p (d_p - 1) + 1) - 1.
int no_signaling_dimension(const std::vector<int>& input_sizes, const std::vector<int>& output_sizes);

/// Bipartite only; throws DimensionMismatch for empty alphabets, WrongShape
/// for other party counts and TooLarge beyond the caps.
HRepresentation build_h_rep(const std::vector<int>& input_sizes, const std::vector<int>& output_sizes,
                            const PolytopeCaps& caps = {});

/// Double description over exact integers. Each vertex is checked to satisfy
/// the H-representation and to be extremal before it is returned.
std::vector<Box> enumerate_vertices(const HRepresentation& h);

/// True when `box` lies on a vertex of the no-signaling polytope of its shape.
bool is_vertex(const Box& box);

enum class VertexClass { LocalDeterministic, PrEquivalent, FullCorrelation, Other };

std::string to_string(VertexClass c);

struct VertexReport {
    Box vertex;
    VertexClass kind = VertexClass::Other;
    bool genuine = false;  // both outputs possible for every party and input
    /// Parity function indexed by input tuple (x-major), for the
    /// full-correlation and PR-equivalent classes.
    std::vector<std::uint8_t> f;
    /// Maps the vertex onto its canonical form (the PR box, or the
    /// full-correlation box of f).
    std::optional<Relabeling> relabeling;

    /// Non-genuine vertices: the input whose output is fixed, and the
    /// report for the box with that input removed.
    struct Reduction {
        int party = 0;
        int input = 0;
        std::shared_ptr<const VertexReport> reduced;
    };
    std::optional<Reduction> reduction;
};

/// Local-deterministic, then the genuine test, then the full-correlation form
/// and relabeling search, else the input-removal reduction classified
/// recursively. Throws NotAVertex.
VertexReport classify_vertex(const Box& box);

std::vector<VertexReport> classify_vertices(const std::vector<Box>& vertices, unsigned threads = 1);

/// Convex weights over `vertices` reproducing `box`; throws Infeasible.
std::vector<Rational> decompose(const Box& box, const std::vector<Box>& vertices);

/// Every relabeling of a shape (party swaps only between parties of equal
/// alphabets), identity first.
std::vector<Relabeling> relabeling_group(const Box& shape);

} // namespace prbox
