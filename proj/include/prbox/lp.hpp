#pragma once

#include "prbox/rational.hpp"

#include <vector>

namespace prbox::lp {

/// Dense exact matrix, row-major.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<Rational> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c) {}

    Rational& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    const Rational& operator()(int r, int c) const {
        return data[static_cast<std::size_t>(r) * cols + c];
    }
};

/// Outcome of deciding {z >= 0 : A z = b}.
struct Feasibility {
    bool feasible = false;
    std::vector<Rational> solution;  // size cols, when feasible
    std::vector<Rational> farkas;    // size rows, when infeasible: A^T y <= 0, b.y > 0
};

/// Phase-one simplex with Bland's rule. The returned object is audited
/// before it leaves this function.
Feasibility find_nonnegative_solution(const Matrix& a, const std::vector<Rational>& b);

/// Rank of a matrix over the rationals.
int rank(Matrix m);

/// Reduced row echelon form; returns the pivot columns.
std::vector<int> row_reduce(Matrix& m);

/// Basis of {z : M z = 0} as columns of the returned matrix (cols x nullity).
Matrix null_space(const Matrix& m);

} // namespace prbox::lp
