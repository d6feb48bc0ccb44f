#include "prbox/lp.hpp"

#include <doctest.h>

#include <random>

using namespace prbox;
using lp::Matrix;

namespace {

Matrix from_rows(const std::vector<std::vector<long>>& rows) {
    Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
    for (int r = 0; r < m.rows; ++r) {
        for (int c = 0; c < m.cols; ++c) m(r, c) = rows[r][c];
    }
    return m;
}

}  // namespace

TEST_SUITE("lp") {

TEST_CASE("rank and null space") {
    const Matrix m = from_rows({{1, 2, 3}, {2, 4, 6}, {1, 0, 1}});
    CHECK(lp::rank(m) == 2);
    const Matrix n = lp::null_space(m);
    CHECK(n.rows == 3);
    CHECK(n.cols == 1);
    for (int r = 0; r < m.rows; ++r) {
        Rational s = 0;
        for (int c = 0; c < 3; ++c) s += m(r, c) * n(c, 0);
        CHECK(s == 0);
    }
    CHECK(lp::rank(Matrix(2, 3)) == 0);
}

TEST_CASE("row reduction pivots") {
    Matrix m = from_rows({{0, 2, 4}, {1, 1, 1}});
    const auto pivots = lp::row_reduce(m);
    CHECK(pivots == std::vector<int>{0, 1});
    CHECK(m(0, 0) == 1);
    CHECK(m(0, 1) == 0);
    CHECK(m(1, 1) == 1);
    CHECK(m(1, 2) == 2);
}

TEST_CASE("feasible systems return a nonnegative solution") {
    const Matrix a = from_rows({{1, 1, 1}, {1, -1, 0}});
    const std::vector<Rational> b{Rational(1), Rational(0)};
    const auto f = lp::find_nonnegative_solution(a, b);
    REQUIRE(f.feasible);
    for (const auto& z : f.solution) CHECK(z >= 0);
    for (int r = 0; r < a.rows; ++r) {
        Rational s = 0;
        for (int c = 0; c < a.cols; ++c) s += a(r, c) * f.solution[c];
        CHECK(s == b[r]);
    }
}

TEST_CASE("infeasible systems return a Farkas certificate") {
    const Matrix a = from_rows({{1, 1}, {1, 1}});
    const std::vector<Rational> b{Rational(1), Rational(2)};
    const auto f = lp::find_nonnegative_solution(a, b);
    REQUIRE_FALSE(f.feasible);
    REQUIRE(f.farkas.size() == 2);
    for (int c = 0; c < a.cols; ++c) {
        Rational s = 0;
        for (int r = 0; r < a.rows; ++r) s += a(r, c) * f.farkas[r];
        CHECK(s <= 0);
    }
    CHECK(f.farkas[0] * b[0] + f.farkas[1] * b[1] > 0);

    const auto neg = lp::find_nonnegative_solution(from_rows({{1, 1}}), {Rational(-1)});
    CHECK_FALSE(neg.feasible);
}

TEST_CASE("random systems built from a known solution") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        const int rows = 2 + static_cast<int>(rng() % 4);
        const int cols = rows + static_cast<int>(rng() % 4);
        Matrix a(rows, cols);
        std::vector<Rational> z(cols);
        for (auto& v : z) v = Rational(static_cast<long>(rng() % 3));
        std::vector<Rational> b(rows);
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                a(r, c) = Rational(static_cast<long>(rng() % 7) - 3);
                b[r] += a(r, c) * z[c];
            }
        }
        const auto f = lp::find_nonnegative_solution(a, b);
        REQUIRE(f.feasible);
        for (int r = 0; r < rows; ++r) {
            Rational s = 0;
            for (int c = 0; c < cols; ++c) s += a(r, c) * f.solution[c];
            CHECK(s == b[r]);
        }
    }
}

}
