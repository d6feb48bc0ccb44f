#include "prbox/lp.hpp"

#include "prbox/errors.hpp"

#include <cassert>

namespace prbox::lp {

namespace {

void pivot(Matrix& t, int pr, int pc) {
    const Rational inv = 1 / t(pr, pc);
    for (int c = 0; c < t.cols; ++c) {
        if (!t(pr, c).is_zero()) t(pr, c) *= inv;
    }
    for (int r = 0; r < t.rows; ++r) {
        if (r == pr || t(r, pc).is_zero()) continue;
        const Rational factor = t(r, pc);
        for (int c = 0; c < t.cols; ++c) {
            if (!t(pr, c).is_zero()) t(r, c) -= factor * t(pr, c);
        }
    }
}

bool audit_solution(const Matrix& a, const std::vector<Rational>& b, const std::vector<Rational>& z) {
    for (const auto& v : z) {
        if (v < 0) return false;
    }
    for (int r = 0; r < a.rows; ++r) {
        Rational s = 0;
        for (int c = 0; c < a.cols; ++c) {
            if (!z[c].is_zero() && !a(r, c).is_zero()) s += a(r, c) * z[c];
        }
        if (s != b[r]) return false;
    }
    return true;
}

bool audit_farkas(const Matrix& a, const std::vector<Rational>& b, const std::vector<Rational>& y) {
    for (int c = 0; c < a.cols; ++c) {
        Rational s = 0;
        for (int r = 0; r < a.rows; ++r) {
            if (!a(r, c).is_zero() && !y[r].is_zero()) s += a(r, c) * y[r];
        }
        if (s > 0) return false;
    }
    Rational s = 0;
    for (int r = 0; r < a.rows; ++r) s += b[r] * y[r];
    return s > 0;
}

} // namespace

Feasibility find_nonnegative_solution(const Matrix& a, const std::vector<Rational>& b) {
    if (static_cast<int>(b.size()) != a.rows) throw DimensionMismatch("rhs length != rows");
    const int m = a.rows;
    const int n = a.cols;

    // Tableau: [A | I | b] with rows sign-normalised so that b >= 0.
    Matrix t(m + 1, n + m + 1);
    std::vector<int> sign(m, 1);
    for (int r = 0; r < m; ++r) {
        if (b[r] < 0) sign[r] = -1;
        for (int c = 0; c < n; ++c) t(r, c) = sign[r] * a(r, c);
        t(r, n + r) = 1;
        t(r, n + m) = sign[r] * b[r];
    }
    // Objective row holds reduced costs of "minimise sum of artificials".
    const int obj = m;
    for (int c = 0; c < n; ++c) {
        Rational s = 0;
        for (int r = 0; r < m; ++r) s -= t(r, c);
        t(obj, c) = s;
    }
    {
        Rational s = 0;
        for (int r = 0; r < m; ++r) s -= t(r, n + m);
        t(obj, n + m) = s;
    }
    std::vector<int> basis(m);
    for (int r = 0; r < m; ++r) basis[r] = n + r;

    for (;;) {
        int enter = -1;
        for (int c = 0; c < n + m; ++c) {
            if (t(obj, c) < 0) {
                enter = c;
                break;
            }
        }
        if (enter < 0) break;
        int leave = -1;
        Rational best;
        for (int r = 0; r < m; ++r) {
            if (t(r, enter) <= 0) continue;
            Rational q = t(r, n + m) / t(r, enter);
            if (leave < 0 || q < best || (q == best && basis[r] < basis[leave])) {
                leave = r;
                best = std::move(q);
            }
        }
        assert(leave >= 0);  // phase one is bounded below by zero
        pivot(t, leave, enter);
        basis[leave] = enter;
    }

    Feasibility out;
    // -t(obj, rhs) is the optimal sum of artificials.
    if (t(obj, n + m).is_zero()) {
        out.feasible = true;
        out.solution.assign(n, Rational(0));
        for (int r = 0; r < m; ++r) {
            if (basis[r] < n) out.solution[basis[r]] = t(r, n + m);
        }
        if (!audit_solution(a, b, out.solution)) throw Error("simplex produced an invalid solution");
    } else {
        out.feasible = false;
        out.farkas.resize(m);
        for (int r = 0; r < m; ++r) {
            // Reduced cost of artificial r is 1 - y_r.
            out.farkas[r] = sign[r] * (1 - t(obj, n + r));
        }
        if (!audit_farkas(a, b, out.farkas)) throw Error("simplex produced an invalid certificate");
    }
    return out;
}

std::vector<int> row_reduce(Matrix& m) {
    std::vector<int> pivots;
    int row = 0;
    for (int c = 0; c < m.cols && row < m.rows; ++c) {
        int p = -1;
        for (int r = row; r < m.rows; ++r) {
            if (!m(r, c).is_zero()) {
                p = r;
                break;
            }
        }
        if (p < 0) continue;
        if (p != row) {
            for (int k = 0; k < m.cols; ++k) std::swap(m(p, k), m(row, k));
        }
        const Rational inv = 1 / m(row, c);
        for (int k = 0; k < m.cols; ++k) {
            if (!m(row, k).is_zero()) m(row, k) *= inv;
        }
        for (int r = 0; r < m.rows; ++r) {
            if (r == row || m(r, c).is_zero()) continue;
            const Rational f = m(r, c);
            for (int k = 0; k < m.cols; ++k) {
                if (!m(row, k).is_zero()) m(r, k) -= f * m(row, k);
            }
        }
        pivots.push_back(c);
        ++row;
    }
    return pivots;
}

int rank(Matrix m) { return static_cast<int>(row_reduce(m).size()); }

Matrix null_space(const Matrix& m) {
    Matrix r = m;
    const auto pivots = row_reduce(r);
    std::vector<bool> is_pivot(m.cols, false);
    for (int c : pivots) is_pivot[c] = true;
    std::vector<int> free_cols;
    for (int c = 0; c < m.cols; ++c) {
        if (!is_pivot[c]) free_cols.push_back(c);
    }
    Matrix basis(m.cols, static_cast<int>(free_cols.size()));
    for (std::size_t k = 0; k < free_cols.size(); ++k) {
        const int f = free_cols[k];
        basis(f, static_cast<int>(k)) = 1;
        for (std::size_t i = 0; i < pivots.size(); ++i) {
            basis(pivots[i], static_cast<int>(k)) = -r(static_cast<int>(i), f);
        }
    }
    return basis;
}

} // namespace prbox::lp
