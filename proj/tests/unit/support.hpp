#pragma once

#include "prbox/box.hpp"
#include "prbox/wiring.hpp"

#include <doctest.h>

#include <bit>
#include <vector>

namespace prbox::test {

/// Induced box of a protocol, checked to be nonsignaling.
inline Box induced_checked(const ValidatedProtocol& vp) {
    Box b = induced_box(vp);
    CHECK(check_no_signaling(b).ok);
    return b;
}

/// Full-correlation table written out cell by cell: parity f(x), weight 2^-(n-1).
inline std::vector<Rational> parity_table(const std::vector<int>& input_sizes, const std::vector<int>& f) {
    const int n = static_cast<int>(input_sizes.size());
    std::size_t rows = 1;
    for (int s : input_sizes) rows *= static_cast<std::size_t>(s);
    const std::size_t outs = std::size_t{1} << n;
    std::vector<Rational> t(rows * outs);
    for (std::size_t x = 0; x < rows; ++x) {
        for (std::size_t a = 0; a < outs; ++a) {
            if (static_cast<int>(std::popcount(a) & 1) == f[x]) t[x * outs + a] = Rational(1, 1L << (n - 1));
        }
    }
    return t;
}

inline StrategyNode stop(int a) { return StrategyNode::stop(a); }
inline StrategyNode use(int instance, int side, int input, std::vector<int> next) {
    return StrategyNode::use(instance, side, input, std::move(next));
}

} // namespace prbox::test
