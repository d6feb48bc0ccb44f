#include "support.hpp"

#include "prbox/cluster.hpp"
#include "prbox/errors.hpp"

#include <random>

using namespace prbox;

TEST_SUITE("box") {

TEST_CASE("rationals print canonically") {
    CHECK(to_string(Rational(4)) == "4/1");
    CHECK(to_string(Rational(0)) == "0/1");
    CHECK(to_string(ratio(2, -4)) == "-1/2");
    CHECK(parse_rational("6/8") == ratio(3, 4));
    CHECK(parse_rational("-3") == Rational(-3));
    CHECK_THROWS_AS(parse_rational("1/0"), ParseError);
    CHECK_THROWS_AS(parse_rational("0.5"), ParseError);
    CHECK_THROWS_AS(parse_rational(""), ParseError);
}

TEST_CASE("mixed radix round trip") {
    const MixedRadix r({2, 3, 4});
    CHECK(r.size() == 24);
    for (std::size_t i = 0; i < r.size(); ++i) CHECK(r.encode(r.decode(i)) == i);
    const int digits[3] = {1, 2, 3};
    CHECK(r.encode(digits) == 1 + 2 * 2 + 3 * 6);
}

TEST_CASE("make validates shape, sign and normalization") {
    const Box coin = Box::make({1}, {2}, {ratio(1, 2), ratio(1, 2)});
    CHECK(coin.parties() == 1);
    CHECK(coin.prob(0, 1) == ratio(1, 2));

    CHECK_THROWS_AS(Box::make({1}, {2}, {ratio(1, 2), ratio(1, 4)}), NotNormalized);
    CHECK_THROWS_AS(Box::make({1}, {2}, {ratio(3, 2), ratio(-1, 2)}), NegativeProbability);
    CHECK_THROWS_AS(Box::make({1}, {2}, {Rational(1)}), DimensionMismatch);
    CHECK_THROWS_AS(Box::make({1, 2}, {2}, {Rational(1), Rational(0)}), DimensionMismatch);
    CHECK_THROWS_AS(Box::make({0}, {2}, {}), DimensionMismatch);

    const Box::Entry entries[] = {{{0}, {1}, Rational(1)}};
    const Box sparse = Box::make_sparse({1}, {2}, entries);
    CHECK(sparse.prob(0, 0) == 0);
    CHECK(sparse.prob(0, 1) == 1);
    const Box::Entry bad[] = {{{0}, {2}, Rational(1)}};
    CHECK_THROWS_AS(Box::make_sparse({1}, {2}, bad), DimensionMismatch);
}

TEST_CASE("PR box table") {
    const Box pr = pr_box();
    for (int x = 0; x < 2; ++x) {
        for (int y = 0; y < 2; ++y) {
            for (int a = 0; a < 2; ++a) {
                for (int b = 0; b < 2; ++b) {
                    const int xs[2] = {x, y};
                    const int as[2] = {a, b};
                    CHECK(pr.prob(xs, as) == (((a ^ b) == (x & y)) ? ratio(1, 2) : Rational(0)));
                }
            }
        }
    }
    const int x11[2] = {1, 1};
    const int a00[2] = {0, 0};
    const int a01[2] = {0, 1};
    CHECK(pr.prob(x11, a00) == 0);
    CHECK(pr.prob(x11, a01) == ratio(1, 2));
    CHECK(check_no_signaling(pr).ok);
}

TEST_CASE("full-correlation box matches a cell-by-cell construction") {
    // Equality of two 2-bit inputs.
    std::vector<std::uint8_t> eq(16);
    std::vector<int> f(16);
    for (int i = 0; i < 16; ++i) f[i] = eq[i] = (i & 3) == (i >> 2);
    const Box b = full_correlation_box(2, 2, eq);
    CHECK(b.table() == test::parity_table({4, 4}, f));
    CHECK(check_no_signaling(b).ok);

    const std::vector<std::uint8_t> zero(8, 0);
    const Box z = full_correlation_box(3, 1, zero);
    for (std::size_t a = 0; a < 8; ++a) CHECK(z.prob(0, a) == ((std::popcount(a) % 2 == 0) ? ratio(1, 4) : Rational(0)));

    const std::vector<std::uint8_t> and_table{0, 0, 0, 1};
    CHECK(full_correlation_box(2, 1, and_table) == pr_box());
    CHECK_THROWS_AS(full_correlation_box(2, 1, std::vector<std::uint8_t>(3)), DimensionMismatch);
}

TEST_CASE("signaling witness") {
    // a1 = x2, a2 = 0: party 1's output reveals party 2's input.
    std::vector<Rational> t(16);
    for (int x = 0; x < 4; ++x) {
        const int x2 = x >> 1;
        t[x * 4 + x2] = 1;
    }
    const Box b = Box::make({2, 2}, {2, 2}, t);
    const auto v = check_no_signaling(b);
    REQUIRE_FALSE(v.ok);
    REQUIRE(v.witness);
    CHECK(v.witness->party == 1);
    CHECK(v.witness->p_input != v.witness->p_other_input);
    CHECK_THROWS_AS(marginal(b, {0}), SignalingAmbiguity);
    const auto fixed = marginal(b, {0}, std::vector<int>{1});
    const int x0[1] = {0};
    const int a1[1] = {1};
    CHECK(fixed.box.prob(x0, a1) == 1);
}

TEST_CASE("marginals") {
    const auto m = marginal(pr_box(), {0});
    for (const auto& p : m.box.table()) CHECK(p == ratio(1, 2));

    std::vector<std::uint8_t> f(8);
    std::mt19937_64 rng(1);
    for (auto& v : f) v = rng() & 1;
    const auto m2 = marginal(full_correlation_box(3, 1, f), {0, 1});
    for (const auto& p : m2.box.table()) CHECK(p == ratio(1, 4));

    const Box det = deterministic_box({2, 2}, {2, 2}, {{0, 1}, {0, 1}});
    const auto m3 = marginal(det, {1});
    const int x1[1] = {1};
    const int a1[1] = {1};
    CHECK(m3.box.prob(x1, a1) == 1);
    CHECK_THROWS(marginal(pr_box(), {2}));
}

TEST_CASE("locality with audited verdicts") {
    const Box noise = uniform_noise_box({2, 2}, {2, 2});
    const auto lv = is_local(noise);
    REQUIRE(lv.local);
    CHECK(expand_local(noise, lv.decomposition) == noise);

    const auto pv = is_local(pr_box());
    REQUIRE_FALSE(pv.local);
    // c.P > 0 and c.D <= 0 for each of the 16 deterministic boxes.
    Rational value = 0;
    for (std::size_t i = 0; i < pv.certificate.size(); ++i) value += pv.certificate[i] * pr_box().table()[i];
    CHECK(value > 0);
    CHECK(value == pv.certificate_value);
    for (int code = 0; code < 16; ++code) {
        const Box d = deterministic_box({2, 2}, {2, 2}, {{code & 1, code >> 1 & 1}, {code >> 2 & 1, code >> 3 & 1}});
        Rational s = 0;
        for (std::size_t i = 0; i < pv.certificate.size(); ++i) s += pv.certificate[i] * d.table()[i];
        CHECK(s <= 0);
    }

    const Box mixed = mix(std::vector<Box>{pr_box(), noise}, std::vector<Rational>{ratio(1, 2), ratio(1, 2)});
    const auto mv = is_local(mixed);
    CHECK(mv.local);
    CHECK(expand_local(mixed, mv.decomposition) == mixed);

    CHECK(deterministic_strategy_count(pr_box()) == 16);
    CHECK_THROWS_AS(is_local(pr_box(), 15), TooLarge);
}

TEST_CASE("cluster-state box is nonsignaling and nonlocal") {
    const Box c = cluster_box();
    CHECK(c.parties() == 5);
    CHECK(check_no_signaling(c).ok);
    const auto v = is_local(c);
    CHECK_FALSE(v.local);
    Rational value = 0;
    for (std::size_t i = 0; i < v.certificate.size(); ++i) value += v.certificate[i] * c.table()[i];
    CHECK(value > 0);
}

TEST_CASE("CHSH values") {
    CHECK(chsh_value(pr_box()) == 4);
    CHECK(chsh_value(uniform_noise_box({2, 2}, {2, 2})) == 0);
    CHECK(chsh_value(deterministic_box({2, 2}, {2, 2}, {{0, 0}, {0, 0}})) == 2);
    Rational best = 0;
    for (int code = 0; code < 16; ++code) {
        const Box d = deterministic_box({2, 2}, {2, 2}, {{code & 1, code >> 1 & 1}, {code >> 2 & 1, code >> 3 & 1}});
        const Rational v = abs(chsh_value(d));
        if (v > best) best = v;
    }
    CHECK(best == 2);
    CHECK_THROWS_AS(chsh_value(uniform_noise_box({3, 2}, {2, 2})), WrongShape);
}

TEST_CASE("relabelings") {
    const Box pr = pr_box();
    CHECK(relabel(pr, Relabeling::identity(pr)) == pr);

    Relabeling flip = Relabeling::identity(pr);
    flip.output_permutation[0][0] = {1, 0};
    flip.output_permutation[0][1] = {1, 0};
    const Box flipped = relabel(pr, flip);
    CHECK_FALSE(flipped == pr);
    CHECK(abs(chsh_value(flipped)) == 4);
    CHECK_FALSE(is_local(flipped).local);
    CHECK(check_no_signaling(flipped).ok);

    Relabeling swap = Relabeling::identity(pr);
    swap.party_permutation = {1, 0};
    CHECK(relabel(pr, swap) == pr);

    // |CHSH| is preserved by every relabeling of a 2x2x2 box.
    const Box noisy = mix(std::vector<Box>{pr, deterministic_box({2, 2}, {2, 2}, {{0, 1}, {1, 1}})},
                          std::vector<Rational>{ratio(2, 3), ratio(1, 3)});
    Relabeling r = Relabeling::identity(noisy);
    r.input_permutation[1] = {1, 0};
    r.output_permutation[0][1] = {1, 0};
    CHECK(abs(chsh_value(relabel(noisy, r))) == abs(chsh_value(noisy)));

    Relabeling bad = Relabeling::identity(pr);
    bad.input_permutation[0] = {0, 0};
    CHECK_THROWS_AS(relabel(pr, bad), ShapeMismatch);
}

TEST_CASE("mixtures and input removal") {
    CHECK_THROWS(mix(std::vector<Box>{pr_box()}, std::vector<Rational>{ratio(1, 2)}));
    const Box reduced = remove_input(pr_box(), 0, 1);
    CHECK(reduced.input_sizes() == std::vector<int>{1, 2});
    CHECK(check_no_signaling(reduced).ok);
    CHECK(is_local(reduced).local);
}

}
