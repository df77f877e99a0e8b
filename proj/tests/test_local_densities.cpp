#include <doctest.h>

#include <cmath>
#include <random>

#include "hlc/error.hpp"
#include "hlc/local_densities.hpp"
#include "hlc/system_io.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace hlc;

namespace {

mpq_class pow_q(unsigned long p, long e)
{
    mpz_class v;
    mpz_ui_pow_ui(v.get_mpz_t(), p, static_cast<unsigned long>(std::labs(e)));
    return e >= 0 ? mpq_class(v) : mpq_class(mpz_class(1), v);
}

} // namespace

TEST_CASE("densities: fixtures")
{
    const auto cone = make_system({"x1^2 + x2^2 - x3^2"});
    CHECK(density_exact(cone, 2, 1) == 1);

    for (unsigned long p : {2ul, 3ul, 7ul})
        for (int k = 1; k <= 3; ++k)
            CHECK(density_exact(make_system({"x1"}, 3), p, k) == 1);
}

TEST_CASE("densities: anisotropic binary form only has the zero branch")
{
    // x^2 + y^2 == 0 mod 3 forces x == y == 0 mod 3
    const auto F = make_system({"x1^2 + x2^2"});
    std::uint64_t nonzero = 0;
    oracle::for_each_cube(2, 0, 2, [&](const oracle::Point& b) {
        nonzero += (b[0] || b[1]) && (b[0] * b[0] + b[1] * b[1]) % 3 == 0;
    });
    CHECK(nonzero == 0);
    CHECK(density_exact(F, 3, 1) == mpq_class(1, 3));
    for (int k = 1; k <= 5; ++k) {
        const mpq_class r = density_exact(F, 3, k);
        CHECK(r <= 1);
        // zero-branch recursion with n = dR
        CHECK(density_exact(F, 3, k + 2) == r * pow_q(3, 2 * 1 - 2));
    }
}

TEST_CASE("property: exact densities match enumeration")
{
    std::mt19937_64 rng(59);
    for (int t = 0; t < 20; ++t) {
        const int n = 2 + t % 3, R = 1 + (t / 2) % 2;
        const auto q = oracle::random_quadratic(rng, n, R, 4);
        const auto F = q.system();
        const unsigned long p = t % 2 ? 3 : 2;
        const int k = 1 + t % 2;
        long long m = 1;
        for (int i = 0; i < k; ++i)
            m *= static_cast<long long>(p);
        const mpq_class expected = mpq_class(mpz_class(std::to_string(oracle::count_mod(q, m)))) *
                                   pow_q(p, -static_cast<long>(k) * (n - R));
        CHECK(density_exact(F, p, k) == expected);
        CHECK(density(F, p, k) == doctest::Approx(expected.get_d()));
        CHECK(expected >= 0);
    }
}

TEST_CASE("hensel witness and witness-class constancy")
{
    const auto Q = make_system({"x1^2 + x2^2 + x3^2 + x4^2 - x5^2"});
    for (unsigned long p : {3ul, 5ul, 7ul}) {
        const auto w = find_hensel_witness(Q, p);
        REQUIRE(w.has_value());
        CHECK(w->alpha == 0);
        const mpq_class base = witness_class_density(Q, p, 1, *w);
        CHECK(base > 0);
        for (int k = 2; k <= 4; ++k)
            CHECK(witness_class_density(Q, p, k, *w) == base);
    }
    // no alpha = 0 witness at p = 2: every square is 0 or 1 mod 4 and gradients are even
    const auto two = find_hensel_witness(Q, 2);
    REQUIRE(two.has_value());
    CHECK(two->alpha == 1);
    CHECK(witness_class_density(Q, 2, two->exponent(), *two) > 0);
}

TEST_CASE("local density tables")
{
    const auto Q = make_system({"x1^2 + x2^2 + x3^2 + x4^2 - x5^2"});
    const auto t = local_density_table(Q, 3);
    CHECK(t.k_min >= 2);
    REQUIRE(t.stabilized_at.has_value());
    CHECK_FALSE(t.flagged);
    for (const auto& r : t.densities)
        CHECK(r >= 0);
    // once stabilized, later levels stay within tolerance
    const auto wide = local_density_table(Q, 3, KPolicy{KPolicy::Kind::fixed, 7});
    const double settled = t.final_density().get_d();
    for (int k = *t.stabilized_at; k <= 7; ++k)
        CHECK(std::fabs(wide.densities[k - 1].get_d() - settled) / settled < 2e-4);

    const auto at2 = local_density_table(Q, 2);
    CHECK(at2.bad_prime);
    CHECK(at2.k_max == 8);
}

TEST_CASE("euler product conventions")
{
    const auto Q = make_system({"x1^2 + x2^2 + x3^2 + x4^2 - x5^2"});
    const auto empty = euler_product(Q, 1);
    CHECK(empty.value == 1.0);
    CHECK(empty.tables.empty());
    const auto lin = euler_product(make_system({"x1 - 2*x2"}), 30);
    CHECK(lin.value == doctest::Approx(1.0));
    CHECK(lin.tail_indicator >= 0.0);
}

TEST_CASE("euler product for the diagonal quintic-variable form converges")
{
    const auto Q = make_system({"x1^2 + x2^2 + x3^2 + x4^2 - x5^2"});
    const auto a = euler_product(Q, 50);
    const auto b = euler_product(Q, 100);
    CHECK(a.value > 0.0);
    CHECK(std::fabs(a.value - b.value) / b.value < 0.01);
    CHECK(a.tail_indicator >= 0.0);
}

TEST_CASE("q-sum conventions")
{
    const auto sq = make_system({"x1^2"});
    CHECK(q_sum_series(sq, 1).value == doctest::Approx(1.0));
    CHECK(q_sum_series(sq, 2).value == doctest::Approx(1.0));
    const auto Q = make_system({"x1^2 + x2^2 + x3^2 + x4^2 - x5^2"});
    const auto s = q_sum_series(Q, 40);
    CHECK(s.tail_indicator >= 0.0);
    CHECK(s.max_imaginary < 1e-9);
}

TEST_CASE("multiplicativity of A(q)")
{
    const auto sq = make_system({"x1^2"});
    for (std::uint64_t q2 : {2u, 5u, 9u})
        CHECK(multiplicativity_check(sq, 1, q2) == 0.0);
    CHECK(multiplicativity_check(sq, 2, 3) < 1e-9);
    const auto F = make_system({"x1^2 - 3*x2^2 + x1*x3", "x2*x3 + x3^2"});
    CHECK(multiplicativity_check(F, 4, 9) < 1e-9);
    CHECK_THROWS_AS(multiplicativity_check(sq, 4, 6), ValidationError);
}

TEST_CASE("property: A(q) matches the oracle local sums")
{
    std::mt19937_64 rng(61);
    for (int t = 0; t < 8; ++t) {
        const auto q = oracle::random_quadratic(rng, 2, 1, 4);
        const auto F = q.system();
        for (std::uint64_t modulus : {3u, 4u, 6u}) {
            std::complex<double> A = 0;
            double abs_sum = 0.0;
            for (long long a = 1; a <= static_cast<long long>(modulus); ++a)
                if (std::gcd(a, static_cast<long long>(modulus)) == 1) {
                    const auto v = oracle::local_sum(q, static_cast<long long>(modulus), {a});
                    A += v;
                    abs_sum += std::abs(v);
                }
            const auto b = q_block(F, modulus);
            CHECK(std::abs(b.A - A) < 1e-10);
            CHECK(b.abs_sum == doctest::Approx(abs_sum));
        }
    }
}

TEST_CASE("primes")
{
    CHECK(primes_up_to(1).empty());
    CHECK(primes_up_to(20) == std::vector<unsigned long>{2, 3, 5, 7, 11, 13, 17, 19});
}
