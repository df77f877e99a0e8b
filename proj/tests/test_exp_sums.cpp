#include <doctest.h>

#include <cmath>
#include <random>

#include "hlc/error.hpp"
#include "hlc/exp_sums.hpp"
#include "hlc/system_io.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace hlc;

namespace {

std::complex<double> oracle_exp_sum(const oracle::Quadratic& q, const std::vector<double>& alpha, long long lo,
                                    long long hi)
{
    std::complex<double> s = 0;
    oracle::for_each_cube(q.n, lo, hi, [&](const oracle::Point& x) {
        double t = 0.0;
        for (std::size_t r = 0; r < alpha.size(); ++r)
            t += alpha[r] * static_cast<double>(q.eval(static_cast<int>(r), x));
        s += oracle::e(t);
    });
    return s;
}

// Composite Simpson rule for int_0^1 e(gamma t^2) dt.
std::complex<double> fresnel(double gamma, int steps = 200000)
{
    std::complex<double> s = 0;
    const double h = 1.0 / steps;
    for (int i = 0; i <= steps; ++i) {
        const double t = i * h;
        const double w = (i == 0 || i == steps) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        s += w * oracle::e(gamma * t * t);
    }
    return s * (h / 3.0);
}

} // namespace

TEST_CASE("exp_sum at alpha = 0 counts points")
{
    const auto F = make_system({"x1^2 + x2*x3"});
    const std::vector<double> zero{0.0};
    for (double P : {1.0, 3.0, 4.5, 7.0}) {
        const auto s = exp_sum(F, zero, P, Box::unit(3));
        const double expected = std::pow(std::floor(P) + 1.0, 3);
        CHECK(s.real() == doctest::Approx(expected));
        CHECK(std::fabs(s.imag()) < 1e-9);
    }
}

TEST_CASE("property: exp_sum matches a direct sum, is 1-periodic and conjugate-symmetric")
{
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int t = 0; t < 20; ++t) {
        const int n = 1 + t % 3, R = 1 + t % 2;
        const auto q = oracle::random_quadratic(rng, n, R, 4);
        const auto F = q.system();
        std::vector<double> alpha(R), shifted(R), neg(R);
        for (int r = 0; r < R; ++r) {
            alpha[r] = u(rng);
            shifted[r] = alpha[r] + (r % 2 ? -3.0 : 2.0);
            neg[r] = -alpha[r];
        }
        const double P = 6.0;
        const auto s = exp_sum(F, alpha, P, Box::symmetric(n));
        const auto truth = oracle_exp_sum(q, alpha, -6, 6);
        CHECK(std::abs(s - truth) < 1e-8 * std::pow(13.0, n));
        CHECK(std::abs(exp_sum(F, shifted, P, Box::symmetric(n)) - s) < 1e-8 * std::pow(13.0, n));
        CHECK(std::abs(exp_sum(F, neg, P, Box::symmetric(n)) - std::conj(s)) < 1e-8 * std::pow(13.0, n));
        CHECK(std::abs(s) <= std::pow(13.0, n) + 1e-9);
    }
}

TEST_CASE("local sums: fixtures")
{
    const auto sq = make_system({"x1^2"});
    const std::vector<std::int64_t> one{1}, zero{0};
    CHECK(std::abs(local_sum(sq, 1, zero) - Complex(1.0, 0.0)) < 1e-12);
    CHECK(std::abs(local_sum(sq, 2, one)) < 1e-12);

    const auto lin = make_system({"x1"});
    for (std::uint64_t q : {2u, 3u, 7u, 12u})
        for (std::int64_t a = 1; a < static_cast<std::int64_t>(q); ++a)
            if (std::gcd(a, static_cast<std::int64_t>(q)) == 1) {
                const std::vector<std::int64_t> av{a};
                CHECK(std::abs(local_sum(lin, q, av)) < 1e-12);
            }
}

TEST_CASE("property: local sums match the oracle and are bounded by 1")
{
    std::mt19937_64 rng(37);
    for (int t = 0; t < 20; ++t) {
        const int n = 1 + t % 3, R = 1 + (t / 2) % 2;
        const auto q = oracle::random_quadratic(rng, n, R, 5);
        const auto F = q.system();
        const std::uint64_t modulus = 2 + t % 9;
        LocalSumTable table(F, modulus);
        for (int s = 0; s < 5; ++s) {
            std::vector<std::int64_t> a(R);
            std::vector<long long> al(R);
            for (int r = 0; r < R; ++r)
                al[r] = a[r] = static_cast<std::int64_t>(rng() % modulus);
            const auto v = table(a);
            CHECK(std::abs(v - oracle::local_sum(q, static_cast<long long>(modulus), al)) < 1e-10);
            CHECK(std::abs(v) <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("S_inf: gamma = 0 gives the box volume")
{
    const auto F = make_system({"x1^2 + x2^2 - x3^2"});
    const std::vector<double> zero{0.0};
    const Box box{{{-1.0, 1.0}, {0.0, 0.5}, {-0.25, 1.0}}};
    const auto r = s_infinity(F, zero, box);
    CHECK(r.value.real() == doctest::Approx(box.volume()).epsilon(1e-12));
    CHECK(std::fabs(r.value.imag()) < 1e-12);
}

TEST_CASE("S_inf: Fresnel values")
{
    const auto F = make_system({"x1^2"});
    const Box box = Box::unit(1);
    const std::vector<double> quarter{0.25}, one{1.0};
    const auto a = s_infinity(F, quarter, box).value;
    const auto b = s_infinity(F, one, box).value;
    CHECK(std::abs(a - fresnel(0.25)) < 1e-9);
    CHECK(std::abs(b - fresnel(1.0)) < 1e-9);
    CHECK(a.real() == doctest::Approx(0.7798).epsilon(1e-4));
    CHECK(a.imag() == doctest::Approx(0.4383).epsilon(1e-4));
    CHECK(b.real() == doctest::Approx(0.244127).epsilon(1e-5));
    CHECK(b.imag() == doctest::Approx(0.171708).epsilon(1e-5));
}

TEST_CASE("property: |S_inf| is at most the box volume")
{
    const auto F = make_system({"x1^2 - 2*x1*x2 + 3*x2^2", "x1*x2 - x2^2"});
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(-6.0, 6.0);
    for (int t = 0; t < 20; ++t) {
        const std::vector<double> g{u(rng), u(rng)};
        const auto r = s_infinity(F, g, Box::symmetric(2));
        CHECK(std::abs(r.value) <= 4.0 + r.error + 1e-9);
        CHECK(r.error >= 0.0);
    }
}

TEST_CASE("major arcs")
{
    const auto arcs = major_arcs(100.0, 0.2, 2, 1);
    CHECK(arcs.q_max == 2);
    CHECK(arcs.radius == doctest::Approx(std::pow(100.0, -1.8)));
    const std::vector<double> close{0.5 + 1e-5}, far{0.5 + 1e-3};
    const auto c = arcs.locate(close);
    REQUIRE(c.has_value());
    CHECK(c->q == 2);
    CHECK(c->a == std::vector<std::int64_t>{1});
    CHECK_FALSE(arcs.is_major(far));
    for (const auto& center : arcs.centers) {
        std::int64_t g = static_cast<std::int64_t>(center.q);
        for (auto a : center.a)
            g = std::gcd(g, a);
        CHECK(g == 1);
    }

    const auto tiny = major_arcs(100.0, 0.1, 2, 2);
    CHECK(tiny.q_max == 1);
    CHECK(tiny.centers.size() == 4);
    for (const auto& center : tiny.centers) {
        CHECK(center.q == 1);
        for (auto a : center.a)
            CHECK((a == 0 || a == 1));
    }
    CHECK_THROWS_AS(major_arcs(100.0, 1.0, 2, 1), ValidationError);
}

TEST_CASE("repulsion bound conventions")
{
    const double P = 20.0, C = 1.5;
    // |beta| = P^{1-d}: both branches of the max equal P^{-1}
    CHECK(repulsion_bound(std::pow(P, -1.0), P, 2, C) == doctest::Approx(std::pow(P, -C)));
    CHECK(std::isinf(repulsion_bound(0.0, P, 2, C)));
    CHECK(repulsion_bound(0.1, P, 2, C) > 0.0);

    const auto F = make_system({"x1^2 + x2^2 - x3^2"});
    RepulsionSpec spec;
    spec.random_samples = 10;
    const auto rep = repulsion_diagnostic(F, 8.0, Box::symmetric(3), 0.5, spec);
    bool saw_zero_beta = false;
    for (const auto& s : rep.samples) {
        bool zero = true;
        for (double b : s.beta)
            zero = zero && b == 0.0;
        if (zero) {
            saw_zero_beta = true;
            CHECK(std::isinf(s.bound));
            CHECK(s.ratio == 0.0);
        } else {
            CHECK(s.bound > 0.0);
        }
    }
    CHECK(saw_zero_beta);
    CHECK(std::isfinite(rep.max_ratio));
}

TEST_CASE("major arc approximation")
{
    const auto F = make_system({"x1^2 + x2^2"});
    const std::vector<std::int64_t> a0{0};
    const std::vector<double> off0{0.0};
    for (double P : {3.0, 7.5, 10.0}) {
        const auto r = major_arc_approximation_check(F, 1, a0, off0, P, Box::unit(2));
        const double expected = std::fabs(std::pow(std::floor(P) + 1.0, 2) - P * P);
        CHECK(r.residual == doctest::Approx(expected).epsilon(1e-9));
    }

    const auto sq = make_system({"x1^2"});
    const std::vector<std::int64_t> a1{1};
    const std::vector<double> off{0.0005};
    double worst = 0.0;
    for (double P : {20.0, 40.0, 80.0}) {
        const auto r = major_arc_approximation_check(sq, 2, a1, off, P, Box::unit(1));
        worst = std::max(worst, r.normalized);
    }
    CHECK(worst < 2.0);
    CHECK_THROWS_AS(major_arc_approximation_check(sq, 30, a1, off0, 20.0, Box::unit(1)), ValidationError);
}
