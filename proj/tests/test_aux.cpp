#include <doctest.h>

#include <cmath>
#include <random>

#include "hlc/aux_inequality.hpp"
#include "hlc/error.hpp"
#include "hlc/system_io.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace hlc;

namespace {

RealForm real(const char* text, int n = 0) { return to_real(parse_polynomial(text, n)); }

// Direct count for quadratic f(x) = sum_{i<=j} c_ij x_i x_j: m(x) = A x with A the doubled Gram matrix.
std::uint64_t oracle_aux_quadratic(const std::vector<std::vector<double>>& c, int B)
{
    const int n = static_cast<int>(c.size());
    std::vector<std::vector<double>> A(n, std::vector<double>(n, 0.0));
    double norm = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            if (i == j) {
                A[i][i] = 2.0 * c[i][i];
                norm = std::max(norm, std::fabs(c[i][i]));
            } else {
                A[i][j] = A[j][i] = c[i][j];
                norm = std::max(norm, std::fabs(c[i][j]) / 2.0);
            }
        }
    std::uint64_t count = 0;
    oracle::for_each_cube(n, -B, B, [&](const oracle::Point& x) {
        for (int i = 0; i < n; ++i) {
            double m = 0.0;
            for (int j = 0; j < n; ++j)
                m += A[i][j] * static_cast<double>(x[j]);
            if (!(std::fabs(m) < norm))
                return;
        }
        ++count;
    });
    return count;
}

RealForm quadratic_form(const std::vector<std::vector<double>>& c)
{
    const int n = static_cast<int>(c.size());
    RealForm f(n, 2);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            Exponents e(n, 0);
            ++e[i];
            ++e[j];
            f.add_term(e, c[i][j]);
        }
    return f;
}

} // namespace

TEST_CASE("aux count: identity form keeps only the origin")
{
    const RealForm f = real("x1^2 + x2^2");
    for (int B : {1, 3, 10, 25}) {
        const auto r = aux_count(f, B);
        CHECK(r.count == 1);
        CHECK(r.threshold == doctest::Approx(1.0));
    }
}

TEST_CASE("aux count: cubic in one variable")
{
    const RealForm f = real("x1^3");
    // strict threshold |f| B^{d-2} = 6 on m = 6ab
    std::uint64_t zero_product = 0;
    for (int a = -6; a <= 6; ++a)
        for (int b = -6; b <= 6; ++b)
            zero_product += std::abs(6 * a * b) < 6;
    CHECK(zero_product == 25);
    const auto r = aux_count(f, 6);
    CHECK(r.count == 25);
    CHECK(r.threshold == doctest::Approx(6.0));
}

TEST_CASE("aux count: origin always counted, total bounded")
{
    for (const char* s : {"x1^2 - 3*x1*x2", "x1*x2*x3", "2*x1^3 - x2^3 + x1*x2^2"}) {
        const RealForm f = real(s);
        const auto r = aux_count(f, 1);
        CHECK(r.count >= 1);
        const double full = std::pow(3.0, (f.degree() - 1) * f.n());
        CHECK(static_cast<double>(r.count) <= full);
    }
}

TEST_CASE("aux count: degenerate leading part")
{
    const RealForm f = to_real(parse_polynomial("x1 + x2", 2, 2));
    const auto r = aux_count(f, 3);
    CHECK(r.degenerate);
    CHECK(r.count == 49);
}

TEST_CASE("property: aux count matches a direct quadratic loop")
{
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int t = 0; t < 25; ++t) {
        const int n = 1 + t % 3;
        std::vector<std::vector<double>> c(n, std::vector<double>(n, 0.0));
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j)
                c[i][j] = (t % 2) ? u(rng) : std::round(u(rng));
        bool nonzero = false;
        for (auto& row : c)
            for (double v : row)
                nonzero = nonzero || v != 0.0;
        if (!nonzero)
            continue;
        const int B = 2 + t % 5;
        CHECK(aux_count(quadratic_form(c), B).count == oracle_aux_quadratic(c, B));
    }
}

TEST_CASE("weyl count")
{
    const RealForm f = real("x1^2 - 2*x1*x2 + x3^2", 3);
    CHECK(weyl_count(f, 2, 0.6).count == 125);
    const RealForm cubic = real("x1^3 + x2^3");
    CHECK(weyl_count(cubic, 2, 0.51).count == 625);
    CHECK(weyl_count(f, 3, 0.01).count == 343);

    RealForm root2(1, 2);
    root2.add_term({2}, std::sqrt(2.0));
    std::uint64_t brute = 0;
    for (int x = -3; x <= 3; ++x) {
        const double v = 2.0 * std::sqrt(2.0) * x;
        brute += std::fabs(v - std::round(v)) < 0.1;
    }
    CHECK(brute == 1);
    CHECK(weyl_count(root2, 3, 0.1).count == 1);
}

TEST_CASE("property: weyl count is monotone in delta and dominates aux-style counts")
{
    RealForm f(2, 2);
    f.add_term({2, 0}, 0.37);
    f.add_term({1, 1}, -1.21);
    f.add_term({0, 2}, 0.05);
    std::uint64_t previous = 0;
    for (double delta : {0.001, 0.01, 0.05, 0.1, 0.25, 0.5, 0.6}) {
        const auto c = weyl_count(f, 6, delta).count;
        CHECK(c >= previous);
        previous = c;
    }
    CHECK(previous == 169);
    const auto aux = aux_count(f, 6);
    CHECK(weyl_count(f, 6, aux.threshold).count >= aux.count);
}

TEST_CASE("ellipsoid bound")
{
    const auto F1 = make_system({"x1^2 + x2^2"});
    const std::vector<double> one{1.0}, two{2.0};
    const auto e = ellipsoid_bound(F1, one, 3);
    CHECK(e.eigenvalues.size() == 2);
    CHECK(e.eigenvalues[0] == doctest::Approx(1.0));
    CHECK(e.eigenvalues[1] == doctest::Approx(1.0));
    CHECK(e.form_norm == doctest::Approx(1.0));
    CHECK(e.value == doctest::Approx(4.0));
    CHECK(static_cast<double>(aux_count(real("x1^2 + x2^2"), 3).count) <= e.value);
    CHECK(ellipsoid_bound(F1, two, 3).value == doctest::Approx(e.value));

    const auto F = make_system({"x1^2 + x2^2", "x3^2 + x4^2"});
    const std::vector<double> axis{1.0, 0.0};
    for (int B : {2, 5, 10})
        CHECK(ellipsoid_bound(F, axis, B).value == doctest::Approx(4.0 * (2 * B + 1) * (2 * B + 1)));
    const std::vector<double> zero{0.0, 0.0};
    CHECK_THROWS_AS(ellipsoid_bound(F, zero, 3), ValidationError);
    const auto cubic = make_system({"x1^3"});
    CHECK_THROWS_AS(ellipsoid_bound(cubic, one, 3), ValidationError);
}

TEST_CASE("property: ellipsoid bound is scale invariant")
{
    const auto F = make_system({"x1^2 - x2*x3", "x1*x2 + 2*x3^2 - x4^2"});
    std::mt19937_64 rng(47);
    std::normal_distribution<double> g;
    for (int t = 0; t < 20; ++t) {
        const std::vector<double> b{g(rng), g(rng)};
        const double s = 0.1 + std::fabs(g(rng)) * 5.0;
        const std::vector<double> sb{s * b[0], s * b[1]};
        CHECK(ellipsoid_bound(F, sb, 7).value == doctest::Approx(ellipsoid_bound(F, b, 7).value).epsilon(1e-9));
    }
}

TEST_CASE("exponent fits")
{
    const std::vector<int> schedule{5, 10, 20, 40};
    const auto flat = exponent_fit(real("x1^2 + x2^2"), schedule, 1, 0);
    CHECK(std::fabs(flat.fit.slope) < 1e-9);
    REQUIRE(flat.target_sigma.has_value());

    const auto F = make_system({"x1^2 + x2^2", "x3^2 + x4^2"});
    const std::vector<double> axis{1.0, 0.0};
    const auto worst = exponent_fit(combine(F, axis), schedule, 2, 2);
    CHECK(worst.fit.slope == doctest::Approx(2.0).epsilon(0.1));

    const auto full = exponent_fit(to_real(parse_polynomial("x1 + x2", 2, 2)), schedule, 1);
    CHECK(full.fit.slope == doctest::Approx(2.0).epsilon(0.1));

    const std::vector<double> B{1.0, 2.0}, c{1.0, 4.0};
    CHECK_THROWS_AS(fit_exponent(B, c), ValidationError);
}

TEST_CASE("weyl inequality check")
{
    const auto F = make_system({"x1^2 + 3*x1*x2 - x2^2"});
    const std::vector<double> alpha{0.1234}, zero{0.0};
    const auto r = weyl_inequality_check(F, alpha, zero, 30.0, 1.0, 0.1, Box::unit(2));
    CHECK(r.ratio <= 1.0);

    std::mt19937_64 rng(53);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 8; ++t) {
        const std::vector<double> a{u(rng)}, b{u(rng) * 0.01};
        const auto s = weyl_inequality_check(F, a, b, 30.0, 1.0, 0.01, Box::unit(2));
        CHECK(std::isfinite(s.ratio));
        CHECK(s.ratio <= 30.0 * 30.0);
    }
    CHECK_THROWS_AS(weyl_inequality_check(F, alpha, zero, 0.5, 1.0, 0.1, Box::unit(2)), ValidationError);
    CHECK_THROWS_AS(weyl_inequality_check(F, alpha, zero, 30.0, 0.0, 0.1, Box::unit(2)), ValidationError);
}
