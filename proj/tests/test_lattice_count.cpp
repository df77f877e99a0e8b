#include <doctest.h>

#include <random>

#include "hlc/error.hpp"
#include "hlc/exp_sums.hpp"
#include "hlc/lattice_count.hpp"
#include "hlc/system_io.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace hlc;

namespace {

CountRequest request(const FormSystem& F, double P, CountMethod m, Box box = {})
{
    CountRequest req;
    req.system = F;
    req.box = box.intervals.empty() ? Box::symmetric(F.n()) : box;
    req.P = P;
    req.method = m;
    return req;
}

std::uint64_t naive(const FormSystem& F, double P, Box box = {})
{
    return count_naive(request(F, P, CountMethod::naive, box)).count;
}

std::uint64_t mitm(const FormSystem& F, double P, Box box = {})
{
    return count_meet_in_middle(request(F, P, CountMethod::meet_in_middle, box)).count;
}

} // namespace

TEST_CASE("cone at P = 5")
{
    const auto cone = make_system({"x1^2 + x2^2 - x3^2"});
    std::uint64_t brute = 0;
    oracle::for_each_cube(3, -5, 5, [&](const oracle::Point& x) {
        brute += x[0] * x[0] + x[1] * x[1] == x[2] * x[2];
    });
    CHECK(brute == 57);
    CHECK(naive(cone, 5) == 57);
    CHECK(mitm(cone, 5) == 57);
    CHECK(count_solutions(request(cone, 5, CountMethod::automatic)).count == 57);
}

TEST_CASE("linear hyperplane in the unit box")
{
    for (int n = 1; n <= 5; ++n) {
        const auto F = make_system({"x1"}, n);
        CHECK(naive(F, 1, Box::unit(n)) == (1ULL << (n - 1)));
    }
}

TEST_CASE("nonzero constant has no solutions")
{
    const IntegerForm one = parse_polynomial("1", 2, 0);
    const FormSystem F({one});
    CHECK(naive(F, 3) == 0);
}

TEST_CASE("difference of squares")
{
    const auto F = make_system({"x1^2 - x2^2"});
    CHECK(naive(F, 10) == 41);
    CHECK(mitm(F, 10) == 41);
}

TEST_CASE("P = 0 counts the origin")
{
    const auto F = make_system({"x1^2 + x2^2 - x3^2"});
    CHECK(naive(F, 0) == 1);
    CHECK(mitm(F, 0) == 1);
    const IntegerForm shifted = parse_polynomial("x1^2 + 1", 1);
    CHECK(naive(FormSystem({shifted}), 0) == 0);
}

TEST_CASE("closed box boundary")
{
    const auto F = make_system({"x1 - x2"});
    // x/P in [0, 1/2]^2 with P = 4 gives x in {0,1,2}
    const Box half{{{0.0, 0.5}, {0.0, 0.5}}};
    CHECK(naive(F, 4, half) == 3);
}

TEST_CASE("budget is enforced")
{
    auto req = request(make_system({"x1^2 + x2^2 + x3^2 - x4^2"}), 50, CountMethod::naive);
    req.budget = 1000;
    CHECK_THROWS_AS(count_naive(req), BudgetError);
}

TEST_CASE("five-variable diagonal form: meet in the middle equals naive at P = 25")
{
    const auto Q = make_system({"x1^2 + x2^2 + x3^2 + x4^2 - x5^2"});
    const auto a = count_naive(request(Q, 25, CountMethod::naive));
    const auto b = count_meet_in_middle(request(Q, 25, CountMethod::meet_in_middle));
    CHECK(b.method == CountMethod::meet_in_middle);
    CHECK(a.count == b.count);
    CHECK(b.work < a.work);
}

TEST_CASE("property: meet in the middle and naive agree with the brute-force oracle")
{
    std::mt19937_64 rng(101);
    for (int t = 0; t < 60; ++t) {
        const int n = 2 + t % 3;
        const int R = 1 + t % 2;
        const long long P = 1 + static_cast<long long>(rng() % 6);
        const auto q = oracle::random_quadratic(rng, n, R, 5);
        const auto F = q.system();
        const std::uint64_t truth = oracle::count_cube(q, P);
        CHECK(naive(F, static_cast<double>(P)) == truth);
        CHECK(mitm(F, static_cast<double>(P)) == truth);
    }
}

TEST_CASE("property: counts are independent of the worker count")
{
    const auto F = make_system({"x1^2 + 2*x2^2 - 3*x3^2 + x1*x4"});
    auto req = request(F, 12, CountMethod::naive);
    req.workers = 1;
    const auto one = count_naive(req).count;
    req.workers = 4;
    CHECK(count_naive(req).count == one);
}

TEST_CASE("modular counts: small fixtures")
{
    const auto cone = make_system({"x1^2 + x2^2 - x3^2"});
    std::uint64_t brute = 0;
    oracle::for_each_cube(3, 0, 1, [&](const oracle::Point& x) { brute += (x[0] + x[1] + x[2]) % 2 == 0; });
    CHECK(brute == 4);
    CHECK(count_mod({cone, 2, 1}) == 4);

    for (unsigned long p : {2ul, 3ul, 5ul, 7ul})
        CHECK(count_mod({make_system({"x1^2 - 3*x2^2 + x1*x3"}), p, 1}) >= 1);

    for (unsigned long p : {2ul, 3ul, 5ul})
        for (int k = 1; k <= 3; ++k)
            for (int n = 1; n <= 3; ++n) {
                const auto lin = make_system({"x1"}, n);
                mpz_class expected;
                mpz_ui_pow_ui(expected.get_mpz_t(), p, static_cast<unsigned long>(k * (n - 1)));
                CHECK(count_mod({lin, p, k}) == expected);
            }
    CHECK_THROWS_AS(count_mod({cone, 4, 1}), ValidationError);
    CHECK_THROWS_AS(count_mod({cone, 3, 0}), ValidationError);
}

TEST_CASE("property: every modular method matches enumeration mod p^k")
{
    std::mt19937_64 rng(7);
    for (int t = 0; t < 30; ++t) {
        const int n = 2 + t % 3;
        const int R = 1 + (t / 3) % 2;
        const auto q = oracle::random_quadratic(rng, n, R, 5);
        const auto F = q.system();
        const unsigned long p = std::vector<unsigned long>{2, 3, 5}[t % 3];
        const int k = 1 + t % 2;
        long long m = 1;
        for (int i = 0; i < k; ++i)
            m *= static_cast<long long>(p);
        const std::uint64_t truth = oracle::count_mod(q, m);
        for (auto method : {ModMethod::plain, ModMethod::plain_no_recursion, ModMethod::convolution,
                            ModMethod::automatic}) {
            ModularCountRequest req{F, p, k};
            req.method = method;
            CHECK(count_mod(req) == truth);
        }
    }
}

TEST_CASE("modular counts: separable systems use the convolution path exactly")
{
    // diagonal form splits into one-variable components
    const auto Q = make_system({"x1^2 + x2^2 + x3^2 + x4^2 - x5^2"});
    for (int k = 1; k <= 3; ++k) {
        ModularCountRequest plain{Q, 3, k};
        plain.method = ModMethod::plain_no_recursion;
        ModularCountRequest conv{Q, 3, k};
        conv.method = ModMethod::convolution;
        CHECK(count_mod(plain) == count_mod(conv));
    }
}

TEST_CASE("modular counts with a residue class restriction")
{
    const auto F = make_system({"x1^2 + x2^2 - x3^2"});
    oracle::Quadratic q;
    q.n = 3;
    q.c.assign(1, std::vector<std::vector<long long>>(3, std::vector<long long>(3, 0)));
    q.c[0][0][0] = q.c[0][1][1] = 1;
    q.c[0][2][2] = -1;
    // b == (1, 0, 1) mod 3, F(b) == 0 mod 27
    std::uint64_t brute = 0;
    oracle::for_each_cube(3, 0, 26, [&](const oracle::Point& b) {
        if (b[0] % 3 == 1 && b[1] % 3 == 0 && b[2] % 3 == 1 && q.eval(0, b) % 27 == 0)
            ++brute;
    });
    ModularCountRequest req{F, 3, 3};
    req.class_exponent = 1;
    req.residues = {1, 0, 1};
    CHECK(count_mod(req) == brute);
}

TEST_CASE("orthogonality count on the cone")
{
    const auto cone = make_system({"x1^2 + x2^2 - x3^2"});
    const Box box = Box::symmetric(3);
    const auto grid = orthogonality_grid(cone, 5, box);
    CHECK(grid == std::vector<std::uint64_t>{151});
    const auto r = count_via_orthogonality(cone, 5, box);
    CHECK(r.count == 57);
    CHECK(r.residual < 1e-6);
    CHECK(std::fabs(r.imaginary) < 1e-6);
    CHECK_THROWS_AS(count_via_orthogonality(cone, 5, box, {150}), ValidationError);
    const IntegerForm zero(1, 2);
    CHECK_THROWS_AS(FormSystem({zero}), ValidationError);
}
