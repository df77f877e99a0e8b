#include "hlc/local_densities.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hlc/exact_linalg.hpp"
#include "hlc/exp_sums.hpp"
#include "hlc/parallel.hpp"

namespace hlc {

using nlohmann::json;

namespace {

mpz_class pow_ui(unsigned long p, unsigned long e)
{
    mpz_class r;
    mpz_ui_pow_ui(r.get_mpz_t(), p, e);
    return r;
}

mpq_class scaled(const mpz_class& count, unsigned long p, int k, int n, int R)
{
    const long e = static_cast<long>(k) * (n - R);
    mpq_class q;
    if (e >= 0)
        q = mpq_class(count, pow_ui(p, static_cast<unsigned long>(e)));
    else
        q = mpq_class(count * pow_ui(p, static_cast<unsigned long>(-e)));
    q.canonicalize();
    return q;
}

int valuation(mpz_class v, unsigned long p)
{
    if (v == 0)
        return std::numeric_limits<int>::max();
    int a = 0;
    while (mpz_divisible_ui_p(v.get_mpz_t(), p)) {
        v /= p;
        ++a;
    }
    return a;
}

// Minimal valuation over the R x R minors of the Jacobian at b.
int minor_valuation(const FormSystem& F, const std::vector<std::int64_t>& b, unsigned long p)
{
    const auto J = jacobian(F, b);
    const int R = F.R();
    const int n = F.n();
    int best = std::numeric_limits<int>::max();
    std::vector<int> cols(R);
    std::iota(cols.begin(), cols.end(), 0);
    while (true) {
        RationalMatrix m(R, std::vector<mpq_class>(R));
        for (int i = 0; i < R; ++i)
            for (int j = 0; j < R; ++j)
                m[i][j] = J[i][cols[j]];
        const mpq_class det = determinant(m);
        best = std::min(best, valuation(det.get_num(), p));
        int i = R - 1;
        while (i >= 0 && cols[i] == n - R + i)
            --i;
        if (i < 0)
            break;
        ++cols[i];
        for (int j = i + 1; j < R; ++j)
            cols[j] = cols[j - 1] + 1;
    }
    return best;
}

} // namespace

std::vector<unsigned long> primes_up_to(unsigned long n)
{
    std::vector<unsigned long> out;
    for (unsigned long p = 2; p <= n; ++p)
        if (is_prime(p))
            out.push_back(p);
    return out;
}

mpq_class density_exact(const FormSystem& F, unsigned long p, int k, std::uint64_t budget, ModMethod method)
{
    ModularCountRequest req{F, p, k, budget, method, 0, {}};
    return scaled(count_mod(req), p, k, F.n(), F.R());
}

double density(const FormSystem& F, unsigned long p, int k, std::uint64_t budget)
{
    return density_exact(F, p, k, budget).get_d();
}

std::optional<HenselWitness> find_hensel_witness(const FormSystem& F, unsigned long p, int max_alpha,
                                                 std::uint64_t search_budget)
{
    if (!is_prime(p))
        throw ValidationError("hensel witness: p is not prime");
    const int n = F.n();
    for (int alpha = 0; alpha <= max_alpha; ++alpha) {
        const int e = 2 * alpha + 1;
        const mpz_class mod = pow_ui(p, static_cast<unsigned long>(e));
        if (!mod.fits_slong_p())
            break;
        const long m = mod.get_si();
        std::vector<std::int64_t> b(n, 0);
        std::uint64_t visited = 0;
        while (true) {
            if (++visited > search_budget)
                break;
            bool zero = true;
            for (int i = 0; i < F.R() && zero; ++i)
                zero = evaluate_exact(F[i], b) % mod == 0;
            if (zero && minor_valuation(F, b, p) == alpha)
                return HenselWitness{alpha, b};
            int j = n - 1;
            for (; j >= 0; --j) {
                if (++b[j] < m)
                    break;
                b[j] = 0;
            }
            if (j < 0)
                break;
        }
    }
    return std::nullopt;
}

mpq_class witness_class_density(const FormSystem& F, unsigned long p, int k, const HenselWitness& w,
                                std::uint64_t budget)
{
    if (k < w.exponent())
        throw ValidationError("witness class density: k must be at least 2 alpha + 1");
    ModularCountRequest req{F, p, k, budget, ModMethod::automatic, w.exponent(), w.point};
    return scaled(count_mod(req), p, k, F.n(), F.R());
}

LocalDensityTable local_density_table(const FormSystem& F, unsigned long p, const KPolicy& policy,
                                      std::uint64_t budget)
{
    if (!is_prime(p))
        throw ValidationError("local density: p is not prime");
    LocalDensityTable t;
    t.p = p;
    t.witness = find_hensel_witness(F, p);
    t.bad_prime = !(t.witness && t.witness->alpha == 0);

    if (policy.kind == KPolicy::Kind::fixed) {
        if (policy.fixed_k < 1)
            throw ValidationError("local density: fixed k must be at least 1");
        t.k_min = t.k_max = policy.fixed_k;
        for (int k = 1; k <= policy.fixed_k; ++k)
            t.densities.push_back(density_exact(F, p, k, budget));
        t.stabilized_at = policy.fixed_k;
        t.stop_reason = "fixed k";
        return t;
    }

    const int d = std::max(1, F.degree());
    t.k_min = std::max(2, t.witness ? t.witness->exponent() : 2);
    t.k_max = policy.k_max + (t.bad_prime ? policy.bad_prime_extra : 0);
    t.k_max = std::max(t.k_max, t.k_min);
    for (int k = 1; k <= t.k_max; ++k) {
        try {
            t.densities.push_back(density_exact(F, p, k, budget));
        } catch (const BudgetError&) {
            if (t.densities.empty())
                throw;
            t.flagged = true;
            t.stop_reason = "budget exhausted at k = " + std::to_string(k);
            return t;
        }
        if (k < t.k_min || k <= d)
            continue;
        bool settled = true;
        for (int j = 0; j < d && settled; ++j) {
            const mpq_class& cur = t.densities[k - 1 - j];
            const mpq_class& prev = t.densities[k - 2 - j];
            const double rel = std::fabs(mpq_class(cur - prev).get_d()) / std::max(std::fabs(cur.get_d()), 1e-300);
            settled = rel < policy.tol;
        }
        if (settled) {
            t.stabilized_at = k;
            t.stop_reason = "relative change below tolerance";
            return t;
        }
    }
    t.flagged = true;
    t.stop_reason = "still moving at k_max";
    return t;
}

SeriesEstimate euler_product(const FormSystem& F, unsigned long p_max, const KPolicy& policy, std::uint64_t budget,
                             unsigned workers)
{
    SeriesEstimate est;
    est.method = "euler_product";
    est.truncation = {{"p_max", p_max},
                      {"policy", policy.kind == KPolicy::Kind::fixed ? "fixed" : "adaptive"},
                      {"fixed_k", policy.fixed_k},
                      {"tol", policy.tol},
                      {"k_max", policy.k_max},
                      {"bad_prime_extra", policy.bad_prime_extra}};
    const auto primes = primes_up_to(p_max);
    est.tables = run_shards<LocalDensityTable>(primes.size(), workers,
                                               [&](std::size_t i) { return local_density_table(F, primes[i], policy, budget); });
    mpq_class product = 1;
    for (const auto& t : est.tables) {
        product *= t.final_density();
        if (t.flagged)
            est.flagged_primes.push_back(t.p);
        if (2 * t.p > p_max)
            est.tail_indicator = std::max(est.tail_indicator, std::fabs(t.final_density().get_d() - 1.0));
    }
    est.value = product.get_d();
    return est;
}

QBlock q_block(const FormSystem& F, std::uint64_t q, std::uint64_t budget)
{
    const int R = F.R();
    const LocalSumTable table(F, q, budget);
    QBlock blk;
    ComplexSum acc;
    CompensatedSum abs_acc;
    std::vector<std::int64_t> a(R, 1);
    const auto qi = static_cast<std::int64_t>(q);
    while (true) {
        std::int64_t g = qi;
        for (auto v : a)
            g = std::gcd(g, v);
        if (g == 1) {
            const Complex s = table(a);
            acc.add(s);
            abs_acc.add(std::abs(s));
        }
        int i = R - 1;
        for (; i >= 0; --i) {
            if (++a[i] <= qi)
                break;
            a[i] = 1;
        }
        if (i < 0)
            break;
    }
    blk.A = acc.value();
    blk.abs_sum = abs_acc.value();
    return blk;
}

SeriesEstimate q_sum_series(const FormSystem& F, std::uint64_t Q_max, std::uint64_t budget, unsigned workers)
{
    if (Q_max < 1)
        throw ValidationError("q_sum_series: Q_max must be at least 1");
    SeriesEstimate est;
    est.method = "q_sum";
    est.truncation = {{"Q_max", Q_max}};
    auto blocks = run_shards<QBlock>(Q_max, workers, [&](std::size_t i) { return q_block(F, i + 1, budget); });
    CompensatedSum total;
    for (std::uint64_t q = 1; q <= Q_max; ++q) {
        const auto& b = blocks[q - 1];
        if (std::fabs(b.A.imag()) > 1e-9)
            throw NumericalError("q_sum_series: imaginary part of A(" + std::to_string(q) + ") = "
                                 + std::to_string(b.A.imag()) + " exceeds 1e-9");
        est.max_imaginary = std::max(est.max_imaginary, std::fabs(b.A.imag()));
        total.add(b.A.real());
    }
    est.value = total.value();
    // s(Q) = sum over Q < q <= 2Q of |S_{q,a}|, complete blocks only
    for (std::uint64_t Q = 1; 2 * Q <= Q_max; Q *= 2) {
        CompensatedSum s;
        for (std::uint64_t q = Q + 1; q <= 2 * Q; ++q)
            s.add(blocks[q - 1].abs_sum);
        est.block_starts.push_back(Q);
        est.blocks.push_back(s.value());
    }
    est.tail_indicator = est.blocks.empty() ? 0.0 : est.blocks.back();
    return est;
}

double multiplicativity_check(const FormSystem& F, std::uint64_t q1, std::uint64_t q2, std::uint64_t budget)
{
    if (q1 < 1 || q2 < 1)
        throw ValidationError("multiplicativity check: moduli must be positive");
    if (std::gcd(q1, q2) != 1)
        throw ValidationError("multiplicativity check: q1 and q2 must be coprime");
    const Complex a1 = q_block(F, q1, budget).A;
    const Complex a2 = q_block(F, q2, budget).A;
    const Complex a12 = q_block(F, q1 * q2, budget).A;
    return std::abs(a12 - a1 * a2);
}

json to_json(const LocalDensityTable& t)
{
    json dens = json::array();
    json vals = json::array();
    for (const auto& r : t.densities) {
        dens.push_back(r.get_str());
        vals.push_back(r.get_d());
    }
    json j{{"p", t.p},
           {"densities_exact", dens},
           {"densities", vals},
           {"bad_prime", t.bad_prime},
           {"flagged", t.flagged},
           {"stop_reason", t.stop_reason},
           {"k_min", t.k_min},
           {"k_max", t.k_max}};
    j["stabilized_at"] = t.stabilized_at ? json(*t.stabilized_at) : json(nullptr);
    if (t.witness)
        j["witness"] = {{"alpha", t.witness->alpha}, {"point", t.witness->point}};
    else
        j["witness"] = nullptr;
    return j;
}

json to_json(const SeriesEstimate& s, bool with_tables)
{
    json j{{"value", s.value},
           {"method", s.method},
           {"truncation", s.truncation},
           {"tail_indicator", s.tail_indicator},
           {"flagged_primes", s.flagged_primes}};
    if (s.method == "q_sum") {
        json blocks = json::array();
        for (std::size_t i = 0; i < s.blocks.size(); ++i)
            blocks.push_back({{"Q", s.block_starts[i]}, {"s", s.blocks[i]}});
        j["blocks"] = blocks;
        j["max_imaginary"] = s.max_imaginary;
    }
    if (with_tables && !s.tables.empty()) {
        json tabs = json::array();
        for (const auto& t : s.tables)
            tabs.push_back(to_json(t));
        j["tables"] = tabs;
    }
    return j;
}

} // namespace hlc
