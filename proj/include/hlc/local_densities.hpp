#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <gmpxx.h>
#include <json.hpp>

#include "hlc/forms.hpp"
#include "hlc/lattice_count.hpp"
#include "hlc/numeric.hpp"

namespace hlc {

// rho_p(k) = p^{-k(n-R)} #{b mod p^k : F(b) == 0 mod p^k}, exact.
mpq_class density_exact(const FormSystem& F, unsigned long p, int k, std::uint64_t budget = default_budget(),
                        ModMethod method = ModMethod::automatic);
double density(const FormSystem& F, unsigned long p, int k, std::uint64_t budget = default_budget());

// A solution b mod p^{2 alpha + 1} whose R x R Jacobian minors have minimal
// p-adic valuation exactly alpha.
struct HenselWitness {
    int alpha = 0;
    std::vector<std::int64_t> point;
    int exponent() const { return 2 * alpha + 1; }
};

std::optional<HenselWitness> find_hensel_witness(const FormSystem& F, unsigned long p, int max_alpha = 2,
                                                 std::uint64_t search_budget = 2'000'000);

// Density of the lifts of the witness class:
// p^{-k(n-R)} #{b mod p^k : b == w mod p^{2 alpha + 1}, F(b) == 0 mod p^k}.
mpq_class witness_class_density(const FormSystem& F, unsigned long p, int k, const HenselWitness& w,
                                std::uint64_t budget = default_budget());

struct KPolicy {
    enum class Kind { fixed, adaptive } kind = Kind::adaptive;
    int fixed_k = 3;
    double tol = 1e-4;       // relative
    int k_max = 6;
    int bad_prime_extra = 2; // added to k_max when no alpha = 0 witness exists
};

struct LocalDensityTable {
    unsigned long p = 2;
    std::vector<mpq_class> densities;   // index k - 1
    std::optional<int> stabilized_at;
    std::optional<HenselWitness> witness;
    bool bad_prime = false;
    bool flagged = false;               // still moving at k_max or stopped by budget
    std::string stop_reason;
    int k_min = 1;
    int k_max = 1;

    const mpq_class& final_density() const { return densities.back(); }
};

LocalDensityTable local_density_table(const FormSystem& F, unsigned long p, const KPolicy& policy = {},
                                      std::uint64_t budget = default_budget());

struct SeriesEstimate {
    double value = 1.0;
    std::string method;                  // "q_sum" or "euler_product"
    nlohmann::json truncation;
    double tail_indicator = 0.0;
    std::vector<double> blocks;          // s(Q) for complete dyadic blocks (q_sum)
    std::vector<std::uint64_t> block_starts;
    std::vector<LocalDensityTable> tables;  // euler_product
    std::vector<unsigned long> flagged_primes;
    double max_imaginary = 0.0;          // q_sum
};

SeriesEstimate euler_product(const FormSystem& F, unsigned long p_max, const KPolicy& policy = {},
                             std::uint64_t budget = default_budget(), unsigned workers = 0);

// A(q) = sum over a in {1..q}^R with gcd(a, q) = 1 of S_{q,a}, and the
// matching sum of |S_{q,a}|.
struct QBlock {
    Complex A;
    double abs_sum = 0.0;
};
QBlock q_block(const FormSystem& F, std::uint64_t q, std::uint64_t budget = default_budget());

SeriesEstimate q_sum_series(const FormSystem& F, std::uint64_t Q_max, std::uint64_t budget = default_budget(),
                            unsigned workers = 0);

// |A(q1 q2) - A(q1) A(q2)|
double multiplicativity_check(const FormSystem& F, std::uint64_t q1, std::uint64_t q2,
                              std::uint64_t budget = default_budget());

std::vector<unsigned long> primes_up_to(unsigned long n);

nlohmann::json to_json(const LocalDensityTable& t);
nlohmann::json to_json(const SeriesEstimate& s, bool with_tables = true);

} // namespace hlc
