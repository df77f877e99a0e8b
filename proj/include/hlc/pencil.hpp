#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hlc/exact_linalg.hpp"
#include "hlc/forms.hpp"

namespace hlc {

using IntMatrix = std::vector<std::vector<std::int64_t>>;

// Symmetric integer A with f(x) = 1/2 x^T A x; the form's matrix is M = A/2.
struct DoubledGramMatrix {
    IntMatrix entries;
    int n() const { return static_cast<int>(entries.size()); }
};

DoubledGramMatrix gram_matrix(const IntegerForm& f);

// A(beta) = sum_i beta_i A_i over the doubled Gram matrices of F.
RationalMatrix pencil_matrix(const FormSystem& F, std::span<const mpq_class> beta);
int pencil_rank(const FormSystem& F, std::span<const mpq_class> beta);

struct PencilBudget {
    int height = 4;                // integer witness search |beta_i| <= height (R >= 3)
    int random_probes = 2000;      // eigenvalue probes (R >= 3)
    std::uint64_t seed = 1;
    int max_exact_n = 10;          // minor-gcd certification limit for R == 2
};

struct MinRankResult {
    int lower = 0;
    int upper = 0;
    bool certified = false;        // lower == true minimum, proven
    std::string method;
    std::vector<mpq_class> witness;
    bool witness_exact = true;     // rank(A(witness)) == upper exactly
    int witness_rank = 0;
};

MinRankResult pencil_min_rank(const FormSystem& F, const PencilBudget& budget = {});

// sigma_R = n - min rank; an interval when the minimum is only bracketed.
struct SigmaInterval {
    int lower = 0;
    int upper = 0;
    bool exact() const { return lower == upper; }
};

SigmaInterval sigma_R(const FormSystem& F, const PencilBudget& budget = {});
SigmaInterval sigma_R(const FormSystem& F, const MinRankResult& min_rank);

struct SigmaZResult {
    int value = 0;
    bool heuristic = false;
    std::vector<std::int64_t> witness;
};

// max over 0 != a in Z^R, |a|_inf <= H of 1 + dim sing V(a.F^[d]).
SigmaZResult sigma_Z_lower(const FormSystem& F, int H);

enum class Verdict { holds, fails, indeterminate };
std::string to_string(Verdict v);

struct ConditionReport {
    Verdict birch = Verdict::indeterminate;
    bool birch_depends_on_dimW = false;
    Verdict new_condition = Verdict::indeterminate;  // n - sigma_R > 8R
    bool new_condition_applicable = false;           // d == 2
    int birch_threshold = 0;                         // (d-1) 2^{d-1} R (R+1)
    int new_threshold = 0;                           // 8R
    // sigma_R <= 1 + dim W <= R - 1 when smooth; nullopt when not checked.
    std::optional<bool> smooth_chain_consistent;
    std::string note;
};

ConditionReport check_conditions(const FormSystem& F, SigmaInterval sigma, std::optional<int> dimW,
                                 std::optional<bool> smooth = std::nullopt);

struct SmoothnessProbeResult {
    struct PerPrime {
        unsigned long p = 0;
        bool singular_point_found = false;
        std::vector<std::int64_t> point;
        std::uint64_t points_checked = 0;
    };
    std::vector<PerPrime> primes;
    bool passed() const;
};

SmoothnessProbeResult smoothness_probe(const FormSystem& F, std::span<const unsigned long> primes,
                                       std::uint64_t budget = 50'000'000);

struct PencilReport {
    MinRankResult min_rank;
    SigmaInterval sigma_R;
    SigmaZResult sigma_Z;
    int sigma_Z_height = 0;
    ConditionReport conditions;
    std::optional<SmoothnessProbeResult> smoothness;
};

PencilReport analyze_pencil(const FormSystem& F, int height, std::optional<int> dimW,
                            std::span<const unsigned long> probe_primes, const PencilBudget& budget = {});

nlohmann::json to_json(const MinRankResult& r);
nlohmann::json to_json(const PencilReport& r);

} // namespace hlc
