#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hlc/forms.hpp"
#include "hlc/lattice_count.hpp"

namespace hlc {

struct AuxCountRecord {
    int B = 1;
    std::uint64_t count = 0;
    double f_norm = 0.0;      // sup norm of f^[d]
    double threshold = 0.0;   // f_norm * B^{d-2}, strict
    int d = 2;
    int n = 1;
    bool degenerate = false;  // f^[d] = 0: counts tuples with m = 0
};

// #{(x^(1..d-1)) : |x^(j)|_inf <= B, |m^(f)(x)|_inf < |f^[d]| B^{d-2}}; 2 <= d <= 3.
AuxCountRecord aux_count(const RealForm& f, int B, std::uint64_t budget = default_budget(), unsigned workers = 0);

struct WeylCountRecord {
    int B = 1;
    double delta = 0.0;
    std::uint64_t count = 0;
    int d = 2;
    int n = 1;
};

// Tuples whose m^(f) lies within delta (sup norm) of Z^n.
WeylCountRecord weyl_count(const RealForm& f, int B, double delta, std::uint64_t budget = default_budget(),
                           unsigned workers = 0);

struct EllipsoidBound {
    std::vector<double> eigenvalues;  // of M(beta) = A(beta) / 2
    double form_norm = 0.0;           // |beta . F|
    double value = 0.0;               // prod min(|lambda|^{-1} |beta.F| + 1, 2B + 1)
};

EllipsoidBound ellipsoid_bound(const FormSystem& F, std::span<const double> beta, int B);

struct ExponentFit {
    double slope = 0.0;
    double intercept = 0.0;
    std::vector<double> B, counts;
};

// Least-squares slope of log count against log B; needs 3 distinct B.
ExponentFit fit_exponent(std::span<const double> B, std::span<const double> counts);

struct AuxExponentReport {
    ExponentFit fit;
    std::vector<AuxCountRecord> records;
    int d = 2;
    int n = 1;
    int R = 1;
    std::optional<int> sigma_R;
    // (d-1)n - 2^d C for C = (n - sigma_R)/4 and for C = (n - R + 1)/4.
    std::optional<double> target_sigma;
    double target_alternative = 0.0;
};

AuxExponentReport exponent_fit(const RealForm& f, std::span<const int> schedule, int R,
                               std::optional<int> sigma_R = std::nullopt,
                               std::uint64_t budget = default_budget());

struct WeylInequalityRecord {
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
    int B = 1;
    double delta = 0.0;
    std::uint64_t weyl = 0;
};

WeylInequalityRecord weyl_inequality_check(const FormSystem& F, std::span<const double> alpha,
                                           std::span<const double> beta, double P, double theta, double epsilon,
                                           const Box& box, std::uint64_t budget = default_budget());

nlohmann::json to_json(const AuxCountRecord& r);
nlohmann::json to_json(const WeylCountRecord& r);
nlohmann::json to_json(const EllipsoidBound& r);
nlohmann::json to_json(const AuxExponentReport& r);
nlohmann::json to_json(const WeylInequalityRecord& r);

} // namespace hlc
