#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hlc/forms.hpp"
#include "hlc/lattice_count.hpp"
#include "hlc/numeric.hpp"

namespace hlc {

// S(alpha; P) = sum over x in Z^n with x/P in box of e(alpha . f(x)).
Complex exp_sum(const FormSystem& F, std::span<const double> alpha, double P, const Box& box,
                std::uint64_t budget = default_budget(), unsigned workers = 0);
// Same sum for real-coefficient polynomials.
Complex exp_sum(const std::vector<RealForm>& forms, std::span<const double> alpha, double P, const Box& box,
                std::uint64_t budget = default_budget(), unsigned workers = 0);

// Evaluates S_{q,a} = q^{-n} sum_{y in {1..q}^n} e((a/q) . f(y)) for many a
// after one enumeration per variable component.
class LocalSumTable {
public:
    LocalSumTable(const FormSystem& F, std::uint64_t q, std::uint64_t budget = default_budget());
    Complex operator()(std::span<const std::int64_t> a) const;
    std::uint64_t q() const { return q_; }

private:
    std::uint64_t q_;
    int R_;
    std::vector<std::int64_t> constants_;
    // per component: value vectors mod q (flat index) with multiplicities
    struct Group {
        int size = 0;
        std::vector<std::pair<std::vector<std::uint64_t>, std::uint64_t>> histogram;
    };
    std::vector<Group> groups_;
    std::vector<Complex> roots_;
};

Complex local_sum(const FormSystem& F, std::uint64_t q, std::span<const std::int64_t> a,
                  std::uint64_t budget = default_budget());

struct QuadratureSpec {
    int min_panels = 1;       // per unit length, before oscillation scaling
    int refinements = 2;      // halvings used for the error estimate
    std::uint64_t max_nodes = 50'000'000;
};

struct QuadratureResult {
    Complex value;
    double error = 0.0;
    int panels = 0;           // panels per coordinate at the finest level
    bool low_confidence = false;
};

// S_inf(gamma) = integral over box of e(gamma . f^[d](t)) dt.
QuadratureResult s_infinity(const FormSystem& F, std::span<const double> gamma, const Box& box,
                            const QuadratureSpec& spec = {});

struct ArcCenter {
    std::uint64_t q;
    std::vector<std::int64_t> a;
};

struct ArcParameters {
    double P = 1.0;
    double Delta = 0.5;
    int d = 2;
    int R = 1;
    std::uint64_t q_max = 1;       // floor(P^Delta)
    double radius = 0.0;           // P^{Delta - d}, strict
    std::vector<ArcCenter> centers;

    // Center covering alpha, if any: |alpha - a/q|_inf < radius.
    std::optional<ArcCenter> locate(std::span<const double> alpha) const;
    bool is_major(std::span<const double> alpha) const { return locate(alpha).has_value(); }
    // sum_q q^R (2 radius)^R
    double measure_bound() const;
};

ArcParameters major_arcs(double P, double Delta, int d, int R, std::size_t max_centers = 10'000'000);

struct OrthogonalityResult {
    std::uint64_t count = 0;
    double raw = 0.0;               // (prod M)^{-1} sum_j S(j/M), real part
    double residual = 0.0;          // distance of raw from the nearest integer
    double imaginary = 0.0;
    std::vector<std::uint64_t> grid;
};

// Smallest admissible grid: M_i = 2 * bound_i + 1 with the coefficient-norm bound.
std::vector<std::uint64_t> orthogonality_grid(const FormSystem& F, double P, const Box& box);
OrthogonalityResult count_via_orthogonality(const FormSystem& F, double P, const Box& box,
                                            std::vector<std::uint64_t> grid = {},
                                            std::uint64_t budget = default_budget());

struct RepulsionSample {
    std::vector<double> alpha, beta;
    double value = 0.0;
    double bound = 0.0;     // +inf when beta = 0
    double ratio = 0.0;
};

struct RepulsionSpec {
    std::uint64_t seed = 1;
    int random_samples = 200;
    int structured_q = 6;        // alpha at a/q with q <= structured_q
    int beta_levels = 12;        // log-spaced |beta| between P^{-d} and 1/2
    double epsilon = 1e-3;
};

struct RepulsionReport {
    double P = 1.0;
    double cancellation = 0.0;
    double epsilon = 1e-3;
    std::uint64_t seed = 1;
    double max_ratio = 0.0;
    std::vector<RepulsionSample> samples;
};

double repulsion_bound(double beta_norm, double P, int d, double cancellation);
RepulsionReport repulsion_diagnostic(const FormSystem& F, double P, const Box& box, double cancellation,
                                     const RepulsionSpec& spec = {});

struct ArcApproximation {
    Complex lhs, rhs;
    double residual = 0.0;
    double normalized = 0.0;   // residual / (q P^{n-1} (1 + P^d |alpha|_inf))
};

ArcApproximation major_arc_approximation_check(const FormSystem& F, std::uint64_t q,
                                               std::span<const std::int64_t> a, std::span<const double> offset,
                                               double P, const Box& box);

nlohmann::json to_json(const ArcParameters& arcs, bool with_centers = false);
nlohmann::json to_json(const OrthogonalityResult& r);
nlohmann::json to_json(const RepulsionReport& r, bool with_samples = false);
nlohmann::json to_json(const ArcApproximation& r);

} // namespace hlc
