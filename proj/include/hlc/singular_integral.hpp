#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hlc/exp_sums.hpp"
#include "hlc/forms.hpp"

namespace hlc {

struct IntegralEstimate {
    double value = 0.0;
    double error_bar = 0.0;
    std::string method;          // "measure_limit" or "oscillatory"
    nlohmann::json parameters;
    std::uint64_t seed = 0;
    std::string note;
};

struct MeasureSpec {
    std::uint64_t samples = 1'000'000;
    std::uint64_t seed = 1;
    int strata = 64;
    bool grid_check = true;      // deterministic grid when at most 3 coordinates are sampled
    int grid_points = 256;       // per sampled coordinate
};

// P^{-(n-dR)} vol{t : t/P in box, |f_i^[d](t)| <= 1/2}, computed as
// P^{dR} vol{s in box : |f_i^[d](s)| <= P^{-d}/2}.
IntegralEstimate sigma_infty_measure(const FormSystem& F, const Box& box, double P, const MeasureSpec& spec = {});

struct OscillatorySpec {
    double G = 32.0;             // |gamma|_inf <= G
    int panels_per_unit = 2;     // gamma panels per unit length, scaled by the form size
    QuadratureSpec inner{1, 1, 50'000'000};
    bool tail = true;            // false: report the truncated integral only
};

// integral over |gamma|_inf <= G of S_inf(gamma), plus a fitted power-law tail.
IntegralEstimate sigma_infty_oscillatory(const FormSystem& F, const Box& box, const OscillatorySpec& spec = {});

struct SmoothPoint {
    std::vector<double> point;
    double residual = 0.0;
    double min_singular_value = 0.0;
};

// Damped Newton from box-interior seeds on F^[d] = 0 with a full-rank Jacobian.
std::optional<SmoothPoint> real_smooth_point(const FormSystem& F, const Box& box, std::uint64_t seed = 1,
                                             int attempts = 200);

nlohmann::json to_json(const IntegralEstimate& e);

} // namespace hlc
