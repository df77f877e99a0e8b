#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hlc/aux_inequality.hpp"
#include "hlc/exp_sums.hpp"
#include "hlc/lattice_count.hpp"
#include "hlc/local_densities.hpp"
#include "hlc/pencil.hpp"
#include "hlc/singular_integral.hpp"
#include "hlc/system_io.hpp"

namespace hlc {

inline constexpr const char* kReportSchema = "hlcircle-report/1";

struct DiagnosticSettings {
    double P = 50.0;                          // repulsion
    std::vector<std::uint64_t> seeds{1, 2};   // repulsion reruns
    std::optional<double> cancellation;       // default (n - sigma_R) / 4
    int random_samples = 200;
    double weyl_P = 30.0;
    double weyl_theta = 1.0;
    int weyl_samples = 8;
    std::uint64_t arc_q = 2;
    std::vector<std::int64_t> arc_a{1};
    std::vector<double> arc_offset{0.0};
    std::vector<double> arc_P{20.0, 40.0, 80.0};
    std::vector<int> fit_B{5, 10, 20, 40};
    std::optional<std::vector<double>> fit_beta;  // default: the pencil witness
    double orthogonality_P = 5.0;
};

struct ExperimentConfig {
    SystemDocument document;
    Box box;
    std::vector<double> schedule;
    CountMethod count_method = CountMethod::automatic;
    unsigned long p_max = 50;
    std::uint64_t q_max = 200;
    KPolicy policy;
    MeasureSpec measure;
    double integral_P = 1000.0;
    bool oscillatory = true;
    OscillatorySpec oscillatory_spec;
    double Delta = 0.2;
    std::uint64_t seed = 1;
    std::vector<std::string> diagnostics;
    DiagnosticSettings diag;
    std::optional<double> relative_error_tolerance;
    double series_tolerance = 0.02;
    std::optional<int> dimW;
    int pencil_height = 3;
    std::uint64_t budget = default_budget();
    unsigned workers = 0;
};

// Config document: {"system": {...} | "system_file": path, "box", "schedule",
// "count_method", "series": {...}, "integral": {...}, "arcs": {...}, "seed",
// "diagnostics": [...], "diagnostic_settings": {...}, "tolerances": {...},
// "budget"}. Relative system_file paths resolve against base_dir.
ExperimentConfig config_from_json(const nlohmann::json& doc, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& cfg);

struct AsymptoticRow {
    double P = 0.0;
    std::uint64_t N = 0;
    std::string method;
    double prediction = 0.0;
    double relative_error = 0.0;
};

struct AsymptoticReport {
    std::vector<AsymptoticRow> rows;
    std::uint64_t naive_check_P_count = 0;
    bool naive_check_ok = true;
    SeriesEstimate euler;
    SeriesEstimate qsum;
    double series_agreement = 0.0;       // |q_sum - euler| / euler
    IntegralEstimate sigma_measure;
    std::optional<IntegralEstimate> sigma_oscillatory;
    std::string oscillatory_error;
    std::optional<bool> integral_agreement;
    std::optional<PencilReport> pencil;
    std::optional<double> fitted_exponent;
    int expected_exponent = 0;           // n - dR
    double singular_series = 0.0;
    double singular_integral = 0.0;
    std::vector<std::string> failures;
    bool pass() const { return failures.empty(); }
};

AsymptoticReport run_verify_asymptotic(const ExperimentConfig& cfg);
nlohmann::json to_json(const AsymptoticReport& r, const ExperimentConfig& cfg);

struct DiagnosticsBundle {
    nlohmann::json records = nlohmann::json::object();
    std::vector<std::string> failures;
};

DiagnosticsBundle run_diagnostics(const ExperimentConfig& cfg);

// Serialization with fixed key order and number formatting.
std::string dump_report(const nlohmann::json& j);

} // namespace hlc
