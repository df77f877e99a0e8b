#include "hlc/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace hlc {

using nlohmann::json;

namespace {

template <class T>
T get_or(const json& j, const char* key, T fallback)
{
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

Box box_from_json(const json& j)
{
    Box b;
    for (const auto& iv : j) {
        if (!iv.is_array() || iv.size() != 2)
            throw ValidationError("config: box entries must be [a, b] pairs");
        b.intervals.emplace_back(iv[0].get<double>(), iv[1].get<double>());
    }
    return b;
}

std::optional<int> sigma_upper(const FormSystem& F, const std::optional<PencilReport>& pencil)
{
    if (pencil)
        return pencil->sigma_R.upper;
    (void)F;
    return std::nullopt;
}

} // namespace

ExperimentConfig config_from_json(const json& doc, const std::string& base_dir)
{
    if (!doc.is_object())
        throw ValidationError("config: document must be an object");
    ExperimentConfig cfg;
    if (doc.contains("system"))
        cfg.document = system_from_json(doc.at("system"));
    else if (doc.contains("system_file")) {
        std::filesystem::path p = doc.at("system_file").get<std::string>();
        if (p.is_relative())
            p = std::filesystem::path(base_dir) / p;
        std::ifstream in(p);
        if (!in)
            throw ValidationError("config: cannot read system file " + p.string());
        std::stringstream ss;
        ss << in.rdbuf();
        cfg.document = parse_system(ss.str());
    } else {
        throw ValidationError("config: needs 'system' or 'system_file'");
    }
    const int n = cfg.document.system.n();
    if (doc.contains("box"))
        cfg.box = box_from_json(doc.at("box"));
    else
        cfg.box = cfg.document.box.value_or(Box::symmetric(n));
    if (cfg.box.n() != n)
        throw ValidationError("config: box dimension does not match n");
    cfg.box.validate();

    cfg.schedule = get_or<std::vector<double>>(doc, "schedule", {});
    for (std::size_t i = 1; i < cfg.schedule.size(); ++i)
        if (!(cfg.schedule[i] > cfg.schedule[i - 1]))
            throw ValidationError("config: P schedule must be strictly increasing");
    for (double P : cfg.schedule)
        if (!(P >= 1.0))
            throw ValidationError("config: schedule entries must be at least 1");
    cfg.count_method = count_method_from_string(get_or<std::string>(doc, "count_method", "auto"));

    if (doc.contains("series")) {
        const auto& s = doc.at("series");
        cfg.p_max = get_or<unsigned long>(s, "p_max", cfg.p_max);
        cfg.q_max = get_or<std::uint64_t>(s, "q_max", cfg.q_max);
        const auto policy = get_or<std::string>(s, "policy", "adaptive");
        if (policy == "fixed")
            cfg.policy.kind = KPolicy::Kind::fixed;
        else if (policy != "adaptive")
            throw ValidationError("config: series.policy must be 'fixed' or 'adaptive'");
        cfg.policy.fixed_k = get_or<int>(s, "fixed_k", cfg.policy.fixed_k);
        cfg.policy.tol = get_or<double>(s, "tol", cfg.policy.tol);
        cfg.policy.k_max = get_or<int>(s, "k_max", cfg.policy.k_max);
        cfg.policy.bad_prime_extra = get_or<int>(s, "bad_prime_extra", cfg.policy.bad_prime_extra);
    }
    if (doc.contains("integral")) {
        const auto& s = doc.at("integral");
        cfg.integral_P = get_or<double>(s, "P", cfg.integral_P);
        cfg.measure.samples = get_or<std::uint64_t>(s, "samples", cfg.measure.samples);
        cfg.measure.strata = get_or<int>(s, "strata", cfg.measure.strata);
        cfg.measure.grid_check = get_or<bool>(s, "grid_check", cfg.measure.grid_check);
        cfg.measure.grid_points = get_or<int>(s, "grid_points", cfg.measure.grid_points);
        cfg.oscillatory = get_or<bool>(s, "oscillatory", cfg.oscillatory);
        cfg.oscillatory_spec.G = get_or<double>(s, "G", cfg.oscillatory_spec.G);
    }
    if (doc.contains("arcs"))
        cfg.Delta = get_or<double>(doc.at("arcs"), "Delta", cfg.Delta);
    cfg.seed = get_or<std::uint64_t>(doc, "seed", cfg.seed);
    cfg.measure.seed = cfg.seed;
    cfg.diagnostics = get_or<std::vector<std::string>>(doc, "diagnostics", {});
    static const std::vector<std::string> known{"repulsion", "weyl", "major_arc", "exponent_fit", "orthogonality",
                                                "arcs"};
    for (const auto& d : cfg.diagnostics)
        if (std::find(known.begin(), known.end(), d) == known.end())
            throw ValidationError("config: unknown diagnostic '" + d + "'");
    if (doc.contains("diagnostic_settings")) {
        const auto& s = doc.at("diagnostic_settings");
        auto& d = cfg.diag;
        d.P = get_or<double>(s, "P", d.P);
        d.seeds = get_or<std::vector<std::uint64_t>>(s, "seeds", d.seeds);
        if (s.contains("cancellation"))
            d.cancellation = s.at("cancellation").get<double>();
        d.random_samples = get_or<int>(s, "random_samples", d.random_samples);
        d.weyl_P = get_or<double>(s, "weyl_P", d.weyl_P);
        d.weyl_theta = get_or<double>(s, "weyl_theta", d.weyl_theta);
        d.weyl_samples = get_or<int>(s, "weyl_samples", d.weyl_samples);
        d.arc_q = get_or<std::uint64_t>(s, "arc_q", d.arc_q);
        d.arc_a = get_or<std::vector<std::int64_t>>(s, "arc_a", d.arc_a);
        d.arc_offset = get_or<std::vector<double>>(s, "arc_offset", d.arc_offset);
        d.arc_P = get_or<std::vector<double>>(s, "arc_P", d.arc_P);
        d.fit_B = get_or<std::vector<int>>(s, "fit_B", d.fit_B);
        if (s.contains("fit_beta"))
            d.fit_beta = s.at("fit_beta").get<std::vector<double>>();
        d.orthogonality_P = get_or<double>(s, "orthogonality_P", d.orthogonality_P);
    }
    if (doc.contains("tolerances")) {
        const auto& t = doc.at("tolerances");
        if (t.contains("relative_error"))
            cfg.relative_error_tolerance = t.at("relative_error").get<double>();
        cfg.series_tolerance = get_or<double>(t, "series_agreement", cfg.series_tolerance);
    }
    if (doc.contains("dimW"))
        cfg.dimW = doc.at("dimW").get<int>();
    cfg.pencil_height = get_or<int>(doc, "pencil_height", cfg.pencil_height);
    cfg.budget = get_or<std::uint64_t>(doc, "budget", cfg.budget);
    return cfg;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot read config file " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config: malformed JSON: ") + e.what());
    }
    return config_from_json(doc, std::filesystem::path(path).parent_path().string());
}

json to_json(const ExperimentConfig& cfg)
{
    json j;
    j["system"] = to_json(cfg.document.system);
    j["box"] = to_json(cfg.box);
    j["box_admissible"] = cfg.box.admissible();
    j["boundary"] = "closed";
    j["schedule"] = cfg.schedule;
    j["count_method"] = to_string(cfg.count_method);
    j["series"] = {{"p_max", cfg.p_max},
                   {"q_max", cfg.q_max},
                   {"policy", cfg.policy.kind == KPolicy::Kind::fixed ? "fixed" : "adaptive"},
                   {"fixed_k", cfg.policy.fixed_k},
                   {"tol", cfg.policy.tol},
                   {"k_max", cfg.policy.k_max},
                   {"bad_prime_extra", cfg.policy.bad_prime_extra}};
    j["integral"] = {{"P", cfg.integral_P},
                     {"samples", cfg.measure.samples},
                     {"strata", cfg.measure.strata},
                     {"grid_check", cfg.measure.grid_check},
                     {"grid_points", cfg.measure.grid_points},
                     {"oscillatory", cfg.oscillatory},
                     {"G", cfg.oscillatory_spec.G}};
    j["arcs"] = {{"Delta", cfg.Delta}};
    j["seed"] = cfg.seed;
    j["diagnostics"] = cfg.diagnostics;
    const auto& d = cfg.diag;
    j["diagnostic_settings"] = {{"P", d.P},
                                {"seeds", d.seeds},
                                {"random_samples", d.random_samples},
                                {"weyl_P", d.weyl_P},
                                {"weyl_theta", d.weyl_theta},
                                {"weyl_samples", d.weyl_samples},
                                {"arc_q", d.arc_q},
                                {"arc_a", d.arc_a},
                                {"arc_offset", d.arc_offset},
                                {"arc_P", d.arc_P},
                                {"fit_B", d.fit_B},
                                {"orthogonality_P", d.orthogonality_P}};
    j["diagnostic_settings"]["cancellation"] = d.cancellation ? json(*d.cancellation) : json(nullptr);
    j["diagnostic_settings"]["fit_beta"] = d.fit_beta ? json(*d.fit_beta) : json(nullptr);
    j["tolerances"] = {{"series_agreement", cfg.series_tolerance}};
    j["tolerances"]["relative_error"] =
        cfg.relative_error_tolerance ? json(*cfg.relative_error_tolerance) : json(nullptr);
    j["dimW"] = cfg.dimW ? json(*cfg.dimW) : json(nullptr);
    j["pencil_height"] = cfg.pencil_height;
    j["budget"] = cfg.budget;
    return j;
}

AsymptoticReport run_verify_asymptotic(const ExperimentConfig& cfg)
{
    const FormSystem& F = cfg.document.system;
    if (cfg.schedule.empty())
        throw ValidationError("verify: the P schedule is empty");
    AsymptoticReport rep;
    const int n = F.n(), d = F.degree(), R = F.R();
    rep.expected_exponent = n - d * R;

    if (d == 2 && F.independent()) {
        const std::vector<unsigned long> probe{3, 5};
        try {
            rep.pencil = analyze_pencil(F, cfg.pencil_height, cfg.dimW, probe);
        } catch (const BudgetError&) {
            rep.pencil = analyze_pencil(F, cfg.pencil_height, cfg.dimW, {});
        }
    }

    rep.euler = euler_product(F, cfg.p_max, cfg.policy, cfg.budget, cfg.workers);
    rep.qsum = q_sum_series(F, cfg.q_max, cfg.budget, cfg.workers);
    rep.singular_series = rep.euler.value;
    rep.series_agreement = std::fabs(rep.qsum.value - rep.euler.value) / std::fabs(rep.euler.value);
    if (rep.series_agreement > cfg.series_tolerance)
        rep.failures.push_back("singular series methods disagree by " + std::to_string(rep.series_agreement));

    rep.sigma_measure = sigma_infty_measure(F, cfg.box, cfg.integral_P, cfg.measure);
    rep.singular_integral = rep.sigma_measure.value;
    if (cfg.oscillatory && R <= 2) {
        try {
            rep.sigma_oscillatory = sigma_infty_oscillatory(F, cfg.box, cfg.oscillatory_spec);
            const double gap = std::fabs(rep.sigma_oscillatory->value - rep.sigma_measure.value);
            rep.integral_agreement = gap <= rep.sigma_oscillatory->error_bar + rep.sigma_measure.error_bar;
            if (!*rep.integral_agreement)
                rep.failures.push_back("singular integral methods disagree beyond their error bars");
        } catch (const NumericalError& e) {
            rep.oscillatory_error = e.what();
        }
    }

    const double constant = rep.singular_series * rep.singular_integral;
    for (double P : cfg.schedule) {
        CountRequest req{F, cfg.box, P, cfg.count_method, cfg.budget, cfg.workers};
        const CountResult res = count_solutions(req);
        AsymptoticRow row;
        row.P = P;
        row.N = res.count;
        row.method = to_string(res.method);
        row.prediction = constant * std::pow(P, rep.expected_exponent);
        row.relative_error = std::fabs(static_cast<double>(row.N) - row.prediction) / row.prediction;
        rep.rows.push_back(row);
        if (P == cfg.schedule.front() && res.method != CountMethod::naive) {
            CountRequest naive = req;
            naive.method = CountMethod::naive;
            rep.naive_check_P_count = count_naive(naive).count;
            rep.naive_check_ok = rep.naive_check_P_count == res.count;
            if (!rep.naive_check_ok)
                rep.failures.push_back("fast counter disagrees with naive enumeration at the smallest P");
        } else if (P == cfg.schedule.front()) {
            rep.naive_check_P_count = res.count;
        }
    }
    std::vector<double> Ps, Ns;
    for (const auto& r : rep.rows)
        if (r.N > 0) {
            Ps.push_back(r.P);
            Ns.push_back(static_cast<double>(r.N));
        }
    if (Ps.size() >= 3)
        rep.fitted_exponent = fit_exponent(Ps, Ns).slope;
    if (cfg.relative_error_tolerance && rep.rows.back().relative_error > *cfg.relative_error_tolerance)
        rep.failures.push_back("relative error at the largest P exceeds the tolerance");
    return rep;
}

json to_json(const AsymptoticReport& r, const ExperimentConfig& cfg)
{
    json rows = json::array();
    for (const auto& row : r.rows)
        rows.push_back({{"P", row.P},
                        {"N", row.N},
                        {"method", row.method},
                        {"prediction", row.prediction},
                        {"relative_error", row.relative_error}});
    json j;
    j["schema"] = kReportSchema;
    j["kind"] = "verify";
    j["config"] = to_json(cfg);
    j["rows"] = rows;
    j["naive_check"] = {{"P", cfg.schedule.front()}, {"count", r.naive_check_P_count}, {"agrees", r.naive_check_ok}};
    j["singular_series"] = {{"value", r.singular_series},
                            {"euler_product", to_json(r.euler)},
                            {"q_sum", to_json(r.qsum)},
                            {"relative_disagreement", r.series_agreement}};
    j["singular_integral"] = {{"value", r.singular_integral}, {"measure", to_json(r.sigma_measure)}};
    if (r.sigma_oscillatory)
        j["singular_integral"]["oscillatory"] = to_json(*r.sigma_oscillatory);
    if (!r.oscillatory_error.empty())
        j["singular_integral"]["oscillatory_error"] = r.oscillatory_error;
    j["singular_integral"]["methods_agree"] = r.integral_agreement ? json(*r.integral_agreement) : json(nullptr);
    j["pencil"] = r.pencil ? to_json(*r.pencil) : json(nullptr);
    j["expected_exponent"] = r.expected_exponent;
    j["fitted_exponent"] = r.fitted_exponent ? json(*r.fitted_exponent) : json(nullptr);
    j["failures"] = r.failures;
    j["pass"] = r.pass();
    return j;
}

DiagnosticsBundle run_diagnostics(const ExperimentConfig& cfg)
{
    const FormSystem& F = cfg.document.system;
    const int n = F.n(), R = F.R(), d = F.degree();
    DiagnosticsBundle out;
    auto selected = [&](const char* name) {
        return std::find(cfg.diagnostics.begin(), cfg.diagnostics.end(), name) != cfg.diagnostics.end();
    };
    std::optional<PencilReport> pencil;
    auto need_pencil = [&]() -> const std::optional<PencilReport>& {
        if (!pencil && d == 2 && F.independent())
            pencil = analyze_pencil(F, cfg.pencil_height, cfg.dimW, {});
        return pencil;
    };

    if (selected("arcs"))
        out.records["arcs"] = to_json(major_arcs(cfg.diag.P, cfg.Delta, d, R));

    if (selected("repulsion")) {
        double C = 0.0;
        std::string source;
        if (cfg.diag.cancellation) {
            C = *cfg.diag.cancellation;
            source = "configured";
        } else if (auto s = sigma_upper(F, need_pencil())) {
            C = (n - *s) / 4.0;
            source = "(n - sigma_R) / 4";
        } else {
            throw ValidationError("repulsion: set diagnostic_settings.cancellation for systems without a pencil");
        }
        json runs = json::array();
        std::vector<double> maxima;
        for (auto seed : cfg.diag.seeds) {
            RepulsionSpec spec;
            spec.seed = seed;
            spec.random_samples = cfg.diag.random_samples;
            const auto rep = repulsion_diagnostic(F, cfg.diag.P, cfg.box, C, spec);
            runs.push_back(to_json(rep));
            maxima.push_back(rep.max_ratio);
        }
        double spread = 0.0;
        if (!maxima.empty()) {
            const auto [lo, hi] = std::minmax_element(maxima.begin(), maxima.end());
            spread = *hi > 0 ? (*hi - *lo) / *hi : 0.0;
        }
        out.records["repulsion"] = {{"cancellation", C},
                                    {"cancellation_source", source},
                                    {"runs", runs},
                                    {"relative_spread", spread}};
        if (spread > 0.05)
            out.failures.push_back("repulsion constant varies by more than 5% across seeds");
    }

    if (selected("weyl")) {
        json samples = json::array();
        std::mt19937_64 rng(cfg.seed);
        for (int s = 0; s < cfg.diag.weyl_samples; ++s) {
            std::vector<double> alpha(R), beta(R);
            for (int i = 0; i < R; ++i) {
                alpha[i] = u01(rng());
                beta[i] = (2.0 * u01(rng()) - 1.0) * std::pow(cfg.diag.weyl_P, 1.0 - d);
            }
            const auto rec = weyl_inequality_check(F, alpha, beta, cfg.diag.weyl_P, cfg.diag.weyl_theta, 1e-3, cfg.box,
                                                   cfg.budget);
            json j = to_json(rec);
            j["alpha"] = alpha;
            j["beta"] = beta;
            samples.push_back(j);
        }
        out.records["weyl"] = {{"P", cfg.diag.weyl_P}, {"theta", cfg.diag.weyl_theta}, {"samples", samples}};
    }

    if (selected("major_arc")) {
        json rows = json::array();
        std::vector<std::int64_t> a = cfg.diag.arc_a;
        std::vector<double> off = cfg.diag.arc_offset;
        a.resize(R, a.empty() ? 0 : a.back());
        off.resize(R, 0.0);
        for (double P : cfg.diag.arc_P) {
            const auto rec = major_arc_approximation_check(F, cfg.diag.arc_q, a, off, P, Box::unit(n));
            json j = to_json(rec);
            j["P"] = P;
            rows.push_back(j);
        }
        out.records["major_arc"] = {{"q", cfg.diag.arc_q}, {"a", a}, {"offset", off}, {"box", "unit"}, {"rows", rows}};
    }

    if (selected("exponent_fit")) {
        std::vector<double> beta;
        std::optional<int> sigma;
        const auto& pr = need_pencil();
        if (pr)
            sigma = pr->sigma_R.upper;
        if (cfg.diag.fit_beta)
            beta = *cfg.diag.fit_beta;
        else if (pr && !pr->min_rank.witness.empty())
            for (const auto& w : pr->min_rank.witness)
                beta.push_back(w.get_d());
        else
            beta.assign(R, 0.0), beta[0] = 1.0;
        if (static_cast<int>(beta.size()) != R)
            throw ValidationError("exponent_fit: fit_beta must have R entries");
        const auto rep = exponent_fit(combine(F, beta), cfg.diag.fit_B, R, sigma, cfg.budget);
        json j = to_json(rep);
        j["beta"] = beta;
        out.records["exponent_fit"] = j;
    }

    if (selected("orthogonality")) {
        const auto orth = count_via_orthogonality(F, cfg.diag.orthogonality_P, cfg.box, {}, cfg.budget);
        CountRequest req{F, cfg.box, cfg.diag.orthogonality_P, CountMethod::naive, cfg.budget, cfg.workers};
        const auto naive = count_naive(req);
        json j = to_json(orth);
        j["P"] = cfg.diag.orthogonality_P;
        j["naive"] = naive.count;
        j["agrees"] = naive.count == orth.count;
        out.records["orthogonality"] = j;
        if (naive.count != orth.count)
            out.failures.push_back("orthogonality count differs from naive enumeration");
    }
    return out;
}

std::string dump_report(const json& j) { return j.dump(2) + "\n"; }

} // namespace hlc
