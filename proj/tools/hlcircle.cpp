// hlcircle: command-line front end for the circle-method toolkit.
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "hlc/harness.hpp"

using namespace hlc;
using nlohmann::json;

namespace {

struct Globals {
    std::string config;
    std::string system_file;
    std::vector<std::string> forms;
    std::optional<std::uint64_t> seed;
    std::uint64_t budget = 0;
    std::string out;
    std::string format = "json";
    bool timing = false;
    unsigned workers = 0;
};

ExperimentConfig load(const Globals& g)
{
    ExperimentConfig cfg;
    if (!g.config.empty()) {
        cfg = load_config(g.config);
    } else if (!g.system_file.empty()) {
        std::ifstream in(g.system_file);
        if (!in)
            throw ValidationError("cannot read system file " + g.system_file);
        std::stringstream ss;
        ss << in.rdbuf();
        json doc{{"system", json::parse(ss.str())}};
        cfg = config_from_json(doc);
    } else if (!g.forms.empty()) {
        json doc{{"system", {{"forms", g.forms}}}};
        cfg = config_from_json(doc);
    } else {
        throw ValidationError("no system given: use --config, --system or --form");
    }
    if (g.seed) {
        cfg.seed = *g.seed;
        cfg.measure.seed = *g.seed;
    }
    if (g.budget)
        cfg.budget = g.budget;
    cfg.workers = g.workers;
    return cfg;
}

void emit(const Globals& g, const std::string& text)
{
    if (g.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(g.out);
    if (!f)
        throw ValidationError("cannot write " + g.out);
    f << text;
}

std::string csv_number(double v)
{
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"hlcircle: Hardy-Littlewood circle method experiments"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "experiment config (JSON)");
    app.add_option("--system", g.system_file, "system document (JSON)");
    app.add_option("--form", g.forms, "form expression, repeatable (e.g. 'x1^2+x2^2-x3^2')");
    app.add_option("--seed", g.seed, "random seed (overrides the config)");
    app.add_option("--budget", g.budget, "enumeration budget (default $HLC_BUDGET or 2e9)");
    app.add_option("--out", g.out, "write the report here instead of stdout");
    app.add_option("--format", g.format, "json or csv")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
    app.add_flag("--timing", g.timing, "record wall-clock runtime in the report");
    app.add_option("--workers", g.workers, "worker threads (default $HLC_WORKERS or all cores)");
    app.fallthrough();

    double P = 10.0;
    std::string method = "auto";
    unsigned long modulus = 0;
    int k = 1;
    auto* count = app.add_subcommand("count", "count integer solutions in P times the box (or modulo p^k)");
    count->add_option("-P,--P", P, "scale")->capture_default_str();
    count->add_option("--method", method, "naive, meet_in_middle or auto")->capture_default_str();
    count->add_option("--modulus", modulus, "count solutions mod p^k instead");
    count->add_option("-k,--k", k, "exponent for --modulus")->capture_default_str();

    unsigned long p_max = 0;
    std::uint64_t q_max = 0;
    std::string series_method = "both";
    auto* series = app.add_subcommand("series", "singular series by Euler product and q-sum");
    series->add_option("--p-max", p_max, "largest prime in the Euler product");
    series->add_option("--q-max", q_max, "largest modulus in the q-sum");
    series->add_option("--method", series_method, "euler, qsum or both")
        ->check(CLI::IsMember({"euler", "qsum", "both"}))
        ->capture_default_str();

    double integral_P = 0.0, G = 0.0;
    std::uint64_t samples = 0;
    std::string integral_method = "both";
    auto* integral = app.add_subcommand("integral", "singular integral by measure and oscillatory methods");
    integral->add_option("-P,--P", integral_P, "scale for the measure method");
    integral->add_option("--samples", samples, "Monte Carlo samples");
    integral->add_option("--G", G, "gamma truncation radius");
    integral->add_option("--method", integral_method, "measure, oscillatory or both")
        ->check(CLI::IsMember({"measure", "oscillatory", "both"}))
        ->capture_default_str();

    int height = 3;
    auto* pencil = app.add_subcommand("pencil", "pencil ranks, sigma_R, sigma_Z and hypothesis verdicts");
    pencil->add_option("--height", height, "integer search height for sigma_Z")->capture_default_str();

    std::vector<double> beta;
    std::vector<int> Bs{5, 10, 20};
    auto* aux = app.add_subcommand("aux", "auxiliary counts against the ellipsoid bound");
    aux->add_option("--beta", beta, "pencil direction (default: first form)");
    aux->add_option("--B", Bs, "box sizes")->capture_default_str();

    double Delta = 0.0;
    std::vector<double> alpha;
    double arcs_P = 100.0;
    auto* arcs = app.add_subcommand("arcs", "major arc parameters and membership");
    arcs->add_option("-P,--P", arcs_P, "scale")->capture_default_str();
    arcs->add_option("--Delta", Delta, "arc exponent in (0, 1)");
    arcs->add_option("--alpha", alpha, "point to classify");

    auto* verify = app.add_subcommand("verify", "end-to-end check of N(P) against the prediction");
    auto* diagnose = app.add_subcommand("diagnose", "run the diagnostics selected in the config");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    const auto start = std::chrono::steady_clock::now();
    auto finish = [&](json j, const std::string& csv, int status) {
        if (g.timing)
            j["runtime_seconds"] =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (g.format == "csv") {
            if (csv.empty())
                throw ValidationError("csv output is not available for this subcommand");
            emit(g, csv);
        } else {
            emit(g, dump_report(j));
        }
        return status;
    };

    try {
        ExperimentConfig cfg = load(g);
        const FormSystem& F = cfg.document.system;
        json base{{"schema", kReportSchema}, {"system", to_json(F)}, {"box", to_json(cfg.box)}};

        if (*count) {
            json j = base;
            j["kind"] = "count";
            if (modulus) {
                ModularCountRequest req{F, modulus, k, cfg.budget, ModMethod::automatic, 0, {}};
                const mpz_class c = count_mod(req);
                j["modular"] = {{"p", modulus}, {"k", k}, {"count", c.get_str()}, {"budget", cfg.budget}};
                return finish(j, "p,k,count\n" + std::to_string(modulus) + "," + std::to_string(k) + "," + c.get_str() + "\n",
                              0);
            }
            CountRequest req{F, cfg.box, P, count_method_from_string(method), cfg.budget, cfg.workers};
            const auto res = count_solutions(req);
            j["count"] = to_json(req, res);
            return finish(j, "P,count,method\n" + csv_number(P) + "," + std::to_string(res.count) + "," +
                                 to_string(res.method) + "\n",
                          0);
        }
        if (*series) {
            json j = base;
            j["kind"] = "series";
            std::string csv = "method,value,tail_indicator\n";
            if (series_method != "qsum") {
                const auto e = euler_product(F, p_max ? p_max : cfg.p_max, cfg.policy, cfg.budget, cfg.workers);
                j["euler_product"] = to_json(e);
                csv += "euler_product," + csv_number(e.value) + "," + csv_number(e.tail_indicator) + "\n";
            }
            if (series_method != "euler") {
                const auto q = q_sum_series(F, q_max ? q_max : cfg.q_max, cfg.budget, cfg.workers);
                j["q_sum"] = to_json(q);
                csv += "q_sum," + csv_number(q.value) + "," + csv_number(q.tail_indicator) + "\n";
            }
            return finish(j, csv, 0);
        }
        if (*integral) {
            json j = base;
            j["kind"] = "integral";
            std::string csv = "method,value,error_bar\n";
            if (samples)
                cfg.measure.samples = samples;
            if (G > 0)
                cfg.oscillatory_spec.G = G;
            int status = 0;
            std::optional<IntegralEstimate> m, o;
            if (integral_method != "oscillatory") {
                m = sigma_infty_measure(F, cfg.box, integral_P > 0 ? integral_P : cfg.integral_P, cfg.measure);
                j["measure"] = to_json(*m);
                csv += "measure_limit," + csv_number(m->value) + "," + csv_number(m->error_bar) + "\n";
            }
            if (integral_method != "measure") {
                o = sigma_infty_oscillatory(F, cfg.box, cfg.oscillatory_spec);
                j["oscillatory"] = to_json(*o);
                csv += "oscillatory," + csv_number(o->value) + "," + csv_number(o->error_bar) + "\n";
            }
            if (m && o) {
                const bool agree = std::fabs(m->value - o->value) <= m->error_bar + o->error_bar;
                j["methods_agree"] = agree;
                status = agree ? 0 : 1;
            }
            return finish(j, csv, status);
        }
        if (*pencil) {
            json j = base;
            j["kind"] = "pencil";
            const std::vector<unsigned long> primes{3, 5};
            PencilBudget pb;
            pb.seed = cfg.seed;
            j["pencil"] = to_json(analyze_pencil(F, height, cfg.dimW, primes, pb));
            return finish(j, "", 0);
        }
        if (*aux) {
            json j = base;
            j["kind"] = "aux";
            if (beta.empty()) {
                beta.assign(F.R(), 0.0);
                beta[0] = 1.0;
            }
            const RealForm f = combine(F, beta);
            json rows = json::array();
            std::string csv = "B,aux_count,ellipsoid_bound\n";
            std::vector<double> xs, ys;
            for (int B : Bs) {
                const auto rec = aux_count(f, B, cfg.budget, cfg.workers);
                json row = to_json(rec);
                if (F.degree() == 2) {
                    const auto eb = ellipsoid_bound(F, beta, B);
                    row["ellipsoid_bound"] = eb.value;
                    csv += std::to_string(B) + "," + std::to_string(rec.count) + "," + csv_number(eb.value) + "\n";
                } else {
                    csv += std::to_string(B) + "," + std::to_string(rec.count) + ",\n";
                }
                rows.push_back(row);
                xs.push_back(B);
                ys.push_back(static_cast<double>(rec.count));
            }
            j["beta"] = beta;
            j["records"] = rows;
            if (std::set<double>(xs.begin(), xs.end()).size() >= 3 && *std::min_element(ys.begin(), ys.end()) > 0)
                j["fitted_exponent"] = fit_exponent(xs, ys).slope;
            return finish(j, csv, 0);
        }
        if (*arcs) {
            json j = base;
            j["kind"] = "arcs";
            const auto a = major_arcs(arcs_P, Delta > 0 ? Delta : cfg.Delta, F.degree(), F.R());
            j["arcs"] = to_json(a);
            if (!alpha.empty()) {
                const auto c = a.locate(alpha);
                j["alpha"] = alpha;
                j["major"] = c.has_value();
                if (c)
                    j["center"] = {{"q", c->q}, {"a", c->a}};
            }
            return finish(j, "", 0);
        }
        if (*verify) {
            const auto rep = run_verify_asymptotic(cfg);
            json j = to_json(rep, cfg);
            std::string csv = "P,N,method,prediction,relative_error\n";
            for (const auto& r : rep.rows)
                csv += csv_number(r.P) + "," + std::to_string(r.N) + "," + r.method + "," + csv_number(r.prediction) + "," +
                       csv_number(r.relative_error) + "\n";
            return finish(j, csv, rep.pass() ? 0 : 1);
        }
        if (*diagnose) {
            const auto bundle = run_diagnostics(cfg);
            json j{{"schema", kReportSchema}, {"kind", "diagnose"}, {"config", to_json(cfg)}};
            j["records"] = bundle.records;
            j["failures"] = bundle.failures;
            return finish(j, "", bundle.failures.empty() ? 0 : 1);
        }
    } catch (const ValidationError& e) {
        std::cerr << "hlcircle: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "hlcircle: malformed input: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "hlcircle: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
