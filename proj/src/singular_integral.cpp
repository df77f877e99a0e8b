#include "hlc/singular_integral.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "hlc/numeric.hpp"
#include "hlc/parallel.hpp"

namespace hlc {

using nlohmann::json;

namespace {

using Interval = std::pair<double, double>;

// f as a polynomial in x_j: terms grouped by the exponent of x_j.
struct SlicedForm {
    std::vector<std::vector<std::pair<Exponents, double>>> by_power;  // [e_j] -> terms
};

SlicedForm slice(const RealForm& f, int j)
{
    SlicedForm s;
    s.by_power.resize(f.degree() + 1);
    for (const auto& [e, c] : f.terms())
        s.by_power[e[j]].emplace_back(e, c);
    return s;
}

double monomial(const Exponents& e, const std::vector<double>& x, int skip)
{
    double v = 1.0;
    for (std::size_t k = 0; k < e.size(); ++k)
        if (static_cast<int>(k) != skip)
            for (int p = 0; p < e[k]; ++p)
                v *= x[k];
    return v;
}

void add_roots(double a, double b, double c, double lo, double hi, std::vector<double>& out)
{
    auto keep = [&](double t) {
        if (t > lo && t < hi)
            out.push_back(t);
    };
    if (a == 0.0) {
        if (b != 0.0)
            keep(-c / b);
        return;
    }
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0)
        return;
    const double sq = std::sqrt(disc);
    const double q = -0.5 * (b + (b >= 0.0 ? sq : -sq));
    if (q != 0.0) {
        keep(q / a);
        keep(c / q);
    } else {
        keep(0.0);
    }
}

// Sub-intervals of [lo, hi] where |a t^2 + b t + c| <= eps.
std::vector<Interval> band(double a, double b, double c, double eps, double lo, double hi)
{
    std::vector<double> cuts{lo, hi};
    add_roots(a, b, c - eps, lo, hi, cuts);
    add_roots(a, b, c + eps, lo, hi, cuts);
    std::sort(cuts.begin(), cuts.end());
    std::vector<Interval> out;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double u = cuts[k], v = cuts[k + 1];
        if (v <= u)
            continue;
        const double mid = 0.5 * (u + v);
        if (std::fabs((a * mid + b) * mid + c) <= eps) {
            if (!out.empty() && out.back().second >= u)
                out.back().second = v;
            else
                out.emplace_back(u, v);
        }
    }
    return out;
}

std::vector<Interval> intersect(const std::vector<Interval>& x, const std::vector<Interval>& y)
{
    std::vector<Interval> out;
    std::size_t i = 0, j = 0;
    while (i < x.size() && j < y.size()) {
        const double lo = std::max(x[i].first, y[j].first);
        const double hi = std::min(x[i].second, y[j].second);
        if (lo < hi)
            out.emplace_back(lo, hi);
        (x[i].second < y[j].second) ? ++i : ++j;
    }
    return out;
}

struct MeasureProblem {
    std::vector<RealForm> lead;
    std::vector<SlicedForm> sliced;
    int slice_var = -1;
    std::vector<int> others;
    double eps = 0.0;
    Box box;

    // Length of {t_j : |f_i(x with t_j)| <= eps for all i}.
    double slice_length(std::vector<double>& x) const
    {
        const auto [lo, hi] = box.intervals[slice_var];
        std::vector<Interval> cur{{lo, hi}};
        for (const auto& s : sliced) {
            double coef[3] = {0.0, 0.0, 0.0};
            for (int p = 0; p < static_cast<int>(s.by_power.size()) && p < 3; ++p)
                for (const auto& [e, c] : s.by_power[p])
                    coef[p] += c * monomial(e, x, slice_var);
            cur = intersect(cur, band(coef[2], coef[1], coef[0], eps, lo, hi));
            if (cur.empty())
                return 0.0;
        }
        double len = 0.0;
        for (const auto& [u, v] : cur)
            len += v - u;
        return len;
    }

    // Indicator for the hit-or-miss fallback.
    bool inside(const std::vector<double>& x) const
    {
        for (const auto& f : lead)
            if (std::fabs(evaluate(f, x)) > eps)
                return false;
        return true;
    }
};

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    std::uint32_t words[2];
    seq.generate(words, words + 2);
    return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

struct Moments {
    double mean = 0.0;
    double var = 0.0;   // of one sample
    std::uint64_t count = 0;
};

} // namespace

IntegralEstimate sigma_infty_measure(const FormSystem& F, const Box& box, double P, const MeasureSpec& spec)
{
    const int n = F.n();
    const int d = F.degree();
    const int R = F.R();
    if (d < 2)
        throw ValidationError("sigma_infty_measure: requires d >= 2");
    if (d * R > n)
        throw ValidationError("sigma_infty_measure: dR > n, the scaled measure has no finite limit");
    if (spec.samples == 0)
        throw ValidationError("sigma_infty_measure: sample budget is zero");
    if (!(P >= 1.0) || !std::isfinite(P))
        throw ValidationError("sigma_infty_measure: P must be at least 1");
    if (box.n() != n)
        throw ValidationError("sigma_infty_measure: box dimension does not match n");
    box.validate();

    MeasureProblem prob;
    prob.box = box;
    prob.eps = 0.5 * std::pow(P, -d);
    for (const auto& f : F.forms())
        prob.lead.push_back(to_real(leading_part(f)));
    if (d == 2) {
        int best = -1, best_score = -1;
        for (int j = 0; j < n; ++j) {
            int score = 0;
            for (const auto& f : prob.lead)
                for (const auto& [e, c] : f.terms())
                    score += e[j] == 2 ? 2 : (e[j] == 1 ? 1 : 0);
            if (score > best_score && box.intervals[j].second > box.intervals[j].first) {
                best = j;
                best_score = score;
            }
        }
        prob.slice_var = best_score > 0 ? best : -1;
    }
    for (int j = 0; j < n; ++j)
        if (j != prob.slice_var)
            prob.others.push_back(j);
    if (prob.slice_var >= 0)
        for (const auto& f : prob.lead)
            prob.sliced.push_back(slice(f, prob.slice_var));

    const bool sliced = prob.slice_var >= 0;
    double other_volume = 1.0;
    for (int j : prob.others)
        other_volume *= box.intervals[j].second - box.intervals[j].first;

    auto sample_value = [&](std::vector<double>& x) {
        return sliced ? prob.slice_length(x) : (prob.inside(x) ? 1.0 : 0.0);
    };

    IntegralEstimate est;
    est.method = "measure_limit";
    est.seed = spec.seed;
    const double scale = std::pow(P, d * R);

    if (prob.others.empty()) {
        std::vector<double> x(n, 0.0);
        est.value = scale * sample_value(x);
        est.error_bar = 0.0;
        est.parameters = {{"P", P}, {"samples", 0}, {"slice_variable", prob.slice_var}};
        return est;
    }

    const int H = std::max(1, spec.strata);
    const int k0 = prob.others.front();
    const auto [a0, b0] = box.intervals[k0];
    const std::uint64_t per = std::max<std::uint64_t>(1, spec.samples / static_cast<std::uint64_t>(H));
    auto strata = run_shards<Moments>(static_cast<std::size_t>(H), 0, [&](std::size_t h) {
        std::mt19937_64 rng(stream_seed(spec.seed, h));
        std::vector<double> x(n, 0.0);
        CompensatedSum sum, sum2;
        const double lo = a0 + (b0 - a0) * static_cast<double>(h) / H;
        const double hi = a0 + (b0 - a0) * static_cast<double>(h + 1) / H;
        for (std::uint64_t s = 0; s < per; ++s) {
            x[k0] = lo + (hi - lo) * u01(rng());
            for (std::size_t t = 1; t < prob.others.size(); ++t) {
                const int k = prob.others[t];
                const auto [a, b] = box.intervals[k];
                x[k] = a + (b - a) * u01(rng());
            }
            const double v = sample_value(x);
            sum.add(v);
            sum2.add(v * v);
        }
        Moments m;
        m.count = per;
        m.mean = sum.value() / static_cast<double>(per);
        m.var = per > 1 ? std::max(0.0, (sum2.value() - per * m.mean * m.mean) / static_cast<double>(per - 1)) : 0.0;
        return m;
    });
    CompensatedSum mean, var;
    for (const auto& m : strata) {
        mean.add(m.mean / H);
        var.add(m.var / (static_cast<double>(H) * H * static_cast<double>(m.count)));
    }
    const double vol = other_volume * mean.value();
    const double se = other_volume * std::sqrt(var.value());
    est.value = scale * vol;
    est.error_bar = 3.0 * scale * se;
    est.parameters = {{"P", P},
                      {"samples", per * static_cast<std::uint64_t>(H)},
                      {"strata", H},
                      {"threshold", prob.eps},
                      {"slice_variable", prob.slice_var},
                      {"sampler", sliced ? "stratified, one coordinate solved exactly" : "stratified hit-or-miss"}};
    if (!sliced)
        est.note = "hit-or-miss sampling; the error bar may be pessimistic for thin regions";

    const int dims = static_cast<int>(prob.others.size());
    if (spec.grid_check && dims <= 3) {
        int G = std::max(2, spec.grid_points);
        while (std::pow(static_cast<double>(G), dims) > 4.0e6 && G > 4)
            G /= 2;
        auto grid_value = [&](int g) {
            CompensatedSum s;
            std::vector<int> idx(dims, 0);
            std::vector<double> x(n, 0.0);
            while (true) {
                for (int t = 0; t < dims; ++t) {
                    const int k = prob.others[t];
                    const auto [a, b] = box.intervals[k];
                    x[k] = a + (b - a) * (idx[t] + 0.5) / g;
                }
                s.add(sample_value(x));
                int t = dims - 1;
                for (; t >= 0; --t) {
                    if (++idx[t] < g)
                        break;
                    idx[t] = 0;
                }
                if (t < 0)
                    break;
            }
            return scale * other_volume * s.value() / std::pow(static_cast<double>(g), dims);
        };
        const double fine = grid_value(G);
        const double coarse = grid_value(G / 2);
        est.parameters["grid_points"] = G;
        est.parameters["grid_value"] = fine;
        est.parameters["grid_delta"] = std::fabs(fine - coarse);
    }
    if (d * R == n)
        est.note = "n = dR: the scaled measure need not converge as P grows";
    return est;
}

IntegralEstimate sigma_infty_oscillatory(const FormSystem& F, const Box& box, const OscillatorySpec& spec)
{
    const int R = F.R();
    if (R > 2)
        throw BudgetError("sigma_infty_oscillatory: tensor quadrature in gamma is limited to R <= 2; "
                          "use the measure method");
    if (!(spec.G > 0.0))
        throw ValidationError("sigma_infty_oscillatory: G must be positive");
    if (box.n() != F.n())
        throw ValidationError("sigma_infty_oscillatory: box dimension does not match n");
    box.validate();

    double size = 1.0;
    for (const auto& f : F.forms()) {
        double s = 0.0;
        const IntegerForm lead = leading_part(f);
        for (const auto& [e, c] : lead.terms())
            s += std::fabs(static_cast<double>(c));
        size = std::max(size, s);
    }
    const double G = spec.G;
    const int panels = std::max(2, static_cast<int>(std::ceil(spec.panels_per_unit * G * size)));

    // gamma_1 in [0, G] (conjugate symmetry), gamma_2 in [-G, G] when R = 2.
    struct Node {
        std::vector<double> gamma;
        double weight;
        double re;
        double err;
    };
    auto build = [&](int pan) {
        std::vector<Node> nodes;
        const auto r1 = composite_gauss(0.0, G, pan);
        if (R == 1) {
            for (std::size_t i = 0; i < r1.nodes.size(); ++i)
                nodes.push_back({{r1.nodes[i]}, 2.0 * r1.weights[i], 0.0, 0.0});
        } else {
            const auto r2 = composite_gauss(-G, G, 2 * pan);
            for (std::size_t i = 0; i < r1.nodes.size(); ++i)
                for (std::size_t j = 0; j < r2.nodes.size(); ++j)
                    nodes.push_back({{r1.nodes[i], r2.nodes[j]}, 2.0 * r1.weights[i] * r2.weights[j], 0.0, 0.0});
        }
        return nodes;
    };
    auto evaluate_nodes = [&](std::vector<Node>& nodes) {
        auto vals = run_shards<std::pair<double, double>>(nodes.size(), 0, [&](std::size_t i) {
            const auto q = s_infinity(F, nodes[i].gamma, box, spec.inner);
            return std::make_pair(q.value.real(), q.error);
        });
        CompensatedSum total;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            nodes[i].re = vals[i].first;
            nodes[i].err = vals[i].second;
            total.add(nodes[i].weight * nodes[i].re);
        }
        return total.value();
    };

    auto fine = build(panels);
    const double core = evaluate_nodes(fine);
    auto coarse_nodes = build(std::max(1, panels / 2));
    const double coarse = evaluate_nodes(coarse_nodes);
    double node_err = 0.0;
    for (const auto& nd : fine)
        node_err += std::fabs(nd.weight) * nd.err;

    if (!spec.tail) {
        IntegralEstimate est;
        est.method = "oscillatory";
        est.value = core;
        est.error_bar = std::fabs(core - coarse) + node_err;
        est.parameters = {{"G", G},       {"panels", panels}, {"gauss_order", kGaussOrder},
                          {"core", core}, {"coarse", coarse}, {"tail", nullptr}};
        est.note = "truncated at |gamma| <= G, no tail correction";
        return est;
    }

    // Dyadic shell averages of Re S_inf over G/8 < |gamma| <= G.
    std::vector<double> mids, avgs;
    for (int k = 2; k >= 0; --k) {
        const double lo = G / std::pow(2.0, k + 1), hi = G / std::pow(2.0, k);
        CompensatedSum num, den;
        for (const auto& nd : fine) {
            double norm = 0.0;
            for (double g : nd.gamma)
                norm = std::max(norm, std::fabs(g));
            if (norm > lo && norm <= hi) {
                num.add(nd.weight * nd.re);
                den.add(nd.weight);
            }
        }
        mids.push_back(std::sqrt(lo * hi));
        avgs.push_back(den.value() > 0 ? num.value() / den.value() : 0.0);
    }
    const bool same_sign = (avgs[0] > 0 && avgs[1] > 0 && avgs[2] > 0) || (avgs[0] < 0 && avgs[1] < 0 && avgs[2] < 0);
    if (!same_sign)
        throw NumericalError("sigma_infty_oscillatory: no empirical decay on the outer shells "
                             "(shell averages change sign); the tail cannot be trusted");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int k = 0; k < 3; ++k) {
        const double x = std::log(mids[k]), y = std::log(std::fabs(avgs[k]));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double kappa = -(3 * sxy - sx * sy) / (3 * sxx - sx * sx);
    if (!(kappa > R + 0.25) || std::fabs(avgs[2]) >= std::fabs(avgs[0]))
        throw NumericalError("sigma_infty_oscillatory: fitted decay exponent " + std::to_string(kappa)
                             + " does not make the tail integrable");
    const double C = avgs[2] * std::pow(mids[2], kappa);
    // integral of C |gamma|_inf^{-kappa} over |gamma|_inf > G
    const double shell = R == 1 ? 2.0 : 8.0;
    const double tail = shell * C * std::pow(G, R - kappa) / (kappa - R);

    IntegralEstimate est;
    est.method = "oscillatory";
    est.value = core + tail;
    est.error_bar = std::fabs(core - coarse) + node_err + 0.5 * std::fabs(tail);
    est.parameters = {{"G", G},
                      {"panels", panels},
                      {"gauss_order", kGaussOrder},
                      {"core", core},
                      {"coarse", coarse},
                      {"tail", tail},
                      {"decay_exponent", kappa},
                      {"shell_averages", avgs}};
    return est;
}

std::optional<SmoothPoint> real_smooth_point(const FormSystem& F, const Box& box, std::uint64_t seed, int attempts)
{
    const int n = F.n();
    const int R = F.R();
    std::vector<RealForm> lead;
    for (const auto& f : F.forms())
        lead.push_back(to_real(leading_part(f)));
    std::vector<std::vector<RealForm>> grads(R);
    for (int i = 0; i < R; ++i)
        for (int j = 0; j < n; ++j) {
            RealForm g(n, std::max(0, lead[i].degree() - 1));
            for (const auto& [e, c] : lead[i].terms())
                if (e[j] > 0) {
                    Exponents de = e;
                    --de[j];
                    g.add_term(de, c * e[j]);
                }
            grads[i].push_back(g);
        }
    auto residual = [&](const std::vector<double>& x, Eigen::VectorXd& r) {
        r.resize(R);
        for (int i = 0; i < R; ++i)
            r[i] = evaluate(lead[i], x);
        return r.norm();
    };
    auto jac = [&](const std::vector<double>& x) {
        Eigen::MatrixXd J(R, n);
        for (int i = 0; i < R; ++i)
            for (int j = 0; j < n; ++j)
                J(i, j) = evaluate(grads[i][j], x);
        return J;
    };
    auto interior = [&](const std::vector<double>& x) {
        for (int j = 0; j < n; ++j) {
            const auto [a, b] = box.intervals[j];
            if (!(x[j] > a + 1e-9 && x[j] < b - 1e-9))
                return false;
        }
        return true;
    };
    std::mt19937_64 rng(seed);
    for (int attempt = 0; attempt < attempts; ++attempt) {
        std::vector<double> x(n);
        for (int j = 0; j < n; ++j) {
            const auto [a, b] = box.intervals[j];
            const double mid = 0.5 * (a + b), half = 0.45 * (b - a);
            x[j] = mid + half * (2.0 * u01(rng()) - 1.0);
        }
        Eigen::VectorXd r;
        double res = residual(x, r);
        for (int it = 0; it < 60 && res > 1e-13; ++it) {
            const Eigen::MatrixXd J = jac(x);
            const Eigen::VectorXd step = J.completeOrthogonalDecomposition().solve(r);
            double lambda = 1.0;
            bool improved = false;
            for (int h = 0; h < 30; ++h) {
                std::vector<double> y(x);
                for (int j = 0; j < n; ++j)
                    y[j] -= lambda * step[j];
                Eigen::VectorXd ry;
                const double ny = residual(y, ry);
                if (ny < res) {
                    x = y;
                    r = ry;
                    res = ny;
                    improved = true;
                    break;
                }
                lambda *= 0.5;
            }
            if (!improved)
                break;
        }
        if (res > 1e-10 || !interior(x))
            continue;
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac(x));
        const double smin = svd.singularValues()[R - 1];
        if (smin > 1e-6)
            return SmoothPoint{x, res, smin};
    }
    return std::nullopt;
}

json to_json(const IntegralEstimate& e)
{
    return {{"value", e.value},
            {"error_bar", e.error_bar},
            {"method", e.method},
            {"parameters", e.parameters},
            {"seed", e.seed},
            {"note", e.note}};
}

} // namespace hlc
