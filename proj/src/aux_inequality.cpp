#include "hlc/aux_inequality.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/Dense>

#include "hlc/exp_sums.hpp"
#include "hlc/parallel.hpp"
#include "hlc/pencil.hpp"

namespace hlc {

using nlohmann::json;

namespace {

constexpr std::size_t kShards = 64;

struct TupleSpace {
    int n = 1;
    int d = 2;
    int B = 1;
    std::vector<double> tensor;  // n^d, row-major
};

TupleSpace make_space(const RealForm& f, int B, std::uint64_t budget, const char* who)
{
    const int d = f.degree();
    if (d < 2 || d > 3)
        throw ValidationError(std::string(who) + ": supports 2 <= d <= 3");
    if (B < 1)
        throw ValidationError(std::string(who) + ": B must be at least 1");
    const long double tuples = std::pow(2.0L * B + 1.0L, static_cast<long double>((d - 1) * f.n()));
    if (tuples > static_cast<long double>(budget))
        throw BudgetError(std::string(who) + ": " + std::to_string(static_cast<double>(tuples))
                          + " tuples exceed the budget");
    return {f.n(), d, B, derivative_tensor(leading_part(f))};
}

// Calls accept(m) for every tuple; m is updated incrementally along the last
// coordinate and recomputed whenever another coordinate moves.
template <class Accept>
std::uint64_t count_tuples(const TupleSpace& s, unsigned workers, Accept accept)
{
    const int n = s.n;
    const int len = (s.d - 1) * n;  // flat tuple length
    const int B = s.B;
    const std::size_t last = static_cast<std::size_t>(len - 1);

    auto contract = [&](const std::vector<std::int64_t>& x, std::vector<double>& m, std::vector<double>& dm) {
        // m_i = sum T[j1..j_{d-1}, i] prod x^(k)_{jk}; dm = d m / d x_last.
        std::fill(m.begin(), m.end(), 0.0);
        std::fill(dm.begin(), dm.end(), 0.0);
        if (s.d == 2) {
            for (int j = 0; j < n; ++j) {
                const double xj = static_cast<double>(x[j]);
                for (int i = 0; i < n; ++i)
                    m[i] += s.tensor[j * n + i] * xj;
            }
            for (int i = 0; i < n; ++i)
                dm[i] = s.tensor[(n - 1) * n + i];
        } else {
            for (int j = 0; j < n; ++j) {
                const double xj = static_cast<double>(x[j]);
                if (xj == 0.0)
                    continue;
                for (int k = 0; k < n; ++k) {
                    const double w = xj * static_cast<double>(x[n + k]);
                    for (int i = 0; i < n; ++i)
                        m[i] += s.tensor[(j * n + k) * n + i] * w;
                }
                for (int i = 0; i < n; ++i)
                    dm[i] += s.tensor[(j * n + (n - 1)) * n + i] * xj;
            }
        }
    };

    const auto pieces = split_range(-B, B, kShards);
    auto partial = run_shards<std::uint64_t>(pieces.size(), workers, [&](std::size_t sh) {
        std::uint64_t count = 0;
        std::vector<std::int64_t> x(len, -B);
        std::vector<double> m(n), dm(n);
        for (long long x0 = pieces[sh].first; x0 <= pieces[sh].second; ++x0) {
            x[0] = x0;
            for (int j = 1; j < len; ++j)
                x[j] = -B;
            if (len == 1) {
                contract(x, m, dm);
                if (accept(m))
                    ++count;
                continue;
            }
            while (true) {
                contract(x, m, dm);
                // sweep the last coordinate
                for (std::int64_t v = -B; v <= B; ++v) {
                    if (accept(m))
                        ++count;
                    for (int i = 0; i < n; ++i)
                        m[i] += dm[i];
                }
                x[last] = B;
                int j = len - 2;
                for (; j >= 1; --j) {
                    if (x[j] < B) {
                        ++x[j];
                        break;
                    }
                    x[j] = -B;
                }
                x[last] = -B;
                if (j < 1)
                    break;
            }
        }
        return count;
    });
    std::uint64_t total = 0;
    for (auto c : partial)
        total += c;
    return total;
}

} // namespace

AuxCountRecord aux_count(const RealForm& f, int B, std::uint64_t budget, unsigned workers)
{
    const TupleSpace s = make_space(f, B, budget, "aux_count");
    AuxCountRecord rec;
    rec.B = B;
    rec.d = s.d;
    rec.n = s.n;
    rec.f_norm = sup_norm_leading(f);
    rec.threshold = rec.f_norm * std::pow(static_cast<double>(B), s.d - 2);
    rec.degenerate = rec.f_norm == 0.0;
    const double thr = rec.threshold;
    if (rec.degenerate) {
        rec.count = count_tuples(s, workers, [](const std::vector<double>& m) {
            return std::all_of(m.begin(), m.end(), [](double v) { return v == 0.0; });
        });
        return rec;
    }
    rec.count = count_tuples(s, workers, [thr](const std::vector<double>& m) {
        for (double v : m)
            if (!(std::fabs(v) < thr))
                return false;
        return true;
    });
    return rec;
}

WeylCountRecord weyl_count(const RealForm& f, int B, double delta, std::uint64_t budget, unsigned workers)
{
    if (!(delta > 0.0))
        throw ValidationError("weyl_count: delta must be positive");
    const TupleSpace s = make_space(f, B, budget, "weyl_count");
    WeylCountRecord rec;
    rec.B = B;
    rec.delta = delta;
    rec.d = s.d;
    rec.n = s.n;
    rec.count = count_tuples(s, workers, [delta](const std::vector<double>& m) {
        for (double v : m)
            if (!(std::fabs(v - std::nearbyint(v)) < delta))
                return false;
        return true;
    });
    return rec;
}

EllipsoidBound ellipsoid_bound(const FormSystem& F, std::span<const double> beta, int B)
{
    if (F.degree() != 2)
        throw ValidationError("ellipsoid_bound: requires d = 2");
    if (static_cast<int>(beta.size()) != F.R())
        throw ValidationError("ellipsoid_bound: beta must have R entries");
    if (std::all_of(beta.begin(), beta.end(), [](double b) { return b == 0.0; }))
        throw ValidationError("ellipsoid_bound: beta must be nonzero");
    const int n = F.n();
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < F.R(); ++i) {
        const auto A = gram_matrix(leading_part(F[i]));
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c)
                M(r, c) += 0.5 * beta[i] * static_cast<double>(A.entries[r][c]);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
    EllipsoidBound out;
    out.form_norm = sup_norm_leading(combine(F, beta));
    double largest = 0.0;
    for (int k = 0; k < n; ++k)
        largest = std::max(largest, std::fabs(es.eigenvalues()[k]));
    out.value = 1.0;
    const double cap = 2.0 * B + 1.0;
    for (int k = 0; k < n; ++k) {
        const double lam = es.eigenvalues()[k];
        out.eigenvalues.push_back(lam);
        const double factor = std::fabs(lam) <= 1e-12 * largest ? cap : out.form_norm / std::fabs(lam) + 1.0;
        out.value *= std::min(factor, cap);
    }
    return out;
}

ExponentFit fit_exponent(std::span<const double> B, std::span<const double> counts)
{
    if (B.size() != counts.size())
        throw ValidationError("exponent fit: schedule and counts differ in length");
    std::set<double> distinct(B.begin(), B.end());
    if (distinct.size() < 3)
        throw ValidationError("exponent fit: needs at least 3 distinct B values");
    ExponentFit fit;
    fit.B.assign(B.begin(), B.end());
    fit.counts.assign(counts.begin(), counts.end());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double k = static_cast<double>(B.size());
    for (std::size_t i = 0; i < B.size(); ++i) {
        if (!(B[i] > 0.0) || !(counts[i] > 0.0))
            throw NumericalError("exponent fit: B and counts must be positive");
        const double x = std::log(B[i]), y = std::log(counts[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    fit.slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    fit.intercept = (sy - fit.slope * sx) / k;
    return fit;
}

AuxExponentReport exponent_fit(const RealForm& f, std::span<const int> schedule, int R, std::optional<int> sigma_R,
                               std::uint64_t budget)
{
    AuxExponentReport rep;
    rep.d = f.degree();
    rep.n = f.n();
    rep.R = R;
    rep.sigma_R = sigma_R;
    std::vector<double> Bs, counts;
    for (int B : schedule) {
        rep.records.push_back(aux_count(f, B, budget));
        Bs.push_back(B);
        counts.push_back(static_cast<double>(rep.records.back().count));
    }
    rep.fit = fit_exponent(Bs, counts);
    const double base = (rep.d - 1) * rep.n;
    const double two_d = std::pow(2.0, rep.d);
    if (sigma_R)
        rep.target_sigma = base - two_d * (rep.n - *sigma_R) / 4.0;
    rep.target_alternative = base - two_d * (rep.n - R + 1) / 4.0;
    return rep;
}

WeylInequalityRecord weyl_inequality_check(const FormSystem& F, std::span<const double> alpha,
                                           std::span<const double> beta, double P, double theta, double epsilon,
                                           const Box& box, std::uint64_t budget)
{
    if (!(theta > 0.0 && theta <= 1.0))
        throw ValidationError("weyl_inequality_check: theta must lie in (0, 1]");
    const double Btheta = std::pow(P, theta);
    if (Btheta < 1.0)
        throw ValidationError("weyl_inequality_check: P^theta < 1");
    const int R = F.R();
    if (static_cast<int>(alpha.size()) != R || static_cast<int>(beta.size()) != R)
        throw ValidationError("weyl_inequality_check: alpha and beta must have R entries");
    const int n = F.n();
    const int d = F.degree();
    std::vector<double> shifted(R);
    for (int i = 0; i < R; ++i)
        shifted[i] = alpha[i] + beta[i];
    const double s1 = std::abs(exp_sum(F, alpha, P, box, budget));
    const double s2 = std::abs(exp_sum(F, shifted, P, box, budget));
    const double two_d = std::pow(2.0, d);
    WeylInequalityRecord rec;
    rec.lhs = std::pow(std::min(s1, s2), two_d) / std::pow(P, two_d * (n + epsilon));
    rec.B = static_cast<int>(std::floor(Btheta + 1e-9));
    rec.delta = std::pow(P, (d - 1) * theta - d);
    const auto wc = weyl_count(combine(F, beta), rec.B, rec.delta, budget);
    rec.weyl = wc.count;
    rec.rhs = static_cast<double>(wc.count) / std::pow(P, (d - 1) * theta * n);
    rec.ratio = rec.lhs / rec.rhs;
    return rec;
}

json to_json(const AuxCountRecord& r)
{
    return {{"B", r.B},         {"count", r.count}, {"f_norm", r.f_norm}, {"threshold", r.threshold},
            {"d", r.d},         {"n", r.n},         {"degenerate", r.degenerate}};
}

json to_json(const WeylCountRecord& r)
{
    return {{"B", r.B}, {"delta", r.delta}, {"count", r.count}, {"d", r.d}, {"n", r.n}};
}

json to_json(const EllipsoidBound& r)
{
    return {{"eigenvalues", r.eigenvalues}, {"form_norm", r.form_norm}, {"value", r.value}};
}

json to_json(const AuxExponentReport& r)
{
    json recs = json::array();
    for (const auto& x : r.records)
        recs.push_back(to_json(x));
    json j{{"slope", r.fit.slope},
           {"intercept", r.fit.intercept},
           {"records", recs},
           {"d", r.d},
           {"n", r.n},
           {"R", r.R},
           {"target_n_minus_R_plus_1", r.target_alternative}};
    j["sigma_R"] = r.sigma_R ? json(*r.sigma_R) : json(nullptr);
    j["target_sigma_R"] = r.target_sigma ? json(*r.target_sigma) : json(nullptr);
    return j;
}

json to_json(const WeylInequalityRecord& r)
{
    return {{"lhs", r.lhs}, {"rhs", r.rhs}, {"ratio", r.ratio}, {"B", r.B}, {"delta", r.delta}, {"weyl_count", r.weyl}};
}

} // namespace hlc
