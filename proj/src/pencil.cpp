#include "hlc/pencil.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "upoly.hpp"

namespace hlc {

using detail::UPoly;
using nlohmann::json;

namespace {

void require_quadratic(const FormSystem& F)
{
    if (F.degree() != 2)
        throw ValidationError("pencil analysis requires d = 2");
    if (!F.independent())
        throw ValidationError("linearly dependent system: sigma_R = n and every hypothesis fails");
}

RationalMatrix to_rational(const IntMatrix& m)
{
    RationalMatrix out(m.size(), std::vector<mpq_class>(m.size()));
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m.size(); ++j)
            out[i][j] = mpq_class(static_cast<long>(m[i][j]));
    return out;
}

// A1 + t A2 evaluated at rational t.
RationalMatrix line_matrix(const RationalMatrix& a1, const RationalMatrix& a2, const mpq_class& t)
{
    RationalMatrix m = a1;
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m.size(); ++j)
            m[i][j] += t * a2[i][j];
    return m;
}

// Visits every s-subset of {0..n-1} in lexicographic order.
template <class Fn>
void for_each_subset(int n, int s, Fn&& fn)
{
    std::vector<int> idx(s);
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
        fn(idx);
        int i = s - 1;
        while (i >= 0 && idx[i] == n - s + i)
            --i;
        if (i < 0)
            return;
        ++idx[i];
        for (int j = i + 1; j < s; ++j)
            idx[j] = idx[j - 1] + 1;
    }
}

// gcd over Q[t] of all s x s minors of A1 + t A2; stops early once constant.
UPoly minor_gcd(const RationalMatrix& a1, const RationalMatrix& a2, int s)
{
    const int n = static_cast<int>(a1.size());
    std::vector<mpq_class> ts;
    std::vector<RationalMatrix> samples;
    for (int k = 0; k <= s; ++k) {
        ts.emplace_back(k);
        samples.push_back(line_matrix(a1, a2, ts.back()));
    }
    UPoly g;
    bool done = false;
    for_each_subset(n, s, [&](const std::vector<int>& rows) {
        if (done)
            return;
        for_each_subset(n, s, [&](const std::vector<int>& cols) {
            if (done)
                return;
            std::vector<mpq_class> values;
            for (const auto& m : samples) {
                RationalMatrix sub(s, std::vector<mpq_class>(s));
                for (int i = 0; i < s; ++i)
                    for (int j = 0; j < s; ++j)
                        sub[i][j] = m[rows[i]][cols[j]];
                values.push_back(determinant(std::move(sub)));
            }
            UPoly minor = UPoly::interpolate(ts, values);
            if (minor.is_zero())
                return;
            g = g.is_zero() ? minor.monic() : UPoly::gcd(g, minor);
            if (g.degree() == 0)
                done = true;
        });
    });
    return g;
}

// Best rational approximations of x in [lo, hi]; returns an exact root if one is found.
std::optional<mpq_class> rational_root_in(const UPoly& g, mpq_class lo, mpq_class hi)
{
    // Shrink the isolating interval.
    for (int it = 0; it < 200 && hi - lo > mpq_class(1, 1) / mpq_class(mpz_class(1) << 120); ++it) {
        mpq_class mid = (lo + hi) / 2;
        if (g(mid) == 0)
            return mid;
        if (g.roots_in(lo, mid) > 0)
            hi = mid;
        else
            lo = mid;
    }
    if (g(hi) == 0)
        return hi;
    // Continued-fraction convergents of the midpoint.
    mpq_class x = (lo + hi) / 2;
    mpz_class h0 = 0, h1 = 1, k0 = 1, k1 = 0;
    mpq_class rem = x;
    for (int it = 0; it < 80; ++it) {
        mpz_class a;
        mpz_fdiv_q(a.get_mpz_t(), rem.get_num_mpz_t(), rem.get_den_mpz_t());
        mpz_class h2 = a * h1 + h0, k2 = a * k1 + k0;
        mpq_class conv(h2, k2);
        conv.canonicalize();
        if (conv >= lo && conv <= hi && g(conv) == 0)
            return conv;
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        mpq_class frac = rem - mpq_class(a);
        if (frac == 0)
            break;
        rem = 1 / frac;
    }
    return std::nullopt;
}

// Isolates one real root of g; returns the isolating interval.
std::pair<mpq_class, mpq_class> isolate_real_root(const UPoly& g)
{
    mpq_class bound = 0;
    for (const auto& c : g.coeffs()) {
        mpq_class r = abs(c / g.lead());
        if (r > bound)
            bound = r;
    }
    mpq_class lo = -(bound + 1), hi = bound + 1;
    for (int it = 0; it < 60; ++it) {
        mpq_class mid = (lo + hi) / 2;
        if (g.roots_in(lo, mid) > 0)
            hi = mid;
        else
            lo = mid;
    }
    return {lo, hi};
}

MinRankResult exact_binary_pencil(const FormSystem& F)
{
    const int n = F.n();
    RationalMatrix a1 = to_rational(gram_matrix(F[0]).entries);
    RationalMatrix a2 = to_rational(gram_matrix(F[1]).entries);

    MinRankResult out;
    out.method = "exact-binary-pencil";
    out.certified = true;

    const int rank_inf = rank(a2);
    int generic = 0;
    for (int k = 0; k <= n + 1; ++k)
        generic = std::max(generic, rank(line_matrix(a1, a2, mpq_class(k))));

    int finite_min = generic;
    std::optional<UPoly> drop;
    for (int s = 1; s <= generic; ++s) {
        UPoly g = minor_gcd(a1, a2, s);
        if (g.degree() >= 1 && g.real_root_count() > 0) {
            finite_min = s - 1;
            drop = g;
            break;
        }
    }

    if (rank_inf <= finite_min) {
        out.lower = out.upper = rank_inf;
        out.witness = {0, 1};
        out.witness_rank = rank_inf;
        return out;
    }
    out.lower = out.upper = finite_min;
    if (!drop) {
        // Generic rank everywhere on the affine line; t = value achieving it.
        for (int k = 0; k <= n + 1; ++k)
            if (rank(line_matrix(a1, a2, mpq_class(k))) == generic) {
                out.witness = {1, k};
                break;
            }
        out.witness_rank = generic;
        return out;
    }
    auto [lo, hi] = isolate_real_root(*drop);
    if (auto t = rational_root_in(*drop, lo, hi)) {
        out.witness = {1, *t};
        out.witness_rank = rank(line_matrix(a1, a2, *t));
        out.witness_exact = out.witness_rank == finite_min;
    } else {
        // Irrational algebraic witness: the minimum is certified by the minor gcd,
        // the stored rational point only approximates it.
        mpq_class mid = (lo + hi) / 2;
        out.witness = {1, mid};
        out.witness_rank = rank(line_matrix(a1, a2, mid));
        out.witness_exact = false;
    }
    return out;
}

// Primitive integer vectors with |v|_inf <= h, first nonzero entry positive.
template <class Fn>
void for_each_primitive(int R, int h, Fn&& fn)
{
    std::vector<long> v(R, -h);
    while (true) {
        long g = 0;
        int first = -1;
        for (int i = 0; i < R; ++i) {
            g = std::gcd(g, std::labs(v[i]));
            if (first < 0 && v[i] != 0)
                first = i;
        }
        if (g == 1 && v[first] > 0)
            fn(v);
        int i = R - 1;
        while (i >= 0 && v[i] == h) {
            v[i] = -h;
            --i;
        }
        if (i < 0)
            return;
        ++v[i];
    }
}

int numerical_rank(const Eigen::MatrixXd& m)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    const auto lambda = es.eigenvalues().cwiseAbs();
    const double top = lambda.maxCoeff();
    if (top == 0.0)
        return 0;
    int r = 0;
    for (int i = 0; i < lambda.size(); ++i)
        if (lambda[i] > 1e-8 * top)
            ++r;
    return r;
}

MinRankResult enumerative_pencil(const FormSystem& F, const PencilBudget& budget)
{
    const int n = F.n();
    const int R = F.R();
    MinRankResult out;
    out.method = "enumerative+eigen-probe";
    out.certified = false;
    out.upper = n + 1;
    for_each_primitive(R, std::max(1, budget.height), [&](const std::vector<long>& v) {
        std::vector<mpq_class> beta(v.begin(), v.end());
        int r = pencil_rank(F, beta);
        if (r < out.upper) {
            out.upper = r;
            out.witness = beta;
            out.witness_rank = r;
        }
    });

    std::vector<Eigen::MatrixXd> mats;
    for (int i = 0; i < R; ++i) {
        const auto A = gram_matrix(F[i]).entries;
        Eigen::MatrixXd m(n, n);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                m(a, b) = 0.5 * static_cast<double>(A[a][b]);
        mats.push_back(m);
    }
    std::mt19937_64 rng(budget.seed);
    std::normal_distribution<double> gauss;
    int numeric_min = out.upper;
    for (int probe = 0; probe < budget.random_probes; ++probe) {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
        std::vector<double> beta(R);
        for (int i = 0; i < R; ++i) {
            beta[i] = gauss(rng);
            m += beta[i] * mats[i];
        }
        int r = numerical_rank(m);
        if (r < numeric_min) {
            numeric_min = r;
            // Re-certify at a nearby rational point; floating rank alone is not trusted.
            std::vector<mpq_class> q(R);
            for (int i = 0; i < R; ++i) {
                q[i] = mpq_class(static_cast<long>(std::llround(beta[i] * (1 << 20))), 1 << 20);
                q[i].canonicalize();
            }
            int exact = pencil_rank(F, q);
            if (exact < out.upper) {
                out.upper = exact;
                out.witness = q;
                out.witness_rank = exact;
            }
        }
    }
    out.lower = std::min(out.upper, numeric_min);
    return out;
}

} // namespace

DoubledGramMatrix gram_matrix(const IntegerForm& f)
{
    if (f.degree() != 2)
        throw ValidationError("gram_matrix requires d = 2");
    const int n = f.n();
    DoubledGramMatrix g{IntMatrix(n, std::vector<std::int64_t>(n, 0))};
    for (const auto& [e, c] : f.terms()) {
        if (total_degree(e) != 2)
            continue;
        std::vector<int> idx;
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < e[j]; ++k)
                idx.push_back(j);
        if (idx[0] == idx[1])
            g.entries[idx[0]][idx[0]] += 2 * c;
        else {
            g.entries[idx[0]][idx[1]] += c;
            g.entries[idx[1]][idx[0]] += c;
        }
    }
    return g;
}

RationalMatrix pencil_matrix(const FormSystem& F, std::span<const mpq_class> beta)
{
    if (static_cast<int>(beta.size()) != F.R())
        throw ValidationError("pencil_matrix: beta has wrong length");
    const int n = F.n();
    RationalMatrix m(n, std::vector<mpq_class>(n, 0));
    for (int i = 0; i < F.R(); ++i) {
        if (beta[i] == 0)
            continue;
        const auto A = gram_matrix(F[i]).entries;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                if (A[a][b] != 0)
                    m[a][b] += beta[i] * mpq_class(static_cast<long>(A[a][b]));
    }
    return m;
}

int pencil_rank(const FormSystem& F, std::span<const mpq_class> beta)
{
    return rank(pencil_matrix(F, beta));
}

MinRankResult pencil_min_rank(const FormSystem& F, const PencilBudget& budget)
{
    require_quadratic(F);
    if (F.R() == 1) {
        MinRankResult out;
        out.method = "exact-single-form";
        out.certified = true;
        out.witness = {1};
        out.lower = out.upper = out.witness_rank = pencil_rank(F, out.witness);
        return out;
    }
    if (F.R() == 2 && F.n() <= budget.max_exact_n)
        return exact_binary_pencil(F);
    return enumerative_pencil(F, budget);
}

SigmaInterval sigma_R(const FormSystem& F, const MinRankResult& mr)
{
    return {F.n() - mr.upper, F.n() - mr.lower};
}

SigmaInterval sigma_R(const FormSystem& F, const PencilBudget& budget)
{
    return sigma_R(F, pencil_min_rank(F, budget));
}

SigmaZResult sigma_Z_lower(const FormSystem& F, int H)
{
    if (H < 1)
        throw ValidationError("sigma_Z_lower: height bound must be >= 1");
    if (!F.independent())
        throw ValidationError("linearly dependent system: sigma_Z undefined for the zero combination");
    const int n = F.n();
    const int R = F.R();
    SigmaZResult out;
    out.value = -1;
    if (F.degree() <= 1) {
        out.value = 0;  // hyperplanes are smooth
        out.witness.assign(R, 0);
        out.witness[0] = 1;
        return out;
    }
    if (F.degree() == 2) {
        for_each_primitive(R, H, [&](const std::vector<long>& v) {
            std::vector<mpq_class> beta(v.begin(), v.end());
            int s = n - pencil_rank(F, beta);
            if (s > out.value) {
                out.value = s;
                out.witness.assign(v.begin(), v.end());
            }
        });
        return out;
    }
    // Higher degree: affine dimension of {grad(a.F^[d]) = 0} over F_p estimated
    // from its point count.
    out.heuristic = true;
    unsigned long p = 3;
    for (unsigned long cand : {7ul, 5ul, 3ul}) {
        double pts = std::pow(static_cast<double>(cand), n);
        if (pts <= 2e6) {
            p = cand;
            break;
        }
    }
    if (std::pow(static_cast<double>(p), n) > 2e6)
        throw BudgetError("sigma_Z_lower: modular probe exceeds budget for n = " + std::to_string(n));
    for_each_primitive(R, H, [&](const std::vector<long>& v) {
        IntegerForm g(n, F.degree());
        for (int i = 0; i < R; ++i) {
            const IntegerForm lead = leading_part(F[i]);
            for (const auto& [e, c] : lead.terms())
                g.add_term(e, c * v[i]);
        }
        std::vector<IntegerForm> grads;
        for (int j = 0; j < n; ++j)
            grads.push_back(partial(g, j));
        std::vector<std::int64_t> x(n, 0);
        std::uint64_t count = 0;
        while (true) {
            bool all = true;
            for (const auto& gr : grads) {
                Int128 val = evaluate(gr, x) % static_cast<Int128>(p);
                if (val != 0) {
                    all = false;
                    break;
                }
            }
            if (all)
                ++count;
            int k = n - 1;
            while (k >= 0 && x[k] == static_cast<std::int64_t>(p) - 1) {
                x[k] = 0;
                --k;
            }
            if (k < 0)
                break;
            ++x[k];
        }
        int s = static_cast<int>(std::lround(std::log(static_cast<double>(count)) / std::log(static_cast<double>(p))));
        if (s > out.value) {
            out.value = s;
            out.witness.assign(v.begin(), v.end());
        }
    });
    return out;
}

std::string to_string(Verdict v)
{
    switch (v) {
    case Verdict::holds:
        return "holds";
    case Verdict::fails:
        return "fails";
    default:
        return "indeterminate";
    }
}

ConditionReport check_conditions(const FormSystem& F, SigmaInterval sigma, std::optional<int> dimW,
                                 std::optional<bool> smooth)
{
    const int n = F.n();
    const int d = F.degree();
    const int R = F.R();
    ConditionReport out;
    out.birch_threshold = (d - 1) * (1 << std::max(0, d - 1)) * R * (R + 1);
    out.new_threshold = 8 * R;

    if (dimW) {
        out.birch = (n - 1 - *dimW > out.birch_threshold) ? Verdict::holds : Verdict::fails;
    } else {
        // sigma_R <= 1 + dim W gives the most favourable admissible dim W.
        const int best_dimW = std::max(-1, sigma.lower - 1);
        if (n - 1 - best_dimW <= out.birch_threshold)
            out.birch = Verdict::fails;
        else {
            out.birch = Verdict::indeterminate;
            out.birch_depends_on_dimW = true;
        }
    }

    out.new_condition_applicable = d == 2;
    if (d == 2) {
        if (n - sigma.upper > out.new_threshold)
            out.new_condition = Verdict::holds;
        else if (n - sigma.lower <= out.new_threshold)
            out.new_condition = Verdict::fails;
        else
            out.new_condition = Verdict::indeterminate;
    }

    if (smooth && *smooth) {
        bool ok = sigma.lower <= R - 1;
        if (dimW)
            ok = ok && sigma.lower <= 1 + *dimW && 1 + *dimW <= R - 1;
        out.smooth_chain_consistent = ok;
        if (!ok)
            out.note = "sigma_R exceeds R-1 although the smoothness probe passed: evidence the probe's "
                       "smoothness conclusion is wrong";
    }
    return out;
}

bool SmoothnessProbeResult::passed() const
{
    return std::none_of(primes.begin(), primes.end(), [](const auto& r) { return r.singular_point_found; });
}

SmoothnessProbeResult smoothness_probe(const FormSystem& F, std::span<const unsigned long> primes,
                                       std::uint64_t budget)
{
    const int n = F.n();
    const int R = F.R();
    std::vector<std::vector<IntegerForm>> partials(R);
    for (int i = 0; i < R; ++i)
        for (int j = 0; j < n; ++j)
            partials[i].push_back(partial(F[i], j));

    SmoothnessProbeResult out;
    for (unsigned long p : primes) {
        const double total = std::pow(static_cast<double>(p), n);
        if (total > static_cast<double>(budget))
            throw BudgetError("smoothness_probe: p^n = " + std::to_string(total) + " exceeds budget");
        SmoothnessProbeResult::PerPrime rec;
        rec.p = p;
        std::vector<std::int64_t> x(n, 0);
        auto mod = [p](Int128 v) {
            Int128 r = v % static_cast<Int128>(p);
            return r < 0 ? r + p : r;
        };
        while (true) {
            int k = n - 1;
            while (k >= 0 && x[k] == static_cast<std::int64_t>(p) - 1) {
                x[k] = 0;
                --k;
            }
            if (k < 0)
                break;
            ++x[k];
            ++rec.points_checked;
            bool zero = true;
            for (int i = 0; i < R && zero; ++i)
                zero = mod(evaluate(F[i], x)) == 0;
            if (!zero)
                continue;
            std::vector<std::vector<mpz_class>> J(R, std::vector<mpz_class>(n));
            for (int i = 0; i < R; ++i)
                for (int j = 0; j < n; ++j)
                    J[i][j] = evaluate_exact(partials[i][j], x);
            if (rank_mod_p(J, p) < R) {
                rec.singular_point_found = true;
                rec.point = x;
                break;
            }
        }
        out.primes.push_back(std::move(rec));
    }
    return out;
}

PencilReport analyze_pencil(const FormSystem& F, int height, std::optional<int> dimW,
                            std::span<const unsigned long> probe_primes, const PencilBudget& budget)
{
    PencilReport r;
    r.min_rank = pencil_min_rank(F, budget);
    r.sigma_R = sigma_R(F, r.min_rank);
    r.sigma_Z_height = height;
    r.sigma_Z = sigma_Z_lower(F, height);
    std::optional<bool> smooth;
    if (!probe_primes.empty()) {
        r.smoothness = smoothness_probe(F, probe_primes);
        smooth = r.smoothness->passed();
    }
    r.conditions = check_conditions(F, r.sigma_R, dimW, smooth);
    return r;
}

namespace {
json rationals(const std::vector<mpq_class>& v)
{
    json out = json::array();
    for (const auto& q : v)
        out.push_back(q.get_str());
    return out;
}
} // namespace

json to_json(const MinRankResult& r)
{
    return {{"lower", r.lower},
            {"upper", r.upper},
            {"certified", r.certified},
            {"method", r.method},
            {"witness", rationals(r.witness)},
            {"witness_exact", r.witness_exact},
            {"witness_rank", r.witness_rank}};
}

json to_json(const PencilReport& r)
{
    json j;
    j["min_rank"] = to_json(r.min_rank);
    j["sigma_R"] = {{"lower", r.sigma_R.lower}, {"upper", r.sigma_R.upper}, {"exact", r.sigma_R.exact()}};
    j["sigma_Z_lower"] = {{"value", r.sigma_Z.value},
                          {"height", r.sigma_Z_height},
                          {"heuristic", r.sigma_Z.heuristic},
                          {"witness", r.sigma_Z.witness}};
    json c;
    c["birch"] = to_string(r.conditions.birch);
    c["birch_threshold"] = r.conditions.birch_threshold;
    c["birch_depends_on_dimW"] = r.conditions.birch_depends_on_dimW;
    c["new_condition"] = r.conditions.new_condition_applicable ? to_string(r.conditions.new_condition) : "n/a";
    c["new_threshold"] = r.conditions.new_threshold;
    c["smooth_chain_consistent"] =
        r.conditions.smooth_chain_consistent ? json(*r.conditions.smooth_chain_consistent) : json(nullptr);
    c["note"] = r.conditions.note;
    j["conditions"] = c;
    if (r.smoothness) {
        json probes = json::array();
        for (const auto& p : r.smoothness->primes)
            probes.push_back({{"p", p.p},
                              {"singular_point_found", p.singular_point_found},
                              {"point", p.point},
                              {"points_checked", p.points_checked}});
        j["smoothness_probe"] = {{"passed", r.smoothness->passed()}, {"primes", probes}};
    }
    return j;
}

} // namespace hlc
