#include "hlc/forms.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "hlc/exact_linalg.hpp"

namespace hlc {

int total_degree(const Exponents& e)
{
    return std::accumulate(e.begin(), e.end(), 0);
}

namespace {

Int128 checked_mul(Int128 a, Int128 b)
{
    Int128 r;
    if (__builtin_mul_overflow(a, b, &r))
        throw OverflowError("integer evaluation overflowed 128 bits");
    return r;
}

Int128 checked_add(Int128 a, Int128 b)
{
    Int128 r;
    if (__builtin_add_overflow(a, b, &r))
        throw OverflowError("integer evaluation overflowed 128 bits");
    return r;
}

long long factorial(int k)
{
    long long r = 1;
    for (int i = 2; i <= k; ++i)
        r *= i;
    return r;
}

template <class Poly>
Poly leading_part_impl(const Poly& f)
{
    Poly out(f.n(), f.degree());
    for (const auto& [e, c] : f.terms())
        if (total_degree(e) == f.degree())
            out.add_term(e, c);
    return out;
}

template <class Poly>
void check_dim(const Poly& f, std::size_t len)
{
    if (static_cast<int>(len) != f.n())
        throw ValidationError("dimension mismatch: expected " + std::to_string(f.n()) + " coordinates, got "
                              + std::to_string(len));
}

// Visits every distinct ordering of the multiset `items`.
template <class Fn>
void for_each_ordering(std::vector<int> items, Fn&& fn)
{
    std::sort(items.begin(), items.end());
    do {
        fn(items);
    } while (std::next_permutation(items.begin(), items.end()));
}

std::vector<int> expand_multiset(const Exponents& e)
{
    std::vector<int> out;
    for (int j = 0; j < static_cast<int>(e.size()); ++j)
        for (int k = 0; k < e[j]; ++k)
            out.push_back(j);
    return out;
}

long long exponent_factorials(const Exponents& e)
{
    long long r = 1;
    for (int v : e)
        r *= factorial(v);
    return r;
}

template <class T, class Poly>
std::vector<T> multilinear_gradient_impl(const Poly& f, std::span<const std::vector<T>> vectors)
{
    const int d = f.degree();
    if (d < 1 || static_cast<int>(vectors.size()) != d - 1)
        throw ValidationError("multilinear_gradient: expected d-1 = " + std::to_string(d - 1) + " vectors");
    for (const auto& v : vectors)
        check_dim(f, v.size());
    std::vector<T> out(f.n(), T(0));
    for (const auto& [e, c] : f.terms()) {
        if (total_degree(e) != d)
            continue;
        // d-th partial along any ordering of the multiset e equals c * prod e_j!.
        const T weight = T(c) * T(static_cast<double>(exponent_factorials(e)));
        for (int i = 0; i < f.n(); ++i) {
            if (e[i] == 0)
                continue;
            Exponents rest = e;
            --rest[i];
            T acc(0);
            for_each_ordering(expand_multiset(rest), [&](const std::vector<int>& js) {
                T prod(1);
                for (std::size_t k = 0; k < js.size(); ++k)
                    prod *= vectors[k][js[k]];
                acc += prod;
            });
            out[i] += weight * acc;
        }
    }
    return out;
}

} // namespace

// ---- FormSystem -----------------------------------------------------------

FormSystem::FormSystem(std::vector<IntegerForm> forms) : forms_(std::move(forms))
{
    if (forms_.empty())
        throw ValidationError("form system: at least one form required");
    n_ = forms_[0].n();
    d_ = forms_[0].degree();
    for (const auto& f : forms_) {
        if (f.n() != n_)
            throw ValidationError("form system: inconsistent variable count");
        if (f.degree() != d_)
            throw ValidationError("form system: inconsistent degree");
        if (f.is_zero())
            throw ValidationError("form system: zero form supplied");
    }
    // Coefficient matrix of the degree-d parts, columns indexed by monomial.
    std::map<Exponents, std::size_t> column;
    for (const auto& f : forms_)
        for (const auto& [e, c] : f.terms())
            if (total_degree(e) == d_)
                column.try_emplace(e, column.size());
    RationalMatrix m(forms_.size(), std::vector<mpq_class>(column.size(), 0));
    for (std::size_t i = 0; i < forms_.size(); ++i)
        for (const auto& [e, c] : forms_[i].terms())
            if (total_degree(e) == d_)
                m[i][column[e]] = mpq_class(static_cast<long>(c));
    leading_rank_ = column.empty() ? 0 : rank(m);
    independent_ = leading_rank_ == R();
}

bool FormSystem::homogeneous() const
{
    return std::all_of(forms_.begin(), forms_.end(), [](const auto& f) { return f.is_homogeneous(); });
}

// ---- Box ------------------------------------------------------------------

double Box::volume() const
{
    double v = 1.0;
    for (const auto& [a, b] : intervals)
        v *= (b - a);
    return v;
}

void Box::validate() const
{
    if (intervals.empty())
        throw ValidationError("box: no intervals");
    for (const auto& [a, b] : intervals) {
        if (!(std::isfinite(a) && std::isfinite(b)))
            throw ValidationError("box: non-finite bound");
        if (a < -1.0 || b > 1.0 || a > b)
            throw ValidationError("box: interval must satisfy -1 <= a <= b <= 1");
    }
}

bool Box::admissible() const
{
    return std::all_of(intervals.begin(), intervals.end(), [](const auto& iv) { return iv.second - iv.first <= 1.0; });
}

std::pair<std::int64_t, std::int64_t> Box::integer_range(int i, double P) const
{
    const long double lo = static_cast<long double>(intervals[i].first) * P;
    const long double hi = static_cast<long double>(intervals[i].second) * P;
    auto snap = [](long double v) {
        const long double r = std::nearbyint(v);
        return std::fabs(v - r) <= 1e-12L * std::max<long double>(1.0L, std::fabs(v)) ? r : v;
    };
    return {static_cast<std::int64_t>(std::ceil(snap(lo))), static_cast<std::int64_t>(std::floor(snap(hi)))};
}

// ---- evaluation -----------------------------------------------------------

Int128 evaluate(const IntegerForm& f, std::span<const std::int64_t> x)
{
    check_dim(f, x.size());
    Int128 total = 0;
    for (const auto& [e, c] : f.terms()) {
        Int128 term = c;
        for (int j = 0; j < f.n(); ++j)
            for (int k = 0; k < e[j]; ++k)
                term = checked_mul(term, x[j]);
        total = checked_add(total, term);
    }
    return total;
}

mpz_class evaluate_exact(const IntegerForm& f, std::span<const std::int64_t> x)
{
    check_dim(f, x.size());
    mpz_class total = 0;
    for (const auto& [e, c] : f.terms()) {
        mpz_class term = static_cast<long>(c);
        for (int j = 0; j < f.n(); ++j)
            for (int k = 0; k < e[j]; ++k)
                term *= static_cast<long>(x[j]);
        total += term;
    }
    return total;
}

double evaluate(const RealForm& f, std::span<const double> x)
{
    check_dim(f, x.size());
    double total = 0.0;
    for (const auto& [e, c] : f.terms()) {
        double term = c;
        for (int j = 0; j < f.n(); ++j)
            for (int k = 0; k < e[j]; ++k)
                term *= x[j];
        total += term;
    }
    return total;
}

mpq_class evaluate(const RationalForm& f, std::span<const mpq_class> x)
{
    check_dim(f, x.size());
    mpq_class total = 0;
    for (const auto& [e, c] : f.terms()) {
        mpq_class term = c;
        for (int j = 0; j < f.n(); ++j)
            for (int k = 0; k < e[j]; ++k)
                term *= x[j];
        total += term;
    }
    return total;
}

IntegerForm leading_part(const IntegerForm& f) { return leading_part_impl(f); }
RealForm leading_part(const RealForm& f) { return leading_part_impl(f); }
RationalForm leading_part(const RationalForm& f) { return leading_part_impl(f); }

RealForm to_real(const IntegerForm& f)
{
    RealForm out(f.n(), f.degree());
    for (const auto& [e, c] : f.terms())
        out.add_term(e, static_cast<double>(c));
    return out;
}

RealForm to_real(const RationalForm& f)
{
    RealForm out(f.n(), f.degree());
    for (const auto& [e, c] : f.terms())
        out.add_term(e, c.get_d());
    return out;
}

RationalForm to_rational(const IntegerForm& f)
{
    RationalForm out(f.n(), f.degree());
    for (const auto& [e, c] : f.terms())
        out.add_term(e, mpq_class(static_cast<long>(c)));
    return out;
}

RationalForm combine(const FormSystem& F, std::span<const mpq_class> beta)
{
    if (static_cast<int>(beta.size()) != F.R())
        throw ValidationError("combine: beta has wrong length");
    RationalForm out(F.n(), F.degree());
    for (int i = 0; i < F.R(); ++i)
        for (const auto& [e, c] : F[i].terms())
            out.add_term(e, beta[i] * mpq_class(static_cast<long>(c)));
    return out;
}

RealForm combine(const FormSystem& F, std::span<const double> beta)
{
    if (static_cast<int>(beta.size()) != F.R())
        throw ValidationError("combine: beta has wrong length");
    RealForm out(F.n(), F.degree());
    for (int i = 0; i < F.R(); ++i)
        for (const auto& [e, c] : F[i].terms())
            out.add_term(e, beta[i] * static_cast<double>(c));
    return out;
}

double sup_norm_leading(const RealForm& f)
{
    double best = 0.0;
    for (const auto& [e, c] : f.terms())
        if (total_degree(e) == f.degree())
            best = std::max(best, std::fabs(c) * static_cast<double>(exponent_factorials(e)));
    return best / static_cast<double>(factorial(f.degree()));
}

double sup_norm_leading(const IntegerForm& f) { return sup_norm_leading(to_real(f)); }

mpq_class sup_norm_leading(const RationalForm& f)
{
    mpq_class best = 0;
    for (const auto& [e, c] : f.terms())
        if (total_degree(e) == f.degree()) {
            mpq_class v = abs(c) * mpq_class(static_cast<long>(exponent_factorials(e)));
            if (v > best)
                best = v;
        }
    return best / mpq_class(static_cast<long>(factorial(f.degree())));
}

std::vector<double> multilinear_gradient(const RealForm& f, std::span<const std::vector<double>> vectors)
{
    return multilinear_gradient_impl<double>(f, vectors);
}

std::vector<mpq_class> multilinear_gradient(const RationalForm& f,
                                            std::span<const std::vector<mpq_class>> vectors)
{
    const int d = f.degree();
    if (d < 1 || static_cast<int>(vectors.size()) != d - 1)
        throw ValidationError("multilinear_gradient: expected d-1 = " + std::to_string(d - 1) + " vectors");
    for (const auto& v : vectors)
        check_dim(f, v.size());
    std::vector<mpq_class> out(f.n(), 0);
    for (const auto& [e, c] : f.terms()) {
        if (total_degree(e) != d)
            continue;
        const mpq_class weight = c * mpq_class(static_cast<long>(exponent_factorials(e)));
        for (int i = 0; i < f.n(); ++i) {
            if (e[i] == 0)
                continue;
            Exponents rest = e;
            --rest[i];
            mpq_class acc = 0;
            for_each_ordering(expand_multiset(rest), [&](const std::vector<int>& js) {
                mpq_class prod = 1;
                for (std::size_t k = 0; k < js.size(); ++k)
                    prod *= vectors[k][js[k]];
                acc += prod;
            });
            out[i] += weight * acc;
        }
    }
    return out;
}

std::vector<double> derivative_tensor(const RealForm& f)
{
    const int n = f.n();
    const int d = f.degree();
    if (d < 1 || d > 3)
        throw ValidationError("derivative_tensor: only 1 <= d <= 3 is materialized");
    std::size_t size = 1;
    for (int k = 0; k < d; ++k)
        size *= n;
    std::vector<double> t(size, 0.0);
    for (const auto& [e, c] : f.terms()) {
        if (total_degree(e) != d)
            continue;
        const double value = c * static_cast<double>(exponent_factorials(e));
        for_each_ordering(expand_multiset(e), [&](const std::vector<int>& js) {
            std::size_t idx = 0;
            for (int j : js)
                idx = idx * n + j;
            t[idx] = value;
        });
    }
    return t;
}

IntegerForm partial(const IntegerForm& f, int j)
{
    IntegerForm out(f.n(), std::max(0, f.degree() - 1));
    for (const auto& [e, c] : f.terms()) {
        if (e[j] == 0)
            continue;
        Exponents de = e;
        --de[j];
        out.add_term(de, c * e[j]);
    }
    return out;
}

std::vector<std::vector<mpz_class>> jacobian(const FormSystem& F, std::span<const std::int64_t> x)
{
    if (static_cast<int>(x.size()) != F.n())
        throw ValidationError("jacobian: dimension mismatch");
    std::vector<std::vector<mpz_class>> J(F.R(), std::vector<mpz_class>(F.n()));
    for (int i = 0; i < F.R(); ++i)
        for (int j = 0; j < F.n(); ++j)
            J[i][j] = evaluate_exact(partial(F[i], j), x);
    return J;
}

std::vector<std::vector<double>> jacobian(const FormSystem& F, std::span<const double> x)
{
    if (static_cast<int>(x.size()) != F.n())
        throw ValidationError("jacobian: dimension mismatch");
    std::vector<std::vector<double>> J(F.R(), std::vector<double>(F.n()));
    for (int i = 0; i < F.R(); ++i)
        for (int j = 0; j < F.n(); ++j)
            J[i][j] = evaluate(to_real(partial(F[i], j)), x);
    return J;
}

long double magnitude_bound(const IntegerForm& f, std::span<const std::int64_t> max_abs)
{
    long double total = 0;
    for (const auto& [e, c] : f.terms()) {
        long double term = std::fabs(static_cast<long double>(c));
        for (int j = 0; j < f.n(); ++j)
            term *= std::pow(static_cast<long double>(max_abs[j]), e[j]);
        total += term;
    }
    return total;
}

std::string to_string(const IntegerForm& f)
{
    if (f.is_zero())
        return "0";
    std::ostringstream os;
    bool first = true;
    // Highest degree first, then lexicographically descending exponents.
    std::vector<std::pair<Exponents, std::int64_t>> terms(f.terms().rbegin(), f.terms().rend());
    std::stable_sort(terms.begin(), terms.end(),
                     [](const auto& a, const auto& b) { return total_degree(a.first) > total_degree(b.first); });
    for (const auto& [e, c] : terms) {
        std::int64_t mag = c < 0 ? -c : c;
        if (first)
            os << (c < 0 ? "-" : "");
        else
            os << (c < 0 ? " - " : " + ");
        first = false;
        bool has_var = total_degree(e) > 0;
        if (mag != 1 || !has_var)
            os << mag << (has_var ? "*" : "");
        bool first_var = true;
        for (int j = 0; j < f.n(); ++j) {
            if (e[j] == 0)
                continue;
            if (!first_var)
                os << "*";
            first_var = false;
            os << "x" << (j + 1);
            if (e[j] > 1)
                os << "^" << e[j];
        }
    }
    return os.str();
}

} // namespace hlc
