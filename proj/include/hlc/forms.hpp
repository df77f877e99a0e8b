#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <gmpxx.h>

#include "hlc/error.hpp"

namespace hlc {

using Exponents = std::vector<int>;
using Int128 = __int128;

int total_degree(const Exponents& e);

namespace detail {
template <class C> bool is_zero_coeff(const C& c) { return c == 0; }
} // namespace detail

// Sparse polynomial in n variables: exponent vector -> nonzero coefficient.
// `degree` is the declared degree d; every stored term has total degree <= d.
template <class Coeff>
class Polynomial {
public:
    using coeff_type = Coeff;
    using TermMap = std::map<Exponents, Coeff>;

    Polynomial() = default;
    Polynomial(int n, int degree) : n_(n), degree_(degree)
    {
        if (n <= 0)
            throw ValidationError("polynomial: variable count must be positive");
        if (degree < 0)
            throw ValidationError("polynomial: degree must be nonnegative");
    }

    int n() const { return n_; }
    int degree() const { return degree_; }
    const TermMap& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    // Accumulates c into the coefficient of x^e; zero results are erased.
    void add_term(const Exponents& e, const Coeff& c)
    {
        if (static_cast<int>(e.size()) != n_)
            throw ValidationError("polynomial: exponent vector has wrong length");
        for (int v : e)
            if (v < 0)
                throw ValidationError("polynomial: negative exponent");
        if (total_degree(e) > degree_)
            throw ValidationError("polynomial: term degree exceeds declared degree");
        if (detail::is_zero_coeff(c))
            return;
        auto [it, inserted] = terms_.try_emplace(e, c);
        if (!inserted) {
            it->second += c;
            if (detail::is_zero_coeff(it->second))
                terms_.erase(it);
        }
    }

    Coeff coeff(const Exponents& e) const
    {
        auto it = terms_.find(e);
        return it == terms_.end() ? Coeff(0) : it->second;
    }

    bool is_homogeneous() const
    {
        for (const auto& [e, c] : terms_)
            if (total_degree(e) != degree_)
                return false;
        return true;
    }

    // Largest total degree actually present (-1 for the zero polynomial).
    int actual_degree() const
    {
        int m = -1;
        for (const auto& [e, c] : terms_)
            m = std::max(m, total_degree(e));
        return m;
    }

    friend bool operator==(const Polynomial& a, const Polynomial& b)
    {
        return a.n_ == b.n_ && a.degree_ == b.degree_ && a.terms_ == b.terms_;
    }

private:
    int n_ = 0;
    int degree_ = 0;
    TermMap terms_;
};

using IntegerForm = Polynomial<std::int64_t>;
using RationalForm = Polynomial<mpq_class>;
using RealForm = Polynomial<double>;

// R integer polynomials sharing n and d.
class FormSystem {
public:
    FormSystem() = default;
    explicit FormSystem(std::vector<IntegerForm> forms);

    int n() const { return n_; }
    int degree() const { return d_; }
    int R() const { return static_cast<int>(forms_.size()); }
    const std::vector<IntegerForm>& forms() const { return forms_; }
    const IntegerForm& operator[](std::size_t i) const { return forms_[i]; }

    bool homogeneous() const;
    // Rank over Q of the coefficient matrix of the degree-d parts equals R.
    bool independent() const { return independent_; }
    int leading_rank() const { return leading_rank_; }

private:
    std::vector<IntegerForm> forms_;
    int n_ = 0;
    int d_ = 0;
    int leading_rank_ = 0;
    bool independent_ = false;
};

// Product of closed intervals [a_i, b_i] inside [-1, 1]^n.
struct Box {
    std::vector<std::pair<double, double>> intervals;

    static Box symmetric(int n) { return Box{std::vector<std::pair<double, double>>(n, {-1.0, 1.0})}; }
    static Box unit(int n) { return Box{std::vector<std::pair<double, double>>(n, {0.0, 1.0})}; }

    int n() const { return static_cast<int>(intervals.size()); }
    double volume() const;
    // Containment in [-1,1]^n with a_i <= b_i; throws ValidationError otherwise.
    void validate() const;
    // Theorem-level admissibility: every side has length at most 1.
    bool admissible() const;
    // Closed integer range {x : a*P <= x <= b*P} for coordinate i.
    std::pair<std::int64_t, std::int64_t> integer_range(int i, double P) const;
};

// ---- evaluation -----------------------------------------------------------

// Exact value; throws OverflowError if any intermediate leaves 128 bits.
Int128 evaluate(const IntegerForm& f, std::span<const std::int64_t> x);
mpz_class evaluate_exact(const IntegerForm& f, std::span<const std::int64_t> x);
double evaluate(const RealForm& f, std::span<const double> x);
mpq_class evaluate(const RationalForm& f, std::span<const mpq_class> x);

IntegerForm leading_part(const IntegerForm& f);
RealForm leading_part(const RealForm& f);
RationalForm leading_part(const RationalForm& f);

RealForm to_real(const IntegerForm& f);
RealForm to_real(const RationalForm& f);
RationalForm to_rational(const IntegerForm& f);

RationalForm combine(const FormSystem& F, std::span<const mpq_class> beta);
RealForm combine(const FormSystem& F, std::span<const double> beta);

// (1/d!) max_j |d^d f / dx_{j1}..dx_{jd}|, over the degree-d part.
double sup_norm_leading(const RealForm& f);
double sup_norm_leading(const IntegerForm& f);
mpq_class sup_norm_leading(const RationalForm& f);

// m^(f)(x^(1),...,x^(d-1)): component i contracts the d-th derivative tensor
// with the d-1 vectors in its first d-1 slots.
std::vector<double> multilinear_gradient(const RealForm& f, std::span<const std::vector<double>> vectors);
std::vector<mpq_class> multilinear_gradient(const RationalForm& f,
                                            std::span<const std::vector<mpq_class>> vectors);

// Dense d-th derivative tensor (row-major, n^d entries); d <= 3 only.
std::vector<double> derivative_tensor(const RealForm& f);

// R x n matrix of first partials at an integer point, exact.
std::vector<std::vector<mpz_class>> jacobian(const FormSystem& F, std::span<const std::int64_t> x);
std::vector<std::vector<double>> jacobian(const FormSystem& F, std::span<const double> x);

// Partial derivative d f / d x_j as a polynomial of degree d-1.
IntegerForm partial(const IntegerForm& f, int j);

// Sum over terms of |c| * prod_i max(|lo_i|,|hi_i|)^{e_i}; bounds |f| on the box.
long double magnitude_bound(const IntegerForm& f, std::span<const std::int64_t> max_abs);

// Compact human-readable rendering, e.g. "x1^2 + x2^2 - x3^2".
std::string to_string(const IntegerForm& f);

} // namespace hlc
