#pragma once

// Dense univariate polynomials over Q with the few operations the exact
// pencil analysis needs: Euclidean gcd, Sturm real-root counting, and
// Newton interpolation.

#include <utility>
#include <vector>

#include <gmpxx.h>

namespace hlc::detail {

class UPoly {
public:
    UPoly() = default;
    explicit UPoly(std::vector<mpq_class> c) : c_(std::move(c)) { trim(); }

    int degree() const { return static_cast<int>(c_.size()) - 1; }  // -1 for zero
    bool is_zero() const { return c_.empty(); }
    const mpq_class& lead() const { return c_.back(); }
    const std::vector<mpq_class>& coeffs() const { return c_; }

    mpq_class operator()(const mpq_class& t) const
    {
        mpq_class acc = 0;
        for (auto it = c_.rbegin(); it != c_.rend(); ++it)
            acc = acc * t + *it;
        return acc;
    }

    UPoly derivative() const
    {
        std::vector<mpq_class> d;
        for (std::size_t i = 1; i < c_.size(); ++i)
            d.push_back(c_[i] * static_cast<unsigned long>(i));
        return UPoly(std::move(d));
    }

    UPoly monic() const
    {
        if (is_zero())
            return *this;
        std::vector<mpq_class> m = c_;
        mpq_class l = lead();
        for (auto& v : m)
            v /= l;
        return UPoly(std::move(m));
    }

    UPoly operator-() const
    {
        std::vector<mpq_class> m = c_;
        for (auto& v : m)
            v = -v;
        return UPoly(std::move(m));
    }

    // Remainder of *this divided by g (g nonzero).
    UPoly rem(const UPoly& g) const
    {
        std::vector<mpq_class> r = c_;
        const int dg = g.degree();
        for (int k = static_cast<int>(r.size()) - 1; k >= dg; --k) {
            if (r[k] == 0)
                continue;
            mpq_class f = r[k] / g.lead();
            for (int j = 0; j <= dg; ++j)
                r[k - dg + j] -= f * g.c_[j];
        }
        r.resize(std::max(0, dg));
        return UPoly(std::move(r));
    }

    static UPoly gcd(UPoly a, UPoly b)
    {
        while (!b.is_zero()) {
            UPoly r = a.rem(b);
            a = std::move(b);
            b = std::move(r);
        }
        return a.monic();
    }

    // Number of distinct real roots (Sturm); zero polynomial is not allowed.
    int real_root_count() const
    {
        if (degree() <= 0)
            return 0;
        auto seq = sturm_sequence();
        auto variations = [&](bool plus_infinity) {
            int v = 0, prev = 0;
            for (const auto& p : seq) {
                int s = sgn(p.lead());
                if (!plus_infinity && (p.degree() % 2 == 1))
                    s = -s;
                if (s != 0) {
                    if (prev != 0 && s != prev)
                        ++v;
                    prev = s;
                }
            }
            return v;
        };
        return variations(false) - variations(true);
    }

    // Distinct roots in the half-open interval (a, b].
    int roots_in(const mpq_class& a, const mpq_class& b) const
    {
        auto seq = sturm_sequence();
        auto variations = [&](const mpq_class& x) {
            int v = 0, prev = 0;
            for (const auto& p : seq) {
                int s = sgn(p(x));
                if (s != 0) {
                    if (prev != 0 && s != prev)
                        ++v;
                    prev = s;
                }
            }
            return v;
        };
        return variations(a) - variations(b);
    }

    // Newton interpolation through (xs[i], ys[i]).
    static UPoly interpolate(const std::vector<mpq_class>& xs, std::vector<mpq_class> ys)
    {
        const std::size_t m = xs.size();
        for (std::size_t j = 1; j < m; ++j)
            for (std::size_t i = m - 1; i >= j; --i) {
                ys[i] = (ys[i] - ys[i - 1]) / (xs[i] - xs[i - j]);
                if (i == j)
                    break;
            }
        // Expand the Newton form into monomial coefficients.
        std::vector<mpq_class> c(1, ys[m - 1]);
        for (std::size_t k = m - 1; k-- > 0;) {
            std::vector<mpq_class> next(c.size() + 1, 0);
            for (std::size_t i = 0; i < c.size(); ++i) {
                next[i + 1] += c[i];
                next[i] -= c[i] * xs[k];
            }
            next[0] += ys[k];
            c = std::move(next);
        }
        return UPoly(std::move(c));
    }

private:
    std::vector<UPoly> sturm_sequence() const
    {
        std::vector<UPoly> seq{*this, derivative()};
        while (!seq.back().is_zero() && seq.back().degree() > 0) {
            UPoly r = -(seq[seq.size() - 2].rem(seq.back()));
            if (r.is_zero())
                break;
            seq.push_back(std::move(r));
        }
        return seq;
    }

    void trim()
    {
        while (!c_.empty() && c_.back() == 0)
            c_.pop_back();
    }

    std::vector<mpq_class> c_;
};

} // namespace hlc::detail
