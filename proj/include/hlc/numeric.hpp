#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

namespace hlc {

using Complex = std::complex<double>;

// Neumaier compensated summation.
class CompensatedSum {
public:
    void add(double x)
    {
        const double t = sum_ + x;
        if (std::fabs(sum_) >= std::fabs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    void add(const CompensatedSum& other)
    {
        add(other.sum_);
        add(other.comp_);
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

class ComplexSum {
public:
    void add(Complex z)
    {
        re_.add(z.real());
        im_.add(z.imag());
    }
    void add(const ComplexSum& other)
    {
        re_.add(other.re_);
        im_.add(other.im_);
    }
    Complex value() const { return {re_.value(), im_.value()}; }

private:
    CompensatedSum re_, im_;
};

// e(t) = exp(2 pi i t), argument reduced mod 1 first.
inline Complex e_of(long double t)
{
    const long double r = t - std::floor(t);
    const double a = static_cast<double>(2.0L * std::numbers::pi_v<long double> * r);
    return {std::cos(a), std::sin(a)};
}

// e(j / q) for j = 0..q-1.
std::vector<Complex> roots_of_unity(std::uint64_t q);

// Composite Gauss-Legendre rule on [a, b] with `panels` equal panels.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
QuadratureRule composite_gauss(double a, double b, int panels);
constexpr int kGaussOrder = 20;

// Uniform double in [0, 1) from the top 53 bits of a 64-bit draw.
inline double u01(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

} // namespace hlc
