#include "hlc/numeric.hpp"

#include <boost/math/quadrature/gauss.hpp>

namespace hlc {

std::vector<Complex> roots_of_unity(std::uint64_t q)
{
    std::vector<Complex> out(q);
    for (std::uint64_t j = 0; j < q; ++j) {
        // Use the symmetric angle to keep e(j/q) and e(-j/q) exact conjugates.
        const long double num = 2.0L * j <= q ? static_cast<long double>(j) : static_cast<long double>(j) - q;
        const double a = static_cast<double>(2.0L * std::numbers::pi_v<long double> * num / q);
        out[j] = {std::cos(a), std::sin(a)};
    }
    return out;
}

QuadratureRule composite_gauss(double a, double b, int panels)
{
    using Rule = boost::math::quadrature::gauss<double, kGaussOrder>;
    const auto& x = Rule::abscissa();
    const auto& w = Rule::weights();
    QuadratureRule rule;
    if (panels < 1)
        panels = 1;
    const double h = (b - a) / panels;
    for (int k = 0; k < panels; ++k) {
        const double mid = a + (k + 0.5) * h;
        const double half = 0.5 * h;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i] == 0.0) {
                rule.nodes.push_back(mid);
                rule.weights.push_back(w[i] * half);
                continue;
            }
            rule.nodes.push_back(mid - half * x[i]);
            rule.weights.push_back(w[i] * half);
            rule.nodes.push_back(mid + half * x[i]);
            rule.weights.push_back(w[i] * half);
        }
    }
    return rule;
}

} // namespace hlc
