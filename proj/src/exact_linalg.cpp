#include "hlc/exact_linalg.hpp"

#include <cstddef>
#include <utility>

namespace hlc {

namespace {

// Reduces m to row echelon form in place; returns pivot columns.
std::vector<std::size_t> echelon(RationalMatrix& m, int* swaps = nullptr)
{
    std::vector<std::size_t> pivots;
    if (m.empty())
        return pivots;
    const std::size_t rows = m.size();
    const std::size_t cols = m[0].size();
    std::size_t r = 0;
    for (std::size_t c = 0; c < cols && r < rows; ++c) {
        std::size_t piv = r;
        while (piv < rows && m[piv][c] == 0)
            ++piv;
        if (piv == rows)
            continue;
        if (piv != r) {
            std::swap(m[piv], m[r]);
            if (swaps)
                ++*swaps;
        }
        for (std::size_t i = r + 1; i < rows; ++i) {
            if (m[i][c] == 0)
                continue;
            mpq_class factor = m[i][c] / m[r][c];
            for (std::size_t j = c; j < cols; ++j)
                m[i][j] -= factor * m[r][j];
        }
        pivots.push_back(c);
        ++r;
    }
    return pivots;
}

} // namespace

int rank(RationalMatrix m)
{
    return static_cast<int>(echelon(m).size());
}

mpq_class determinant(RationalMatrix m)
{
    const std::size_t n = m.size();
    int swaps = 0;
    auto piv = echelon(m, &swaps);
    if (piv.size() < n)
        return 0;
    mpq_class det = (swaps % 2) ? -1 : 1;
    for (std::size_t i = 0; i < n; ++i)
        det *= m[i][i];
    return det;
}

std::vector<std::vector<mpq_class>> kernel_basis(RationalMatrix m)
{
    std::vector<std::vector<mpq_class>> basis;
    if (m.empty())
        return basis;
    const std::size_t cols = m[0].size();
    auto piv = echelon(m);
    // Back-substitute to reduced row echelon form.
    for (std::size_t r = piv.size(); r-- > 0;) {
        const std::size_t c = piv[r];
        mpq_class lead = m[r][c];
        for (std::size_t j = c; j < cols; ++j)
            m[r][j] /= lead;
        for (std::size_t i = 0; i < r; ++i) {
            if (m[i][c] == 0)
                continue;
            mpq_class factor = m[i][c];
            for (std::size_t j = c; j < cols; ++j)
                m[i][j] -= factor * m[r][j];
        }
    }
    std::vector<bool> is_pivot(cols, false);
    for (auto c : piv)
        is_pivot[c] = true;
    for (std::size_t free = 0; free < cols; ++free) {
        if (is_pivot[free])
            continue;
        std::vector<mpq_class> v(cols, 0);
        v[free] = 1;
        for (std::size_t r = 0; r < piv.size(); ++r)
            v[piv[r]] = -m[r][free];
        basis.push_back(std::move(v));
    }
    return basis;
}

int rank_mod_p(const std::vector<std::vector<mpz_class>>& in, unsigned long p)
{
    if (in.empty())
        return 0;
    const std::size_t rows = in.size();
    const std::size_t cols = in[0].size();
    std::vector<std::vector<unsigned long>> m(rows, std::vector<unsigned long>(cols));
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            mpz_class v = in[i][j] % p;
            if (v < 0)
                v += p;
            m[i][j] = v.get_ui();
        }
    auto inv = [p](unsigned long a) {
        // Fermat inverse; p is prime.
        unsigned long long result = 1, base = a % p, e = p - 2;
        while (e) {
            if (e & 1)
                result = result * base % p;
            base = base * base % p;
            e >>= 1;
        }
        return static_cast<unsigned long>(result);
    };
    int r = 0;
    for (std::size_t c = 0; c < cols && static_cast<std::size_t>(r) < rows; ++c) {
        std::size_t piv = r;
        while (piv < rows && m[piv][c] == 0)
            ++piv;
        if (piv == rows)
            continue;
        std::swap(m[piv], m[r]);
        const unsigned long li = inv(m[r][c]);
        for (std::size_t i = r + 1; i < rows; ++i) {
            if (m[i][c] == 0)
                continue;
            const unsigned long long f = static_cast<unsigned long long>(m[i][c]) * li % p;
            for (std::size_t j = c; j < cols; ++j) {
                const unsigned long long sub = f * m[r][j] % p;
                m[i][j] = static_cast<unsigned long>((m[i][j] + p - sub) % p);
            }
        }
        ++r;
    }
    return r;
}

} // namespace hlc
