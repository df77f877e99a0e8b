#pragma once

#include <vector>

#include <gmpxx.h>

namespace hlc {

using RationalMatrix = std::vector<std::vector<mpq_class>>;

// Rank over Q by fraction-exact Gaussian elimination.
int rank(RationalMatrix m);

// Determinant over Q of a square matrix.
mpq_class determinant(RationalMatrix m);

// Basis of the right kernel {v : m v = 0} over Q.
std::vector<std::vector<mpq_class>> kernel_basis(RationalMatrix m);

// Rank over Z/p of an integer matrix (entries reduced mod p).
int rank_mod_p(const std::vector<std::vector<mpz_class>>& m, unsigned long p);

} // namespace hlc
