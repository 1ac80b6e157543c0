#pragma once

#include "qmisdr/data_model.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace qmisdr {

using Rng = std::mt19937_64;

// Mixes a base seed with a stream index (splitmix64 finalizer) so that
// derived streams for different trials never coincide.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

// Solves (m + lambda I) x = rhs for symmetric m. Tries a Cholesky
// factorization first and falls back to pivoted LDL^T when m + lambda I is
// only semidefinite. Throws SolveFailure when the reciprocal condition
// estimate falls below 1e-14.
Vector solve_regularized(const Matrix& m, double lambda, const Vector& rhs);

inline constexpr double kMaxConditionNumber = 1e14;

// Random permutation of 0..n-1.
std::vector<Eigen::Index> random_permutation(Eigen::Index n, Rng& rng);

// Assigns each of n samples to one of k folds of near-equal size.
std::vector<std::vector<Eigen::Index>> make_folds(Eigen::Index n, int k, std::uint64_t seed);

// Indices of the samples not in fold j.
std::vector<Eigen::Index> complement_of_fold(const std::vector<std::vector<Eigen::Index>>& folds,
                                             std::size_t j);

Matrix gather_rows(const Matrix& m, const std::vector<Eigen::Index>& rows);

}  // namespace qmisdr
