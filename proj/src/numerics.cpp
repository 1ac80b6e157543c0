#include "qmisdr/numerics.hpp"

#include "qmisdr/errors.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace qmisdr {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Vector solve_regularized(const Matrix& m, double lambda, const Vector& rhs) {
  if (m.rows() != m.cols() || m.rows() != rhs.size()) {
    throw DimensionMismatch("solve_regularized: incompatible system size");
  }
  Matrix a = m;
  a.diagonal().array() += lambda;

  Eigen::LLT<Matrix> llt(a);
  if (llt.info() == Eigen::Success) {
    const double rcond = llt.rcond();
    if (!(rcond * kMaxConditionNumber >= 1.0)) {
      throw SolveFailure("regularized system is numerically singular (rcond " + std::to_string(rcond) + ")");
    }
    Vector x = llt.solve(rhs);
    // One step of iterative refinement.
    x += llt.solve(rhs - a * x);
    return x;
  }

  Eigen::LDLT<Matrix> ldlt(a);
  if (ldlt.info() != Eigen::Success) throw SolveFailure("LDLT factorization failed");
  const double rcond = ldlt.rcond();
  if (!(rcond * kMaxConditionNumber >= 1.0)) {
    throw SolveFailure("regularized system is numerically singular (rcond " + std::to_string(rcond) + ")");
  }
  Vector x = ldlt.solve(rhs);
  x += ldlt.solve(rhs - a * x);
  return x;
}

std::vector<Eigen::Index> random_permutation(Eigen::Index n, Rng& rng) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  // Explicit Fisher-Yates so the sequence does not depend on the standard
  // library's shuffle implementation.
  for (Eigen::Index i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<Eigen::Index> pick(0, i);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  return idx;
}

std::vector<std::vector<Eigen::Index>> make_folds(Eigen::Index n, int k, std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("need at least 2 folds");
  if (n < k) throw FoldTooSmall("fewer samples than folds");
  Rng rng(seed);
  const auto perm = random_permutation(n, rng);
  std::vector<std::vector<Eigen::Index>> folds(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < perm.size(); ++i) folds[i % static_cast<std::size_t>(k)].push_back(perm[i]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

std::vector<Eigen::Index> complement_of_fold(const std::vector<std::vector<Eigen::Index>>& folds,
                                             std::size_t j) {
  std::vector<Eigen::Index> out;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    if (f == j) continue;
    out.insert(out.end(), folds[f].begin(), folds[f].end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

Matrix gather_rows(const Matrix& m, const std::vector<Eigen::Index>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

}  // namespace qmisdr
