#pragma once

#include "qmisdr/basis.hpp"
#include "qmisdr/data_model.hpp"
#include "qmisdr/lsqmid.hpp"

#include <cstdint>
#include <vector>

namespace qmisdr {

// Least-squares fit of the density difference itself, d = alpha^T psi,
// with the same Gaussian basis as the derivative estimator.
struct LsqmiFit {
  CenterSet centers;
  double sigma = 1.0;
  double lambda = 0.0;
  Vector alpha;
  Matrix d;
  Vector q_hat;
};

// q_hat = (1/n) sum_i psi(z_i, y_i) - (1/n^2) sum_{i,j} psi(z_i, y_j);
// alpha = (D + lambda I)^{-1} q_hat.
LsqmiFit lsqmi_fit(const Matrix& z, const Matrix& y, const CenterSet& centers, double sigma, double lambda);
LsqmiFit lsqmi_fit(const Matrix& z, const Matrix& y, double sigma, double lambda, Eigen::Index b,
                   std::uint64_t seed);

Vector lsqmi_q_hat(const Matrix& z, const Matrix& y, const CenterSet& centers, double sigma);

struct LsqmiValues {
  double linear;     // 1/2 alpha^T q_hat
  double quadratic;  // 1/2 alpha^T D alpha
  double combined;   // alpha^T q_hat - 1/2 alpha^T D alpha
};

LsqmiValues lsqmi_values(const LsqmiFit& fit);

// The combined estimator alpha^T q_hat - 1/2 alpha^T D alpha.
double lsqmi_value(const LsqmiFit& fit);

double lsqmi_residual(const LsqmiFit& fit);

// Held-out objective: fold average of 1/2 alpha^T D alpha - alpha^T q_hat_heldout.
// Returns a single (sigma, lambda) shared across all projected coordinates.
CvChoice lsqmi_cv(const Matrix& z, const Matrix& y, const CenterSet& centers, const CvGrid& grid, int folds,
                  std::uint64_t fold_seed);
CvChoice lsqmi_cv(const Matrix& z, const Matrix& y, const CvGrid& grid, int folds, std::uint64_t seed,
                  Eigen::Index b);

// LSQMI value at projection w, with centers taken from sample indices
// `center_indices` of the projected data.
double lsqmi_value_at(const Matrix& x, const Matrix& y, const Matrix& w,
                      const std::vector<Eigen::Index>& center_indices, double sigma, double lambda);

// Central finite-difference gradient of the LSQMI value with respect to
// every entry of w; alpha is refitted at each perturbed w with sigma,
// lambda and the center sample indices held fixed.
Matrix lsqmi_w_gradient(const Matrix& x, const Matrix& y, const Matrix& w,
                        const std::vector<Eigen::Index>& center_indices, double sigma, double lambda,
                        double step);

}  // namespace qmisdr
