#pragma once

#include "qmisdr/basis.hpp"
#include "qmisdr/data_model.hpp"

#include <cstdint>
#include <vector>

namespace qmisdr {

// Least-squares fit of the partial derivatives of the density difference
// p(z, y) - p(z) p(y) along each projected coordinate. One model per
// output coordinate ell, all sharing the same center set.
struct DerivativeFit {
  std::vector<Eigen::Index> center_indices;
  std::vector<BasisModel> models;
  std::vector<Vector> thetas;
  std::vector<double> lambdas;
  std::vector<Vector> h_hats;

  Eigen::Index dz() const noexcept { return static_cast<Eigen::Index>(models.size()); }
};

struct QmiGradient {
  Matrix grad;  // dz x dx
};

// Rows of the joint-minus-product weighting: entry (i, k) is
//   phi_k(z_i, y_i) - (1/n) sum_j phi_k(z_i, y_j),
// so that (1/n) sum_i P(i, k) g(x_i) equals the joint sample average minus
// the product-of-marginals average of phi_k * g. The double sum is exact:
// phi_k separates into a z factor and a y factor.
Matrix density_difference_weights(const BasisModel& m, const Matrix& z, const Matrix& y);

// h_hat_k = (1/n) sum_i dvarphi_k(z_i, y_i) - (1/n^2) sum_{i,j} dvarphi_k(z_i, y_j),
// where dvarphi_k = d varphi_k / d z^(ell) is the second derivative of
// phi_k along z^(ell). This is the sample version of the integral left
// after integrating the cross term of the squared loss by parts.
Vector compute_h_hat(const BasisModel& m, const Matrix& z, const Matrix& y);

// theta_ell = -(H_ell + lambda_ell I)^{-1} h_hat_ell for every ell.
DerivativeFit fit_derivative(const Matrix& z, const Matrix& y, const CenterSet& centers,
                             const std::vector<double>& sigmas, const std::vector<double>& lambdas);

// Draws b centers with the given seed, then fits.
DerivativeFit fit_derivative(const Matrix& z, const Matrix& y, const std::vector<double>& sigmas,
                             const std::vector<double>& lambdas, Eigen::Index b, std::uint64_t seed);

// ||(H + lambda I) theta + h_hat|| / ||h_hat|| for model ell (0 when h_hat = 0 and theta = 0).
double fit_residual(const DerivativeFit& fit, Eigen::Index ell);

// Entry (ell, l') = (1/n) sum_i g_ell(z_i, y_i) x_i^(l') - (1/n^2) sum_{i,j} g_ell(z_i, y_j) x_i^(l')
// with g_ell = theta_ell^T varphi_ell.
QmiGradient qmi_gradient(const DerivativeFit& fit, const Matrix& x, const Matrix& z, const Matrix& y);

// (1/2n) sum_i theta^T phi(z_i, y_i) - (1/2n^2) sum_{i,j} theta^T phi(z_i, y_j).
// Only defined for dz = 1; throws UnsupportedDimension otherwise.
double qmi_tilde(const DerivativeFit& fit, const Matrix& z, const Matrix& y);

struct CvGrid {
  std::vector<double> sigmas{0.1, 0.25, 0.5, 1.0, 1.5, 2.0};
  std::vector<double> lambdas{1e-3, 1e-2, 1e-1, 1.0};
};

struct CvChoice {
  double sigma = 0.0;
  double lambda = 0.0;
  double score = 0.0;
};

struct CvResult {
  std::vector<CvChoice> choices;  // one per ell
  // scores[ell][s * n_lambda + l] for the grid sorted ascending.
  std::vector<std::vector<double>> scores;
};

// K-fold selection of (sigma_ell, lambda_ell) over the Cartesian grid. The
// score of a candidate is the fold average of
//   1/2 theta^T H theta + theta^T h_hat_heldout
// with theta fitted on the remaining folds. Ties go to the smaller sigma,
// then the smaller lambda.
CvResult cross_validate(const Matrix& z, const Matrix& y, const CenterSet& centers, const CvGrid& grid,
                        int folds, std::uint64_t fold_seed);

CvResult cross_validate(const Matrix& z, const Matrix& y, const CvGrid& grid, int folds, std::uint64_t seed,
                        Eigen::Index b);

// Shared by both cross-validators.
void validate_cv_inputs(Eigen::Index n, const CvGrid& grid, int folds);
std::vector<std::vector<Eigen::Index>> checked_folds(Eigen::Index n, int folds, std::uint64_t seed);

}  // namespace qmisdr
