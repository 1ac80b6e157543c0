#include "qmisdr/lsqmid.hpp"

#include "qmisdr/errors.hpp"
#include "qmisdr/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace qmisdr {

namespace {

Matrix weights_from_kernels(const Matrix& zk, const Matrix& yk) {
  const double inv_n = 1.0 / static_cast<double>(zk.rows());
  const Eigen::RowVectorXd y_mean = yk.colwise().sum() * inv_n;
  return zk.cwiseProduct(yk) - (zk.array().rowwise() * y_mean.array()).matrix();
}

// Entry (i, k) = -(z_i^(ell) - u_k^(ell)) / sigma^2.
Matrix derivative_factor(const BasisModel& m, const Matrix& z) {
  const double inv_s2 = 1.0 / (m.sigma() * m.sigma());
  const auto zl = z.col(m.ell());
  const auto ul = m.centers_u().col(m.ell());
  Matrix f(z.rows(), m.b());
  for (Eigen::Index k = 0; k < m.b(); ++k) f.col(k) = (zl.array() - ul(k)) * (-inv_s2);
  return f;
}

// Entry (i, k) = d varphi_k / d z^(ell) / phi_k = ((z_i^(ell) - u_k^(ell))^2 / sigma^2 - 1) / sigma^2.
Matrix second_derivative_factor(const BasisModel& m, const Matrix& z) {
  const double inv_s2 = 1.0 / (m.sigma() * m.sigma());
  const auto zl = z.col(m.ell());
  const auto ul = m.centers_u().col(m.ell());
  Matrix f(z.rows(), m.b());
  for (Eigen::Index k = 0; k < m.b(); ++k) {
    f.col(k) = ((zl.array() - ul(k)).square() * inv_s2 - 1.0) * inv_s2;
  }
  return f;
}

Vector h_hat_from(const Matrix& deriv, const Matrix& weights) {
  return deriv.cwiseProduct(weights).colwise().sum().transpose() / static_cast<double>(weights.rows());
}

void check_sample(const Matrix& z, const Matrix& y) {
  if (z.rows() != y.rows()) throw DimensionMismatch("z and y have different sample counts");
  if (z.rows() < 1) throw InvalidArgument("empty sample");
}

}  // namespace

Matrix density_difference_weights(const BasisModel& m, const Matrix& z, const Matrix& y) {
  check_sample(z, y);
  return weights_from_kernels(z_kernel(m, z), y_kernel(m, y));
}

Vector compute_h_hat(const BasisModel& m, const Matrix& z, const Matrix& y) {
  check_sample(z, y);
  return h_hat_from(second_derivative_factor(m, z), density_difference_weights(m, z, y));
}

DerivativeFit fit_derivative(const Matrix& z, const Matrix& y, const CenterSet& centers,
                             const std::vector<double>& sigmas, const std::vector<double>& lambdas) {
  check_sample(z, y);
  const Eigen::Index dz = z.cols();
  if (static_cast<Eigen::Index>(sigmas.size()) != dz || static_cast<Eigen::Index>(lambdas.size()) != dz) {
    throw DimensionMismatch("need one width and one regularizer per projected coordinate");
  }
  if (centers.u.cols() != dz || centers.v.cols() != y.cols()) {
    throw DimensionMismatch("center dimensions do not match the sample");
  }
  DerivativeFit fit;
  fit.center_indices = centers.indices;
  for (Eigen::Index l = 0; l < dz; ++l) {
    const double lambda = lambdas[static_cast<std::size_t>(l)];
    if (!(lambda >= 0.0)) throw InvalidArgument("regularizer must be non-negative");
    BasisModel m(centers, sigmas[static_cast<std::size_t>(l)], l);
    Vector h_hat = compute_h_hat(m, z, y);
    Vector theta = -solve_regularized(gram_h(m), lambda, h_hat);
    fit.models.push_back(std::move(m));
    fit.thetas.push_back(std::move(theta));
    fit.lambdas.push_back(lambda);
    fit.h_hats.push_back(std::move(h_hat));
  }
  return fit;
}

DerivativeFit fit_derivative(const Matrix& z, const Matrix& y, const std::vector<double>& sigmas,
                             const std::vector<double>& lambdas, Eigen::Index b, std::uint64_t seed) {
  return fit_derivative(z, y, select_centers(z, y, b, seed), sigmas, lambdas);
}

double fit_residual(const DerivativeFit& fit, Eigen::Index ell) {
  const auto l = static_cast<std::size_t>(ell);
  const Matrix h = gram_h(fit.models[l]);
  const Vector r = h * fit.thetas[l] + fit.lambdas[l] * fit.thetas[l] + fit.h_hats[l];
  const double scale = fit.h_hats[l].norm();
  if (scale == 0.0) return r.norm();
  return r.norm() / scale;
}

QmiGradient qmi_gradient(const DerivativeFit& fit, const Matrix& x, const Matrix& z, const Matrix& y) {
  check_sample(z, y);
  if (x.rows() != z.rows()) throw DimensionMismatch("x and z have different sample counts");
  if (z.cols() != fit.dz()) throw DimensionMismatch("z dimension does not match the fit");
  QmiGradient out{Matrix(fit.dz(), x.cols())};
  const double inv_n = 1.0 / static_cast<double>(z.rows());
  for (Eigen::Index l = 0; l < fit.dz(); ++l) {
    const auto& m = fit.models[static_cast<std::size_t>(l)];
    const Matrix g = derivative_factor(m, z).cwiseProduct(density_difference_weights(m, z, y));
    const Vector per_sample = g * fit.thetas[static_cast<std::size_t>(l)];
    out.grad.row(l) = (x.transpose() * per_sample).transpose() * inv_n;
  }
  return out;
}

double qmi_tilde(const DerivativeFit& fit, const Matrix& z, const Matrix& y) {
  if (fit.dz() != 1) throw UnsupportedDimension("QMI approximation from the derivative fit requires dz = 1");
  check_sample(z, y);
  if (z.cols() != 1) throw DimensionMismatch("z must have one column");
  const Matrix p = density_difference_weights(fit.models.front(), z, y);
  return 0.5 * (p * fit.thetas.front()).sum() / static_cast<double>(z.rows());
}

void validate_cv_inputs(Eigen::Index n, const CvGrid& grid, int folds) {
  if (grid.sigmas.empty() || grid.lambdas.empty()) throw EmptyGrid("cross-validation grid is empty");
  for (double s : grid.sigmas) {
    if (!(s > 0.0)) throw InvalidArgument("grid widths must be positive");
  }
  for (double l : grid.lambdas) {
    if (!(l >= 0.0)) throw InvalidArgument("grid regularizers must be non-negative");
  }
  if (folds < 2) throw InvalidArgument("cross-validation needs K >= 2");
  if (n < folds) throw FoldTooSmall("fewer samples than folds");
}

std::vector<std::vector<Eigen::Index>> checked_folds(Eigen::Index n, int folds, std::uint64_t seed) {
  auto out = make_folds(n, folds, seed);
  for (const auto& f : out) {
    if (f.size() < 2) throw FoldTooSmall("a fold has fewer than 2 samples");
  }
  return out;
}

CvResult cross_validate(const Matrix& z, const Matrix& y, const CenterSet& centers, const CvGrid& grid_in,
                        int folds, std::uint64_t fold_seed) {
  check_sample(z, y);
  validate_cv_inputs(z.rows(), grid_in, folds);
  CvGrid grid = grid_in;
  std::sort(grid.sigmas.begin(), grid.sigmas.end());
  std::sort(grid.lambdas.begin(), grid.lambdas.end());
  const auto assignment = checked_folds(z.rows(), folds, fold_seed);

  std::vector<std::vector<Eigen::Index>> train_rows;
  for (std::size_t j = 0; j < assignment.size(); ++j) train_rows.push_back(complement_of_fold(assignment, j));

  const Eigen::Index dz = z.cols();
  const std::size_t n_lambda = grid.lambdas.size();
  CvResult result;
  result.choices.resize(static_cast<std::size_t>(dz));
  result.scores.assign(static_cast<std::size_t>(dz),
                       std::vector<double>(grid.sigmas.size() * n_lambda, 0.0));

  for (std::size_t s = 0; s < grid.sigmas.size(); ++s) {
    const double sigma = grid.sigmas[s];
    // Kernel factors depend on sigma only; ell enters through H and the
    // derivative factor.
    const BasisModel base(centers, sigma, 0);
    const Matrix zk = z_kernel(base, z);
    const Matrix yk = y_kernel(base, y);
    std::vector<Matrix> train_w, test_w;
    for (std::size_t j = 0; j < assignment.size(); ++j) {
      train_w.push_back(weights_from_kernels(gather_rows(zk, train_rows[j]), gather_rows(yk, train_rows[j])));
      test_w.push_back(weights_from_kernels(gather_rows(zk, assignment[j]), gather_rows(yk, assignment[j])));
    }
    for (Eigen::Index l = 0; l < dz; ++l) {
      const BasisModel m(centers, sigma, l);
      Eigen::SelfAdjointEigenSolver<Matrix> eig(gram_h(m));
      const Vector& ev = eig.eigenvalues();
      const Matrix& q = eig.eigenvectors();
      const Matrix deriv = second_derivative_factor(m, z);
      std::vector<double> total(n_lambda, 0.0);
      for (std::size_t j = 0; j < assignment.size(); ++j) {
        const Vector h_train = h_hat_from(gather_rows(deriv, train_rows[j]), train_w[j]);
        const Vector h_test = h_hat_from(gather_rows(deriv, assignment[j]), test_w[j]);
        const Vector g = q.transpose() * h_train;
        const Vector t = q.transpose() * h_test;
        for (std::size_t li = 0; li < n_lambda; ++li) {
          const Vector shifted = ev.array() + grid.lambdas[li];
          const double lo = shifted.minCoeff();
          const double hi = shifted.cwiseAbs().maxCoeff();
          if (!(lo > 0.0) || hi > kMaxConditionNumber * lo) {
            total[li] = std::numeric_limits<double>::infinity();
            continue;
          }
          // theta in eigen-coordinates.
          const Vector th = -g.cwiseQuotient(shifted);
          total[li] += 0.5 * th.cwiseProduct(ev).dot(th) + th.dot(t);
        }
      }
      for (std::size_t li = 0; li < n_lambda; ++li) {
        result.scores[static_cast<std::size_t>(l)][s * n_lambda + li] = total[li] / static_cast<double>(folds);
      }
    }
  }

  for (Eigen::Index l = 0; l < dz; ++l) {
    const auto& sc = result.scores[static_cast<std::size_t>(l)];
    std::size_t best = sc.size();
    for (std::size_t c = 0; c < sc.size(); ++c) {
      if (!std::isfinite(sc[c])) continue;
      if (best == sc.size() || sc[c] < sc[best]) best = c;
    }
    if (best == sc.size()) throw SolveFailure("every cross-validation candidate is numerically singular");
    result.choices[static_cast<std::size_t>(l)] =
        CvChoice{grid.sigmas[best / n_lambda], grid.lambdas[best % n_lambda], sc[best]};
  }
  return result;
}

CvResult cross_validate(const Matrix& z, const Matrix& y, const CvGrid& grid, int folds, std::uint64_t seed,
                        Eigen::Index b) {
  const CenterSet centers = select_centers(z, y, b, derive_seed(seed, 0));
  return cross_validate(z, y, centers, grid, folds, derive_seed(seed, 1));
}

}  // namespace qmisdr
