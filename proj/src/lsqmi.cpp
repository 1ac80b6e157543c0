#include "qmisdr/lsqmi.hpp"

#include "qmisdr/errors.hpp"
#include "qmisdr/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qmisdr {

namespace {

Vector q_hat_from_kernels(const Matrix& zk, const Matrix& yk) {
  const double inv_n = 1.0 / static_cast<double>(zk.rows());
  const Eigen::RowVectorXd joint = zk.cwiseProduct(yk).colwise().sum() * inv_n;
  const Eigen::RowVectorXd product = (zk.colwise().sum() * inv_n).cwiseProduct(yk.colwise().sum() * inv_n);
  return (joint - product).transpose();
}

}  // namespace

Vector lsqmi_q_hat(const Matrix& z, const Matrix& y, const CenterSet& centers, double sigma) {
  if (z.rows() != y.rows()) throw DimensionMismatch("z and y have different sample counts");
  const BasisModel m(centers, sigma, 0);
  return q_hat_from_kernels(z_kernel(m, z), y_kernel(m, y));
}

LsqmiFit lsqmi_fit(const Matrix& z, const Matrix& y, const CenterSet& centers, double sigma, double lambda) {
  if (!(lambda >= 0.0)) throw InvalidArgument("regularizer must be non-negative");
  LsqmiFit fit;
  fit.centers = centers;
  fit.sigma = sigma;
  fit.lambda = lambda;
  fit.q_hat = lsqmi_q_hat(z, y, centers, sigma);
  fit.d = gram_d(centers.u, centers.v, sigma);
  fit.alpha = solve_regularized(fit.d, lambda, fit.q_hat);
  return fit;
}

LsqmiFit lsqmi_fit(const Matrix& z, const Matrix& y, double sigma, double lambda, Eigen::Index b,
                   std::uint64_t seed) {
  return lsqmi_fit(z, y, select_centers(z, y, b, seed), sigma, lambda);
}

LsqmiValues lsqmi_values(const LsqmiFit& fit) {
  const double aq = fit.alpha.dot(fit.q_hat);
  const double ada = fit.alpha.dot(fit.d * fit.alpha);
  return {0.5 * aq, 0.5 * ada, aq - 0.5 * ada};
}

double lsqmi_value(const LsqmiFit& fit) { return lsqmi_values(fit).combined; }

double lsqmi_residual(const LsqmiFit& fit) {
  const Vector r = fit.d * fit.alpha + fit.lambda * fit.alpha - fit.q_hat;
  const double scale = fit.q_hat.norm();
  return scale == 0.0 ? r.norm() : r.norm() / scale;
}

CvChoice lsqmi_cv(const Matrix& z, const Matrix& y, const CenterSet& centers, const CvGrid& grid_in, int folds,
                  std::uint64_t fold_seed) {
  if (z.rows() != y.rows()) throw DimensionMismatch("z and y have different sample counts");
  validate_cv_inputs(z.rows(), grid_in, folds);
  CvGrid grid = grid_in;
  std::sort(grid.sigmas.begin(), grid.sigmas.end());
  std::sort(grid.lambdas.begin(), grid.lambdas.end());
  const auto assignment = checked_folds(z.rows(), folds, fold_seed);

  CvChoice best{0.0, 0.0, std::numeric_limits<double>::infinity()};
  bool found = false;
  for (double sigma : grid.sigmas) {
    const BasisModel m(centers, sigma, 0);
    const Matrix zk = z_kernel(m, z);
    const Matrix yk = y_kernel(m, y);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram_d(centers.u, centers.v, sigma));
    const Vector& ev = eig.eigenvalues();
    const Matrix& q = eig.eigenvectors();
    std::vector<double> total(grid.lambdas.size(), 0.0);
    for (std::size_t j = 0; j < assignment.size(); ++j) {
      const auto train = complement_of_fold(assignment, j);
      const Vector q_train = q_hat_from_kernels(gather_rows(zk, train), gather_rows(yk, train));
      const Vector q_test = q_hat_from_kernels(gather_rows(zk, assignment[j]), gather_rows(yk, assignment[j]));
      const Vector g = q.transpose() * q_train;
      const Vector t = q.transpose() * q_test;
      for (std::size_t li = 0; li < grid.lambdas.size(); ++li) {
        const Vector shifted = ev.array() + grid.lambdas[li];
        const double lo = shifted.minCoeff();
        if (!(lo > 0.0) || shifted.cwiseAbs().maxCoeff() > kMaxConditionNumber * lo) {
          total[li] = std::numeric_limits<double>::infinity();
          continue;
        }
        const Vector a = g.cwiseQuotient(shifted);
        total[li] += 0.5 * a.cwiseProduct(ev).dot(a) - a.dot(t);
      }
    }
    for (std::size_t li = 0; li < grid.lambdas.size(); ++li) {
      const double score = total[li] / static_cast<double>(folds);
      if (std::isfinite(score) && (!found || score < best.score)) {
        best = CvChoice{sigma, grid.lambdas[li], score};
        found = true;
      }
    }
  }
  if (!found) throw SolveFailure("every cross-validation candidate is numerically singular");
  return best;
}

CvChoice lsqmi_cv(const Matrix& z, const Matrix& y, const CvGrid& grid, int folds, std::uint64_t seed,
                  Eigen::Index b) {
  const CenterSet centers = select_centers(z, y, b, derive_seed(seed, 0));
  return lsqmi_cv(z, y, centers, grid, folds, derive_seed(seed, 1));
}

double lsqmi_value_at(const Matrix& x, const Matrix& y, const Matrix& w,
                      const std::vector<Eigen::Index>& center_indices, double sigma, double lambda) {
  const Matrix z = project(x, w);
  return lsqmi_value(lsqmi_fit(z, y, centers_from_indices(z, y, center_indices), sigma, lambda));
}

Matrix lsqmi_w_gradient(const Matrix& x, const Matrix& y, const Matrix& w,
                        const std::vector<Eigen::Index>& center_indices, double sigma, double lambda,
                        double step) {
  if (!(step > 0.0)) throw InvalidArgument("finite-difference step must be positive");
  Matrix grad(w.rows(), w.cols());
  Matrix probe = w;
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      probe(r, c) = w(r, c) + step;
      const double up = lsqmi_value_at(x, y, probe, center_indices, sigma, lambda);
      probe(r, c) = w(r, c) - step;
      const double down = lsqmi_value_at(x, y, probe, center_indices, sigma, lambda);
      probe(r, c) = w(r, c);
      grad(r, c) = (up - down) / (2.0 * step);
    }
  }
  return grad;
}

}  // namespace qmisdr
