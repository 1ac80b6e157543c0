#include "qmisdr/evaluation.hpp"

#include "qmisdr/errors.hpp"
#include "qmisdr/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qmisdr {

double dr_error(const Projection& w_opt, const Projection& w_hat) {
  if (w_opt.dx() != w_hat.dx() || w_opt.dz() != w_hat.dz()) {
    throw DimensionMismatch("dr_error needs projections of equal shape");
  }
  return (w_opt.w().transpose() * w_opt.w() - w_hat.w().transpose() * w_hat.w()).norm();
}

double median_pairwise_distance(const Matrix& inputs) {
  std::vector<double> d;
  const Eigen::Index n = inputs.rows();
  d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) d.push_back((inputs.row(i) - inputs.row(j)).norm());
  }
  if (d.empty()) return 1.0;
  const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  double med = *mid;
  if (d.size() % 2 == 0) med = 0.5 * (med + *std::max_element(d.begin(), mid));
  return med > 0.0 ? med : 1.0;
}

namespace {

Matrix gaussian_kernel(const Matrix& a, const Matrix& b, double width) {
  Matrix k(a.rows(), b.rows());
  const double inv = -1.0 / (2.0 * width * width);
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    k.col(j) = ((a.rowwise() - b.row(j)).rowwise().squaredNorm() * inv).array().exp().matrix();
  }
  return k;
}

}  // namespace

KrrModel krr_fit(const Matrix& inputs, const Vector& targets, double width, double ridge) {
  if (inputs.rows() != targets.size()) throw LengthMismatch("inputs and targets differ in length");
  if (inputs.rows() < 1) throw InvalidArgument("kernel ridge regression needs training data");
  if (!(width > 0.0)) throw InvalidArgument("kernel width must be positive");
  KrrModel m;
  m.inputs = inputs;
  m.width = width;
  m.ridge = std::max(ridge, kRidgeFloor);
  m.offset = targets.mean();
  const Vector centered = targets.array() - m.offset;
  m.coefficients = solve_regularized(gaussian_kernel(inputs, inputs, width), m.ridge, centered);
  return m;
}

Vector krr_predict(const KrrModel& model, const Matrix& inputs) {
  if (inputs.cols() != model.inputs.cols()) throw DimensionMismatch("prediction inputs have the wrong dimension");
  return (gaussian_kernel(inputs, model.inputs, model.width) * model.coefficients).array() + model.offset;
}

KrrModel krr_fit_cv(const Matrix& inputs, const Vector& targets, const KrrGrid& grid, int folds,
                    std::uint64_t seed) {
  if (inputs.rows() != targets.size()) throw LengthMismatch("inputs and targets differ in length");
  if (grid.width_factors.empty() || grid.ridges.empty()) throw EmptyGrid("kernel ridge grid is empty");
  if (folds < 2) throw InvalidArgument("cross-validation needs K >= 2");
  if (inputs.rows() < folds) throw FoldTooSmall("fewer training samples than folds");
  const double med = median_pairwise_distance(inputs);
  const auto assignment = make_folds(inputs.rows(), folds, seed);

  double best_err = std::numeric_limits<double>::infinity();
  double best_width = med;
  double best_ridge = grid.ridges.front();
  bool found = false;
  for (double factor : grid.width_factors) {
    for (double ridge : grid.ridges) {
      double err = 0.0;
      try {
        for (std::size_t j = 0; j < assignment.size(); ++j) {
          const auto train = complement_of_fold(assignment, j);
          Vector t_train(static_cast<Eigen::Index>(train.size()));
          for (std::size_t i = 0; i < train.size(); ++i) t_train(static_cast<Eigen::Index>(i)) = targets(train[i]);
          const KrrModel m = krr_fit(gather_rows(inputs, train), t_train, factor * med, ridge);
          const Vector pred = krr_predict(m, gather_rows(inputs, assignment[j]));
          for (std::size_t i = 0; i < assignment[j].size(); ++i) {
            const double r = pred(static_cast<Eigen::Index>(i)) - targets(assignment[j][i]);
            err += r * r;
          }
        }
      } catch (const SolveFailure&) {
        continue;
      }
      if (err < best_err) {
        best_err = err;
        best_width = factor * med;
        best_ridge = ridge;
        found = true;
      }
    }
  }
  if (!found) throw SolveFailure("every kernel ridge candidate is numerically singular");
  return krr_fit(inputs, targets, best_width, best_ridge);
}

double rmse(const Vector& y_true, const Vector& y_pred) {
  if (y_true.size() != y_pred.size()) throw LengthMismatch("rmse inputs differ in length");
  if (y_true.size() < 1) throw LengthMismatch("rmse needs at least one value");
  return std::sqrt((y_true - y_pred).squaredNorm() / static_cast<double>(y_true.size()));
}

}  // namespace qmisdr
