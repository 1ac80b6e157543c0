#pragma once

#include "qmisdr/data_model.hpp"

#include <cstdint>
#include <vector>

namespace qmisdr {

// ||W_opt^T W_opt - W_hat^T W_hat||_F; requires equal dz and dx.
double dr_error(const Projection& w_opt, const Projection& w_hat);

// Gaussian-kernel ridge regression on a centered target.
struct KrrModel {
  Matrix inputs;      // n_train x d
  Vector coefficients;
  double offset = 0.0;  // training mean of y
  double width = 1.0;
  double ridge = 1e-6;
};

struct KrrGrid {
  // Multiples of the median pairwise distance of the training inputs.
  std::vector<double> width_factors{0.25, 0.5, 1.0, 2.0, 4.0};
  std::vector<double> ridges{1e-6, 1e-4, 1e-2, 1.0};
};

inline constexpr double kRidgeFloor = 1e-10;

double median_pairwise_distance(const Matrix& inputs);

KrrModel krr_fit(const Matrix& inputs, const Vector& targets, double width, double ridge);
Vector krr_predict(const KrrModel& model, const Matrix& inputs);

// Grid search by K-fold CV on squared error; returns the model refitted on
// all training data.
KrrModel krr_fit_cv(const Matrix& inputs, const Vector& targets, const KrrGrid& grid, int folds,
                    std::uint64_t seed);

double rmse(const Vector& y_true, const Vector& y_pred);

}  // namespace qmisdr
