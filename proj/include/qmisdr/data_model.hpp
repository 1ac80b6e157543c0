#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace qmisdr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Per-column location and scale, kept so that a transform learned on one
// split can be replayed on another.
struct ColumnStats {
  Vector mean;
  Vector stddev;
};

// Paired samples: row i of x and row i of y belong together.
class Dataset {
 public:
  Dataset(Matrix x, Matrix y);

  const Matrix& x() const noexcept { return x_; }
  const Matrix& y() const noexcept { return y_; }
  Eigen::Index n() const noexcept { return x_.rows(); }
  Eigen::Index dx() const noexcept { return x_.cols(); }
  Eigen::Index dy() const noexcept { return y_.cols(); }

  bool standardized() const noexcept { return standardized_; }
  // Statistics of the raw columns; only meaningful when standardized().
  const ColumnStats& x_stats() const noexcept { return x_stats_; }
  const ColumnStats& y_stats() const noexcept { return y_stats_; }

  // Rows selected by index, keeping the standardization state.
  Dataset subset(const std::vector<Eigen::Index>& rows) const;

 private:
  friend Dataset standardize(const Dataset& ds);
  friend Dataset apply_standardization(const Dataset& ds, const ColumnStats& xs, const ColumnStats& ys);

  Matrix x_;
  Matrix y_;
  bool standardized_ = false;
  ColumnStats x_stats_;
  ColumnStats y_stats_;
};

// Row-orthonormal W (dz x dx). Construction validates ||W W^T - I||_F <= 1e-8.
class Projection {
 public:
  explicit Projection(Matrix w);

  const Matrix& w() const noexcept { return w_; }
  Eigen::Index dz() const noexcept { return w_.rows(); }
  Eigen::Index dx() const noexcept { return w_.cols(); }

  static constexpr double kOrthonormalityTolerance = 1e-8;

 private:
  Matrix w_;
};

// Zero mean, unit (n-1) standard deviation per column of x and y.
Dataset standardize(const Dataset& ds);

// Replays stored statistics, e.g. training statistics on a test split.
Dataset apply_standardization(const Dataset& ds, const ColumnStats& xs, const ColumnStats& ys);

ColumnStats column_stats(const Matrix& m);

// Z = X W^T.
Matrix project(const Dataset& ds, const Projection& p);
Matrix project(const Matrix& x, const Matrix& w);

// W <- (W W^T)^{-1/2} W via a symmetric eigendecomposition of W W^T.
Projection orthonormalize(const Matrix& w);

double orthonormality_defect(const Matrix& w);

// CSV with header x1..x{dx},y1..y{dy}. Lines starting with '#' are skipped.
Dataset read_csv(std::istream& in);
Dataset read_csv(const std::filesystem::path& path);
void write_csv(std::ostream& out, const Dataset& ds);

// Shortest text that parses back to the same double.
std::string format_double(double v);

}  // namespace qmisdr
