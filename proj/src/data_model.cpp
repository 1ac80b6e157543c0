#include "qmisdr/data_model.hpp"

#include "qmisdr/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace qmisdr {

namespace {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw NonFiniteInput(std::string(what) + " contains NaN or Inf");
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

Dataset::Dataset(Matrix x, Matrix y) : x_(std::move(x)), y_(std::move(y)) {
  if (x_.rows() != y_.rows()) {
    throw DimensionMismatch("x has " + std::to_string(x_.rows()) + " rows but y has " +
                            std::to_string(y_.rows()));
  }
  if (x_.rows() < 2) throw InvalidArgument("dataset needs at least 2 samples");
  if (x_.cols() < 1 || y_.cols() < 1) throw InvalidArgument("dataset needs dx >= 1 and dy >= 1");
  require_finite(x_, "x");
  require_finite(y_, "y");
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const {
  Matrix xs(static_cast<Eigen::Index>(rows.size()), dx());
  Matrix ys(static_cast<Eigen::Index>(rows.size()), dy());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    xs.row(static_cast<Eigen::Index>(i)) = x_.row(rows[i]);
    ys.row(static_cast<Eigen::Index>(i)) = y_.row(rows[i]);
  }
  Dataset out(std::move(xs), std::move(ys));
  out.standardized_ = standardized_;
  out.x_stats_ = x_stats_;
  out.y_stats_ = y_stats_;
  return out;
}

Projection::Projection(Matrix w) : w_(std::move(w)) {
  if (w_.rows() < 1 || w_.rows() > w_.cols()) {
    throw DimensionMismatch("projection needs 1 <= dz <= dx, got dz=" + std::to_string(w_.rows()) +
                            " dx=" + std::to_string(w_.cols()));
  }
  require_finite(w_, "projection");
  const double defect = orthonormality_defect(w_);
  if (defect > kOrthonormalityTolerance) {
    throw InvalidArgument("projection rows are not orthonormal (defect " + format_double(defect) + ")");
  }
}

ColumnStats column_stats(const Matrix& m) {
  const double n = static_cast<double>(m.rows());
  ColumnStats s;
  s.mean = m.colwise().mean().transpose();
  s.stddev.resize(m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double ss = (m.col(j).array() - s.mean(j)).square().sum();
    s.stddev(j) = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

namespace {

Matrix scale_columns(const Matrix& m, const ColumnStats& s) {
  return (m.rowwise() - s.mean.transpose()).array().rowwise() / s.stddev.transpose().array();
}

void reject_constant_columns(const ColumnStats& s, Eigen::Index offset) {
  for (Eigen::Index j = 0; j < s.stddev.size(); ++j) {
    if (!(s.stddev(j) > 0.0)) throw ZeroVarianceColumn(static_cast<std::size_t>(offset + j));
  }
}

}  // namespace

Dataset standardize(const Dataset& ds) {
  if (ds.standardized()) throw InvalidArgument("dataset is already standardized");
  ColumnStats xs = column_stats(ds.x());
  ColumnStats ys = column_stats(ds.y());
  // y columns are numbered after the x columns.
  reject_constant_columns(xs, 0);
  reject_constant_columns(ys, ds.dx());
  return apply_standardization(ds, xs, ys);
}

Dataset apply_standardization(const Dataset& ds, const ColumnStats& xs, const ColumnStats& ys) {
  if (xs.mean.size() != ds.dx() || ys.mean.size() != ds.dy()) {
    throw DimensionMismatch("standardization statistics do not match dataset dimensions");
  }
  reject_constant_columns(xs, 0);
  reject_constant_columns(ys, ds.dx());
  Dataset out(scale_columns(ds.x(), xs), scale_columns(ds.y(), ys));
  out.standardized_ = true;
  out.x_stats_ = xs;
  out.y_stats_ = ys;
  return out;
}

Matrix project(const Matrix& x, const Matrix& w) {
  if (x.cols() != w.cols()) {
    throw DimensionMismatch("projection expects dx=" + std::to_string(w.cols()) + ", data has " +
                            std::to_string(x.cols()));
  }
  return x * w.transpose();
}

Matrix project(const Dataset& ds, const Projection& p) { return project(ds.x(), p.w()); }

double orthonormality_defect(const Matrix& w) {
  return (w * w.transpose() - Matrix::Identity(w.rows(), w.rows())).norm();
}

Projection orthonormalize(const Matrix& w) {
  if (w.rows() < 1 || w.rows() > w.cols()) {
    throw DimensionMismatch("orthonormalize needs 1 <= rows <= cols");
  }
  require_finite(w, "matrix to orthonormalize");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(w * w.transpose());
  const Vector& lambda = eig.eigenvalues();  // ascending; squared singular values of w
  const double smax = std::sqrt(std::max(lambda(lambda.size() - 1), 0.0));
  const double smin = std::sqrt(std::max(lambda(0), 0.0));
  if (!(smax > 0.0) || smin < 1e-12 * smax) {
    throw RankDeficient("matrix is not of full row rank");
  }
  const Matrix inv_sqrt =
      eig.eigenvectors() * lambda.cwiseSqrt().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  Matrix out = inv_sqrt * w;
  // One Newton-Schulz polish step pushes the defect to rounding level.
  out = 1.5 * out - 0.5 * (out * out.transpose()) * out;
  return Projection(std::move(out));
}

Dataset read_csv(std::istream& in) {
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
    break;
  }
  if (header.empty()) throw InvalidArgument("CSV has no header row");

  Eigen::Index dx = 0;
  Eigen::Index dy = 0;
  for (const auto& name : header) {
    if (dy == 0 && name == "x" + std::to_string(dx + 1)) {
      ++dx;
    } else if (name == "y" + std::to_string(dy + 1)) {
      ++dy;
    } else {
      throw InvalidArgument("unexpected CSV column '" + name + "'; expected x1..xD then y1..yD");
    }
  }
  if (dx == 0 || dy == 0) throw InvalidArgument("CSV needs at least one x and one y column");

  const std::size_t width = header.size();
  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::size_t count = 0;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      std::size_t end = line.find(',', pos);
      if (end == std::string::npos) end = line.size();
      const char* first = line.data() + pos;
      const char* last = line.data() + end;
      while (first < last && *first == ' ') ++first;
      while (last > first && *(last - 1) == ' ') --last;
      double v = 0.0;
      auto res = std::from_chars(first, last, v);
      if (res.ec != std::errc() || res.ptr != last) {
        throw InvalidArgument("CSV line " + std::to_string(line_no) + ": cannot parse '" +
                              std::string(first, last) + "'");
      }
      values.push_back(v);
      ++count;
      pos = end + 1;
    }
    if (count != width) {
      throw InvalidArgument("CSV line " + std::to_string(line_no) + " has " + std::to_string(count) +
                            " fields, expected " + std::to_string(width));
    }
    ++rows;
  }
  Matrix x(static_cast<Eigen::Index>(rows), dx);
  Matrix y(static_cast<Eigen::Index>(rows), dy);
  for (std::size_t r = 0; r < rows; ++r) {
    for (Eigen::Index j = 0; j < dx; ++j) x(static_cast<Eigen::Index>(r), j) = values[r * width + j];
    for (Eigen::Index j = 0; j < dy; ++j) y(static_cast<Eigen::Index>(r), j) = values[r * width + dx + j];
  }
  return Dataset(std::move(x), std::move(y));
}

Dataset read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open CSV file " + path.string());
  return read_csv(in);
}

void write_csv(std::ostream& out, const Dataset& ds) {
  for (Eigen::Index j = 0; j < ds.dx(); ++j) out << (j ? "," : "") << 'x' << j + 1;
  for (Eigen::Index j = 0; j < ds.dy(); ++j) out << ",y" << j + 1;
  out << '\n';
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    for (Eigen::Index j = 0; j < ds.dx(); ++j) out << (j ? "," : "") << format_double(ds.x()(i, j));
    for (Eigen::Index j = 0; j < ds.dy(); ++j) out << ',' << format_double(ds.y()(i, j));
    out << '\n';
  }
}

}  // namespace qmisdr
