#include "qmisdr/basis.hpp"

#include "qmisdr/errors.hpp"
#include "qmisdr/numerics.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace qmisdr {

namespace {

// Squared distances between rows of a (n x d) and rows of c (b x d).
Matrix squared_distances(const Matrix& a, const Matrix& c) {
  Matrix out(a.rows(), c.rows());
  for (Eigen::Index k = 0; k < c.rows(); ++k) {
    out.col(k) = (a.rowwise() - c.row(k)).rowwise().squaredNorm();
  }
  return out;
}

Matrix pairwise_center_distances(const Matrix& c) {
  const Eigen::Index b = c.rows();
  Matrix out(b, b);
  for (Eigen::Index k = 0; k < b; ++k) {
    for (Eigen::Index j = 0; j <= k; ++j) {
      out(k, j) = out(j, k) = (c.row(k) - c.row(j)).squaredNorm();
    }
  }
  return out;
}

}  // namespace

Eigen::Index default_basis_count(Eigen::Index n) { return std::min<Eigen::Index>(n, 200); }

std::vector<Eigen::Index> select_center_indices(Eigen::Index n, Eigen::Index b, std::uint64_t seed) {
  if (b < 1) throw InvalidArgument("basis count must be positive");
  if (b > n) {
    throw TooManyCenters("requested " + std::to_string(b) + " centers from " + std::to_string(n) + " samples");
  }
  Rng rng(seed);
  auto perm = random_permutation(n, rng);
  perm.resize(static_cast<std::size_t>(b));
  return perm;
}

CenterSet centers_from_indices(const Matrix& z, const Matrix& y, std::vector<Eigen::Index> indices) {
  if (z.rows() != y.rows()) throw DimensionMismatch("z and y have different sample counts");
  for (auto i : indices) {
    if (i < 0 || i >= z.rows()) throw InvalidArgument("center index out of range");
  }
  CenterSet c;
  c.u = gather_rows(z, indices);
  c.v = gather_rows(y, indices);
  c.indices = std::move(indices);
  return c;
}

CenterSet select_centers(const Matrix& z, const Matrix& y, Eigen::Index b, std::uint64_t seed) {
  if (z.rows() != y.rows()) throw DimensionMismatch("z and y have different sample counts");
  return centers_from_indices(z, y, select_center_indices(z.rows(), b, seed));
}

BasisModel::BasisModel(Matrix centers_u, Matrix centers_v, double sigma, Eigen::Index ell)
    : u_(std::move(centers_u)), v_(std::move(centers_v)), sigma_(sigma), ell_(ell) {
  if (u_.rows() < 1) throw InvalidArgument("basis needs at least one center");
  if (u_.rows() != v_.rows()) throw DimensionMismatch("u and v center counts differ");
  if (!(sigma_ > 0.0) || !std::isfinite(sigma_)) throw InvalidArgument("Gaussian width must be positive");
  if (ell_ < 0 || ell_ >= u_.cols()) throw InvalidArgument("derivative coordinate out of range");
}

Vector eval_phi(const BasisModel& m, const Vector& z, const Vector& y) {
  if (z.size() != m.dz() || y.size() != m.dy()) throw DimensionMismatch("eval_phi: point dimension mismatch");
  const double inv = 1.0 / (2.0 * m.sigma() * m.sigma());
  Vector out(m.b());
  for (Eigen::Index k = 0; k < m.b(); ++k) {
    const double d2 = (z.transpose() - m.centers_u().row(k)).squaredNorm() +
                      (y.transpose() - m.centers_v().row(k)).squaredNorm();
    out(k) = std::exp(-d2 * inv);
  }
  return out;
}

Vector eval_varphi(const BasisModel& m, const Vector& z, const Vector& y) {
  Vector phi = eval_phi(m, z, y);
  const double inv_s2 = 1.0 / (m.sigma() * m.sigma());
  const Eigen::Index l = m.ell();
  for (Eigen::Index k = 0; k < m.b(); ++k) phi(k) *= -(z(l) - m.centers_u()(k, l)) * inv_s2;
  return phi;
}

Matrix z_kernel(const BasisModel& m, const Matrix& z) {
  if (z.cols() != m.dz()) throw DimensionMismatch("z_kernel: z has wrong dimension");
  const double inv = -1.0 / (2.0 * m.sigma() * m.sigma());
  return (squared_distances(z, m.centers_u()) * inv).array().exp().matrix();
}

Matrix y_kernel(const BasisModel& m, const Matrix& y) {
  if (y.cols() != m.dy()) throw DimensionMismatch("y_kernel: y has wrong dimension");
  const double inv = -1.0 / (2.0 * m.sigma() * m.sigma());
  return (squared_distances(y, m.centers_v()) * inv).array().exp().matrix();
}

Matrix gram_d(const Matrix& centers_u, const Matrix& centers_v, double sigma) {
  const double dim = static_cast<double>(centers_u.cols() + centers_v.cols());
  const double norm = std::pow(std::sqrt(std::numbers::pi) * sigma, dim);
  const Matrix d2 = pairwise_center_distances(centers_u) + pairwise_center_distances(centers_v);
  return norm * (d2 * (-1.0 / (4.0 * sigma * sigma))).array().exp().matrix();
}

Matrix gram_h(const BasisModel& m) {
  const double s2 = m.sigma() * m.sigma();
  Matrix h = gram_d(m.centers_u(), m.centers_v(), m.sigma()) / (s2 * s2);
  const auto ul = m.centers_u().col(m.ell());
  for (Eigen::Index k = 0; k < m.b(); ++k) {
    for (Eigen::Index j = 0; j <= k; ++j) {
      const double du = ul(k) - ul(j);
      const double v = h(k, j) * (0.5 * s2 - 0.25 * du * du);
      h(k, j) = h(j, k) = v;
    }
  }
  return h;
}

}  // namespace qmisdr
