#pragma once

#include "qmisdr/data_model.hpp"

#include <cstdint>
#include <vector>

namespace qmisdr {

// Gaussian centers drawn from the paired sample: row k of u and row k of v
// come from the same sample index indices[k].
struct CenterSet {
  std::vector<Eigen::Index> indices;
  Matrix u;  // b x dz
  Matrix v;  // b x dy

  Eigen::Index size() const noexcept { return u.rows(); }
};

// b = min(n, 200).
Eigen::Index default_basis_count(Eigen::Index n);

std::vector<Eigen::Index> select_center_indices(Eigen::Index n, Eigen::Index b, std::uint64_t seed);

// Looks up the center rows for fixed sample indices; used to rebuild centers
// after z moves with W.
CenterSet centers_from_indices(const Matrix& z, const Matrix& y, std::vector<Eigen::Index> indices);

// b distinct samples uniformly without replacement. Throws TooManyCenters when b > n.
CenterSet select_centers(const Matrix& z, const Matrix& y, Eigen::Index b, std::uint64_t seed);

// phi_k(z, y) = exp(-(|z - u_k|^2 + |y - v_k|^2) / (2 sigma^2)) with one width
// for both blocks. ell is the z-coordinate the derivative basis
// differentiates along (0-based).
class BasisModel {
 public:
  BasisModel(Matrix centers_u, Matrix centers_v, double sigma, Eigen::Index ell);
  BasisModel(const CenterSet& centers, double sigma, Eigen::Index ell)
      : BasisModel(centers.u, centers.v, sigma, ell) {}

  const Matrix& centers_u() const noexcept { return u_; }
  const Matrix& centers_v() const noexcept { return v_; }
  double sigma() const noexcept { return sigma_; }
  Eigen::Index ell() const noexcept { return ell_; }
  Eigen::Index b() const noexcept { return u_.rows(); }
  Eigen::Index dz() const noexcept { return u_.cols(); }
  Eigen::Index dy() const noexcept { return v_.cols(); }

 private:
  Matrix u_;
  Matrix v_;
  double sigma_;
  Eigen::Index ell_;
};

Vector eval_phi(const BasisModel& m, const Vector& z, const Vector& y);

// d phi_k / d z^(ell) = -(z^(ell) - u_k^(ell)) / sigma^2 * phi_k.
Vector eval_varphi(const BasisModel& m, const Vector& z, const Vector& y);

// Factors of the separable basis over a sample: entry (i, k) is
// exp(-|z_i - u_k|^2 / (2 sigma^2)), resp. exp(-|y_i - v_k|^2 / (2 sigma^2)),
// so that phi_k(z_i, y_j) = zk(i, k) * yk(j, k).
Matrix z_kernel(const BasisModel& m, const Matrix& z);
Matrix y_kernel(const BasisModel& m, const Matrix& y);

// Analytic H(k, k') = integral of varphi_k varphi_k' over (z, y):
//   sigma^-4 (sqrt(pi) sigma)^(dz+dy) exp(-(|du|^2 + |dv|^2) / (4 sigma^2))
//     * (sigma^2 / 2 - (du^(ell))^2 / 4)
Matrix gram_h(const BasisModel& m);

// Analytic D(k, k') = integral of phi_k phi_k' over (z, y).
Matrix gram_d(const Matrix& centers_u, const Matrix& centers_v, double sigma);

}  // namespace qmisdr
