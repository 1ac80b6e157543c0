#include "doctest.h"
#include "oracles.hpp"

#include "qmisdr/basis.hpp"
#include "qmisdr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace qmisdr;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, unsigned seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, scale);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = nd(rng);
  return m;
}

BasisModel random_model(Eigen::Index b, Eigen::Index dz, Eigen::Index dy, double sigma, Eigen::Index ell,
                        unsigned seed) {
  return BasisModel(random_matrix(b, dz, seed), random_matrix(b, dy, seed + 1), sigma, ell);
}

// Quadrature of varphi_k * varphi_j over a +-10 sigma box, dz = dy = 1.
double h_by_quadrature(const BasisModel& m, Eigen::Index k, Eigen::Index j) {
  const double s = m.sigma();
  const double s2 = s * s;
  const auto& u = m.centers_u();
  const auto& v = m.centers_v();
  auto f = [&](double z, double y) {
    const double pk = std::exp(-((z - u(k, 0)) * (z - u(k, 0)) + (y - v(k, 0)) * (y - v(k, 0))) / (2 * s2));
    const double pj = std::exp(-((z - u(j, 0)) * (z - u(j, 0)) + (y - v(j, 0)) * (y - v(j, 0))) / (2 * s2));
    return (-(z - u(k, 0)) / s2 * pk) * (-(z - u(j, 0)) / s2 * pj);
  };
  return oracle::integrate_2d(f, u.minCoeff() - 10 * s, u.maxCoeff() + 10 * s, v.minCoeff() - 10 * s,
                              v.maxCoeff() + 10 * s);
}

}  // namespace

TEST_CASE("select_centers") {
  const Matrix z = random_matrix(500, 2, 1);
  const Matrix y = random_matrix(500, 1, 2);

  SUBCASE("b = n gives a permutation of the sample, paired") {
    const Matrix zs = z.topRows(20);
    const Matrix ys = y.topRows(20);
    const CenterSet c = select_centers(zs, ys, 20, 3);
    auto idx = c.indices;
    std::sort(idx.begin(), idx.end());
    for (Eigen::Index i = 0; i < 20; ++i) CHECK(idx[static_cast<std::size_t>(i)] == i);
    for (Eigen::Index k = 0; k < 20; ++k) {
      CHECK(c.u.row(k) == zs.row(c.indices[static_cast<std::size_t>(k)]));
      CHECK(c.v.row(k) == ys.row(c.indices[static_cast<std::size_t>(k)]));
    }
  }
  SUBCASE("deterministic under the seed") {
    CHECK(select_centers(z, y, 50, 9).indices == select_centers(z, y, 50, 9).indices);
    CHECK(select_centers(z, y, 50, 9).indices != select_centers(z, y, 50, 10).indices);
  }
  SUBCASE("default count min(n, 200)") {
    CHECK(default_basis_count(500) == 200);
    CHECK(default_basis_count(120) == 120);
    const CenterSet c = select_centers(z, y, default_basis_count(500), 4);
    CHECK(c.size() == 200);
    auto idx = c.indices;
    std::sort(idx.begin(), idx.end());
    CHECK(std::adjacent_find(idx.begin(), idx.end()) == idx.end());
  }
  SUBCASE("too many centers") { CHECK_THROWS_AS(select_centers(z, y, 501, 1), TooManyCenters); }
}

TEST_CASE("eval_phi") {
  const BasisModel m = random_model(4, 2, 1, 0.7, 0, 11);
  SUBCASE("unit value at the center") {
    const Vector z = m.centers_u().row(2).transpose();
    const Vector y = m.centers_v().row(2).transpose();
    CHECK(eval_phi(m, z, y)(2) == 1.0);
  }
  SUBCASE("exp(-1) at squared distance 2 sigma^2") {
    Vector z = m.centers_u().row(1).transpose();
    const Vector y = m.centers_v().row(1).transpose();
    z(0) += std::sqrt(2.0) * m.sigma();
    CHECK(eval_phi(m, z, y)(1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  }
  SUBCASE("matches extended precision at random points") {
    for (unsigned s = 0; s < 10; ++s) {
      const Vector z = random_matrix(2, 1, 50 + s).col(0);
      const Vector y = random_matrix(1, 1, 70 + s).col(0);
      const Vector phi = eval_phi(m, z, y);
      for (Eigen::Index k = 0; k < m.b(); ++k) {
        const long double ref = oracle::gauss_ld(z, y, m.centers_u().row(k), m.centers_v().row(k), m.sigma());
        CHECK(std::abs(phi(k) - static_cast<double>(ref)) <= 1e-14 * static_cast<double>(ref));
        CHECK(phi(k) > 0.0);
        CHECK(phi(k) <= 1.0);
      }
    }
  }
  SUBCASE("dimension mismatch") { CHECK_THROWS_AS(eval_phi(m, Vector::Zero(3), Vector::Zero(1)), DimensionMismatch); }
}

TEST_CASE("eval_varphi") {
  const BasisModel m = random_model(5, 2, 2, 0.9, 1, 21);
  SUBCASE("vanishes when z^(ell) sits on the center coordinate") {
    Vector z = random_matrix(2, 1, 3).col(0);
    z(1) = m.centers_u()(3, 1);
    CHECK(eval_varphi(m, z, random_matrix(2, 1, 4).col(0))(3) == 0.0);
  }
  SUBCASE("negative to the right of the center") {
    Vector z = m.centers_u().row(0).transpose();
    z(1) += 0.3;
    CHECK(eval_varphi(m, z, m.centers_v().row(0).transpose())(0) < 0.0);
  }
  SUBCASE("matches central differences of eval_phi") {
    const double h = 1e-5;
    for (unsigned s = 0; s < 10; ++s) {
      const Vector z = random_matrix(2, 1, 80 + s, 0.5).col(0);
      const Vector y = random_matrix(2, 1, 90 + s, 0.5).col(0);
      Vector zp = z, zm = z;
      zp(1) += h;
      zm(1) -= h;
      const Vector fd = (eval_phi(m, zp, y) - eval_phi(m, zm, y)) / (2 * h);
      const Vector an = eval_varphi(m, z, y);
      for (Eigen::Index k = 0; k < m.b(); ++k) {
        CHECK(std::abs(fd(k) - an(k)) <= 1e-6 * std::max(std::abs(an(k)), 1e-8));
      }
    }
  }
}

TEST_CASE("gram_h") {
  SUBCASE("diagonal closed form") {
    const BasisModel m = random_model(3, 2, 1, 0.8, 0, 31);
    const Matrix h = gram_h(m);
    const double s = m.sigma();
    const double expected = std::pow(s, -4) * std::pow(std::sqrt(std::numbers::pi) * s, 3) * s * s / 2;
    for (Eigen::Index k = 0; k < 3; ++k) CHECK(h(k, k) == doctest::Approx(expected).epsilon(1e-14));
  }
  SUBCASE("matches 2-D quadrature (dz = dy = 1, b = 3)") {
    for (unsigned s = 0; s < 5; ++s) {
      const BasisModel m = random_model(3, 1, 1, 0.5 + 0.3 * s, 0, 40 + s);
      const Matrix h = gram_h(m);
      for (Eigen::Index k = 0; k < 3; ++k) {
        for (Eigen::Index j = 0; j < 3; ++j) {
          const double q = h_by_quadrature(m, k, j);
          CHECK(std::abs(h(k, j) - q) <= 1e-6 * std::max(std::abs(q), 1e-9 * h(k, k)));
        }
      }
    }
  }
  SUBCASE("matches 3-D quadrature (dz = 2, dy = 1)") {
    const BasisModel m = random_model(2, 2, 1, 0.9, 1, 61);
    const Matrix h = gram_h(m);
    const auto& u = m.centers_u();
    const auto& v = m.centers_v();
    const double s2 = m.sigma() * m.sigma();
    const double pad = 10 * m.sigma();
    auto integrand = [&](Eigen::Index k, Eigen::Index j) {
      return [&, k, j](double a, double b, double c) {
        auto g = [&](Eigen::Index i) {
          const double d = (a - u(i, 0)) * (a - u(i, 0)) + (b - u(i, 1)) * (b - u(i, 1)) + (c - v(i, 0)) * (c - v(i, 0));
          return -(b - u(i, 1)) / s2 * std::exp(-d / (2 * s2));
        };
        return g(k) * g(j);
      };
    };
    for (Eigen::Index k = 0; k < 2; ++k) {
      for (Eigen::Index j = 0; j <= k; ++j) {
        const double q = oracle::integrate_3d(integrand(k, j), u.col(0).minCoeff() - pad, u.col(0).maxCoeff() + pad,
                                              u.col(1).minCoeff() - pad, u.col(1).maxCoeff() + pad,
                                              v.minCoeff() - pad, v.maxCoeff() + pad);
        CHECK(std::abs(h(k, j) - q) <= 1e-6 * std::max(std::abs(q), 1e-9 * h(k, k)));
      }
    }
  }
  SUBCASE("symmetric and positive semidefinite") {
    for (unsigned s = 0; s < 10; ++s) {
      const BasisModel m = random_model(30, 2, 1, 0.3 + 0.2 * s, s % 2, 100 + s);
      const Matrix h = gram_h(m);
      CHECK((h - h.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
      Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
      CHECK(eig.eigenvalues().minCoeff() >= -1e-10 * h.trace());
    }
  }
}

TEST_CASE("gram_d matches quadrature and its diagonal") {
  const Matrix u = random_matrix(3, 1, 7);
  const Matrix v = random_matrix(3, 1, 8);
  const double s = 0.6;
  const Matrix d = gram_d(u, v, s);
  for (Eigen::Index k = 0; k < 3; ++k) {
    CHECK(d(k, k) == doctest::Approx(std::pow(std::sqrt(std::numbers::pi) * s, 2)).epsilon(1e-14));
    for (Eigen::Index j = 0; j < 3; ++j) {
      auto f = [&](double z, double y) {
        return std::exp(-((z - u(k, 0)) * (z - u(k, 0)) + (y - v(k, 0)) * (y - v(k, 0))) / (2 * s * s)) *
               std::exp(-((z - u(j, 0)) * (z - u(j, 0)) + (y - v(j, 0)) * (y - v(j, 0))) / (2 * s * s));
      };
      const double q = oracle::integrate_2d(f, u.minCoeff() - 10 * s, u.maxCoeff() + 10 * s, v.minCoeff() - 10 * s,
                                            v.maxCoeff() + 10 * s);
      CHECK(std::abs(d(k, j) - q) <= 1e-6 * q);
    }
  }
}

TEST_CASE("basis model construction errors") {
  CHECK_THROWS_AS(BasisModel(Matrix::Zero(2, 1), Matrix::Zero(2, 1), 0.0, 0), InvalidArgument);
  CHECK_THROWS_AS(BasisModel(Matrix::Zero(2, 1), Matrix::Zero(3, 1), 1.0, 0), DimensionMismatch);
  CHECK_THROWS_AS(BasisModel(Matrix::Zero(2, 1), Matrix::Zero(2, 1), 1.0, 1), InvalidArgument);
}
