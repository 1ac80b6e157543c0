#include "doctest.h"

#include "qmisdr/errors.hpp"
#include "qmisdr/synthetic.hpp"

#include <cmath>
#include <numbers>

using namespace qmisdr;

namespace {

constexpr Eigen::Index kBig = 100000;

struct Moments {
  double mean;
  double var;
};

Moments moments(const Vector& v) {
  const double m = v.mean();
  return {m, (v.array() - m).square().sum() / static_cast<double>(v.size() - 1)};
}

// Mean and variance within three standard errors; kurtosis is mu4 / sigma^4.
void check_moments(const Vector& v, double mean, double var, double kurtosis) {
  const Moments got = moments(v);
  const double n = static_cast<double>(v.size());
  CHECK(std::abs(got.mean - mean) <= 3.0 * std::sqrt(var / n));
  CHECK(std::abs(got.var - var) <= 3.0 * var * std::sqrt((kurtosis - 1.0) / n));
}

double gamma_kurtosis(double shape) { return 3.0 + 6.0 / shape; }

}  // namespace

TEST_CASE("generate: rotation") {
  const SyntheticData d = generate({SyntheticName::Rotation, kBig, 1, 0.4});
  const Matrix& x = d.data.x();
  CHECK(d.data.dx() == 2);
  check_moments(x.col(0), 0.0, 1.0, 3.0);
  check_moments(x.col(1), 0.0, 1.0, 3.0);
  const Vector eps = d.data.y().col(0) - x.col(0).array().square().matrix();
  check_moments(eps, 0.0, 0.0225, 3.0);
  CHECK(d.w_opt.w()(0, 0) == 1.0);
  CHECK(d.w_opt.w()(0, 1) == 0.0);
  CHECK(d.w_theta.w()(0, 0) == doctest::Approx(std::cos(0.4)));
  CHECK(d.w_theta.w()(0, 1) == doctest::Approx(std::sin(0.4)));
}

TEST_CASE("generate: dataset A") {
  const SyntheticData d = generate({SyntheticName::A, kBig, 2, 0.0});
  const Matrix& x = d.data.x();
  CHECK(d.data.dx() == 5);
  for (Eigen::Index c = 0; c < 5; ++c) check_moments(x.col(c), 0.0, 1.0, 3.0);
  const Vector eps = d.data.y().col(0) - ((x.col(0) + x.col(1)).array().square() / -0.5).exp().matrix();
  CHECK(std::abs(eps.mean() - 0.0625) <= 0.005);
  check_moments(eps, 0.0625, 0.25 * 0.25 * 0.25, gamma_kurtosis(0.25));
  CHECK(eps.minCoeff() >= 0.0);
  CHECK(d.w_opt.w()(0, 0) == doctest::Approx(1 / std::sqrt(2.0)));
  CHECK(d.w_opt.w()(0, 1) == doctest::Approx(1 / std::sqrt(2.0)));
  CHECK(orthonormality_defect(d.w_opt.w()) <= 1e-12);
}

TEST_CASE("generate: dataset B") {
  const SyntheticData d = generate({SyntheticName::B, kBig, 3, 0.0});
  const Matrix& x = d.data.x();
  CHECK(std::abs(x.col(0).mean()) <= 0.02);
  CHECK(std::abs(moments(x.col(0)).var - 1.0 / 3.0) <= 0.02);
  for (Eigen::Index c = 0; c < 5; ++c) {
    check_moments(x.col(c), 0.0, 1.0 / 3.0, 1.8);
    CHECK(x.col(c).minCoeff() >= -1.0);
    CHECK(x.col(c).maxCoeff() < 1.0);
  }
  const Vector z = (x.col(0) + 2.0 * x.col(1)) / std::sqrt(5.0);
  const Vector eps = (z.array() * z.array().sin()).matrix() - d.data.y().col(0);
  check_moments(eps, 0.125, 0.25 * 0.25, gamma_kurtosis(0.25));
  CHECK(d.w_opt.w()(0, 0) == doctest::Approx(1 / std::sqrt(5.0)));
  CHECK(d.w_opt.w()(0, 1) == doctest::Approx(2 / std::sqrt(5.0)));
}

TEST_CASE("generate: dataset C") {
  const SyntheticData d = generate({SyntheticName::C, kBig, 4, 0.0});
  const Matrix& x = d.data.x();
  const Vector eps = (x.col(0).cwiseProduct(x.col(1)) / std::sqrt(2.0)) - d.data.y().col(0);
  check_moments(eps, 0.125, 0.25 * 0.25, gamma_kurtosis(0.25));
  CHECK(d.w_opt.dz() == 2);
  CHECK(d.w_opt.w() == Matrix::Identity(2, 5));
}

TEST_CASE("generate: dataset D") {
  const SyntheticData d = generate({SyntheticName::D, kBig, 5, 0.0});
  const Matrix& x = d.data.x();
  for (Eigen::Index c = 0; c < 5; ++c) check_moments(x.col(c), 0.0, 0.5, 6.0);
  Vector eps(kBig);
  for (Eigen::Index i = 0; i < kBig; ++i) {
    eps(i) = (d.data.y()(i, 0) - sinc(x(i, 0) * std::numbers::pi / 2)) / x(i, 1);
  }
  check_moments(eps, 0.0, 0.25, 3.0);
  CHECK(d.w_opt.w() == Matrix::Identity(2, 5));

  SUBCASE("noise vanishes when x2 = 0") {
    for (double x1 : {-2.0, -0.3, 0.0, 0.7, 1.9}) {
      for (double e : {-1.0, 0.0, 2.5}) CHECK(dataset_d_response(x1, 0.0, e) == sinc(x1 * std::numbers::pi / 2));
    }
  }
}

TEST_CASE("sinc") {
  CHECK(sinc(0.0) == 1.0);
  CHECK(sinc(std::numbers::pi) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(sinc(std::numbers::pi / 2) == doctest::Approx(2 / std::numbers::pi));
}

TEST_CASE("generators are deterministic under the seed") {
  for (SyntheticName name :
       {SyntheticName::Rotation, SyntheticName::A, SyntheticName::B, SyntheticName::C, SyntheticName::D}) {
    const SyntheticData a = generate({name, 50, 9, 0.2});
    const SyntheticData b = generate({name, 50, 9, 0.2});
    const SyntheticData c = generate({name, 50, 10, 0.2});
    CHECK(a.data.x() == b.data.x());
    CHECK(a.data.y() == b.data.y());
    CHECK(a.data.x() != c.data.x());
    CHECK(parse_synthetic_name(synthetic_name(name)) == name);
  }
  CHECK_THROWS_AS(parse_synthetic_name("E"), InvalidArgument);
}

TEST_CASE("augment_with_noise_features") {
  const Dataset base = generate({SyntheticName::A, kBig, 6, 0.0}).data;
  const Dataset aug = augment_with_noise_features(base, 1);
  REQUIRE(aug.dx() == base.dx() + 5);
  CHECK(aug.x().leftCols(5) == base.x());
  CHECK(aug.y() == base.y());
  for (Eigen::Index c = 5; c < 10; ++c) {
    CHECK(std::abs(aug.x().col(c).mean() - 2.0) <= 0.05);
    check_moments(aug.x().col(c), 2.0, 4.0, gamma_kurtosis(1.0));
  }
  CHECK(augment_with_noise_features(base, 1).x() == aug.x());
  CHECK(augment_with_noise_features(base, 2).x() != aug.x());
  CHECK_THROWS(augment_with_noise_features(standardize(base), 1));
}
