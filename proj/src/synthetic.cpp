#include "qmisdr/synthetic.hpp"

#include "qmisdr/errors.hpp"
#include "qmisdr/numerics.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace qmisdr {

SyntheticName parse_synthetic_name(const std::string& name) {
  if (name == "rotation") return SyntheticName::Rotation;
  if (name == "A") return SyntheticName::A;
  if (name == "B") return SyntheticName::B;
  if (name == "C") return SyntheticName::C;
  if (name == "D") return SyntheticName::D;
  throw InvalidArgument("unknown synthetic dataset '" + name + "'");
}

std::string synthetic_name(SyntheticName name) {
  switch (name) {
    case SyntheticName::Rotation: return "rotation";
    case SyntheticName::A: return "A";
    case SyntheticName::B: return "B";
    case SyntheticName::C: return "C";
    case SyntheticName::D: return "D";
  }
  return "?";
}

double sinc(double t) { return t == 0.0 ? 1.0 : std::sin(t) / t; }

double dataset_d_response(double x1, double x2, double eps) {
  return sinc(x1 * std::numbers::pi / 2.0) + x2 * eps;
}

Projection rotation_projection(double theta) {
  Matrix w(1, 2);
  w << std::cos(theta), std::sin(theta);
  return Projection(std::move(w));
}

namespace {

Matrix rows_of_identity(Eigen::Index dz, Eigen::Index dx) { return Matrix::Identity(dz, dx); }

double laplace(Rng& rng, double location, double scale) {
  // Inverse CDF on u in (-1/2, 1/2).
  std::uniform_real_distribution<double> unif(-0.5, 0.5);
  double u = unif(rng);
  while (u == -0.5) u = unif(rng);
  const double sign = u < 0.0 ? -1.0 : 1.0;
  return location - scale * sign * std::log(1.0 - 2.0 * std::abs(u));
}

}  // namespace

SyntheticData generate(const SyntheticSpec& spec) {
  if (spec.n < 2) throw InvalidArgument("synthetic dataset needs n >= 2");
  Rng rng(spec.seed);
  const Eigen::Index n = spec.n;
  const double sqrt2 = std::numbers::sqrt2;
  const double sqrt5 = std::sqrt(5.0);

  switch (spec.name) {
    case SyntheticName::Rotation: {
      std::normal_distribution<double> normal(0.0, 1.0);
      std::normal_distribution<double> noise(0.0, 0.15);
      Matrix x(n, 2), y(n, 1);
      for (Eigen::Index i = 0; i < n; ++i) {
        x(i, 0) = normal(rng);
        x(i, 1) = normal(rng);
        y(i, 0) = x(i, 0) * x(i, 0) + noise(rng);
      }
      return SyntheticData{Dataset(std::move(x), std::move(y)), Projection(rows_of_identity(1, 2)),
                           rotation_projection(spec.theta)};
    }
    case SyntheticName::A: {
      std::normal_distribution<double> normal(0.0, 1.0);
      std::gamma_distribution<double> noise(0.25, 0.25);
      Matrix x(n, 5), y(n, 1);
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < 5; ++j) x(i, j) = normal(rng);
        const double s = x(i, 0) + x(i, 1);
        y(i, 0) = std::exp(-s * s / 0.5) + noise(rng);
      }
      Matrix w = Matrix::Zero(1, 5);
      w(0, 0) = w(0, 1) = 1.0 / sqrt2;
      Projection p(w);
      return SyntheticData{Dataset(std::move(x), std::move(y)), p, p};
    }
    case SyntheticName::B: {
      std::uniform_real_distribution<double> unif(-1.0, 1.0);
      std::gamma_distribution<double> noise(0.25, 0.5);
      Matrix x(n, 5), y(n, 1);
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < 5; ++j) x(i, j) = unif(rng);
        const double z = (x(i, 0) + 2.0 * x(i, 1)) / sqrt5;
        y(i, 0) = z * std::sin(z) - noise(rng);
      }
      Matrix w = Matrix::Zero(1, 5);
      w(0, 0) = 1.0 / sqrt5;
      w(0, 1) = 2.0 / sqrt5;
      Projection p(w);
      return SyntheticData{Dataset(std::move(x), std::move(y)), p, p};
    }
    case SyntheticName::C: {
      std::uniform_real_distribution<double> unif(-1.0, 1.0);
      std::gamma_distribution<double> noise(0.25, 0.5);
      Matrix x(n, 5), y(n, 1);
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < 5; ++j) x(i, j) = unif(rng);
        y(i, 0) = x(i, 0) * x(i, 1) / sqrt2 - noise(rng);
      }
      Projection p(rows_of_identity(2, 5));
      return SyntheticData{Dataset(std::move(x), std::move(y)), p, p};
    }
    case SyntheticName::D: {
      std::normal_distribution<double> noise(0.0, 0.5);  // variance 0.25
      Matrix x(n, 5), y(n, 1);
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < 5; ++j) x(i, j) = laplace(rng, 0.0, 0.5);
        y(i, 0) = dataset_d_response(x(i, 0), x(i, 1), noise(rng));
      }
      Projection p(rows_of_identity(2, 5));
      return SyntheticData{Dataset(std::move(x), std::move(y)), p, p};
    }
  }
  throw InvalidArgument("unknown synthetic dataset");
}

Dataset augment_with_noise_features(const Dataset& ds, std::uint64_t seed) {
  if (ds.standardized()) throw InvalidArgument("noise features are appended to raw data");
  Rng rng(seed);
  std::gamma_distribution<double> gamma(1.0, 2.0);
  Matrix x(ds.n(), ds.dx() + kNoiseFeatures);
  x.leftCols(ds.dx()) = ds.x();
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    for (Eigen::Index j = 0; j < kNoiseFeatures; ++j) x(i, ds.dx() + j) = gamma(rng);
  }
  return Dataset(std::move(x), ds.y());
}

}  // namespace qmisdr
