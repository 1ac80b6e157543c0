#pragma once

#include "qmisdr/data_model.hpp"

#include <cstdint>
#include <string>

namespace qmisdr {

enum class SyntheticName { Rotation, A, B, C, D };

SyntheticName parse_synthetic_name(const std::string& name);
std::string synthetic_name(SyntheticName name);

struct SyntheticSpec {
  SyntheticName name = SyntheticName::A;
  Eigen::Index n = 200;
  std::uint64_t seed = 0;
  double theta = 0.0;  // rotation only
};

struct SyntheticData {
  Dataset data;     // raw, not standardized
  Projection w_opt;  // true subspace
  // Rotation spec only: [cos theta, sin theta]; equals w_opt otherwise.
  Projection w_theta;
};

// rotation: x ~ N(0, I_2), y = (x1)^2 + eps, eps ~ N(0, 0.15^2)
// A: x ~ N(0, I_5), y = exp(-(x1 + x2)^2 / 0.5) + eps, eps ~ Gamma(0.25, 0.25)
// B: x ~ U(-1, 1)^5, z = (x1 + 2 x2)/sqrt(5), y = z sin z - eps, eps ~ Gamma(0.25, 0.5)
// C: x ~ U(-1, 1)^5, y = x1 x2 / sqrt(2) - eps, eps ~ Gamma(0.25, 0.5)
// D: x ~ Laplace(0, 0.5)^5, y = sinc(pi x1 / 2) + x2 eps, eps ~ N(0, 0.25)
// Gamma(a, b) is shape a, scale b; N(0, v) has variance v.
SyntheticData generate(const SyntheticSpec& spec);

Projection rotation_projection(double theta);

// Unnormalized sinc, sin(t)/t with sinc(0) = 1.
double sinc(double t);

// Dataset D response for given inputs and noise draw.
double dataset_d_response(double x1, double x2, double eps);

// Appends five Gamma(1, 2) noise features to x.
Dataset augment_with_noise_features(const Dataset& ds, std::uint64_t seed);

inline constexpr Eigen::Index kNoiseFeatures = 5;

}  // namespace qmisdr
