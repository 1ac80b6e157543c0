#pragma once

#include "qmisdr/data_model.hpp"
#include "qmisdr/lsqmid.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qmisdr {

struct OptimizerConfig {
  int max_iters = 100;
  double tol = 1e-6;  // on ||W_new - W_old||_F
  int orthonormalize_every = 5;
  int restarts = 10;
  int cv_refresh_every = 10;
  std::uint64_t seed = 0;
  double f3_floor = 1e-8;

  CvGrid grid;
  int folds = 5;
  Eigen::Index basis_count = 0;  // 0 selects min(n, 200)

  // Armijo backtracking for the gradient-based drivers.
  double armijo_c1 = 1e-4;
  double backtrack = 0.5;
  double initial_step = 1.0;
  int max_backtracks = 30;

  double fd_step = 1e-4;  // LSQMI finite-difference gradient

  void validate() const;
};

enum class Method { LsqmidFixedPoint, LsqmidGradient1d, LsqmiFiniteDifference };

Method parse_method(const std::string& name);
std::string method_name(Method m);

struct TraceRecord {
  int iteration = 0;
  double delta_w = 0.0;
  bool orthonormalized = false;
  std::optional<double> score;
  std::optional<double> start_score;  // objective before the step (gradient drivers)
};

struct OptTrace {
  std::vector<TraceRecord> records;
  bool converged = false;
  bool failed = false;
  std::string message;

  int iterations() const noexcept { return static_cast<int>(records.size()); }
};

struct OptResult {
  Projection w;
  OptTrace trace;
};

// Components of the QMI-derivative estimate at W, split so that
//   gradient(ell, l') = f1 - f2 - W(ell, l') * f3.
struct FixedPointTerms {
  Matrix f1;
  Matrix f2;
  Matrix f3;
};

FixedPointTerms fixed_point_terms(const Matrix& w, const DerivativeFit& fit, const Matrix& x, const Matrix& y);

// W(ell, l') <- (f1 - f2) / f3 for every entry, all computed from the
// current W. Entries with |f3| below `f3_floor` keep their old value.
Matrix fixed_point_step(const Matrix& w, const DerivativeFit& fit, const Matrix& x, const Matrix& y,
                        double f3_floor = 1e-8);

// Single runs from a given starting point. cfg.seed fixes the center draw
// and the fold assignment of this run.
OptResult optimize_fixed_point(const Dataset& ds, const Projection& start, const OptimizerConfig& cfg);
OptResult optimize_gradient_1d(const Dataset& ds, const Projection& start, const OptimizerConfig& cfg);
OptResult optimize_lsqmi_fd(const Dataset& ds, const Projection& start, const OptimizerConfig& cfg);

OptResult run_method(Method method, const Dataset& ds, const Projection& start, const OptimizerConfig& cfg);

// Gaussian entries, then orthonormalized.
Projection random_projection(Eigen::Index dz, Eigen::Index dx, std::uint64_t seed);

// Estimated QMI used to rank restarts: the derivative-based approximation
// when dz = 1, otherwise the LSQMI value; tuning parameters are
// cross-validated at w.
double selection_score(const Dataset& ds, const Projection& w, const OptimizerConfig& cfg, std::uint64_t seed);

struct RestartOutcome {
  std::uint64_t seed = 0;
  std::optional<Projection> w;
  double score = 0.0;
  OptTrace trace;
};

struct MultiRestartResult {
  Projection best;
  std::size_t best_index = 0;
  std::vector<RestartOutcome> restarts;
};

// Restart r uses seed cfg.seed + r. Throws AllRestartsFailed when no
// restart produced a usable solution.
MultiRestartResult multi_restart(const Dataset& ds, Eigen::Index dz, const OptimizerConfig& cfg, Method method);

}  // namespace qmisdr
