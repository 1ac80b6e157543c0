#include "qmisdr/optimizer.hpp"

#include "qmisdr/errors.hpp"
#include "qmisdr/lsqmi.hpp"
#include "qmisdr/numerics.hpp"

#include <cmath>
#include <functional>
#include <limits>

namespace qmisdr {

void OptimizerConfig::validate() const {
  if (max_iters < 1 || orthonormalize_every < 1 || restarts < 1 || cv_refresh_every < 1 || folds < 2 ||
      max_backtracks < 1) {
    throw InvalidArgument("optimizer counts must be >= 1 (folds >= 2)");
  }
  if (!(tol > 0.0)) throw InvalidArgument("tol must be positive");
  if (!(f3_floor > 0.0)) throw InvalidArgument("f3_floor must be positive");
  if (!(armijo_c1 > 0.0 && armijo_c1 < 1.0)) throw InvalidArgument("armijo_c1 must lie in (0, 1)");
  if (!(backtrack > 0.0 && backtrack < 1.0)) throw InvalidArgument("backtrack must lie in (0, 1)");
  if (!(initial_step > 0.0) || !(fd_step > 0.0)) throw InvalidArgument("step sizes must be positive");
  if (basis_count < 0) throw InvalidArgument("basis_count must be >= 0");
  if (grid.sigmas.empty() || grid.lambdas.empty()) throw EmptyGrid("cross-validation grid is empty");
}

Method parse_method(const std::string& name) {
  if (name == "lsqmid-fp") return Method::LsqmidFixedPoint;
  if (name == "lsqmid-grad1d") return Method::LsqmidGradient1d;
  if (name == "lsqmi-fd") return Method::LsqmiFiniteDifference;
  throw InvalidArgument("unknown method '" + name + "'");
}

std::string method_name(Method m) {
  switch (m) {
    case Method::LsqmidFixedPoint: return "lsqmid-fp";
    case Method::LsqmidGradient1d: return "lsqmid-grad1d";
    case Method::LsqmiFiniteDifference: return "lsqmi-fd";
  }
  return "unknown";
}

FixedPointTerms fixed_point_terms(const Matrix& w, const DerivativeFit& fit, const Matrix& x, const Matrix& y) {
  if (w.rows() != fit.dz() || w.cols() != x.cols()) throw DimensionMismatch("W does not match the fit or x");
  const Matrix z = project(x, w);
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  const Eigen::Index dz = w.rows();
  const Eigen::Index dx = w.cols();
  FixedPointTerms t{Matrix(dz, dx), Matrix(dz, dx), Matrix(dz, dx)};
  const Matrix x_sq = x.cwiseProduct(x);
  for (Eigen::Index l = 0; l < dz; ++l) {
    const auto& m = fit.models[static_cast<std::size_t>(l)];
    const Vector& theta = fit.thetas[static_cast<std::size_t>(l)];
    const double inv_s2 = 1.0 / (m.sigma() * m.sigma());
    const Matrix p = density_difference_weights(m, z, y);
    const Vector s = p * theta;
    const Vector t_u = p * theta.cwiseProduct(m.centers_u().col(l));
    t.f1.row(l) = (x.transpose() * t_u).transpose() * (inv_n * inv_s2);
    t.f3.row(l) = (x_sq.transpose() * s).transpose() * (inv_n * inv_s2);
    for (Eigen::Index c = 0; c < dx; ++c) {
      // sum over m != c of W(l, m) x_i^(m)
      const Vector others = z.col(l) - w(l, c) * x.col(c);
      t.f2(l, c) = s.cwiseProduct(x.col(c)).dot(others) * inv_n * inv_s2;
    }
  }
  return t;
}

Matrix fixed_point_step(const Matrix& w, const DerivativeFit& fit, const Matrix& x, const Matrix& y,
                        double f3_floor) {
  const FixedPointTerms t = fixed_point_terms(w, fit, x, y);
  Matrix out = w;
  for (Eigen::Index l = 0; l < w.rows(); ++l) {
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      if (std::abs(t.f3(l, c)) >= f3_floor) out(l, c) = (t.f1(l, c) - t.f2(l, c)) / t.f3(l, c);
    }
  }
  return out;
}

namespace {

struct RunState {
  std::vector<Eigen::Index> center_indices;
  std::uint64_t fold_seed;
};

RunState init_run(const Dataset& ds, const OptimizerConfig& cfg) {
  cfg.validate();
  if (!ds.standardized()) throw InvalidArgument("optimizer expects a standardized dataset");
  const Eigen::Index b = cfg.basis_count > 0 ? cfg.basis_count : default_basis_count(ds.n());
  return {select_center_indices(ds.n(), b, derive_seed(cfg.seed, 0)), derive_seed(cfg.seed, 1)};
}

void check_start(const Dataset& ds, const Projection& start) {
  if (start.dx() != ds.dx()) throw DimensionMismatch("starting projection has the wrong dx");
}

bool refresh_due(int it, const OptimizerConfig& cfg) { return it == 1 || (it - 1) % cfg.cv_refresh_every == 0; }

// Armijo backtracking along a tangent direction with the polar retraction.
// Returns nullopt when no step is accepted.
std::optional<std::pair<Matrix, double>> armijo_search(const Matrix& w, const Matrix& direction, double f0,
                                                        double slope,
                                                        const std::function<double(const Matrix&)>& objective,
                                                        const OptimizerConfig& cfg) {
  double step = cfg.initial_step;
  for (int bt = 0; bt < cfg.max_backtracks; ++bt, step *= cfg.backtrack) {
    Matrix trial;
    try {
      trial = orthonormalize(w + step * direction).w();
    } catch (const RankDeficient&) {
      continue;
    }
    const double f = objective(trial);
    if (std::isfinite(f) && f >= f0 + cfg.armijo_c1 * step * slope) return std::make_pair(trial, f);
  }
  return std::nullopt;
}

OptResult finish(Matrix w, OptTrace trace) {
  return OptResult{orthonormalize(w), std::move(trace)};
}

}  // namespace

OptResult optimize_fixed_point(const Dataset& ds, const Projection& start, const OptimizerConfig& cfg) {
  check_start(ds, start);
  const RunState run = init_run(ds, cfg);
  const Matrix& x = ds.x();
  const Matrix& y = ds.y();
  Matrix w = start.w();
  OptTrace trace;
  std::vector<double> sigmas, lambdas;
  try {
    for (int it = 1; it <= cfg.max_iters; ++it) {
      const Matrix z = project(x, w);
      const CenterSet centers = centers_from_indices(z, y, run.center_indices);
      if (refresh_due(it, cfg)) {
        const CvResult cv = cross_validate(z, y, centers, cfg.grid, cfg.folds, run.fold_seed);
        sigmas.clear();
        lambdas.clear();
        for (const auto& c : cv.choices) {
          sigmas.push_back(c.sigma);
          lambdas.push_back(c.lambda);
        }
      }
      const DerivativeFit fit = fit_derivative(z, y, centers, sigmas, lambdas);
      Matrix next = fixed_point_step(w, fit, x, y, cfg.f3_floor);
      if (!next.allFinite()) throw SolveFailure("fixed-point update produced non-finite entries");
      const bool orth = it % cfg.orthonormalize_every == 0;
      if (orth) next = orthonormalize(next).w();
      const double delta = (next - w).norm();
      w = std::move(next);
      trace.records.push_back(TraceRecord{it, delta, orth, std::nullopt, std::nullopt});
      if (delta < cfg.tol) {
        trace.converged = true;
        break;
      }
    }
    return finish(std::move(w), std::move(trace));
  } catch (const Error& e) {
    trace.failed = true;
    trace.message = e.what();
  }
  try {
    return finish(std::move(w), std::move(trace));
  } catch (const Error&) {
    return OptResult{start, std::move(trace)};
  }
}

OptResult optimize_gradient_1d(const Dataset& ds, const Projection& start, const OptimizerConfig& cfg) {
  check_start(ds, start);
  if (start.dz() != 1) throw UnsupportedDimension("gradient ascent with the QMI approximation needs dz = 1");
  const RunState run = init_run(ds, cfg);
  const Matrix& x = ds.x();
  const Matrix& y = ds.y();
  Matrix w = start.w();
  OptTrace trace;
  std::vector<double> sigmas, lambdas;
  try {
    for (int it = 1; it <= cfg.max_iters; ++it) {
      const Matrix z = project(x, w);
      const CenterSet centers = centers_from_indices(z, y, run.center_indices);
      if (refresh_due(it, cfg)) {
        const CvResult cv = cross_validate(z, y, centers, cfg.grid, cfg.folds, run.fold_seed);
        sigmas = {cv.choices[0].sigma};
        lambdas = {cv.choices[0].lambda};
      }
      const DerivativeFit fit = fit_derivative(z, y, centers, sigmas, lambdas);
      const double f0 = qmi_tilde(fit, z, y);
      const Matrix g = qmi_gradient(fit, x, z, y).grad;
      // Tangent space of the unit sphere at w.
      const Matrix direction = g - (g * w.transpose()) * w;
      // qmi_tilde carries a factor 1/2 that the gradient does not.
      const double slope = 0.5 * direction.squaredNorm();
      if (slope == 0.0) {
        trace.records.push_back(TraceRecord{it, 0.0, true, f0, f0});
        trace.converged = true;
        break;
      }
      // The fit (theta and centers) stays frozen during the search so the
      // objective is consistent with the gradient.
      auto objective = [&](const Matrix& trial) { return qmi_tilde(fit, project(x, trial), y); };
      const auto accepted = armijo_search(w, direction, f0, slope, objective, cfg);
      if (!accepted) {
        trace.records.push_back(TraceRecord{it, 0.0, true, f0, f0});
        trace.message = "line search failed; stopping with a zero step";
        break;
      }
      const double delta = (accepted->first - w).norm();
      w = accepted->first;
      trace.records.push_back(TraceRecord{it, delta, true, accepted->second, f0});
      if (delta < cfg.tol) {
        trace.converged = true;
        break;
      }
    }
  } catch (const Error& e) {
    trace.failed = true;
    trace.message = e.what();
  }
  return finish(std::move(w), std::move(trace));
}

OptResult optimize_lsqmi_fd(const Dataset& ds, const Projection& start, const OptimizerConfig& cfg) {
  check_start(ds, start);
  const RunState run = init_run(ds, cfg);
  const Matrix& x = ds.x();
  const Matrix& y = ds.y();
  Matrix w = start.w();
  OptTrace trace;
  double sigma = 1.0;
  double lambda = 1e-3;
  try {
    for (int it = 1; it <= cfg.max_iters; ++it) {
      if (refresh_due(it, cfg)) {
        const Matrix z = project(x, w);
        const CvChoice c = lsqmi_cv(z, y, centers_from_indices(z, y, run.center_indices), cfg.grid, cfg.folds,
                                    run.fold_seed);
        sigma = c.sigma;
        lambda = c.lambda;
      }
      auto objective = [&](const Matrix& trial) {
        return lsqmi_value_at(x, y, trial, run.center_indices, sigma, lambda);
      };
      const double f0 = objective(w);
      const Matrix g = lsqmi_w_gradient(x, y, w, run.center_indices, sigma, lambda, cfg.fd_step);
      // Horizontal space of the Grassmann manifold at w.
      const Matrix direction = g - g * w.transpose() * w;
      const double slope = direction.squaredNorm();
      if (slope == 0.0) {
        trace.records.push_back(TraceRecord{it, 0.0, true, f0, f0});
        trace.converged = true;
        break;
      }
      const auto accepted = armijo_search(w, direction, f0, slope, objective, cfg);
      if (!accepted) {
        trace.records.push_back(TraceRecord{it, 0.0, true, f0, f0});
        trace.message = "line search failed; stopping with a zero step";
        break;
      }
      const double delta = (accepted->first - w).norm();
      w = accepted->first;
      trace.records.push_back(TraceRecord{it, delta, true, accepted->second, f0});
      if (delta < cfg.tol) {
        trace.converged = true;
        break;
      }
    }
  } catch (const Error& e) {
    trace.failed = true;
    trace.message = e.what();
  }
  return finish(std::move(w), std::move(trace));
}

OptResult run_method(Method method, const Dataset& ds, const Projection& start, const OptimizerConfig& cfg) {
  switch (method) {
    case Method::LsqmidFixedPoint: return optimize_fixed_point(ds, start, cfg);
    case Method::LsqmidGradient1d: return optimize_gradient_1d(ds, start, cfg);
    case Method::LsqmiFiniteDifference: return optimize_lsqmi_fd(ds, start, cfg);
  }
  throw InvalidArgument("unknown method");
}

Projection random_projection(Eigen::Index dz, Eigen::Index dx, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (;;) {
    Matrix w(dz, dx);
    for (Eigen::Index r = 0; r < dz; ++r) {
      for (Eigen::Index c = 0; c < dx; ++c) w(r, c) = normal(rng);
    }
    try {
      return orthonormalize(w);
    } catch (const RankDeficient&) {
      // measure-zero event; draw again
    }
  }
}

double selection_score(const Dataset& ds, const Projection& w, const OptimizerConfig& cfg, std::uint64_t seed) {
  const Eigen::Index b = cfg.basis_count > 0 ? cfg.basis_count : default_basis_count(ds.n());
  const Matrix z = project(ds, w);
  const CenterSet centers = select_centers(z, ds.y(), b, derive_seed(seed, 0));
  if (w.dz() == 1) {
    const CvResult cv = cross_validate(z, ds.y(), centers, cfg.grid, cfg.folds, derive_seed(seed, 1));
    const DerivativeFit fit =
        fit_derivative(z, ds.y(), centers, {cv.choices[0].sigma}, {cv.choices[0].lambda});
    return qmi_tilde(fit, z, ds.y());
  }
  const CvChoice c = lsqmi_cv(z, ds.y(), centers, cfg.grid, cfg.folds, derive_seed(seed, 1));
  return lsqmi_value(lsqmi_fit(z, ds.y(), centers, c.sigma, c.lambda));
}

MultiRestartResult multi_restart(const Dataset& ds, Eigen::Index dz, const OptimizerConfig& cfg, Method method) {
  cfg.validate();
  if (dz < 1 || dz > ds.dx()) throw InvalidArgument("target dimension must satisfy 1 <= dz <= dx");
  std::vector<RestartOutcome> outcomes;
  std::optional<std::size_t> best;
  for (int r = 0; r < cfg.restarts; ++r) {
    RestartOutcome out;
    out.seed = cfg.seed + static_cast<std::uint64_t>(r);
    OptimizerConfig run_cfg = cfg;
    run_cfg.seed = out.seed;
    try {
      const Projection start = random_projection(dz, ds.dx(), derive_seed(out.seed, 3));
      OptResult res = run_method(method, ds, start, run_cfg);
      out.trace = std::move(res.trace);
      if (!out.trace.failed) {
        out.score = selection_score(ds, res.w, run_cfg, derive_seed(out.seed, 4));
        if (std::isfinite(out.score)) out.w = std::move(res.w);
      }
    } catch (const Error& e) {
      out.trace.failed = true;
      out.trace.message = e.what();
    }
    if (out.w && (!best || out.score > outcomes[*best].score)) best = outcomes.size();
    outcomes.push_back(std::move(out));
  }
  if (!best) throw AllRestartsFailed("every restart failed");
  Projection chosen = *outcomes[*best].w;
  return MultiRestartResult{std::move(chosen), *best, std::move(outcomes)};
}

}  // namespace qmisdr
