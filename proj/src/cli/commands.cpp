#include "qmisdr/cli/commands.hpp"

#include "qmisdr/errors.hpp"
#include "qmisdr/evaluation.hpp"
#include "qmisdr/lsqmi.hpp"
#include "qmisdr/lsqmid.hpp"
#include "qmisdr/numerics.hpp"
#include "qmisdr/optimizer.hpp"
#include "qmisdr/synthetic.hpp"

#include "json.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

namespace qmisdr::cli {

namespace {

using Json = nlohmann::ordered_json;

// Runs body(i) for i in [0, count) on up to `threads` workers. The first
// exception thrown by any task is rethrown after all workers finish.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw ConfigError("error while writing '" + path.string() + "'");
}

std::filesystem::path output_path(const RunOptions& opts, const Section& cfg, const std::string& key) {
  const std::string name = cfg.get_string(key);
  if (name.empty()) throw ConfigError(cfg.name() + "." + key + " must not be empty");
  return opts.out_dir / name;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) throw ConfigError("dataset file '" + path.string() + "' not found");
  try {
    return read_csv(path);
  } catch (const Error& e) {
    throw ConfigError("cannot load '" + path.string() + "': " + e.what());
  }
}

CvGrid grid_from(const Section& cfg) {
  CvGrid g{cfg.get_doubles("sigmas"), cfg.get_doubles("lambdas")};
  for (double s : g.sigmas) {
    if (!(s > 0.0)) throw ConfigError(cfg.name() + ".sigmas entries must be positive");
  }
  for (double l : g.lambdas) {
    if (!(l >= 0.0)) throw ConfigError(cfg.name() + ".lambdas entries must be non-negative");
  }
  return g;
}

OptimizerConfig optimizer_from(const Section& cfg) {
  OptimizerConfig o;
  o.restarts = static_cast<int>(cfg.get_int("restarts", 1));
  o.max_iters = static_cast<int>(cfg.get_int("max_iters", 1));
  o.tol = cfg.get_double("tol");
  o.orthonormalize_every = static_cast<int>(cfg.get_int("orthonormalize_every", 1));
  o.cv_refresh_every = static_cast<int>(cfg.get_int("cv_refresh_every", 1));
  o.folds = static_cast<int>(cfg.get_int("folds", 2));
  o.basis_count = static_cast<Eigen::Index>(cfg.get_int("basis_count", 0));
  o.grid = grid_from(cfg);
  try {
    o.validate();
  } catch (const Error& e) {
    throw ConfigError(cfg.name() + ": " + e.what());
  }
  return o;
}

Method method_from(const Section& cfg, const std::string& name) {
  try {
    return parse_method(name);
  } catch (const Error&) {
    throw ConfigError(cfg.name() + ": unknown method '" + name + "'");
  }
}

struct MeanSe {
  std::size_t count = 0;
  double mean = 0.0;
  std::optional<double> se;
};

MeanSe mean_se(const std::vector<double>& v) {
  MeanSe out;
  out.count = v.size();
  if (v.empty()) return out;
  double sum = 0.0;
  for (double x : v) sum += x;
  out.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  }
  return out;
}

std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---------------------------------------------------------------- illustrate

struct IllustrateRow {
  double theta;
  double qmi_tilde;
  double dqmi_lsqmid;
  std::optional<double> qmi_lsqmi;
  std::optional<double> dqmi_lsqmi_fd;
};

struct IllustrateTrial {
  std::vector<IllustrateRow> rows;
  std::optional<std::string> error;
};

// d/dtheta of a function of W = [cos theta, sin theta] from its W-gradient.
double along_theta(const Matrix& g, double theta) { return -std::sin(theta) * g(0, 0) + std::cos(theta) * g(0, 1); }

}  // namespace

std::string metadata_header(const Section& cfg, std::uint64_t seed) {
  std::string out;
  out += "# tool: " + std::string(kToolName) + " " + kToolVersion + "\n";
  out += "# command: " + cfg.name() + "\n";
  out += "# config_hash: " + fnv1a_hex(cfg.canonical()) + "\n";
  out += "# seed: " + std::to_string(seed) + "\n";
  return out;
}

int run_illustrate(const Section& cfg, const RunOptions& opts) {
  const auto n = static_cast<Eigen::Index>(cfg.get_int("n", 10));
  const auto trials = static_cast<std::size_t>(cfg.get_int("trials", 1));
  const std::uint64_t seed = cfg.get_seed("seed");
  const auto points = cfg.get_int("theta_points", 1);
  const double theta_min = cfg.get_double("theta_min");
  const double theta_max = cfg.get_double("theta_max");
  if (theta_max < theta_min) throw ConfigError("illustrate.theta_max must be >= theta_min");
  const bool cv_at_zero = cfg.get_bool("cv_at_zero");
  const bool with_lsqmi = cfg.get_bool("lsqmi");
  const auto basis = static_cast<Eigen::Index>(cfg.get_int("basis_count", 0));
  const int folds = static_cast<int>(cfg.get_int("folds", 2));
  const CvGrid grid = grid_from(cfg);
  const double fd_step = cfg.get_double("fd_step");
  if (!(fd_step > 0.0)) throw ConfigError("illustrate.fd_step must be positive");
  if (basis > n) throw ConfigError("illustrate.basis_count exceeds n");
  const auto out_path = output_path(opts, cfg, "output");

  std::vector<double> thetas;
  for (long long p = 0; p < points; ++p) {
    thetas.push_back(points == 1 ? theta_min
                                 : theta_min + (theta_max - theta_min) * static_cast<double>(p) /
                                                   static_cast<double>(points - 1));
  }

  std::vector<IllustrateTrial> results(trials);
  parallel_for(trials, opts.threads, [&](std::size_t t) {
    IllustrateTrial& res = results[t];
    try {
      const std::uint64_t tseed = derive_seed(seed, t);
      const Dataset ds = standardize(generate({SyntheticName::Rotation, n, tseed, 0.0}).data);
      const Eigen::Index b = basis > 0 ? basis : default_basis_count(n);
      const auto idx = select_center_indices(n, b, derive_seed(tseed, 0));
      const std::uint64_t fold_seed = derive_seed(tseed, 1);

      CvChoice d_choice, i_choice;
      auto tune = [&](const Matrix& z) {
        const CenterSet centers = centers_from_indices(z, ds.y(), idx);
        d_choice = cross_validate(z, ds.y(), centers, grid, folds, fold_seed).choices[0];
        if (with_lsqmi) i_choice = lsqmi_cv(z, ds.y(), centers, grid, folds, fold_seed);
      };
      if (cv_at_zero) tune(project(ds, rotation_projection(0.0)));

      for (double theta : thetas) {
        const Matrix w = rotation_projection(theta).w();
        const Matrix z = project(ds.x(), w);
        if (!cv_at_zero) tune(z);
        const DerivativeFit fit =
            fit_derivative(z, ds.y(), centers_from_indices(z, ds.y(), idx), {d_choice.sigma}, {d_choice.lambda});
        IllustrateRow row{theta, qmi_tilde(fit, z, ds.y()),
                          along_theta(qmi_gradient(fit, ds.x(), z, ds.y()).grad, theta), std::nullopt, std::nullopt};
        if (with_lsqmi) {
          row.qmi_lsqmi = lsqmi_value_at(ds.x(), ds.y(), w, idx, i_choice.sigma, i_choice.lambda);
          row.dqmi_lsqmi_fd =
              along_theta(lsqmi_w_gradient(ds.x(), ds.y(), w, idx, i_choice.sigma, i_choice.lambda, fd_step), theta);
        }
        res.rows.push_back(row);
      }
    } catch (const Error& e) {
      res.rows.clear();
      res.error = e.what();
    }
  });

  std::ostringstream out;
  out << metadata_header(cfg, seed);
  std::size_t failed = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    if (results[t].error) {
      ++failed;
      out << "# trial " << t << " failed: " << *results[t].error << "\n";
    }
  }
  out << "trial,theta,qmi_tilde,dqmi_lsqmid,qmi_lsqmi,dqmi_lsqmi_fd\n";
  for (std::size_t t = 0; t < trials; ++t) {
    for (const auto& r : results[t].rows) {
      out << t << ',' << format_double(r.theta) << ',' << format_double(r.qmi_tilde) << ','
          << format_double(r.dqmi_lsqmid) << ',' << cell(r.qmi_lsqmi) << ',' << cell(r.dqmi_lsqmi_fd) << "\n";
    }
  }
  write_file(out_path, out.str());
  return failed == trials ? kExitNumerical : kExitOk;
}

// ---------------------------------------------------------------- sdr

int run_sdr(const Section& cfg, const RunOptions& opts) {
  const auto trials = static_cast<std::size_t>(cfg.get_int("trials", 1));
  const std::uint64_t seed = cfg.get_seed("seed");
  const Method method = method_from(cfg, cfg.get_string("method"));
  const OptimizerConfig base = optimizer_from(cfg);
  const bool timing = cfg.get_bool("record_timing");
  auto dz = static_cast<Eigen::Index>(cfg.get_int("dz", 0));
  const auto json_path = output_path(opts, cfg, "output_json");
  const auto summary_path = output_path(opts, cfg, "output_summary");

  std::optional<Dataset> fixed;
  std::optional<SyntheticName> name;
  Eigen::Index n = 0;
  std::string dataset_label;
  if (const auto csv = cfg.get_path("csv")) {
    fixed = load_dataset(*csv);
    n = fixed->n();
    dataset_label = csv->filename().string();
    if (dz == 0) throw ConfigError("sdr.dz is required when reading a CSV dataset");
    if (dz > fixed->dx()) throw ConfigError("sdr.dz exceeds the input dimension");
  } else {
    try {
      name = parse_synthetic_name(cfg.get_string("dataset"));
    } catch (const Error&) {
      throw ConfigError("sdr: unknown dataset '" + cfg.get_string("dataset") + "'");
    }
    n = static_cast<Eigen::Index>(cfg.get_int("n", 2));
    dataset_label = synthetic_name(*name);
    const SyntheticData probe = generate({*name, 2, 0, 0.0});
    if (dz == 0) dz = probe.w_opt.dz();
    if (dz > probe.data.dx()) throw ConfigError("sdr.dz exceeds the input dimension");
  }
  if (method == Method::LsqmidGradient1d && dz != 1) throw ConfigError("sdr: lsqmid-grad1d needs dz = 1");
  if (base.basis_count > n) throw ConfigError("sdr.basis_count exceeds n");

  struct Trial {
    std::uint64_t seed = 0;
    std::optional<MultiRestartResult> result;
    std::optional<double> dr;
    std::string error;
    double seconds = 0.0;
  };
  std::vector<Trial> results(trials);
  parallel_for(trials, opts.threads, [&](std::size_t t) {
    Trial& tr = results[t];
    tr.seed = derive_seed(seed, t);
    const auto start = std::chrono::steady_clock::now();
    try {
      std::optional<Projection> w_opt;
      Dataset raw = fixed ? *fixed : [&] {
        SyntheticData d = generate({*name, n, tr.seed, 0.0});
        w_opt = d.w_opt;
        return d.data;
      }();
      const Dataset ds = standardize(raw);
      OptimizerConfig run_cfg = base;
      run_cfg.seed = derive_seed(tr.seed, 2);
      tr.result = multi_restart(ds, dz, run_cfg, method);
      if (w_opt && w_opt->dz() == dz) tr.dr = dr_error(*w_opt, tr.result->best);
    } catch (const Error& e) {
      tr.error = e.what();
    }
    tr.seconds = seconds_since(start);
  });

  Json doc;
  doc["_meta"] = {{"tool", kToolName},
                  {"version", kToolVersion},
                  {"command", "sdr"},
                  {"config_hash", fnv1a_hex(cfg.canonical())},
                  {"seed", seed}};
  doc["trials"] = Json::array();
  std::vector<double> drs, iters;
  std::size_t ok = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const Trial& tr = results[t];
    Json rec;
    rec["trial"] = t;
    rec["seed"] = tr.seed;
    if (!tr.result) {
      rec["status"] = "failed";
      rec["message"] = tr.error;
    } else {
      ++ok;
      const auto& r = *tr.result;
      const Matrix& w = r.best.w();
      rec["status"] = "ok";
      rec["dz"] = w.rows();
      rec["dx"] = w.cols();
      Json rows = Json::array();
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < w.cols(); ++j) row.push_back(w(i, j));
        rows.push_back(row);
      }
      rec["w"] = rows;
      rec["orthonormality_defect"] = orthonormality_defect(w);
      if (tr.dr) {
        rec["dr_error"] = *tr.dr;
        drs.push_back(*tr.dr);
      }
      const auto& best = r.restarts[r.best_index];
      rec["best_restart"] = r.best_index;
      rec["score"] = best.score;
      rec["iterations"] = best.trace.iterations();
      iters.push_back(best.trace.iterations());
      std::size_t failed_restarts = 0;
      for (const auto& o : r.restarts) failed_restarts += o.w ? 0 : 1;
      rec["failed_restarts"] = failed_restarts;
    }
    if (timing) rec["wall_time_s"] = tr.seconds;
    doc["trials"].push_back(rec);
  }
  write_file(json_path, doc.dump(2) + "\n");

  const MeanSe dr = mean_se(drs);
  const MeanSe it = mean_se(iters);
  std::ostringstream sum;
  sum << metadata_header(cfg, seed);
  sum << "dataset,method,n,dz,trials,succeeded,mean_dr_error,se_dr_error,mean_iterations\n";
  sum << dataset_label << ',' << method_name(method) << ',' << n << ',' << dz << ',' << trials << ',' << ok << ','
      << (dr.count ? format_double(dr.mean) : "") << ',' << cell(dr.se) << ','
      << (it.count ? format_double(it.mean) : "") << "\n";
  write_file(summary_path, sum.str());
  return ok == 0 ? kExitNumerical : kExitOk;
}

// ---------------------------------------------------------------- bench

int run_bench(const Section& cfg, const RunOptions& opts) {
  const auto trials = static_cast<std::size_t>(cfg.get_int("trials", 1));
  const std::uint64_t seed = cfg.get_seed("seed");
  const OptimizerConfig base = optimizer_from(cfg);
  const auto n_train = static_cast<Eigen::Index>(cfg.get_int("n_train", 2));
  const auto dz_list = cfg.get_ints("dz", 1);
  const bool noise = cfg.get_bool("noise_features");
  const auto rmse_path = output_path(opts, cfg, "output_rmse");
  const auto summary_path = output_path(opts, cfg, "output_summary");

  std::vector<std::optional<Method>> methods;
  std::vector<std::string> method_labels;
  for (const auto& m : cfg.get_strings("methods")) {
    methods.push_back(m == "none" ? std::nullopt : std::optional<Method>(method_from(cfg, m)));
    method_labels.push_back(m == "none" ? m : method_name(*methods.back()));
  }
  const auto csv = cfg.get_path("csv");
  if (!csv) throw ConfigError("bench.csv is required");
  const Dataset raw = load_dataset(*csv);
  if (raw.dy() != 1) throw ConfigError("bench needs a single response column");
  if (n_train < base.folds || n_train >= raw.n()) throw ConfigError("bench.n_train must lie in [folds, n)");
  const Eigen::Index dx = raw.dx() + (noise ? kNoiseFeatures : 0);
  for (long long dz : dz_list) {
    if (dz > dx) throw ConfigError("bench.dz entries must not exceed the input dimension");
  }
  for (std::size_t m = 0; m < methods.size(); ++m) {
    if (methods[m] == Method::LsqmidGradient1d) {
      for (long long dz : dz_list) {
        if (dz != 1) throw ConfigError("bench: lsqmid-grad1d needs dz = 1");
      }
    }
  }
  if (base.basis_count > n_train) throw ConfigError("bench.basis_count exceeds n_train");

  // Row layout per trial: for each method, "none" contributes one row at the
  // full dimension, every other method one row per dz.
  struct Cell {
    std::size_t method;
    Eigen::Index dz;
  };
  std::vector<Cell> layout;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    if (!methods[m]) {
      layout.push_back({m, dx});
    } else {
      for (long long dz : dz_list) layout.push_back({m, static_cast<Eigen::Index>(dz)});
    }
  }

  struct Outcome {
    std::optional<double> rmse;
    std::string error;
  };
  std::vector<std::vector<Outcome>> results(trials, std::vector<Outcome>(layout.size()));
  parallel_for(trials, opts.threads, [&](std::size_t t) {
    const std::uint64_t tseed = derive_seed(seed, t);
    std::optional<Dataset> train, test;
    Vector y_test_raw;
    try {
      const Dataset aug = noise ? augment_with_noise_features(raw, derive_seed(tseed, 5)) : raw;
      Rng rng(derive_seed(tseed, 6));
      const auto perm = random_permutation(aug.n(), rng);
      const std::vector<Eigen::Index> train_rows(perm.begin(), perm.begin() + n_train);
      const std::vector<Eigen::Index> test_rows(perm.begin() + n_train, perm.end());
      train = standardize(aug.subset(train_rows));
      test = apply_standardization(aug.subset(test_rows), train->x_stats(), train->y_stats());
      y_test_raw = gather_rows(aug.y(), test_rows).col(0);
    } catch (const Error& e) {
      for (auto& o : results[t]) o.error = e.what();
      return;
    }
    const double y_mean = train->y_stats().mean(0);
    const double y_sd = train->y_stats().stddev(0);
    for (std::size_t c = 0; c < layout.size(); ++c) {
      Outcome& o = results[t][c];
      try {
        Matrix z_train = train->x();
        Matrix z_test = test->x();
        if (const auto& method = methods[layout[c].method]) {
          OptimizerConfig run_cfg = base;
          run_cfg.seed = derive_seed(tseed, 100 + static_cast<std::uint64_t>(layout[c].dz));
          const MultiRestartResult r = multi_restart(*train, layout[c].dz, run_cfg, *method);
          z_train = project(train->x(), r.best.w());
          z_test = project(test->x(), r.best.w());
        }
        const KrrModel model = krr_fit_cv(z_train, train->y().col(0), KrrGrid{}, base.folds, derive_seed(tseed, 8));
        const Vector pred = (krr_predict(model, z_test).array() * y_sd + y_mean).matrix();
        o.rmse = rmse(y_test_raw, pred);
      } catch (const Error& e) {
        o.error = e.what();
      }
    }
  });

  std::ostringstream out;
  out << metadata_header(cfg, seed);
  out << "trial,dz,method,rmse,status\n";
  std::size_t ok = 0;
  std::vector<std::vector<double>> per_cell(layout.size());
  for (std::size_t t = 0; t < trials; ++t) {
    for (std::size_t c = 0; c < layout.size(); ++c) {
      const Outcome& o = results[t][c];
      out << t << ',' << layout[c].dz << ',' << method_labels[layout[c].method] << ',' << cell(o.rmse) << ','
          << (o.rmse ? "ok" : "failed") << "\n";
      if (o.rmse) {
        ++ok;
        per_cell[c].push_back(*o.rmse);
      }
    }
  }
  write_file(rmse_path, out.str());

  std::ostringstream sum;
  sum << metadata_header(cfg, seed);
  sum << "dz,method,count,mean_rmse,se_rmse\n";
  for (std::size_t c = 0; c < layout.size(); ++c) {
    const MeanSe s = mean_se(per_cell[c]);
    sum << layout[c].dz << ',' << method_labels[layout[c].method] << ',' << s.count << ','
        << (s.count ? format_double(s.mean) : "") << ',' << cell(s.se) << "\n";
  }
  write_file(summary_path, sum.str());
  return ok == 0 ? kExitNumerical : kExitOk;
}

int run_command(const Section& cfg, const RunOptions& opts, std::ostream& err) {
  try {
    if (cfg.name() == "illustrate") return run_illustrate(cfg, opts);
    if (cfg.name() == "sdr") return run_sdr(cfg, opts);
    if (cfg.name() == "bench") return run_bench(cfg, opts);
    err << "error: unknown command '" << cfg.name() << "'\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace qmisdr::cli
