#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ripforge/errors.hpp"
#include "ripforge/image_io.hpp"
#include "ripforge/matrix_io.hpp"
#include "ripforge/metrics.hpp"
#include "ripforge/mri.hpp"
#include "ripforge/phantom.hpp"
#include "ripforge/toml_lite.hpp"
#include "ripforge/tv.hpp"

namespace ripforge {

enum class MriMethod { proposed, tv, zero_fill };

inline std::string_view to_string(MriMethod m) {
  switch (m) {
    case MriMethod::proposed: return "proposed";
    case MriMethod::tv: return "tv";
    case MriMethod::zero_fill: return "zero-fill";
  }
  return "?";
}

inline MriMethod parse_mri_method(std::string_view s) {
  if (s == "proposed") return MriMethod::proposed;
  if (s == "tv") return MriMethod::tv;
  if (s == "zero-fill" || s == "zero_fill" || s == "zerofill") return MriMethod::zero_fill;
  throw ConfigError("method must be proposed, tv or zero-fill, got '" + std::string(s) + "'");
}

/// Reconstruction parameters from TOML keys, bare or under [mri]. Absent
/// keys keep the defaults; unknown keys are rejected.
inline MriParams mri_params_from_toml(const toml::Table& t, MriParams p = {}) {
  static const char* kKeys[] = {"rho",         "nu",          "mu",
                                "gamma",       "lambda_tv",   "levels",
                                "outer_iters", "outer_tol",   "fista_iters",
                                "fista_tol",   "tv_iters",    "tv_inner_iters",
                                "tie_ensembles", "exact_factors", "polar_project_H"};
  for (const auto& [k, v] : t.entries()) {
    const std::string bare = k.rfind("mri.", 0) == 0 ? k.substr(4) : k;
    if (std::find(std::begin(kKeys), std::end(kKeys), bare) == std::end(kKeys)) {
      throw ConfigError("unknown MRI parameter '" + k + "'");
    }
  }
  auto key = [&](const char* k) { return t.has(std::string("mri.") + k) ? std::string("mri.") + k : std::string(k); };
  auto real = [&](const char* k, double& out) {
    if (t.has(key(k))) out = t.number(key(k));
  };
  auto count = [&](const char* k, std::size_t& out) {
    if (!t.has(key(k))) return;
    const std::int64_t v = t.integer(key(k));
    if (v < 0) throw ConfigError(std::string(k) + " must be non-negative");
    out = static_cast<std::size_t>(v);
  };
  auto flag = [&](const char* k, bool& out) {
    if (t.has(key(k))) out = t.boolean(key(k));
  };
  real("rho", p.rho);
  real("nu", p.nu);
  real("mu", p.mu);
  real("gamma", p.gamma);
  real("lambda_tv", p.lambda_tv);
  count("levels", p.levels);
  count("outer_iters", p.outer_iters);
  real("outer_tol", p.outer_tol);
  count("fista_iters", p.fista_iters);
  real("fista_tol", p.fista_tol);
  count("tv_iters", p.tv_iters);
  count("tv_inner_iters", p.tv_inner_iters);
  flag("tie_ensembles", p.tie_ensembles);
  flag("exact_factors", p.exact_factors);
  flag("polar_project_H", p.polar_project_H);
  for (double v : {p.rho, p.nu, p.mu}) {
    if (!(v > 0.0)) throw ConfigError("rho, nu and mu must be positive");
  }
  if (!(p.gamma >= 0.0) || !(p.lambda_tv >= 0.0)) {
    throw ConfigError("gamma and lambda_tv must be non-negative");
  }
  return p;
}

/// Loads the parameter file, or the defaults when no path is given.
inline MriParams load_mri_params(const std::optional<std::string>& path) {
  if (!path || path->empty()) return MriParams{};
  return mri_params_from_toml(toml::parse_file(*path));
}

/// A fully sampled acquisition: its k-space and the reference image
/// |F1^* Y F2^*| every method is scored against.
struct MriInput {
  std::string name;
  CMat kspace;
  Mat reference;
};

/// "phantom:<n>" synthesizes an n x n phantom; *.rfmx is complex k-space;
/// anything else is read as a PGM/PNG image.
inline MriInput load_mri_input(const std::string& spec) {
  MriInput in;
  Mat image;
  if (spec.rfind("phantom:", 0) == 0) {
    std::size_t n = 0;
    try {
      n = std::stoull(spec.substr(8));
    } catch (const std::exception&) {
      throw ConfigError("phantom size must be an integer: " + spec);
    }
    in.name = "phantom" + std::to_string(n);
    image = make_phantom(n, n);
  } else {
    in.name = std::filesystem::path(spec).stem().string();
    if (std::filesystem::path(spec).extension() == ".rfmx") {
      in.kspace = io::read_complex(spec);
      in.reference = zero_fill(in.kspace);
      return in;
    }
    image = io::read_image(spec).pixels;
  }
  in.kspace = simulate_kspace(image, full_mask(image.rows()));
  in.reference = zero_fill(in.kspace);
  return in;
}

/// Acceleration 1 means the full mask.
inline AccelMask benchmark_mask(std::size_t n1, int accel, Seed seed) {
  if (accel == 1) return full_mask(n1);
  return make_mask(n1, accel, seed);
}

struct MriRun {
  Mat image;
  std::optional<MriReconstruction> proposed;
  std::optional<TvResult> tv;
};

/// One reconstruction of masked k-space.
inline MriRun reconstruct(MriMethod method, const CMat& y, const AccelMask& mask,
                          const MriParams& params, Seed seed) {
  MriRun run;
  switch (method) {
    case MriMethod::zero_fill:
      run.image = zero_fill(y);
      break;
    case MriMethod::tv: {
      TvOptions o;
      o.lambda = params.lambda_tv;
      o.max_iters = params.tv_iters;
      o.inner_iters = params.tv_inner_iters;
      run.tv = tv_reconstruct(y, mask.selected, dft_matrix(y.rows()), dft_matrix(y.cols()), o);
      run.image = run.tv->Z;
      break;
    }
    case MriMethod::proposed:
      run.proposed = recover_image(y, mask, params, seed);
      run.image = run.proposed->Z;
      break;
  }
  return run;
}

struct MriMetricRow {
  std::string image;
  int accel = 4;
  MriMethod method = MriMethod::zero_fill;
  double psnr = std::numeric_limits<double>::quiet_NaN();
  double ssim = std::numeric_limits<double>::quiet_NaN();
  bool ok = false;
  std::string error;
  std::string output;  ///< saved reconstruction, empty on failure
  double seconds = 0.0;
};

struct MriBenchmark {
  std::vector<MriMetricRow> rows;
  MriParams params;
  Seed seed = 0;

  std::size_t failures() const {
    std::size_t f = 0;
    for (const MriMetricRow& r : rows) f += r.ok ? 0 : 1;
    return f;
  }
};

namespace detail {

/// "inf" for the perfect-reconstruction sentinel, full precision otherwise.
inline std::string fmt_metric(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline nlohmann::json metric_json(double v) {
  if (std::isfinite(v)) return v;
  return fmt_metric(v);
}

}  // namespace detail

inline std::string mri_csv(const MriBenchmark& b) {
  std::string out = "image,accel,method,psnr,ssim,status\n";
  for (const MriMetricRow& r : b.rows) {
    out += r.image + "," + std::to_string(r.accel) + "," + std::string(to_string(r.method)) + "," +
           detail::fmt_metric(r.psnr) + "," + detail::fmt_metric(r.ssim) + "," +
           (r.ok ? "ok" : "failed") + "\n";
  }
  return out;
}

inline nlohmann::json mri_params_json(const MriParams& p) {
  return {{"rho", p.rho},
          {"nu", p.nu},
          {"mu", p.mu},
          {"gamma", p.gamma},
          {"lambda_tv", p.lambda_tv},
          {"levels", p.levels},
          {"outer_iters", p.outer_iters},
          {"outer_tol", p.outer_tol},
          {"fista_iters", p.fista_iters},
          {"fista_tol", p.fista_tol},
          {"tv_iters", p.tv_iters},
          {"tv_inner_iters", p.tv_inner_iters},
          {"tie_ensembles", p.tie_ensembles},
          {"exact_factors", p.exact_factors},
          {"polar_project_H", p.polar_project_H}};
}

inline std::string mri_json(const MriBenchmark& b) {
  nlohmann::json j;
  j["seed"] = b.seed;
  j["params"] = mri_params_json(b.params);
  j["runs"] = nlohmann::json::array();
  for (const MriMetricRow& r : b.rows) {
    nlohmann::json row = {{"image", r.image},
                          {"accel", r.accel},
                          {"method", to_string(r.method)},
                          {"psnr", detail::metric_json(r.psnr)},
                          {"ssim", detail::metric_json(r.ssim)},
                          {"status", r.ok ? "ok" : "failed"},
                          {"seconds", r.seconds}};
    if (!r.ok) row["error"] = r.error;
    if (!r.output.empty()) row["output"] = r.output;
    j["runs"].push_back(row);
  }
  return j.dump(2) + "\n";
}

/// Every (image, accel, method) run scored against the fully sampled
/// reference. A failing run becomes a "failed" row and the rest continue.
/// With a non-empty out_dir the table (mri_metrics.csv / .json) and the
/// 16-bit reconstructions are written there.
inline MriBenchmark run_mri_benchmark(const std::vector<std::string>& images,
                                      const std::vector<int>& accels,
                                      const std::vector<MriMethod>& methods,
                                      const MriParams& params, Seed seed,
                                      const std::string& out_dir = "") {
  MriBenchmark bench;
  bench.params = params;
  bench.seed = seed;
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
  for (const std::string& spec : images) {
    std::optional<MriInput> input;
    std::string load_error;
    try {
      input = load_mri_input(spec);
    } catch (const std::exception& e) {
      load_error = e.what();
    }
    for (int accel : accels) {
      for (MriMethod method : methods) {
        MriMetricRow row;
        row.image = input ? input->name : spec;
        row.accel = accel;
        row.method = method;
        const auto t0 = std::chrono::steady_clock::now();
        try {
          if (!input) throw IoError(load_error);
          const AccelMask mask = benchmark_mask(input->kspace.rows(), accel, derive(seed, "mask"));
          const CMat y = detail::keep_rows(input->kspace, mask.selected);
          const MriRun run = reconstruct(method, y, mask, params, derive(seed, "pipeline"));
          row.psnr = psnr(input->reference, run.image);
          row.ssim = ssim(input->reference, run.image);
          row.ok = true;
          if (!out_dir.empty()) {
            row.output = (std::filesystem::path(out_dir) /
                          (row.image + "_" + std::to_string(accel) + "x_" +
                           std::string(to_string(method)) + ".png"))
                             .string();
            io::write_image(row.output, run.image, 16);
          }
        } catch (const std::exception& e) {
          row.ok = false;
          row.error = e.what();
          row.output.clear();
        }
        row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        bench.rows.push_back(row);
      }
    }
  }
  if (!out_dir.empty()) {
    const std::filesystem::path dir(out_dir);
    std::ofstream(dir / "mri_metrics.csv", std::ios::binary) << mri_csv(bench);
    std::ofstream(dir / "mri_metrics.json", std::ios::binary) << mri_json(bench);
  }
  return bench;
}

}  // namespace ripforge
