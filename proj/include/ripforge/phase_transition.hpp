#pragma once

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ripforge/dictionaries.hpp"
#include "ripforge/ensembles.hpp"
#include "ripforge/errors.hpp"
#include "ripforge/factorize.hpp"
#include "ripforge/image_io.hpp"
#include "ripforge/matrix_io.hpp"
#include "ripforge/parallel.hpp"
#include "ripforge/phantom.hpp"
#include "ripforge/recovery.hpp"
#include "ripforge/sparse_coding.hpp"
#include "ripforge/toml_lite.hpp"
#include "json.hpp"

namespace ripforge {

enum class DictSource { wavelet, ksvd, file };

inline std::string_view to_string(DictSource s) {
  switch (s) {
    case DictSource::wavelet: return "wavelet";
    case DictSource::ksvd: return "ksvd";
    case DictSource::file: return "file";
  }
  return "?";
}

inline DictSource parse_dict_source(std::string_view s) {
  if (s == "wavelet") return DictSource::wavelet;
  if (s == "ksvd") return DictSource::ksvd;
  if (s == "file") return DictSource::file;
  throw ConfigError("dictionary source must be wavelet, ksvd or file, got '" + std::string(s) + "'");
}

/// Sweep of recovery success against the number of measurements. The
/// dictionary is l x n: signals have length l, codes length n, and a ratio r
/// takes m = round(r n) of the l rows.
struct PhaseTransitionConfig {
  std::size_t n = 256;
  std::size_t l = 64;
  DictSource dict_source = DictSource::wavelet;
  std::size_t wavelet_levels = 3;
  std::string dict_path;   ///< RFMX matrix for DictSource::file
  std::string dict_image;  ///< training image for DictSource::ksvd (phantom if empty)
  std::size_t ksvd_stride = 4;
  std::size_t ksvd_sparsity = 8;
  std::size_t ksvd_iters = 10;
  EnsembleKind ensemble = EnsembleKind::gaussian;
  FactorMethod method = FactorMethod::spectral;
  std::vector<std::size_t> sparsity_levels{5};
  std::vector<double> cs_ratios{8 / 256.0,  16 / 256.0, 24 / 256.0, 32 / 256.0,
                                40 / 256.0, 48 / 256.0, 56 / 256.0, 64 / 256.0};
  std::size_t trials = 200;
  double success_l1_threshold = 2.56;  ///< n * 1e-2
  std::size_t cosamp_iters = 50;
  Seed base_seed = 1;
  std::size_t workers = 0;  ///< 0 = hardware concurrency

  /// Full-scale protocol: n = 1024, l = 128, 2,000 trials, k in
  /// {10, 12, 14}, five wavelet levels.
  static PhaseTransitionConfig full_scale() {
    PhaseTransitionConfig c;
    c.n = 1024;
    c.l = 128;
    c.wavelet_levels = 5;
    c.sparsity_levels = {10, 12, 14};
    c.cs_ratios.clear();
    for (std::size_t m = 16; m <= 128; m += 16) c.cs_ratios.push_back(m / 1024.0);
    c.trials = 2000;
    c.success_l1_threshold = 10.24;
    return c;
  }

  std::size_t measurements(double ratio) const {
    return static_cast<std::size_t>(std::lround(ratio * static_cast<double>(n)));
  }

  void validate() const {
    if (n == 0 || l == 0 || l > n) throw ConfigError("phase transition needs 1 <= l <= n");
    if (trials == 0) throw ConfigError("trials must be at least 1");
    if (sparsity_levels.empty() || cs_ratios.empty()) {
      throw ConfigError("sparsity_levels and cs_ratios must be non-empty");
    }
    for (double r : cs_ratios) {
      if (!(r > 0.0 && r <= 1.0)) throw ConfigError("CS ratios must lie in (0, 1]");
      const std::size_t m = measurements(r);
      if (m == 0 || m > l) {
        throw ConfigError("CS ratio " + std::to_string(r) + " asks for " + std::to_string(m) +
                          " measurements but only " + std::to_string(l) + " rows exist");
      }
    }
    for (std::size_t k : sparsity_levels) {
      if (k == 0 || k > n) throw ConfigError("sparsity levels must be in [1, n]");
    }
    if (!(success_l1_threshold > 0.0)) throw ConfigError("success threshold must be positive");
  }
};

/// Applies TOML keys (top level or under [phase]) over a base config.
inline PhaseTransitionConfig phase_config_from_toml(const toml::Table& t,
                                                    PhaseTransitionConfig c = {}) {
  static const char* kKeys[] = {"n",           "l",           "dict_source",   "wavelet_levels",
                                "dict_path",   "dict_image",  "ksvd_stride",   "ksvd_sparsity",
                                "ksvd_iters",  "ensemble",    "method",        "sparsity_levels",
                                "cs_ratios",   "trials",      "success_l1_threshold",
                                "cosamp_iters", "base_seed",  "workers",       "scale"};
  auto key = [&](const std::string& k) { return t.has("phase." + k) ? "phase." + k : k; };
  for (const auto& [k, v] : t.entries()) {
    const std::string bare = k.rfind("phase.", 0) == 0 ? k.substr(6) : k;
    if (std::find(std::begin(kKeys), std::end(kKeys), bare) == std::end(kKeys)) {
      throw ConfigError("unknown phase-transition key '" + k + "'");
    }
  }
  if (t.has(key("scale"))) {
    const std::string s = t.string(key("scale"));
    if (s == "full") {
      c = PhaseTransitionConfig::full_scale();
    } else if (s != "desk") {
      throw ConfigError("scale must be desk or full");
    }
  }
  auto count = [&](const char* k, std::size_t& out) {
    if (!t.has(key(k))) return;
    const std::int64_t v = t.integer(key(k));
    if (v < 0) throw ConfigError(std::string(k) + " must be non-negative");
    out = static_cast<std::size_t>(v);
  };
  const bool n_given = t.has(key("n"));
  count("n", c.n);
  count("l", c.l);
  count("wavelet_levels", c.wavelet_levels);
  count("ksvd_stride", c.ksvd_stride);
  count("ksvd_sparsity", c.ksvd_sparsity);
  count("ksvd_iters", c.ksvd_iters);
  count("trials", c.trials);
  count("cosamp_iters", c.cosamp_iters);
  count("workers", c.workers);
  if (t.has(key("dict_source"))) c.dict_source = parse_dict_source(t.string(key("dict_source")));
  c.dict_path = t.string_or(key("dict_path"), c.dict_path);
  c.dict_image = t.string_or(key("dict_image"), c.dict_image);
  if (t.has(key("ensemble"))) c.ensemble = parse_ensemble(t.string(key("ensemble")));
  if (t.has(key("method"))) c.method = parse_factor_method(t.string(key("method")));
  if (t.has(key("sparsity_levels"))) {
    c.sparsity_levels.clear();
    for (double v : t.numbers(key("sparsity_levels"))) {
      if (v < 1 || v != std::floor(v)) throw ConfigError("sparsity levels must be positive integers");
      c.sparsity_levels.push_back(static_cast<std::size_t>(v));
    }
  }
  if (t.has(key("cs_ratios"))) c.cs_ratios = t.numbers(key("cs_ratios"));
  if (t.has(key("success_l1_threshold"))) {
    c.success_l1_threshold = t.number(key("success_l1_threshold"));
  } else if (n_given) {
    c.success_l1_threshold = static_cast<double>(c.n) * 1e-2;
  }
  if (t.has(key("base_seed"))) c.base_seed = static_cast<Seed>(t.integer(key("base_seed")));
  return c;
}

enum class Arm { synthesis, benchmark };

inline std::string_view to_string(Arm a) { return a == Arm::synthesis ? "synthesis" : "benchmark"; }

inline Arm parse_arm(std::string_view s) {
  if (s == "synthesis") return Arm::synthesis;
  if (s == "benchmark") return Arm::benchmark;
  throw ParseError("unknown arm '" + std::string(s) + "'", 0);
}

struct PhasePoint {
  std::size_t k = 0;
  double ratio = 0.0;
  Arm arm = Arm::synthesis;
  double success_prob = 0.0;
  std::size_t trials = 0;
  Seed seed = 0;  ///< point seed; trial t uses derive(derive(seed, "trial"), t)
};

struct PointDiagnostics {
  std::size_t k = 0;
  double ratio = 0.0;
  std::size_t m = 0;
  double cond_G = 1.0;
  bool ill_conditioned = false;
  double seconds = 0.0;
};

struct ExperimentRecord {
  PhaseTransitionConfig config;
  std::string input_hash;  ///< SHA-1 of the config text and dictionary, git blob style
  std::vector<PhasePoint> points;
  std::vector<PointDiagnostics> diagnostics;
  double total_seconds = 0.0;
};

namespace detail {

inline std::string fmt_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// SHA-1 over "blob <len>\0<content>", as git names file contents.
inline std::string git_blob_hash(const std::string& content) {
  std::string blob = "blob " + std::to_string(content.size());
  blob.push_back('\0');
  blob += content;
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(blob.data(), blob.size(), md, &len, EVP_sha1(), nullptr) != 1) {
    throw IoError("SHA-1 digest failed");
  }
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) {
    out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  }
  return out.str();
}

inline std::string canonical_config(const PhaseTransitionConfig& c) {
  std::ostringstream s;
  s << "n=" << c.n << "\nl=" << c.l << "\ndict_source=" << to_string(c.dict_source)
    << "\nwavelet_levels=" << c.wavelet_levels << "\ndict_path=" << c.dict_path
    << "\ndict_image=" << c.dict_image << "\nksvd=" << c.ksvd_stride << "," << c.ksvd_sparsity
    << "," << c.ksvd_iters << "\nensemble=" << to_string(c.ensemble)
    << "\nmethod=" << to_string(c.method) << "\nsparsity_levels=";
  for (std::size_t k : c.sparsity_levels) s << k << ",";
  s << "\ncs_ratios=";
  for (double r : c.cs_ratios) s << fmt_full(r) << ",";
  s << "\ntrials=" << c.trials << "\nthreshold=" << fmt_full(c.success_l1_threshold)
    << "\ncosamp_iters=" << c.cosamp_iters << "\nbase_seed=" << c.base_seed << "\n";
  return s.str();
}

}  // namespace detail

/// The l x n dictionary a config describes.
inline Mat phase_dictionary(const PhaseTransitionConfig& cfg) {
  switch (cfg.dict_source) {
    case DictSource::wavelet:
      return cdf97_dictionary(cfg.l, cfg.wavelet_levels, cfg.n, derive(cfg.base_seed, "dictionary"))
          .D;
    case DictSource::file: {
      Mat d = io::read_real(cfg.dict_path);
      if (d.rows() != cfg.l || d.cols() != cfg.n) {
        throw ConfigError("dictionary file is " + detail::shape_str(d.rows(), d.cols()) + ", config says " +
                          detail::shape_str(cfg.l, cfg.n));
      }
      return normalize_columns(std::move(d));
    }
    case DictSource::ksvd: {
      const auto side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(cfg.l))));
      if (side * side != cfg.l) throw ConfigError("K-SVD dictionaries need l to be a perfect square");
      const Mat img = cfg.dict_image.empty() ? make_phantom(256, 256)
                                             : io::read_image(cfg.dict_image).pixels;
      const PatchSet p = extract_patches(img, side, side, cfg.ksvd_stride, cfg.ksvd_stride);
      KsvdOptions o;
      o.atoms = cfg.n;
      o.sparsity = cfg.ksvd_sparsity;
      o.iterations = cfg.ksvd_iters;
      o.seed = derive(cfg.base_seed, "dictionary");
      return ksvd_learn(p.patches, o).D;
    }
  }
  throw ConfigError("unknown dictionary source");
}

inline Seed point_seed(Seed base, std::size_t k, std::size_t ratio_index) {
  return derive(derive(base, static_cast<std::uint64_t>(k)), static_cast<std::uint64_t>(ratio_index));
}

/// k-sparse code: support uniform without replacement, values uniform on [-1, 1].
inline Vec draw_sparse_signal(std::size_t n, std::size_t k, Seed seed) {
  Rng rng(seed);
  Vec x(n, 0.0);
  for (std::size_t j : sample_without_replacement(k, n, rng)) x[j] = rng.uniform(-1.0, 1.0);
  return x;
}

/// For every (k, ratio): one ensemble draw, row selection and factorization,
/// then `trials` shared signals recovered through both the factorized
/// operator S D and the plain E A benchmark. Success is
/// ||x_hat - x||_1 < threshold.
inline ExperimentRecord run_phase_transition(const PhaseTransitionConfig& cfg,
                                             const Mat* dictionary = nullptr) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentRecord rec;
  rec.config = cfg;
  const Mat d = dictionary ? *dictionary : phase_dictionary(cfg);
  if (d.rows() != cfg.l || d.cols() != cfg.n) {
    throw DimensionError("dictionary is " + detail::shape_str(d.rows(), d.cols()) + ", config says " +
                         detail::shape_str(cfg.l, cfg.n));
  }
  {
    const std::vector<unsigned char> bytes = io::encode(d);
    rec.input_hash = detail::git_blob_hash(detail::canonical_config(cfg) +
                                           std::string(bytes.begin(), bytes.end()));
  }
  for (std::size_t k : cfg.sparsity_levels) {
    for (std::size_t ri = 0; ri < cfg.cs_ratios.size(); ++ri) {
      const auto p0 = std::chrono::steady_clock::now();
      const double ratio = cfg.cs_ratios[ri];
      const std::size_t m = cfg.measurements(ratio);
      const Seed ps = point_seed(cfg.base_seed, k, ri);
      const Mat a = draw_ensemble(cfg.ensemble, cfg.l, cfg.n, derive(ps, "ensemble"));
      const RowSelector sel = draw_row_selector(m, cfg.l, derive(ps, "selector"));
      const Factorization fact = factorize(cfg.method, d, a);
      const SensingSystem sys = build_sensing(fact, d, sel);
      const Mat bench = sel.apply(a);
      SparseRecoveryConfig rc;
      rc.k = k;
      rc.max_iters = cfg.cosamp_iters;

      std::vector<unsigned char> ok_syn(cfg.trials), ok_bench(cfg.trials);
      const Seed trial_root = derive(ps, "trial");
      parallel_for(cfg.trials, cfg.workers, [&](std::size_t t) {
        const Vec x = draw_sparse_signal(cfg.n, k, derive(trial_root, t));
        auto success = [&](const Mat& phi) {
          const RecoveryResult r = cosamp(phi, matvec(phi, x), rc);
          double err = 0.0;
          for (std::size_t j = 0; j < x.size(); ++j) err += std::abs(r.estimate[j] - x[j]);
          return err < cfg.success_l1_threshold;
        };
        ok_syn[t] = success(sys.composed);
        ok_bench[t] = success(bench);
      });
      const auto frac = [&](const std::vector<unsigned char>& v) {
        std::size_t s = 0;
        for (unsigned char b : v) s += b;
        return static_cast<double>(s) / static_cast<double>(cfg.trials);
      };
      rec.points.push_back({k, ratio, Arm::synthesis, frac(ok_syn), cfg.trials, ps});
      rec.points.push_back({k, ratio, Arm::benchmark, frac(ok_bench), cfg.trials, ps});
      rec.diagnostics.push_back(
          {k, ratio, m, sys.cond_G, sys.ill_conditioned,
           std::chrono::duration<double>(std::chrono::steady_clock::now() - p0).count()});
    }
  }
  rec.total_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

// ------------------------------------------------------------ persistence

inline constexpr const char* kPhaseCsvHeader = "k,ratio,arm,success_prob,trials,seed";

/// Deterministic CSV: no timing fields, full double precision.
inline std::string phase_csv(const std::vector<PhasePoint>& points) {
  std::string out = std::string(kPhaseCsvHeader) + "\n";
  for (const PhasePoint& p : points) {
    out += std::to_string(p.k) + "," + detail::fmt_full(p.ratio) + "," +
           std::string(to_string(p.arm)) + "," + detail::fmt_full(p.success_prob) + "," +
           std::to_string(p.trials) + "," + std::to_string(p.seed) + "\n";
  }
  return out;
}

inline std::vector<PhasePoint> parse_phase_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t offset = 0;
  if (!std::getline(in, line) || line != kPhaseCsvHeader) {
    throw ParseError("phase CSV: unexpected header", 0);
  }
  offset += line.size() + 1;
  std::vector<PhasePoint> out;
  while (std::getline(in, line)) {
    if (line.empty()) {
      offset += 1;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 6) throw ParseError("phase CSV: expected 6 fields", offset);
    try {
      PhasePoint p;
      p.k = std::stoull(f[0]);
      p.ratio = std::stod(f[1]);
      p.arm = parse_arm(f[2]);
      p.success_prob = std::stod(f[3]);
      p.trials = std::stoull(f[4]);
      p.seed = std::stoull(f[5]);
      out.push_back(p);
    } catch (const ParseError&) {
      throw ParseError("phase CSV: unknown arm", offset);
    } catch (const std::exception&) {
      throw ParseError("phase CSV: bad number", offset);
    }
    offset += line.size() + 1;
  }
  return out;
}

/// Metadata sidecar: config, input hash, per-point diagnostics, timings.
inline std::string phase_json(const ExperimentRecord& rec) {
  const PhaseTransitionConfig& c = rec.config;
  nlohmann::json j;
  j["config"] = {{"n", c.n},
                 {"l", c.l},
                 {"dict_source", to_string(c.dict_source)},
                 {"wavelet_levels", c.wavelet_levels},
                 {"dict_path", c.dict_path},
                 {"dict_image", c.dict_image},
                 {"ensemble", to_string(c.ensemble)},
                 {"method", to_string(c.method)},
                 {"sparsity_levels", c.sparsity_levels},
                 {"cs_ratios", c.cs_ratios},
                 {"trials", c.trials},
                 {"success_l1_threshold", c.success_l1_threshold},
                 {"cosamp_iters", c.cosamp_iters},
                 {"base_seed", c.base_seed}};
  j["input_hash"] = rec.input_hash;
  j["points"] = nlohmann::json::array();
  for (const PhasePoint& p : rec.points) {
    j["points"].push_back({{"k", p.k},
                           {"ratio", p.ratio},
                           {"arm", to_string(p.arm)},
                           {"success_prob", p.success_prob},
                           {"trials", p.trials},
                           {"seed", p.seed}});
  }
  j["diagnostics"] = nlohmann::json::array();
  for (const PointDiagnostics& d : rec.diagnostics) {
    j["diagnostics"].push_back({{"k", d.k},
                                {"ratio", d.ratio},
                                {"m", d.m},
                                {"cond_G", d.cond_G},
                                {"ill_conditioned", d.ill_conditioned},
                                {"seconds", d.seconds}});
  }
  j["total_seconds"] = rec.total_seconds;
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  j["finished_at"] = stamp;
  return j.dump(2) + "\n";
}

/// Line chart of success probability against CS ratio (%), one polyline per
/// (k, arm).
inline std::string phase_svg(const std::vector<PhasePoint>& points) {
  constexpr double W = 640, H = 420, L = 70, R = 170, T = 30, B = 60;
  double xmax = 0.0;
  for (const PhasePoint& p : points) xmax = std::max(xmax, 100.0 * p.ratio);
  if (xmax <= 0.0) xmax = 1.0;
  auto px = [&](double ratio) { return L + (W - L - R) * (100.0 * ratio) / xmax; };
  auto py = [&](double prob) { return H - B - (H - T - B) * prob; };
  std::ostringstream s;
  s << std::fixed << std::setprecision(2);
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double v = i / 5.0;
    s << "<text x=\"" << L - 8 << "\" y=\"" << py(v) + 4 << "\" font-size=\"11\" text-anchor=\"end\">"
      << std::setprecision(1) << v << std::setprecision(2) << "</text>\n";
    const double xr = xmax * i / 5.0;
    s << "<text x=\"" << px(xr / 100.0) << "\" y=\"" << H - B + 16
      << "\" font-size=\"11\" text-anchor=\"middle\">" << std::setprecision(1) << xr
      << std::setprecision(2) << "</text>\n";
  }
  s << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 18
    << "\" font-size=\"13\" text-anchor=\"middle\">CS ratio (%)</text>\n";
  s << "<text x=\"18\" y=\"" << (T + H - B) / 2 << "\" font-size=\"13\" text-anchor=\"middle\" "
    << "transform=\"rotate(-90 18 " << (T + H - B) / 2 << ")\">Probability of success</text>\n";

  std::map<std::pair<std::size_t, int>, std::vector<const PhasePoint*>> curves;
  std::map<std::size_t, std::size_t> k_index;
  for (const PhasePoint& p : points) {
    curves[{p.k, static_cast<int>(p.arm)}].push_back(&p);
    k_index.emplace(p.k, k_index.size());
  }
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::size_t idx = 0;
  for (auto& [key, pts] : curves) {
    std::sort(pts.begin(), pts.end(), [](auto* a, auto* b) { return a->ratio < b->ratio; });
    const char* color = kColors[k_index[key.first] % 6];
    const bool dashed = key.second == static_cast<int>(Arm::benchmark);
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\""
      << (dashed ? " stroke-dasharray=\"6 4\"" : "") << " data-k=\"" << key.first
      << "\" data-arm=\"" << to_string(static_cast<Arm>(key.second)) << "\" points=\"";
    for (const PhasePoint* p : pts) s << px(p->ratio) << "," << py(p->success_prob) << " ";
    s << "\"/>\n";
    for (const PhasePoint* p : pts) {
      s << "<circle cx=\"" << px(p->ratio) << "\" cy=\"" << py(p->success_prob)
        << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    const double ly = T + 16 * static_cast<double>(idx);
    s << "<text x=\"" << W - R + 12 << "\" y=\"" << ly + 4 << "\" font-size=\"11\" fill=\"" << color
      << "\">k=" << key.first << " " << to_string(static_cast<Arm>(key.second)) << "</text>\n";
    ++idx;
  }
  s << "</svg>\n";
  return s.str();
}

/// Writes <stem>.csv, <stem>.json and <stem>.svg.
inline void write_phase_outputs(const ExperimentRecord& rec, const std::string& stem) {
  auto put = [](const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << text;
    if (!out) throw IoError("write failed: " + path);
  };
  put(stem + ".csv", phase_csv(rec.points));
  put(stem + ".json", phase_json(rec));
  put(stem + ".svg", phase_svg(rec.points));
}

}  // namespace ripforge
