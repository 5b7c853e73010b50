// rip-forge: command-line front end for factorization, dictionaries, phase
// transition sweeps, MRI reconstruction and plotting.
//
// Exit codes: 0 success, 2 bad configuration or input, 3 numerical failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "ripforge/ripforge.hpp"

namespace fs = std::filesystem;
using namespace ripforge;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

std::string full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

// ------------------------------------------------------------ factorize

struct FactorizeArgs {
  std::string dict, out = "factors";
  std::string ensemble = "gaussian", method = "spectral";
  Seed seed = 1;
};

int run_factorize(const FactorizeArgs& a) {
  const Mat d = io::read_real(a.dict);
  const Mat ens = draw_ensemble(parse_ensemble(a.ensemble), d.rows(), d.cols(), a.seed);
  const Factorization f = factorize(parse_factor_method(a.method), d, ens);
  const fs::path out(a.out);
  fs::create_directories(out);
  io::write_bytes((out / "G.rfmx").string(), io::encode(f.G));
  io::write_bytes((out / "G_inv.rfmx").string(), io::encode(f.G_inv));
  io::write_bytes((out / "A.rfmx").string(), io::encode(f.A));
  io::write_bytes((out / "H.rfmx").string(), io::encode(f.H));
  const nlohmann::json j = {{"dict", a.dict},
                            {"shape", {d.rows(), d.cols()}},
                            {"ensemble", a.ensemble},
                            {"method", to_string(f.method)},
                            {"seed", a.seed},
                            {"residual", f.residual},
                            {"orth_defect", f.orth_defect},
                            {"cond_G", f.cond_G},
                            {"rank", f.rank}};
  write_text(out / "factorization.json", j.dump(2) + "\n");
  std::cout << "residual " << f.residual << "  orth_defect " << f.orth_defect << "  cond_G "
            << f.cond_G << "\n";
  return 0;
}

// ----------------------------------------------------------------- dict

struct WaveletArgs {
  std::size_t len = 64, levels = 3, cols = 256;
  Seed seed = 1;
  std::string out = "dictionary.rfmx";
};

int run_build_wavelet(const WaveletArgs& a) {
  const WaveletDict w = cdf97_dictionary(a.len, a.levels, a.cols, a.seed);
  ensure_parent(a.out);
  io::write_bytes(a.out, io::encode(w.D));
  std::cout << "wrote " << w.D.rows() << "x" << w.D.cols() << " dictionary (" << w.highpass_cols.size()
            << " wavelet atoms) to " << a.out << "\n";
  return 0;
}

struct KsvdArgs {
  std::string image, out = "dictionary.rfmx";
  std::size_t patch = 16, stride = 4, atoms = 1024, sparsity = 64, iters = 50;
  Seed seed = 1;
};

int run_learn_ksvd(const KsvdArgs& a) {
  const Mat img = io::read_image(a.image).pixels;
  const PatchSet p = extract_patches(img, a.patch, a.patch, a.stride, a.stride);
  KsvdOptions o;
  o.atoms = a.atoms;
  o.sparsity = a.sparsity;
  o.iterations = a.iters;
  o.seed = a.seed;
  const KsvdResult r = ksvd_learn(p.patches, o);
  ensure_parent(a.out);
  io::write_bytes(a.out, io::encode(r.D));
  std::string trace = "iteration,mse\n";
  for (std::size_t i = 0; i < r.error_trace.size(); ++i) {
    trace += std::to_string(i) + "," + full(r.error_trace[i]) + "\n";
  }
  write_text(fs::path(a.out).replace_extension(".trace.csv"), trace);
  std::cout << p.count() << " patches, " << r.D.cols() << " atoms, final mse "
            << (r.error_trace.empty() ? 0.0 : r.error_trace.back()) << "\n";
  return 0;
}

// ---------------------------------------------------------------- phase

struct PhaseArgs {
  std::string config, scale = "desk", ensemble, method, dict_source, dict, dict_image;
  std::vector<std::size_t> k;
  std::vector<double> ratios;
  std::size_t n = 0, l = 0, levels = 0, trials = 0, workers = 0;
  double threshold = 0.0;
  Seed seed = 1;
  std::string out = "phase";
};

int run_phase(const PhaseArgs& a, const CLI::App& cmd) {
  auto given = [&](const char* name) { return cmd.count(name) > 0; };
  PhaseTransitionConfig c;
  if (given("--scale")) {
    if (a.scale == "full") {
      c = PhaseTransitionConfig::full_scale();
    } else if (a.scale != "desk") {
      throw ConfigError("scale must be desk or full");
    }
  }
  if (!a.config.empty()) c = phase_config_from_toml(toml::parse_file(a.config), c);
  if (given("--n")) {
    c.n = a.n;
    if (!given("--threshold")) c.success_l1_threshold = static_cast<double>(a.n) * 1e-2;
  }
  if (given("--l")) c.l = a.l;
  if (given("--levels")) c.wavelet_levels = a.levels;
  if (given("--ensemble")) c.ensemble = parse_ensemble(a.ensemble);
  if (given("--method")) c.method = parse_factor_method(a.method);
  if (given("--dict-source")) c.dict_source = parse_dict_source(a.dict_source);
  if (given("--dict")) {
    c.dict_path = a.dict;
    if (!given("--dict-source")) c.dict_source = DictSource::file;
  }
  if (given("--dict-image")) c.dict_image = a.dict_image;
  if (given("--k")) c.sparsity_levels = a.k;
  if (given("--ratios")) c.cs_ratios = a.ratios;
  if (given("--trials")) c.trials = a.trials;
  if (given("--threshold")) c.success_l1_threshold = a.threshold;
  if (given("--seed")) c.base_seed = a.seed;
  if (given("--workers")) c.workers = a.workers;

  const ExperimentRecord r = run_phase_transition(c);
  ensure_parent(a.out);
  write_phase_outputs(r, a.out);
  for (const PhasePoint& p : r.points) {
    std::printf("k=%-3zu ratio=%6.2f%%  %-9s  %.3f\n", p.k, 100.0 * p.ratio,
                std::string(to_string(p.arm)).c_str(), p.success_prob);
  }
  std::printf("%.1f s, input hash %s\n", r.total_seconds, r.input_hash.c_str());
  return 0;
}

// ------------------------------------------------------------------ mri

struct MriArgs {
  std::string image, kspace, method = "proposed", params, out_dir = "mri_out";
  int accel = 4;
  Seed seed = 1;
};

std::string admm_trace_csv(const AdmmResult& r) {
  std::string s = "iteration,fit,residual_left,residual_right,lagrangian\n";
  for (std::size_t i = 0; i < r.trace.size(); ++i) {
    const AdmmTraceRow& t = r.trace[i];
    s += std::to_string(i) + "," + full(t.fit) + "," + full(t.residual_left) + "," +
         full(t.residual_right) + "," + full(t.lagrangian) + "\n";
  }
  return s;
}

std::string objective_csv(const std::vector<double>& trace) {
  std::string s = "iteration,objective\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    s += std::to_string(i) + "," + full(trace[i]) + "\n";
  }
  return s;
}

int run_mri_recover(const MriArgs& a) {
  if (a.image.empty() == a.kspace.empty()) {
    throw ConfigError("give exactly one of --image and --kspace");
  }
  const MriMethod method = parse_mri_method(a.method);
  const MriParams params = load_mri_params(a.params);
  const MriInput in = load_mri_input(a.image.empty() ? a.kspace : a.image);
  const AccelMask mask = benchmark_mask(in.kspace.rows(), a.accel, derive(a.seed, "mask"));
  const CMat y = detail::keep_rows(in.kspace, mask.selected);
  const MriRun run = reconstruct(method, y, mask, params, derive(a.seed, "pipeline"));

  const fs::path out(a.out_dir);
  fs::create_directories(out);
  const std::string stem = in.name + "_" + std::to_string(a.accel) + "x_" + std::string(to_string(method));
  io::write_image((out / (stem + ".png")).string(), run.image, 16);
  io::write_bytes((out / (stem + "_image.rfmx")).string(), io::encode(run.image));
  if (run.proposed) {
    const MriReconstruction& r = *run.proposed;
    io::write_bytes((out / (stem + "_coeffs.rfmx")).string(), io::encode(r.X.X));
    write_text(out / (stem + "_fista.csv"), objective_csv(r.solve.objective_trace));
    const MriFactors& f = r.factors;
    if (f.fit_G_R) write_text(out / (stem + "_admm_G_R.csv"), admm_trace_csv(*f.fit_G_R));
    if (f.fit_G_I) write_text(out / (stem + "_admm_G_I.csv"), admm_trace_csv(*f.fit_G_I));
    if (f.fit_H_R) write_text(out / (stem + "_admm_H_R.csv"), admm_trace_csv(*f.fit_H_R));
    if (f.fit_H_I) write_text(out / (stem + "_admm_H_I.csv"), admm_trace_csv(*f.fit_H_I));
  }
  if (run.tv) write_text(out / (stem + "_tv.csv"), objective_csv(run.tv->objective_trace));

  const double p = psnr(in.reference, run.image);
  const double s = ssim(in.reference, run.image);
  const nlohmann::json j = {{"input", a.image.empty() ? a.kspace : a.image},
                            {"method", to_string(method)},
                            {"accel", a.accel},
                            {"seed", a.seed},
                            {"rows_sampled", mask.count()},
                            {"psnr", finite_or_string(p)},
                            {"ssim", finite_or_string(s)},
                            {"params", mri_params_json(params)}};
  write_text(out / (stem + "_metrics.json"), j.dump(2) + "\n");
  std::printf("%s %dx %s: PSNR %.2f dB  SSIM %.4f\n", in.name.c_str(), a.accel,
              std::string(to_string(method)).c_str(), p, s);
  return 0;
}

struct BenchArgs {
  std::vector<std::string> images;
  std::vector<int> accels{4, 8};
  std::vector<std::string> methods{"proposed", "tv", "zero-fill"};
  std::string params, out_dir = "mri_bench";
  Seed seed = 1;
};

int run_mri_bench(const BenchArgs& a) {
  std::vector<MriMethod> methods;
  for (const std::string& m : a.methods) methods.push_back(parse_mri_method(m));
  const MriBenchmark b =
      run_mri_benchmark(a.images, a.accels, methods, load_mri_params(a.params), a.seed, a.out_dir);
  std::cout << mri_csv(b);
  for (const MriMetricRow& r : b.rows) {
    if (!r.ok) std::cerr << "failed: " << r.image << " " << r.accel << "x " << to_string(r.method)
                         << ": " << r.error << "\n";
  }
  return 0;
}

// ----------------------------------------------------------------- plot

int run_plot(const std::string& csv, const std::string& out) {
  std::ifstream in(csv, std::ios::binary);
  if (!in) throw IoError("cannot open " + csv);
  std::ostringstream s;
  s << in.rdbuf();
  const std::vector<PhasePoint> pts = parse_phase_csv(s.str());
  if (pts.empty()) throw ConfigError(csv + " holds no points");
  const std::string target = out.empty() ? fs::path(csv).replace_extension(".svg").string() : out;
  ensure_parent(target);
  write_text(target, phase_svg(pts));
  std::cout << "wrote " << target << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rip-forge: RIP-preserving sensing factorizations and experiments"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  FactorizeArgs fa;
  auto* fac = app.add_subcommand("factorize", "Factor a dictionary as G A H for a drawn ensemble A");
  fac->add_option("--dict", fa.dict, "Dictionary (RFMX)")->required()->check(CLI::ExistingFile);
  fac->add_option("--ensemble", fa.ensemble)->check(CLI::IsMember({"gaussian", "bernoulli"}));
  fac->add_option("--method", fa.method)->check(CLI::IsMember({"spectral", "range", "tight"}));
  fac->add_option("--seed", fa.seed);
  fac->add_option("--out", fa.out, "Output directory");

  auto* dict = app.add_subcommand("dict", "Build or learn sparsifying dictionaries");
  dict->require_subcommand(1);
  WaveletArgs wa;
  auto* wav = dict->add_subcommand("build-wavelet", "CDF 9/7 shift dictionary plus Gaussian columns");
  wav->add_option("--len", wa.len, "Signal length");
  wav->add_option("--levels", wa.levels);
  wav->add_option("--cols", wa.cols, "Total columns");
  wav->add_option("--seed", wa.seed);
  wav->add_option("--out", wa.out);
  KsvdArgs ka;
  auto* ks = dict->add_subcommand("learn-ksvd", "Learn a patch dictionary with K-SVD");
  ks->add_option("--image", ka.image)->required()->check(CLI::ExistingFile);
  ks->add_option("--patch", ka.patch, "Patch side");
  ks->add_option("--stride", ka.stride);
  ks->add_option("--atoms", ka.atoms);
  ks->add_option("--sparsity", ka.sparsity);
  ks->add_option("--iters", ka.iters);
  ks->add_option("--seed", ka.seed);
  ks->add_option("--out", ka.out);

  PhaseArgs pa;
  auto* ph = app.add_subcommand("phase", "Recovery probability against CS ratio, both arms");
  ph->add_option("--config", pa.config, "TOML config; flags override it")->check(CLI::ExistingFile);
  ph->add_option("--scale", pa.scale, "desk or full defaults")->check(CLI::IsMember({"desk", "full"}));
  ph->add_option("--n", pa.n, "Code length");
  ph->add_option("--l", pa.l, "Signal length (dictionary rows)");
  ph->add_option("--levels", pa.levels, "Wavelet levels");
  ph->add_option("--ensemble", pa.ensemble);
  ph->add_option("--method", pa.method, "Factorization: spectral, range or tight");
  ph->add_option("--dict-source", pa.dict_source, "wavelet, ksvd or file");
  ph->add_option("--dict", pa.dict, "Dictionary file (RFMX)");
  ph->add_option("--dict-image", pa.dict_image, "Training image for ksvd");
  ph->add_option("--k", pa.k, "Sparsity levels")->delimiter(',');
  ph->add_option("--ratios", pa.ratios, "CS ratios m/n")->delimiter(',');
  ph->add_option("--trials", pa.trials);
  ph->add_option("--threshold", pa.threshold, "l1 success threshold (default n/100)");
  ph->add_option("--seed", pa.seed);
  ph->add_option("--workers", pa.workers, "0 = all cores");
  ph->add_option("--out", pa.out, "Output stem for .csv/.json/.svg");

  auto* mri = app.add_subcommand("mri", "Undersampled MRI reconstruction");
  mri->require_subcommand(1);
  MriArgs ma;
  auto* rec = mri->add_subcommand("recover", "Reconstruct one image or k-space file");
  rec->add_option("--image", ma.image, "Fully sampled image (PGM/PNG) or phantom:<n>");
  rec->add_option("--kspace", ma.kspace, "Fully sampled complex k-space (RFMX)");
  rec->add_option("--accel", ma.accel, "1 (full), 4 or 8")->check(CLI::IsMember({1, 4, 8}));
  rec->add_option("--seed", ma.seed);
  rec->add_option("--method", ma.method)->check(CLI::IsMember({"proposed", "tv", "zero-fill"}));
  rec->add_option("--params", ma.params, "TOML parameter file")->check(CLI::ExistingFile);
  rec->add_option("--out-dir", ma.out_dir);
  BenchArgs ba;
  auto* bench = mri->add_subcommand("bench", "Metrics table over images, accelerations and methods");
  bench->add_option("--images", ba.images, "Images, k-space files or phantom:<n>")
      ->required()
      ->delimiter(',');
  bench->add_option("--accels", ba.accels)->delimiter(',');
  bench->add_option("--methods", ba.methods)->delimiter(',');
  bench->add_option("--params", ba.params)->check(CLI::ExistingFile);
  bench->add_option("--seed", ba.seed);
  bench->add_option("--out-dir", ba.out_dir);

  std::string plot_csv, plot_out;
  auto* plot = app.add_subcommand("plot", "SVG line chart from a phase-transition CSV");
  plot->add_option("csv", plot_csv)->required()->check(CLI::ExistingFile);
  plot->add_option("--out", plot_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*fac) return run_factorize(fa);
    if (*wav) return run_build_wavelet(wa);
    if (*ks) return run_learn_ksvd(ka);
    if (*ph) return run_phase(pa, *ph);
    if (*rec) return run_mri_recover(ma);
    if (*bench) return run_mri_bench(ba);
    if (*plot) return run_plot(plot_csv, plot_out);
  } catch (const Error& e) {
    std::cerr << "rip-forge: " << e.what() << "\n";
    return e.is_numerical() ? kExitNumerical : kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "rip-forge: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
