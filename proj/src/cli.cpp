#include "rds/cli.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rds/bifurcate.hpp"
#include "rds/error.hpp"
#include "rds/escape.hpp"
#include "rds/kernel.hpp"
#include "rds/parallel.hpp"
#include "rds/represent.hpp"
#include "rds/rotation.hpp"
#include "rds/spectral.hpp"
#include "rds/stationary.hpp"
#include "rds/transfer.hpp"

namespace rds {

namespace {

namespace fs = std::filesystem;

const std::vector<std::string> kSubcommands = {"density", "spectrum", "support",  "kernel", "escape",
                                               "rotation", "sweep",   "represent", "matrix"};

std::string default_out(const std::string& sub) {
  if (sub == "spectrum") return "spec.csv";
  if (sub == "kernel") return "slice.csv";
  if (sub == "rotation") return "rho.csv";
  if (sub == "represent") return "repmap.csv";
  return sub + ".csv";
}

std::string sibling(const std::string& path, const std::string& suffix) {
  fs::path p(path);
  p.replace_extension();
  return p.string() + suffix;
}

void check_writable(const std::string& key, const std::string& path) {
  fs::path dir = fs::path(path).parent_path();
  if (dir.empty()) dir = ".";
  if (!fs::is_directory(dir) || ::access(dir.c_str(), W_OK) != 0)
    throw Error(ErrorKind::UsageError, key + ": directory of '" + path + "' is not writable");
}

std::string real_text(double v) { return csv_real(v); }

std::vector<std::pair<std::string, std::string>> echo_of(const RunConfig& c) {
  std::string window;
  for (const auto& w : c.window) window += (window.empty() ? "" : ",") + real_text(w.lo) + ":" + real_text(w.hi);
  return {
      {"subcommand", c.subcommand},
      {"map", c.map},
      {"noise", c.noise},
      {"a", c.a_given ? real_text(c.a) : "default"},
      {"eps", real_text(c.eps)},
      {"sigma", real_text(c.sigma)},
      {"lambda", real_text(c.lambda)},
      {"lower", real_text(c.lower)},
      {"upper", real_text(c.upper)},
      {"grid", std::to_string(c.grid)},
      {"quadrature", std::to_string(c.quadrature)},
      {"k", std::to_string(c.k)},
      {"a-min", real_text(c.a_min)},
      {"a-max", real_text(c.a_max)},
      {"steps", std::to_string(c.steps)},
      {"x", real_text(c.x)},
      {"x0", real_text(c.x0)},
      {"window", window},
      {"method", c.method},
      {"mc", std::to_string(c.mc)},
      {"start", c.start},
      {"max-steps", std::to_string(c.max_steps)},
      {"n-iter", std::to_string(c.n_iter)},
      {"seed", std::to_string(c.seed)},
      {"k-max", std::to_string(c.k_max)},
      {"l-max", std::to_string(c.l_max)},
      {"resolution", real_text(c.resolution)},
      {"detectors", c.detectors ? "true" : "false"},
      {"kernel", c.kernel},
      {"probe-x", real_text(c.probe_x)},
      {"mu-points", std::to_string(c.mu_points)},
      {"out", c.out},
      {"events", c.events},
      {"manifest", c.manifest},
      {"plot", c.plot},
  };
}

bool sweeps_parameter(const std::string& sub) { return sub == "rotation" || sub == "sweep"; }

class Csv {
 public:
  Csv(const std::string& path, RunManifest& manifest) : path_(path), f_(path, std::ios::binary) {
    if (!f_) throw Error(ErrorKind::UsageError, "cannot open '" + path + "' for writing");
    manifest.outputs.push_back(path);
  }
  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) f_ << (i ? "," : "") << csv_field(fields[i]);
    f_ << '\n';
  }
  ~Csv() { f_.flush(); }

 private:
  std::string path_;
  std::ofstream f_;
};

class Stage {
 public:
  Stage(RunManifest& m, std::string name) : m_(m), name_(std::move(name)), t0_(std::chrono::steady_clock::now()) {}
  ~Stage() {
    const auto dt = std::chrono::steady_clock::now() - t0_;
    m_.timings.push_back({name_, std::chrono::duration<double>(dt).count()});
  }

 private:
  RunManifest& m_;
  std::string name_;
  std::chrono::steady_clock::time_point t0_;
};

void write_text(const std::string& path, const std::string& text, RunManifest& manifest) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::UsageError, "cannot open '" + path + "' for writing");
  f << text;
  manifest.outputs.push_back(path);
}

std::string plot_header(const std::string& title) {
  return "set datafile separator ','\nset key autotitle columnhead\nset title '" + title + "'\n";
}

void add_notes(RunManifest& m, const std::string& where, const std::vector<std::string>& notes) {
  for (const auto& n : notes) m.warnings.push_back(where + ": " + n);
}

void run_density(const RunConfig& c, RunManifest& man) {
  const RandomMap1D map = map_of(c);
  const Grid grid(map.space(), c.grid);
  UlamMatrix m = [&] {
    Stage s(man, "ulam");
    return build_ulam(map, grid, c.quadrature);
  }();
  add_notes(man, "ulam", m.notes());
  SpectralSet spec = [&] {
    Stage s(man, "eigen");
    return eigen(m, c.k);
  }();
  add_notes(man, "eigen", spec.notes);
  const auto dens = stationary_densities(spec);
  std::vector<double> phi(grid.size(), 0.0);
  for (const auto& d : dens)
    for (std::size_t i = 0; i < phi.size(); ++i) phi[i] += d[i] / static_cast<double>(dens.size());
  if (dens.size() > 1)
    man.warnings.push_back(std::to_string(dens.size()) + " ergodic densities; phi is their equal-weight mixture");
  man.metrics.push_back({"m", static_cast<double>(dens.size())});
  man.metrics.push_back({"eta", spec.eta});
  Csv csv(c.out, man);
  csv.row({"x", "phi"});
  for (std::size_t i = 0; i < grid.size(); ++i) csv.row({csv_real(grid.mid(i)), csv_real(phi[i])});
  write_text(c.plot,
             plot_header("stationary density") + "set xlabel 'x'\nset ylabel 'phi'\nplot '" +
                 fs::path(c.out).filename().string() + "' using 1:2 with lines\n",
             man);
}

void run_spectrum(const RunConfig& c, RunManifest& man) {
  const RandomMap1D map = map_of(c);
  const Grid grid(map.space(), c.grid);
  UlamMatrix m = [&] {
    Stage s(man, "ulam");
    return build_ulam(map, grid, c.quadrature);
  }();
  add_notes(man, "ulam", m.notes());
  SpectralSet spec = [&] {
    Stage s(man, "eigen");
    return eigen(m, c.k);
  }();
  add_notes(man, "eigen", spec.notes);
  man.metrics.push_back({"eta", spec.eta});
  man.metrics.push_back({"unit_multiplicity", static_cast<double>(spec.unit_multiplicity)});
  Csv csv(c.out, man);
  csv.row({"re", "im", "modulus", "group"});
  // group 0 is the peripheral spectrum, then one group per distinct modulus
  std::size_t group = 0;
  double last = 0.0;
  for (std::size_t i = 0; i < spec.eigenvalues.size(); ++i) {
    const cplx z = spec.eigenvalues[i];
    const double r = std::abs(z);
    const bool peripheral = r >= 1.0 - spec.tol_unit;
    if (!peripheral && (i == 0 || std::abs(r - last) > 1e-8 || last >= 1.0 - spec.tol_unit)) ++group;
    last = r;
    csv.row({csv_real(z.real()), csv_real(z.imag()), csv_real(r), std::to_string(peripheral ? 0 : group)});
  }
}

void run_support(const RunConfig& c, RunManifest& man) {
  const RandomMap1D map = map_of(c);
  const Grid grid(map.space(), c.grid);
  std::vector<Interval> parts;
  if (c.method == "setvalued") {
    Stage s(man, "setvalued");
    parts = set_valued_support(map, c.grid);
    if (parts.empty()) man.warnings.push_back("deterministic map: empty set-valued support");
  } else {
    UlamMatrix m = [&] {
      Stage s(man, "ulam");
      return build_ulam(map, grid, c.quadrature);
    }();
    add_notes(man, "ulam", m.notes());
    Stage s(man, "eigen");
    SpectralSet spec = eigen(m, c.k);
    add_notes(man, "eigen", spec.notes);
    for (const auto& d : stationary_densities(spec)) {
      const SupportSet set = support_from_density(grid, d);
      parts.insert(parts.end(), set.components.begin(), set.components.end());
    }
  }
  man.metrics.push_back({"components", static_cast<double>(parts.size())});
  Csv csv(c.out, man);
  csv.row({"component", "lo", "hi"});
  for (std::size_t i = 0; i < parts.size(); ++i)
    csv.row({std::to_string(i), csv_real(parts[i].lo), csv_real(parts[i].hi)});
}

void run_kernel(const RunConfig& c, RunManifest& man) {
  const RandomMap1D map = map_of(c);
  const KernelSlice slice = kernel_at(map, c.x);
  const Grid grid(map.space(), c.grid);
  Csv csv(c.out, man);
  csv.row({"y", "density"});
  for (std::size_t i = 0; i < grid.size(); ++i) csv.row({csv_real(grid.mid(i)), csv_real(slice.density(grid.mid(i)))});
}

void run_escape(const RunConfig& c, RunManifest& man) {
  const RandomMap1D map = map_of(c);
  const Grid grid(map.space(), c.grid);
  const EscapeReport rep = [&] {
    Stage s(man, "quasi_stationary");
    return quasi_stationary(map, c.window, grid, c.quadrature);
  }();
  add_notes(man, "escape", rep.notes);
  if (rep.subdominant_close) man.warnings.push_back("subdominant windowed eigenvalue within 1e-3 of alpha");
  if (rep.closed_class) man.warnings.push_back("window is absorbing (alpha = 1)");
  else if (rep.absorbing) man.warnings.push_back("alpha rounds to 1 but the window leaks; see T_leak");
  man.metrics.push_back({"subdominant", rep.subdominant});
  man.metrics.push_back({"T_leak", rep.expected_escape_leak});
  std::vector<std::string> mc = {"", "", ""};
  if (c.mc > 0) {
    Stage s(man, "mc");
    const EscapeStart start = c.start == "qs" ? EscapeStart::QuasiStationary : EscapeStart::Uniform;
    const EscapeSample e = escape_time_mc(map, rep.window, c.mc, c.max_steps, c.seed, start, &rep);
    if (e.censoring_flag)
      man.warnings.push_back("censored trials: " + std::to_string(e.censored) + " of " + std::to_string(e.trials));
    mc = {csv_real(e.mean), csv_real(e.std_error), std::to_string(e.censored)};
  }
  Csv csv(c.out, man);
  csv.row({"alpha", "T_spectral", "mc_mean", "mc_se", "censored"});
  csv.row({csv_real(rep.alpha), csv_real(rep.expected_escape_spectral), mc[0], mc[1], mc[2]});
}

std::vector<double> parameter_grid(const RunConfig& c) {
  std::vector<double> a(c.steps);
  for (std::size_t i = 0; i < c.steps; ++i)
    a[i] = c.steps == 1 ? c.a_min : c.a_min + (c.a_max - c.a_min) * static_cast<double>(i) / (c.steps - 1.0);
  return a;
}

void run_rotation(const RunConfig& c, RunManifest& man) {
  const RandomMap1D base = make_map(family_of(c, c.a_min), c.noise == "bump" ? NoiseKind::SmoothBump : NoiseKind::Uniform);
  if (!base.space().is_circle()) throw Error(ErrorKind::UsageError, "map: rotation needs a circle map");
  const Grid grid(base.space(), c.grid);
  const auto as = parameter_grid(c);
  std::vector<RotationEstimate> est(as.size());
  {
    Stage s(man, "rotation");
    for (std::size_t i = 0; i < as.size(); ++i)
      est[i] = rotation_estimate(base.with_parameter(as[i]), grid, c.x0, c.n_iter, Rng::derive(c.seed, i).next());
  }
  Csv csv(c.out, man);
  csv.row({"a", "rho_mc", "rho_spectral"});
  for (std::size_t i = 0; i < as.size(); ++i)
    csv.row({csv_real(as[i]), csv_real(est[i].rho_mc), csv_real(est[i].rho_spectral)});
  const std::string data = fs::path(c.out).filename().string();
  write_text(c.plot,
             plot_header("rotation number") + "set xlabel 'a'\nset ylabel 'rho'\nplot '" + data +
                 "' using 1:2 with points pt 7 ps 0.5, '' using 1:3 with lines\n",
             man);
}

void run_sweep(const RunConfig& c, RunManifest& man) {
  const RandomMap1D base = make_map(family_of(c, c.a_min), c.noise == "bump" ? NoiseKind::SmoothBump : NoiseKind::Uniform);
  SweepOptions opt;
  opt.grid = c.grid;
  opt.k_max = c.k_max;
  opt.l_max = c.l_max;
  opt.resolution = c.resolution;
  opt.run_detectors = c.detectors;
  opt.quadrature_order = c.quadrature;
  const SweepReport rep = [&] {
    Stage s(man, "sweep");
    return sweep(base, c.a_min, c.a_max, c.steps, opt);
  }();
  add_notes(man, "sweep", rep.notes);
  man.metrics.push_back({"jump_threshold", rep.jump_threshold});
  man.metrics.push_back({"events", static_cast<double>(rep.events.size())});
  {
    Csv csv(c.out, man);
    csv.row({"a", "m", "n_components", "hausdorff_prev", "supdist_prev", "eta"});
    for (const auto& p : rep.points) {
      if (!p.ok()) man.warnings.push_back("a = " + csv_real(p.a) + ": " + p.error);
      csv.row({csv_real(p.a), std::to_string(p.m), std::to_string(p.support.size()), csv_real(p.hausdorff_prev),
               csv_real(p.supdist_prev), csv_real(p.eta)});
    }
  }
  {
    Csv csv(c.events, man);
    csv.row({"a_star", "bracket", "type", "label", "evidence"});
    for (const auto& e : rep.events) {
      if (!e.generic) man.warnings.push_back("non-generic event at a = " + csv_real(e.a_star));
      add_notes(man, "event at a = " + csv_real(e.a_star), e.notes);
      csv.row({csv_real(e.a_star), csv_real(e.bracket), to_string(e.type), e.label ? to_string(*e.label) : "",
               e.evidence.summary});
    }
  }
  const std::string data = fs::path(c.out).filename().string();
  write_text(c.plot,
             plot_header("support sweep") +
                 "set xlabel 'a'\nset ytics nomirror\nset y2tics\nset y2label 'eta'\nplot '" + data +
                 "' using 1:3 with steps title 'components', '' using 1:2 with steps title 'm', '' using 1:6 axes x1y2 "
                 "with lines title 'eta'\n",
             man);
}

void run_represent(const RunConfig& c, RunManifest& man) {
  const NoiseModel nu(c.noise == "bump" ? NoiseKind::SmoothBump : NoiseKind::Uniform);
  KernelProvider provider;
  if (c.kernel == "quadratic") {
    provider = quadratic_noise_kernel();
  } else {
    const RandomMap1D map = map_of(c);
    if (c.kernel == "map") {
      provider = kernel_from_map(map);
    } else {
      provider = uniform_additive_kernel([map](double x) { return map.lift(x, 0.0); }, c.sigma, map.space());
    }
  }
  const RepresentationMap rep = [&] {
    Stage s(man, "represent");
    return represent_1d(provider, nu, {c.probe_x});
  }();
  const RepresentationSlice slice = rep.slice(c.probe_x);
  man.metrics.push_back({"tv", representation_tv(rep, c.probe_x)});
  if (provider.space.is_circle()) {
    const auto v = circle_diffeo_condition(provider, {c.probe_x});
    man.metrics.push_back({"diffeo_condition", v[0].holds ? 1.0 : 0.0});
    man.metrics.push_back({"diffeo_min_modulus", v[0].min_modulus});
  }
  Csv csv(c.out, man);
  csv.row({"mu", "f_mu_x"});
  for (std::size_t j = 0; j < c.mu_points; ++j) {
    const double mu = -1.0 + 2.0 * static_cast<double>(j) / (c.mu_points - 1.0);
    csv.row({csv_real(mu), csv_real(slice.quantile(nu.cdf(mu)))});
  }
}

void run_matrix(const RunConfig& c, RunManifest& man) {
  const RandomMap1D map = map_of(c);
  const Grid grid(map.space(), c.grid);
  UlamMatrix m = [&] {
    Stage s(man, "ulam");
    return c.window.empty() ? build_ulam(map, grid, c.quadrature) : build_windowed(map, grid, c.window, c.quadrature);
  }();
  add_notes(man, "ulam", m.notes());
  Csv csv(c.out, man);
  csv.row({"n_cells"});
  csv.row({std::to_string(m.size())});
  std::vector<std::string> fields(m.size());
  for (std::size_t r = 0; r < m.size(); ++r) {
    const auto row = m.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) fields[j] = csv_real(row[j]);
    csv.row(fields);
  }
}

}  // namespace

std::string csv_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::vector<Interval> parse_window(const std::string& text) {
  std::vector<Interval> out;
  std::stringstream ss(text);
  std::string piece;
  while (std::getline(ss, piece, ',')) {
    const auto colon = piece.find(':');
    try {
      if (colon == std::string::npos) throw std::invalid_argument("missing ':'");
      std::size_t used = 0;
      const double lo = std::stod(piece.substr(0, colon), &used);
      const std::string rest = piece.substr(colon + 1);
      std::size_t used2 = 0;
      const double hi = std::stod(rest, &used2);
      if (used2 != rest.size() || !(lo < hi)) throw std::invalid_argument("bad bounds");
      out.push_back({lo, hi});
    } catch (const std::exception&) {
      throw Error(ErrorKind::UsageError, "window: expected lo:hi[,lo:hi...] with lo < hi, got '" + text + "'");
    }
  }
  if (out.empty()) throw Error(ErrorKind::UsageError, "window: empty");
  return out;
}

FamilySpec family_of(const RunConfig& c, double a) {
  if (c.map == "standard-circle") return StandardCircle{a, c.eps, c.sigma};
  if (c.map == "logistic") return Logistic{a, c.sigma};
  if (c.map == "affine") return AffineTest{a, c.lambda, c.sigma, c.lower, c.upper};
  if (c.map == "pure-noise") return PureNoise{c.sigma};
  throw Error(ErrorKind::UsageError, "map: unknown family '" + c.map + "'");
}

RandomMap1D map_of(const RunConfig& c) {
  double a = c.a;
  if (!c.a_given) a = c.map == "logistic" ? Logistic{}.a : 0.0;
  try {
    return make_map(family_of(c, a), c.noise == "bump" ? NoiseKind::SmoothBump : NoiseKind::Uniform);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::UsageError) throw;
    throw Error(ErrorKind::UsageError, std::string("map descriptor: ") + e.what());
  }
}

RunConfig parse_config(const std::vector<std::string>& args) {
  RunConfig c;
  CLI::App app{"Numerical toolkit for bifurcations of one-dimensional random maps with bounded noise", "rds"};
  app.set_config("--config", "", "flat key = value file; flags take precedence");
  app.allow_config_extras(false);
  app.require_subcommand(1, 1);

  std::string window;
  bool kernel_from_map_flag = false;
  bool no_detectors = false;
  app.add_option("--map", c.map, "map family")
      ->check(CLI::IsMember({"standard-circle", "logistic", "affine", "pure-noise"}));
  app.add_option("--noise", c.noise, "noise law on [-1, 1]")->check(CLI::IsMember({"uniform", "bump"}));
  auto* a_opt = app.add_option("--a", c.a, "family parameter (offset c for affine)");
  app.add_option("--eps", c.eps, "circle nonlinearity");
  app.add_option("--sigma", c.sigma, "noise amplitude");
  app.add_option("--lambda", c.lambda, "affine slope");
  app.add_option("--lower", c.lower, "affine interval lower end");
  app.add_option("--upper", c.upper, "affine interval upper end");
  app.add_option("--grid", c.grid, "Ulam cells")->check(CLI::Range(std::size_t{16}, std::size_t{1} << 16));
  app.add_option("--quadrature", c.quadrature, "Gauss-Legendre order")->check(CLI::Range(1, 32));
  app.add_option("--k", c.k, "eigenvalues")->check(CLI::Range(1, 64));
  app.add_option("--a-min", c.a_min, "sweep start");
  app.add_option("--a-max", c.a_max, "sweep end");
  app.add_option("--steps", c.steps, "sweep points")->check(CLI::Range(1, 100000));
  app.add_option("--x", c.x, "kernel start point");
  app.add_option("--x0", c.x0, "Monte Carlo start point");
  app.add_option("--window", window, "escape window lo:hi[,lo:hi...]");
  app.add_option("--method", c.method, "support method")->check(CLI::IsMember({"density", "setvalued"}));
  app.add_option("--mc", c.mc, "Monte Carlo escape trials")->check(CLI::Range(std::size_t{0}, std::size_t{100000000}));
  app.add_option("--start", c.start, "escape start law")->check(CLI::IsMember({"uniform", "qs"}));
  app.add_option("--max-steps", c.max_steps, "escape censoring")
      ->check(CLI::Range(std::size_t{1}, std::size_t{10000000000}));
  app.add_option("--n-iter", c.n_iter, "orbit length for rotation")
      ->check(CLI::Range(std::size_t{10000}, std::size_t{1000000000}));
  app.add_option("--seed", c.seed, "base seed");
  app.add_option("--k-max", c.k_max, "extremal word length")->check(CLI::Range(1, 6));
  app.add_option("--l-max", c.l_max, "critical orbit length")->check(CLI::Range(1, 16));
  app.add_option("--resolution", c.resolution, "event bracket width")->check(CLI::Range(1e-12, 1.0));
  app.add_flag("--no-detectors", no_detectors, "sweep without bifurcation detectors");
  app.add_option("--kernel", c.kernel, "kernel to represent")
      ->check(CLI::IsMember({"map", "uniform-additive", "quadratic"}));
  app.add_flag("--kernel-from-map", kernel_from_map_flag, "same as --kernel map");
  app.add_option("--probe-x", c.probe_x, "x of the represented slice");
  app.add_option("--mu-points", c.mu_points, "mu samples")->check(CLI::Range(2, 1000000));
  app.add_option("--out", c.out, "main CSV");
  app.add_option("--events", c.events, "sweep events CSV");
  app.add_option("--manifest", c.manifest, "run manifest (JSON)");
  app.add_option("--plot", c.plot, "gnuplot script");
  for (const auto& name : kSubcommands) app.add_subcommand(name)->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    c.subcommand = "help";
    c.help = app.help();
    return c;
  } catch (const CLI::ParseError& e) {
    throw Error(ErrorKind::UsageError, e.what());
  }

  c.subcommand = app.get_subcommands().front()->get_name();
  c.a_given = a_opt->count() > 0;
  c.detectors = !no_detectors;
  if (kernel_from_map_flag) c.kernel = "map";
  if (!window.empty()) c.window = parse_window(window);

  if (c.subcommand == "escape" && c.window.empty()) throw Error(ErrorKind::UsageError, "window: required for escape");
  if (sweeps_parameter(c.subcommand)) {
    for (double a : {c.a_min, c.a_max}) {
      RunConfig probe = c;
      probe.a = a;
      probe.a_given = true;
      map_of(probe);
    }
    if (!(c.a_min < c.a_max) || c.steps < 2)
      throw Error(ErrorKind::UsageError, "a-min, a-max, steps: need a-min < a-max and steps >= 2");
  } else if (!(c.subcommand == "represent" && c.kernel == "quadratic")) {
    map_of(c);
  }

  if (c.out.empty()) c.out = default_out(c.subcommand);
  if (c.events.empty()) c.events = (fs::path(c.out).parent_path() / "events.csv").string();
  if (c.manifest.empty()) c.manifest = sibling(c.out, ".manifest.json");
  if (c.plot.empty()) c.plot = sibling(c.out, ".plt");
  check_writable("out", c.out);
  check_writable("manifest", c.manifest);
  if (c.subcommand == "sweep") check_writable("events", c.events);
  if (c.subcommand == "density" || c.subcommand == "rotation" || c.subcommand == "sweep")
    check_writable("plot", c.plot);
  c.echo = echo_of(c);
  return c;
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : config) cfg[k] = v;
  j["config"] = cfg;
  j["version"] = version;
  j["threads"] = thread_count();
  j["wall_seconds"] = wall_seconds;
  nlohmann::ordered_json t = nlohmann::ordered_json::object();
  for (const auto& [k, v] : timings) t[k] = v;
  j["timings"] = t;
  j["warnings"] = warnings;
  nlohmann::ordered_json m = nlohmann::ordered_json::object();
  for (const auto& [k, v] : metrics) m[k] = std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(csv_real(v));
  j["metrics"] = m;
  j["outputs"] = outputs;
  if (!error.empty()) j["error"] = error;
  return j.dump(2) + "\n";
}

int run(const RunConfig& c, RunManifest& man, std::ostream& err) {
  static const std::map<std::string, std::function<void(const RunConfig&, RunManifest&)>> table = {
      {"density", run_density}, {"spectrum", run_spectrum}, {"support", run_support},
      {"kernel", run_kernel},   {"escape", run_escape},     {"rotation", run_rotation},
      {"sweep", run_sweep},     {"represent", run_represent}, {"matrix", run_matrix},
  };
  man.config = c.echo;
  const auto t0 = std::chrono::steady_clock::now();
  int status = 0;
  try {
    const auto it = table.find(c.subcommand);
    if (it == table.end()) throw Error(ErrorKind::UsageError, "unknown subcommand '" + c.subcommand + "'");
    it->second(c, man);
  } catch (const std::exception& e) {
    man.error = e.what();
    err << "error: " << e.what() << '\n';
    status = 1;
  }
  man.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ofstream f(c.manifest, std::ios::binary);
  if (f) {
    f << man.to_json();
  } else {
    err << "error: cannot write manifest '" << c.manifest << "'\n";
    status = 1;
  }
  return status;
}

int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args(argv + 1, argv + argc);
  RunConfig c;
  try {
    c = parse_config(args);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  if (c.subcommand == "help") {
    out << c.help;
    return 0;
  }
  RunManifest man;
  return run(c, man, err);
}

}  // namespace rds
