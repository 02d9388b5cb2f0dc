#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rds/model.hpp"

namespace rds {

/// Transition kernel k(x, .) given in lift coordinates.
struct KernelProvider {
  std::string name;
  PhaseSpace space = PhaseSpace::circle();
  /// V_x as lift intervals; a representation needs exactly one.
  std::function<std::vector<Interval>(double)> support;
  std::function<double(double, double)> density;
  /// d/dx k(x, y); central difference with step 1e-6 when empty.
  std::function<double(double, double)> dx_density;
};

/// Kernel of a random map, support f(x; [-1, 1]) on the lift.
KernelProvider kernel_from_map(const RandomMap1D& map);

/// Density 1/(2 sigma) on [F(x) - sigma, F(x) + sigma].
KernelProvider uniform_additive_kernel(std::function<double(double)> F, double sigma,
                                       PhaseSpace space = PhaseSpace::circle());

/// Law of x + (x - w)^2 with w uniform on [-1, 1] (two-to-one fibres,
/// square-root singularity of the density at y = x for |x| < 1).
KernelProvider quadratic_noise_kernel();

/// Conditional quantile y = Q_x(u) of one starting point.
class RepresentationSlice {
 public:
  RepresentationSlice(double x, Interval support, std::vector<double> cumulative, std::vector<double> nodes);

  double x() const { return x_; }
  const Interval& support() const { return support_; }
  /// Mass of k(x, .) before normalisation.
  double mass() const { return mass_; }
  double quantile(double u) const;
  /// Inverse of quantile (bisection), i.e. the represented CDF at t.
  double inverse(double t) const;

 private:
  double x_;
  Interval support_;
  double mass_ = 1.0;
  // Fritsch-Carlson monotone cubic through (u_, y_) with slopes d_
  std::vector<double> u_, y_, d_;
};

class RepresentationMap {
 public:
  RepresentationMap(KernelProvider kernel, NoiseModel noise, std::size_t panels = 1024);

  /// f_mu(x) = Q_x(G(mu)), mu in [-1, 1].
  double operator()(double x, double mu) const;
  /// nu{mu : f_mu(x) <= t}.
  double cdf(double x, double t) const;
  RepresentationSlice slice(double x) const;

  const KernelProvider& kernel() const { return kernel_; }
  const NoiseModel& noise() const { return noise_; }
  std::size_t panels() const { return panels_; }

 private:
  KernelProvider kernel_;
  NoiseModel noise_;
  std::size_t panels_;
};

/// Throws UnboundedKernel / MulticomponentSupport on the probe x values.
RepresentationMap represent_1d(const KernelProvider& kernel, NoiseModel noise,
                               const std::vector<double>& probe_x = {});

/// Largest density found on V_x (grid scan, then golden-section zoom around
/// the largest nodes and the endpoints) and the mean density 1 / |V_x|.
struct DensityPeak {
  double max = 0.0;
  double mean = 0.0;
  double y = 0.0;
};
DensityPeak density_peak(const KernelProvider& kernel, double x, std::size_t panels = 1024);

/// (1/2) sum over `bins` equal bins of V_x of |k-mass - represented mass|.
double representation_tv(const RepresentationMap& rep, double x, std::size_t bins = 4096);

struct DiffeoVerdict {
  double x = 0.0;
  bool holds = true;
  /// First z where the expression vanishes (or changes sign).
  std::optional<double> witness;
  double min_modulus = 0.0;
  /// +1 / -1 when the expression keeps one sign, 0 otherwise.
  int sign = 0;
  std::vector<double> z;
  std::vector<double> values;
};

/// -k(x, l(x)) l'(x) + int_{l(x)}^z dk/dx(x, y) dy on a z grid of V_x = [l(x), r(x)].
std::vector<DiffeoVerdict> circle_diffeo_condition(const KernelProvider& kernel, const std::vector<double>& xs,
                                                   std::size_t z_points = 257);

}  // namespace rds
