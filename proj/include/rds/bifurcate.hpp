#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "rds/model.hpp"
#include "rds/transfer.hpp"

namespace rds {

enum class Stability { Attracting, Repelling, SaddleNodeCandidate, NonHyperbolicOther };

const char* to_string(Stability s);

/// Periodic orbit of an extremal composition f(.; w_k) o ... o f(.; w_1),
/// w_i in {-1, +1}.
struct ExtremalOrbit {
  std::size_t period = 0;
  std::vector<int> word;
  /// points[i + 1] = f(points[i]; word[i]), reduced into the phase space.
  std::vector<double> points;
  double multiplier = 0.0;
  Stability stability = Stability::NonHyperbolicOther;
  /// Circle only: f^k(points[0]) = points[0] + winding on the lift.
  long winding = 0;
};

/// k-fold composition along `word` in lift coordinates.
double compose(const RandomMap1D& map, double x, const std::vector<int>& word);
/// d/dx of the composition (chain rule).
double compose_dx(const RandomMap1D& map, double x, const std::vector<int>& word);

Stability classify_multiplier(double multiplier, double tol = 1e-6);

/// Periodic points of one word: roots of f^k(x; word) - x - p over all
/// windings p, including tangential (double) roots. Sorted by position.
struct WordRoot {
  double x = 0.0;
  long winding = 0;
  double multiplier = 0.0;
};
std::vector<WordRoot> word_roots(const RandomMap1D& map, const std::vector<int>& word, std::size_t scan_points = 4096);

/// All extremal periodic orbits up to period k_max (k_max <= 6), one entry per
/// orbit: cyclic shifts of a word give the same orbit, and orbits whose
/// minimal period is below k are listed under their own period only.
std::vector<ExtremalOrbit> find_extremal_orbits(const RandomMap1D& map, std::size_t k_max,
                                                std::size_t scan_points = 4096);

enum class EventType { SaddleNode, Homoclinic, Boundary, SupportJump };
enum class EventLabel { Intermittency, Transient };

const char* to_string(EventType t);
const char* to_string(EventLabel l);

struct EventEvidence {
  std::string summary;
  /// SaddleNode: (a, multiplier) of the tracked orbit approaching a_star.
  std::vector<std::pair<double, double>> multiplier_trace;
  std::vector<int> word;
  std::vector<int> other_word;
  double x = 0.0;
  /// Homoclinic: d/da of the gap; Boundary: d/da displacement difference.
  double unfolding = 0.0;
  /// Hausdorff distance between the supports at the bracket ends.
  double hausdorff_jump = 0.0;
};

struct BifurcationEvent {
  double a_star = 0.0;
  /// Width of the bracket [a_star - bracket / 2, a_star + bracket / 2].
  double bracket = 0.0;
  EventType type = EventType::SupportJump;
  std::optional<EventLabel> label;
  EventEvidence evidence;
  bool generic = true;
  /// SaddleNode: {d2/dx2 f^k, d/da f^k}; Homoclinic: {d/da gap};
  /// Boundary: {d/da f^k(word), d/da f^k(other word)}.
  std::vector<double> genericity;
  std::vector<std::string> notes;
};

struct DetectorOptions {
  std::size_t coarse_steps = 200;
  std::size_t scan_points = 4096;
  /// Keep only candidates across which the set-valued support jumps by more
  /// than jump_tol (Hausdorff). Skipped for deterministic maps.
  bool require_support_change = true;
  double jump_tol = 1e-3;
  std::size_t support_grid = 2048;
};

/// Tangencies (orbit pairs created or destroyed with multiplier 1) of the
/// extremal words up to k_max, bracketed to `resolution`.
std::vector<BifurcationEvent> detect_saddle_node(const RandomMap1D& family, double a_lo, double a_hi,
                                                 std::size_t k_max, double resolution,
                                                 const DetectorOptions& options = {});

/// Sign changes of f^l(c; w) - xbar_a over extremal words of length l <= l_max,
/// c the critical point, xbar_a the points of `orbit` (valid at a_lo) continued
/// in a by Newton steps.
std::vector<BifurcationEvent> detect_homoclinic(const RandomMap1D& family, double a_lo, double a_hi,
                                                const ExtremalOrbit& orbit, std::size_t l_max, double resolution,
                                                const DetectorOptions& options = {});

/// Collisions of an attracting (multiplier in (0, 1)) and a repelling
/// (multiplier > 1) periodic point of two different words of equal length.
std::vector<BifurcationEvent> detect_boundary(const RandomMap1D& family, double a_lo, double a_hi,
                                              std::size_t k_max, double resolution,
                                              const DetectorOptions& options = {});

/// Unequal d/da displacements (difference above threshold).
bool unfolds_generically(double da_word, double da_other, double threshold = 1e-6);

/// Set-valued support (union of minimal invariant sets from a spread of seed
/// points), exact endpoints. Empty for deterministic maps.
std::vector<Interval> set_valued_support(const RandomMap1D& map, std::size_t grid_cells = 2048);

struct SweepOptions {
  std::size_t grid = 2048;
  std::size_t k_max = 3;
  std::size_t l_max = 8;
  double resolution = 1e-6;
  double jump_factor = 10.0;
  bool run_detectors = true;
  std::size_t quadrature_order = 5;
};

struct SweepPoint {
  double a = 0.0;
  std::size_t m = 0;
  /// Union of the set-valued supports of all ergodic measures.
  std::vector<Interval> support;
  std::vector<std::vector<double>> densities;
  /// NaN at the first point or when a neighbour failed.
  double hausdorff_prev = 0.0;
  /// NaN when m differs from the previous point.
  double supdist_prev = 0.0;
  double eta = 0.0;
  std::vector<std::size_t> periods;
  std::string error;
  bool ok() const { return error.empty(); }
};

struct SweepReport {
  std::vector<double> a;
  std::vector<SweepPoint> points;
  /// Sorted by a_star.
  std::vector<BifurcationEvent> events;
  double jump_threshold = 0.0;
  std::vector<std::string> notes;
};

SweepReport sweep(const RandomMap1D& family, double a_lo, double a_hi, std::size_t steps,
                  const SweepOptions& options = {});

}  // namespace rds
