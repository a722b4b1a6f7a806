#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "cltlab/error.hpp"
#include "cltlab/observable.hpp"
#include "cltlab/parallel.hpp"
#include "cltlab/rng.hpp"

namespace cltlab::billiard {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct Scatterer {
  Vec2 center;     // in the unit cell [0,1)^2
  double radius = 0.0;
};

enum class HorizonStatus { unchecked, verified_finite, suspected_infinite };

// Periodic Lorentz gas on the unit square with circular scatterers.
class Geometry {
public:
  std::vector<Scatterer> scatterers;
  double free_path_cap = 100.0;  // in cell widths
  HorizonStatus horizon = HorizonStatus::unchecked;

  // Checks invariants (radii, centers, pairwise disjointness across the 3x3
  // block of periodic images) and prepares the cell candidate table used by
  // the ray marcher. Throws invalid_geometry on overlap.
  void prepare();

  double total_perimeter() const;
  // pi |Q| / |dQ| for this table: exact geometric mean free path.
  double exact_mean_free_path() const;

  bool prepared() const { return !cell_candidates_.empty() || scatterers.empty(); }
  const std::vector<std::pair<std::size_t, std::pair<int, int>>>& cell_candidates() const {
    return cell_candidates_;
  }

private:
  // (scatterer index, lattice offset) pairs whose disk intersects the base
  // cell; candidates for cell (cx,cy) are these shifted by (cx,cy).
  std::vector<std::pair<std::size_t, std::pair<int, int>>> cell_candidates_;
};

// Point of the collision space: scatterer, arc-length position r along its
// boundary, and reflection angle phi in [-pi/2, pi/2] measured from the
// inward (into the billiard domain) normal. |phi| = pi/2 marks a tangential
// collision.
struct CollisionCoordinate {
  std::size_t scatterer_id = 0;
  double r = 0.0;
  double phi = 0.0;
};

// Collisions closer than this to tangential are treated as singular and
// reported, never silently perturbed.
inline constexpr double singular_phi_margin = 1e-9;

struct FlightResult {
  CollisionCoordinate next;
  double free_path = 0.0;
};

// Traces the outgoing ray of c through the periodic plane (cell-by-cell
// marching over lattice copies, exact ray-circle roots, 1e-12 exclusion zone
// at departure) and reflects specularly at arrival.
FlightResult collision_map(const Geometry& geom, const CollisionCoordinate& c);

// Inverse collision map via time reversal: negate phi, fly, negate phi.
FlightResult collision_map_reverse(const Geometry& geom, const CollisionCoordinate& c);

// SRB sampling: scatterer by perimeter, r uniform, phi with density cos/2.
CollisionCoordinate sample_srb(const Geometry& geom, RngStream& rng);

struct HorizonReport {
  std::size_t samples = 0;
  double cap = 0.0;
  double max_free_path = 0.0;
  std::size_t exceeded = 0;        // rays that hit the cap
  HorizonStatus status = HorizonStatus::unchecked;
  double min_clearance = 0.0;      // smallest gap between periodic disk images
};

// Ray-samples random free-space positions and directions, reporting the
// largest observed free path; any flight hitting the cap marks the table
// suspected-infinite. Also re-runs the disjointness check.
HorizonReport validate_geometry(Geometry& geom, std::size_t samples, StreamFactory rng);

struct HStripParams {
  int k0 = 2;  // first nontrivial strip index; spacing is the standard k^-2
};

struct StripLabel {
  std::size_t scatterer_id = 0;
  int strip = 0;         // 0 central, +-k accumulating at phi = +-pi/2
  bool tangential = false;

  friend bool operator==(const StripLabel& a, const StripLabel& b) {
    return a.scatterer_id == b.scatterer_id && a.strip == b.strip && a.tangential == b.tangential;
  }
};

// Central strip for |phi| <= pi/2 - k0^-2; strip +-k for
// pi/2 - k^-2 < +-phi <= pi/2 - (k+1)^-2, k >= k0.
StripLabel h_strip_label(const CollisionCoordinate& c, const HStripParams& params);

enum class TimeDirection { future, past };

struct SeparationResult {
  std::optional<std::size_t> time; // nullopt => cap exceeded
  bool cap_exceeded() const { return !time.has_value(); }
};

// Smallest n >= 0 at which F^{+-n}x and F^{+-n}y land in different H-strips.
SeparationResult separation_time(const Geometry& geom, const CollisionCoordinate& x,
                                 const CollisionCoordinate& y, TimeDirection direction,
                                 std::size_t cap, const HStripParams& params);

struct HolderFit {
  double K_hat = 0.0;
  double theta_hat = 0.5;
  double violation_fraction = 0.0;
  std::size_t pairs_used = 0;
  std::size_t pairs_skipped = 0;   // singular orbits, invalid perturbations
  std::size_t cap_exceeded = 0;
  std::size_t bins_used = 0;
};

// Samples nearby pairs, measures (s_+(x,y), |f(x)-f(y)|), fits the upper
// envelope (99th percentile per separation-time bin) with a line in log
// scale, lifts the intercept over every envelope point, and reports the
// fraction of pairs above the fitted bound.
HolderFit estimate_dynamical_holder(const Geometry& geom,
                                    const Observable<CollisionCoordinate>& f,
                                    std::size_t pair_budget, std::size_t cap, StreamFactory rng,
                                    const HStripParams& params);

struct MeanFreePath {
  double mean = 0.0;
  double standard_error = 0.0;
  double exact = 0.0;            // pi |Q| / |dQ|
  std::size_t samples = 0;
  std::size_t cap_hits = 0;      // flights truncated at the cap (flagged)
};

MeanFreePath mean_free_path_estimate(const Geometry& geom, std::size_t samples, StreamFactory rng,
                                     const ExecPolicy& exec = {});

// Adapter exposing the collision map as a dynamical system for the
// correlation and CLT machinery.
class System {
public:
  using Point = CollisionCoordinate;

  explicit System(const Geometry& geom) : geom_(&geom) {}

  Point step(const Point& p) const { return collision_map(*geom_, p).next; }
  Point sample_invariant(RngStream& rng) const { return sample_srb(*geom_, rng); }
  const Geometry& geometry() const { return *geom_; }

private:
  const Geometry* geom_;
};

// Built-in observables on the collision space.
Observable<CollisionCoordinate> make_reflection_angle_observable();
Observable<CollisionCoordinate> make_free_path_observable(const Geometry& geom);

} // namespace cltlab::billiard
