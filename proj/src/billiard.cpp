#include "cltlab/billiard.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cltlab/stats.hpp"

namespace cltlab::billiard {

namespace {

constexpr double pi = 3.14159265358979323846264338327950288;
constexpr double departure_exclusion = 1e-12;

double wrap_angle_2pi(double a) {
  a = std::fmod(a, 2.0 * pi);
  if (a < 0.0) a += 2.0 * pi;
  if (a >= 2.0 * pi) a = 0.0;
  return a;
}

struct RayHit {
  std::size_t scatterer = 0;
  int cell_x = 0;
  int cell_y = 0;
  double s = 0.0;
  Vec2 point;
};

// Earliest intersection of the ray origin + s*dir with the circle, s beyond
// the departure exclusion zone. Returns +inf when the ray misses.
double ray_circle(const Vec2& origin, const Vec2& dir, const Vec2& center, double radius) {
  const double ex = center.x - origin.x;
  const double ey = center.y - origin.y;
  const double b = ex * dir.x + ey * dir.y;
  const double c = ex * ex + ey * ey - radius * radius;
  const double disc = b * b - c;
  if (disc < 0.0) return std::numeric_limits<double>::infinity();
  const double root = std::sqrt(disc);
  const double s_enter = b - root;
  if (s_enter > departure_exclusion) return s_enter;
  return std::numeric_limits<double>::infinity();
}

// Marches the ray cell by cell over the lattice; per cell only the disks
// whose periodic copy meets that cell are tested.
RayHit trace_ray(const Geometry& geom, const Vec2& origin, const Vec2& dir, double cap) {
  const auto& candidates = geom.cell_candidates();
  int cx = static_cast<int>(std::floor(origin.x));
  int cy = static_cast<int>(std::floor(origin.y));
  const int step_x = dir.x > 0.0 ? 1 : (dir.x < 0.0 ? -1 : 0);
  const int step_y = dir.y > 0.0 ? 1 : (dir.y < 0.0 ? -1 : 0);
  const double inf = std::numeric_limits<double>::infinity();
  double t_max_x = inf, t_max_y = inf, t_delta_x = inf, t_delta_y = inf;
  if (step_x != 0) {
    const double edge = step_x > 0 ? static_cast<double>(cx + 1) : static_cast<double>(cx);
    t_max_x = (edge - origin.x) / dir.x;
    t_delta_x = std::abs(1.0 / dir.x);
  }
  if (step_y != 0) {
    const double edge = step_y > 0 ? static_cast<double>(cy + 1) : static_cast<double>(cy);
    t_max_y = (edge - origin.y) / dir.y;
    t_delta_y = std::abs(1.0 / dir.y);
  }

  while (true) {
    const double segment_end = std::min(t_max_x, t_max_y);
    RayHit best;
    best.s = inf;
    for (const auto& [idx, off] : candidates) {
      const Vec2 center{geom.scatterers[idx].center.x + off.first + cx,
                        geom.scatterers[idx].center.y + off.second + cy};
      const double s = ray_circle(origin, dir, center, geom.scatterers[idx].radius);
      if (s < best.s) {
        best.s = s;
        best.scatterer = idx;
        best.cell_x = off.first + cx;
        best.cell_y = off.second + cy;
      }
    }
    if (best.s <= segment_end + 1e-9) {
      if (best.s > cap)
        fail(ErrorKind::horizon_cap, "collision trace exceeded the free-path cap");
      best.point = Vec2{origin.x + best.s * dir.x, origin.y + best.s * dir.y};
      return best;
    }
    if (segment_end > cap)
      fail(ErrorKind::horizon_cap, "collision trace exceeded the free-path cap");
    if (t_max_x < t_max_y) {
      cx += step_x;
      t_max_x += t_delta_x;
    } else {
      cy += step_y;
      t_max_y += t_delta_y;
    }
  }
}

bool disks_intersect_cell(const Vec2& c, double r) {
  // Distance from the center to the closed unit square.
  const double dx = std::max({0.0 - c.x, 0.0, c.x - 1.0});
  const double dy = std::max({0.0 - c.y, 0.0, c.y - 1.0});
  return dx * dx + dy * dy <= r * r + 1e-15;
}

} // namespace

void Geometry::prepare() {
  if (scatterers.empty()) fail(ErrorKind::invalid_geometry, "billiard: no scatterers");
  if (!(free_path_cap > 0.0)) fail(ErrorKind::invalid_geometry, "billiard: cap must be positive");
  for (const auto& s : scatterers) {
    if (!(s.radius > 0.0)) fail(ErrorKind::invalid_geometry, "billiard: radii must be positive");
    if (s.center.x < 0.0 || s.center.x >= 1.0 || s.center.y < 0.0 || s.center.y >= 1.0)
      fail(ErrorKind::invalid_geometry, "billiard: centers must lie in the unit cell");
  }
  // Pairwise disjointness across periodic images.
  for (std::size_t i = 0; i < scatterers.size(); ++i) {
    for (std::size_t j = i; j < scatterers.size(); ++j) {
      for (int ox = -2; ox <= 2; ++ox) {
        for (int oy = -2; oy <= 2; ++oy) {
          if (i == j && ox == 0 && oy == 0) continue;
          const double dx = scatterers[i].center.x - (scatterers[j].center.x + ox);
          const double dy = scatterers[i].center.y - (scatterers[j].center.y + oy);
          const double dist = std::sqrt(dx * dx + dy * dy);
          if (dist <= scatterers[i].radius + scatterers[j].radius)
            fail(ErrorKind::invalid_geometry,
                 "billiard: scatterers overlap (including periodic images)");
        }
      }
    }
  }
  cell_candidates_.clear();
  for (std::size_t i = 0; i < scatterers.size(); ++i)
    for (int ox = -2; ox <= 2; ++ox)
      for (int oy = -2; oy <= 2; ++oy) {
        const Vec2 c{scatterers[i].center.x + ox, scatterers[i].center.y + oy};
        if (disks_intersect_cell(c, scatterers[i].radius))
          cell_candidates_.emplace_back(i, std::make_pair(ox, oy));
      }
}

double Geometry::total_perimeter() const {
  double p = 0.0;
  for (const auto& s : scatterers) p += 2.0 * pi * s.radius;
  return p;
}

double Geometry::exact_mean_free_path() const {
  double area = 1.0;
  for (const auto& s : scatterers) area -= pi * s.radius * s.radius;
  return pi * area / total_perimeter();
}

FlightResult collision_map(const Geometry& geom, const CollisionCoordinate& c) {
  if (!geom.prepared()) fail(ErrorKind::invalid_geometry, "collision_map: geometry not prepared");
  if (c.scatterer_id >= geom.scatterers.size())
    fail(ErrorKind::domain, "collision_map: bad scatterer id");
  if (std::abs(c.phi) >= pi / 2.0 - singular_phi_margin)
    fail(ErrorKind::singular_collision, "collision_map: tangential collision");

  const auto& sc = geom.scatterers[c.scatterer_id];
  const double psi = c.r / sc.radius;
  const Vec2 origin{sc.center.x + sc.radius * std::cos(psi),
                    sc.center.y + sc.radius * std::sin(psi)};
  const double dir_angle = psi + c.phi;
  const Vec2 dir{std::cos(dir_angle), std::sin(dir_angle)};

  const RayHit hit = trace_ray(geom, origin, dir, geom.free_path_cap);

  const auto& target = geom.scatterers[hit.scatterer];
  const Vec2 center{target.center.x + hit.cell_x, target.center.y + hit.cell_y};
  const double psi_new = std::atan2(hit.point.y - center.y, hit.point.x - center.x);
  const Vec2 normal{std::cos(psi_new), std::sin(psi_new)};
  const double d_dot_n = dir.x * normal.x + dir.y * normal.y;
  const Vec2 out{dir.x - 2.0 * d_dot_n * normal.x, dir.y - 2.0 * d_dot_n * normal.y};
  // Signed angle from the post-collision normal to the outgoing direction.
  const double phi_new = std::atan2(normal.x * out.y - normal.y * out.x,
                                    normal.x * out.x + normal.y * out.y);

  FlightResult res;
  res.next.scatterer_id = hit.scatterer;
  res.next.r = target.radius * wrap_angle_2pi(psi_new);
  res.next.phi = std::clamp(phi_new, -pi / 2.0, pi / 2.0);
  res.free_path = hit.s;
  return res;
}

FlightResult collision_map_reverse(const Geometry& geom, const CollisionCoordinate& c) {
  CollisionCoordinate rev = c;
  rev.phi = -rev.phi;
  FlightResult res = collision_map(geom, rev);
  res.next.phi = -res.next.phi;
  return res;
}

CollisionCoordinate sample_srb(const Geometry& geom, RngStream& rng) {
  const double total = geom.total_perimeter();
  double pick = rng.uniform01() * total;
  std::size_t idx = 0;
  for (; idx + 1 < geom.scatterers.size(); ++idx) {
    const double perim = 2.0 * pi * geom.scatterers[idx].radius;
    if (pick < perim) break;
    pick -= perim;
  }
  CollisionCoordinate c;
  c.scatterer_id = idx;
  c.r = rng.uniform01() * 2.0 * pi * geom.scatterers[idx].radius;
  c.phi = std::asin(2.0 * rng.uniform01() - 1.0); // density cos(phi)/2
  return c;
}

HorizonReport validate_geometry(Geometry& geom, std::size_t samples, StreamFactory rng) {
  geom.prepare(); // rechecks disjointness, throws on overlap
  HorizonReport rep;
  rep.samples = samples;
  rep.cap = geom.free_path_cap;

  double min_clearance = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < geom.scatterers.size(); ++i)
    for (std::size_t j = i; j < geom.scatterers.size(); ++j)
      for (int ox = -2; ox <= 2; ++ox)
        for (int oy = -2; oy <= 2; ++oy) {
          if (i == j && ox == 0 && oy == 0) continue;
          const double dx = geom.scatterers[i].center.x - (geom.scatterers[j].center.x + ox);
          const double dy = geom.scatterers[i].center.y - (geom.scatterers[j].center.y + oy);
          min_clearance = std::min(min_clearance,
                                   std::sqrt(dx * dx + dy * dy) -
                                       (geom.scatterers[i].radius + geom.scatterers[j].radius));
        }
  rep.min_clearance = min_clearance;

  for (std::size_t i = 0; i < samples; ++i) {
    RngStream stream = rng.stream(i);
    // Uniform free-space point, uniform direction.
    Vec2 p;
    bool inside = true;
    while (inside) {
      p = Vec2{stream.uniform01(), stream.uniform01()};
      inside = false;
      for (const auto& [idx, off] : geom.cell_candidates()) {
        const auto& s = geom.scatterers[idx];
        const double dx = p.x - (s.center.x + off.first);
        const double dy = p.y - (s.center.y + off.second);
        if (dx * dx + dy * dy < s.radius * s.radius) {
          inside = true;
          break;
        }
      }
    }
    const double angle = stream.uniform01() * 2.0 * pi;
    try {
      const RayHit hit = trace_ray(geom, p, Vec2{std::cos(angle), std::sin(angle)},
                                   geom.free_path_cap);
      rep.max_free_path = std::max(rep.max_free_path, hit.s);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::horizon_cap) throw;
      ++rep.exceeded;
      rep.max_free_path = std::max(rep.max_free_path, geom.free_path_cap);
    }
  }
  rep.status = rep.exceeded > 0 ? HorizonStatus::suspected_infinite : HorizonStatus::verified_finite;
  geom.horizon = rep.status;
  return rep;
}

StripLabel h_strip_label(const CollisionCoordinate& c, const HStripParams& params) {
  if (params.k0 < 1) fail(ErrorKind::domain, "h_strip_label: k0 must be >= 1");
  StripLabel label;
  label.scatterer_id = c.scatterer_id;
  const double aphi = std::abs(c.phi);
  if (aphi > pi / 2.0 + 1e-12) fail(ErrorKind::domain, "h_strip_label: |phi| exceeds pi/2");
  const double u = pi / 2.0 - aphi;
  if (u <= 0.0) {
    label.tangential = true;
    return label;
  }
  const double k0_band = 1.0 / (static_cast<double>(params.k0) * static_cast<double>(params.k0));
  if (u >= k0_band) return label; // central strip 0
  int k = static_cast<int>(std::floor(1.0 / std::sqrt(u)));
  k = std::max(k, params.k0);
  label.strip = c.phi > 0.0 ? k : -k;
  return label;
}

SeparationResult separation_time(const Geometry& geom, const CollisionCoordinate& x,
                                 const CollisionCoordinate& y, TimeDirection direction,
                                 std::size_t cap, const HStripParams& params) {
  CollisionCoordinate a = x, b = y;
  for (std::size_t n = 0; n <= cap; ++n) {
    if (!(h_strip_label(a, params) == h_strip_label(b, params))) return SeparationResult{n};
    if (n == cap) break;
    try {
      if (direction == TimeDirection::future) {
        a = collision_map(geom, a).next;
        b = collision_map(geom, b).next;
      } else {
        a = collision_map_reverse(geom, a).next;
        b = collision_map_reverse(geom, b).next;
      }
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::singular_collision)
        fail(ErrorKind::singular_collision,
             "separation_time: singular collision at step " + std::to_string(n + 1));
      throw;
    }
  }
  return SeparationResult{std::nullopt};
}

HolderFit estimate_dynamical_holder(const Geometry& geom,
                                    const Observable<CollisionCoordinate>& f,
                                    std::size_t pair_budget, std::size_t cap, StreamFactory rng,
                                    const HStripParams& params) {
  // Pairs are sampled along an approximate unstable direction: the unstable
  // cone of a dispersing table contains dphi/dr in
  // [1/R, 1/R + cos(phi)/tau], so the midpoint slope is used. This is the
  // finite-separation-time proxy for pairs on a common homogeneous unstable
  // manifold.
  const double tau = geom.exact_mean_free_path();
  std::vector<std::pair<std::size_t, double>> records; // (s_+, |f(x)-f(y)|)
  records.reserve(pair_budget);
  HolderFit fit;

  for (std::size_t i = 0; i < pair_budget; ++i) {
    RngStream stream = rng.stream(i);
    const CollisionCoordinate x = sample_srb(geom, stream);
    if (std::abs(x.phi) >= pi / 2.0 - 1e-6) {
      ++fit.pairs_skipped;
      continue;
    }
    const double delta = std::pow(10.0, stream.uniform(-8.0, -3.0));
    const auto& sc = geom.scatterers[x.scatterer_id];
    const double slope = 1.0 / sc.radius + std::cos(x.phi) / (2.0 * tau);
    const double norm = std::sqrt(1.0 + slope * slope);
    CollisionCoordinate y = x;
    y.r = x.r + delta / norm;
    const double perim = 2.0 * pi * sc.radius;
    if (y.r >= perim) y.r -= perim;
    y.phi = x.phi + delta * slope / norm;
    if (std::abs(y.phi) >= pi / 2.0 - 1e-6) {
      ++fit.pairs_skipped;
      continue;
    }
    double df;
    try {
      df = std::abs(f(x) - f(y));
      const auto sep = separation_time(geom, x, y, TimeDirection::future, cap, params);
      if (sep.cap_exceeded()) {
        ++fit.cap_exceeded;
        continue;
      }
      records.emplace_back(*sep.time, df);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::singular_collision || e.kind() == ErrorKind::horizon_cap) {
        ++fit.pairs_skipped;
        continue;
      }
      throw;
    }
  }

  fit.pairs_used = records.size();
  if (records.size() < 100)
    fail(ErrorKind::insufficient_data, "estimate_dynamical_holder: too few separated pairs");

  double df_max = 0.0;
  for (const auto& [s, df] : records) df_max = std::max(df_max, df);
  if (df_max < 1e-300) {
    // Constant observable: all differences vanish.
    fit.K_hat = 0.0;
    fit.theta_hat = 0.5;
    fit.violation_fraction = 0.0;
    return fit;
  }

  // 99th-percentile envelope per separation-time bin.
  std::size_t s_max = 0;
  for (const auto& [s, df] : records) s_max = std::max(s_max, s);
  std::vector<std::vector<double>> bins(s_max + 1);
  for (const auto& [s, df] : records) bins[s].push_back(df);
  std::vector<double> xs, ys;
  for (std::size_t s = 0; s <= s_max; ++s) {
    if (bins[s].size() < 20) continue;
    const double env = stats::quantile(bins[s], 0.99);
    if (env <= 0.0) continue;
    xs.push_back(static_cast<double>(s));
    ys.push_back(std::log(env));
  }
  fit.bins_used = xs.size();
  if (xs.size() < 3)
    fail(ErrorKind::insufficient_data, "estimate_dynamical_holder: too few populated bins");

  const auto line = stats::fit_line(xs, ys);
  fit.theta_hat = std::clamp(std::exp(line.slope), 1e-6, 1.0 - 1e-6);
  // Lift the intercept so the fitted line dominates every envelope point.
  double log_k = line.intercept;
  const double log_theta = std::log(fit.theta_hat);
  for (std::size_t i = 0; i < xs.size(); ++i)
    log_k = std::max(log_k, ys[i] - log_theta * xs[i]);
  fit.K_hat = std::exp(log_k);

  std::size_t violations = 0;
  for (const auto& [s, df] : records)
    if (df > fit.K_hat * std::pow(fit.theta_hat, static_cast<double>(s)) * (1.0 + 1e-12))
      ++violations;
  fit.violation_fraction =
      static_cast<double>(violations) / static_cast<double>(records.size());
  return fit;
}

MeanFreePath mean_free_path_estimate(const Geometry& geom, std::size_t samples, StreamFactory rng,
                                     const ExecPolicy& exec) {
  MeanFreePath out;
  out.samples = samples;
  out.exact = geom.exact_mean_free_path();
  std::vector<double> lengths(samples);
  std::vector<std::size_t> cap_hits(32, 0);
  run_batches(samples, 32, exec, [&](std::size_t b, std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      RngStream stream = rng.stream(i);
      const CollisionCoordinate c = sample_srb(geom, stream);
      try {
        lengths[i] = collision_map(geom, c).free_path;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::horizon_cap) throw;
        lengths[i] = geom.free_path_cap; // truncated flight, flagged
        ++cap_hits[b];
      }
    }
  });
  for (auto h : cap_hits) out.cap_hits += h;
  out.mean = stats::mean(lengths);
  // Batch-mean standard error over 32 contiguous blocks.
  std::vector<double> batch(32);
  for (std::size_t b = 0; b < 32; ++b) {
    const std::size_t lo = samples * b / 32, hi = samples * (b + 1) / 32;
    batch[b] = stats::mean(std::span<const double>(lengths.data() + lo, hi - lo));
  }
  out.standard_error = stats::batch_standard_error(batch);
  return out;
}

Observable<CollisionCoordinate> make_reflection_angle_observable() {
  return Observable<CollisionCoordinate>{
      "reflection-angle",
      [](const CollisionCoordinate& c) { return std::complex<double>(c.phi, 0.0); },
      true,
      0.0, // odd in phi against the even SRB density
      std::nullopt};
}

Observable<CollisionCoordinate> make_free_path_observable(const Geometry& geom) {
  const Geometry* g = &geom;
  return Observable<CollisionCoordinate>{
      "free-path",
      [g](const CollisionCoordinate& c) {
        return std::complex<double>(collision_map(*g, c).free_path, 0.0);
      },
      true,
      geom.exact_mean_free_path(),
      std::nullopt};
}

} // namespace cltlab::billiard
