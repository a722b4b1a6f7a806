#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <string>

#include "cltlab/error.hpp"
#include "cltlab/regularity.hpp"
#include "cltlab/systems.hpp"

namespace cltlab {

template <class Point>
struct Observable {
  std::string name;
  std::function<std::complex<double>(const Point&)> eval;
  bool real_valued = true;
  std::optional<double> exact_mean;             // known mu-integral, if any
  std::optional<regularity::Budget> budget;     // attached regularity constants

  std::complex<double> operator()(const Point& p) const { return eval(p); }

  double real(const Point& p) const {
    if (!real_valued)
      fail(ErrorKind::domain, "observable '" + name + "' used where a real one is required");
    return eval(p).real();
  }
};

inline constexpr double two_pi = 6.28318530717958647692528676655900577;

inline Observable<UnitIntervalPoint> make_cos_observable() {
  return Observable<UnitIntervalPoint>{
      "cos-first-coordinate",
      [](const UnitIntervalPoint& p) { return std::complex<double>(std::cos(two_pi * p.x), 0.0); },
      true,
      0.0,
      std::nullopt};
}

// Centered sawtooth x - 1/2 (the first Bernoulli polynomial).
inline Observable<UnitIntervalPoint> make_sawtooth_observable() {
  return Observable<UnitIntervalPoint>{
      "sawtooth",
      [](const UnitIntervalPoint& p) { return std::complex<double>(p.x - 0.5, 0.0); },
      true,
      0.0,
      std::nullopt};
}

inline Observable<TorusPoint> make_cos_observable_torus() {
  return Observable<TorusPoint>{
      "cos-first-coordinate",
      [](const TorusPoint& p) { return std::complex<double>(std::cos(two_pi * p.x1), 0.0); },
      true,
      0.0,
      std::nullopt};
}

inline Observable<TorusPoint> make_sawtooth_observable_torus() {
  return Observable<TorusPoint>{
      "sawtooth",
      [](const TorusPoint& p) { return std::complex<double>(p.x1 - 0.5, 0.0); },
      true,
      0.0,
      std::nullopt};
}

// Tabulated observable on [0,1): linear interpolation between equally spaced
// samples, last cell extrapolated.
inline Observable<UnitIntervalPoint> make_tabulated_observable(std::vector<double> values,
                                                               const std::string& name) {
  if (values.size() < 2) fail(ErrorKind::config, "tabulated observable needs >= 2 values");
  auto table = std::move(values);
  return Observable<UnitIntervalPoint>{
      name,
      [table](const UnitIntervalPoint& p) {
        const double g = static_cast<double>(table.size());
        double t = p.x * g;
        std::size_t j = static_cast<std::size_t>(t);
        if (j >= table.size() - 1) j = table.size() - 2;
        t -= static_cast<double>(j);
        return std::complex<double>(table[j] + t * (table[j + 1] - table[j]), 0.0);
      },
      true,
      std::nullopt,
      std::nullopt};
}

} // namespace cltlab
