#include <cmath>
#include <numbers>
#include <stdexcept>

#include "fkeit/errors.hpp"
#include "fkeit/reference.hpp"

namespace fkeit {

double layered_effective_closed_form(const std::vector<std::pair<double, double>>& value_fraction,
                                     LaminateDirection direction) {
  double frac_sum = 0.0;
  for (const auto& [v, f] : value_fraction) {
    if (v <= 0.0) throw ConfigError("laminate: phase values must be positive");
    if (f < 0.0) throw ConfigError("laminate: fractions must be nonnegative");
    frac_sum += f;
  }
  if (std::abs(frac_sum - 1.0) > 1e-12) throw ConfigError("laminate: fractions must sum to 1");
  if (direction == LaminateDirection::parallel) {
    double s = 0.0;
    for (const auto& [v, f] : value_fraction) s += f * v;
    return s;
  }
  double s = 0.0;
  for (const auto& [v, f] : value_fraction) s += f / v;
  return 1.0 / s;
}

double reflected_local_time_mean(double kappa, double t) {
  // Occupation formula with the half-space heat kernel of the isotropic
  // reflecting diffusion: E_0 L_t = int_0^t 2 (4 pi kappa s)^{-1/2} ds.
  return 2.0 * std::sqrt(t / (std::numbers::pi * kappa));
}

}  // namespace fkeit
