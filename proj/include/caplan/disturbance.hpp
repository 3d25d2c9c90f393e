#pragma once

#include <random>
#include <vector>

#include "caplan/geometry.hpp"

namespace caplan {

/// Impulse disturbance: an instant change in linear centroidal momentum,
/// with the probability of occurring once within the base interval.
struct Disturbance {
  Vec3 delta{Vec3::Zero()};  // kg m/s
  double p_base{0.0};        // probability within kBaseInterval
};

inline constexpr double kBaseInterval = 0.1;  // s

/// Probability that d happens once within duration T, under independent
/// Bernoulli trials per base interval: 1 - (1 - p)^(T/T0).
/// Returns p_base exactly for T == kBaseInterval.
double probability(const Disturbance& d, double T);

/// Axis-aligned region with its own disturbance set. Boxes are closed.
struct DisturbanceRegion {
  Vec3 box_min{Vec3::Zero()};
  Vec3 box_max{Vec3::Zero()};
  std::vector<Disturbance> disturbances;

  bool contains(const Vec3& x) const {
    return (x.array() >= box_min.array()).all() && (x.array() <= box_max.array()).all();
  }
};

/// Spatial map from position to a discrete disturbance set. The null
/// (negligible) disturbance is implicit with mass 1 - sum(p_base).
struct DisturbanceField {
  std::vector<DisturbanceRegion> regions;
  std::vector<Disturbance> default_disturbances;

  /// Set at x: first region containing x wins, else the default set.
  const std::vector<Disturbance>& disturbances_at(const Vec3& x) const;

  /// Probability of the implicit null disturbance over T at x.
  double null_probability(const Vec3& x, double T) const;

  void validate() const;
};

/// Representative impulses for a Gaussian disturbance distribution:
/// k-means over a Monte Carlo pool; each sample's p_base is the pool mass
/// of its Voronoi cell times total_probability. Degenerate covariance
/// directions are dropped (with a warning to stderr).
std::vector<Disturbance> discretize_gaussian(const Vec3& mean, const Mat3& covariance,
                                             int n_samples, std::mt19937_64& rng,
                                             double total_probability = 1.0,
                                             int pool_size = 100000);

}  // namespace caplan
