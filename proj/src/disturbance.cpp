#include "caplan/disturbance.hpp"

#include <cmath>
#include <iostream>

#include "caplan/surface.hpp"

namespace caplan {

double probability(const Disturbance& d, double T) {
  if (d.p_base <= 0.0) return 0.0;
  if (T == kBaseInterval) return d.p_base;
  return 1.0 - std::pow(1.0 - d.p_base, T / kBaseInterval);
}

const std::vector<Disturbance>& DisturbanceField::disturbances_at(const Vec3& x) const {
  for (const DisturbanceRegion& r : regions) {
    if (r.contains(x)) return r.disturbances;
  }
  return default_disturbances;
}

double DisturbanceField::null_probability(const Vec3& x, double T) const {
  double sum = 0.0;
  for (const Disturbance& d : disturbances_at(x)) sum += probability(d, T);
  return std::max(0.0, 1.0 - sum);
}

namespace {

void check_set(const std::vector<Disturbance>& ds, const char* where) {
  double total = 0.0;
  for (const Disturbance& d : ds) {
    if (d.p_base < 0.0 || d.p_base > 1.0)
      throw ValidationError(std::string("disturbance p_base out of [0,1] in ") + where);
    if (!d.delta.allFinite())
      throw ValidationError(std::string("non-finite disturbance impulse in ") + where);
    total += d.p_base;
  }
  if (total > 1.0 + 1e-12)
    throw ValidationError(std::string("disturbance probabilities exceed 1 in ") + where);
}

}  // namespace

void DisturbanceField::validate() const {
  check_set(default_disturbances, "default set");
  for (const DisturbanceRegion& r : regions) {
    if ((r.box_max.array() < r.box_min.array()).any())
      throw ValidationError("disturbance region box has max < min");
    check_set(r.disturbances, "region set");
  }
}

std::vector<Disturbance> discretize_gaussian(const Vec3& mean, const Mat3& covariance,
                                             int n_samples, std::mt19937_64& rng,
                                             double total_probability, int pool_size) {
  if (n_samples < 1) throw std::invalid_argument("discretize_gaussian: n_samples >= 1");

  // factor the covariance, zeroing out degenerate directions
  Eigen::SelfAdjointEigenSolver<Mat3> eig(0.5 * (covariance + covariance.transpose()));
  Vec3 evals = eig.eigenvalues().cwiseMax(0.0);
  int dims = 0;
  for (int i = 0; i < 3; ++i)
    if (evals[i] > 1e-12) ++dims;
  if (dims < 3 && n_samples > 1) {
    std::cerr << "discretize_gaussian: covariance is rank " << dims
              << "; sampling in the reduced subspace\n";
  }
  Mat3 L = eig.eigenvectors() * evals.cwiseSqrt().asDiagonal();

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Vec3> pool(pool_size);
  for (Vec3& p : pool) p = mean + L * Vec3(gauss(rng), gauss(rng), gauss(rng));

  // k-means++ seeding
  std::vector<Vec3> centers;
  centers.reserve(n_samples);
  std::uniform_int_distribution<int> pick(0, pool_size - 1);
  centers.push_back(pool[pick(rng)]);
  std::vector<double> d2(pool_size);
  while (static_cast<int>(centers.size()) < n_samples) {
    double sum = 0.0;
    for (int i = 0; i < pool_size; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const Vec3& c : centers) best = std::min(best, (pool[i] - c).squaredNorm());
      d2[i] = best;
      sum += best;
    }
    if (sum <= 0.0) {
      centers.push_back(pool[pick(rng)]);
      continue;
    }
    std::uniform_real_distribution<double> u(0.0, sum);
    double target = u(rng), acc = 0.0;
    int chosen = pool_size - 1;
    for (int i = 0; i < pool_size; ++i) {
      acc += d2[i];
      if (acc >= target) {
        chosen = i;
        break;
      }
    }
    centers.push_back(pool[chosen]);
  }

  std::vector<int> assign(pool_size, 0);
  std::vector<int> counts(n_samples, 0);
  for (int iter = 0; iter < 50; ++iter) {
    bool changed = false;
    for (int i = 0; i < pool_size; ++i) {
      int best = 0;
      double bestd = std::numeric_limits<double>::infinity();
      for (int c = 0; c < n_samples; ++c) {
        const double d = (pool[i] - centers[c]).squaredNorm();
        if (d < bestd) {
          bestd = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    std::vector<Vec3> sums(n_samples, Vec3::Zero());
    std::fill(counts.begin(), counts.end(), 0);
    for (int i = 0; i < pool_size; ++i) {
      sums[assign[i]] += pool[i];
      counts[assign[i]]++;
    }
    for (int c = 0; c < n_samples; ++c)
      if (counts[c] > 0) centers[c] = sums[c] / counts[c];
    if (!changed && iter > 0) break;
  }

  std::vector<Disturbance> out(n_samples);
  for (int c = 0; c < n_samples; ++c) {
    out[c].delta = centers[c];
    out[c].p_base = total_probability * counts[c] / static_cast<double>(pool_size);
  }
  return out;
}

}  // namespace caplan
