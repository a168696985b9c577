#pragma once

#include "artic/geometry.hpp"
#include "artic/synth.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace artic::testutil {

inline Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Eigen::Quaterniond q(nd(rng), nd(rng), nd(rng), nd(rng));
  q.normalize();
  return q.toRotationMatrix();
}

inline Vec3 random_vec(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd;
  return scale * Vec3(nd(rng), nd(rng), nd(rng));
}

inline Vec3 random_unit(std::mt19937_64& rng) {
  Vec3 v;
  do {
    v = random_vec(rng);
  } while (v.norm() < 1e-6);
  return v.normalized();
}

inline std::vector<Vec3> random_cloud(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::vector<Vec3> out(n);
  for (auto& p : out) p = random_vec(rng, scale);
  return out;
}

/// Angle between undirected axis directions; atan2 keeps full precision
/// near 0, where acos of the dot product bottoms out around 1.5e-8.
inline double undirected_angle(const Vec3& a, const Vec3& b) {
  const Vec3 an = a.normalized(), bn = b.normalized();
  return std::atan2(an.cross(bn).norm(), std::abs(an.dot(bn)));
}

/// Distance from a point to the infinite line {pivot + t * axis}.
inline double point_line_distance(const Vec3& p, const Vec3& pivot, const Vec3& axis) {
  return ((p - pivot) - axis.dot(p - pivot) * axis).norm();
}

}  // namespace artic::testutil
