#include "artic/geometry.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>

namespace artic {

namespace {

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

}  // namespace

void RigidTransform::reorthonormalize() {
  Eigen::JacobiSVD<Mat3> svd(rotation_, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0) {
    Mat3 flip = Mat3::Identity();
    flip(2, 2) = -1;
    r = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  rotation_ = r;
  chain_ = 0;
}

bool RigidTransform::is_valid(double tol) const {
  if (!rotation_.allFinite() || !translation_.allFinite()) return false;
  if ((rotation_.transpose() * rotation_ - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(rotation_.determinant() - 1.0) <= tol;
}

RigidTransform fit_rigid_transform(std::span<const Vec3> src, std::span<const Vec3> dst,
                                   std::span<const double> weights) {
  const std::size_t n = src.size();
  if (n < 3 || dst.size() != n || (!weights.empty() && weights.size() != n))
    throw DegenerateConfiguration("fit_rigid_transform needs >= 3 matched weighted points");
  auto w = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };

  double wsum = 0;
  Vec3 cs = Vec3::Zero(), cd = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    wsum += w(i);
    cs += w(i) * src[i];
    cd += w(i) * dst[i];
  }
  if (wsum <= 0) throw DegenerateConfiguration("non-positive total weight");
  cs /= wsum;
  cd /= wsum;

  Mat3 cov = Mat3::Zero();
  for (std::size_t i = 0; i < n; ++i)
    cov += w(i) * (src[i] - cs) * (dst[i] - cd).transpose();
  cov /= wsum;

  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sigma = svd.singularValues();
  if (sigma(1) <= 1e-12 * std::max(sigma(0), 1e-300))
    throw DegenerateConfiguration("weighted covariance has effective rank < 2");

  Mat3 d = Mat3::Identity();
  // Umeyama correction: reflect along the weakest direction if needed.
  if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0) d(2, 2) = -1;
  const Mat3 r = svd.matrixV() * d * svd.matrixU().transpose();
  return RigidTransform(r, cd - r * cs);
}

ScrewDecomposition screw_decompose(const RigidTransform& T) {
  ScrewDecomposition out;

  const Eigen::AngleAxisd aa(T.rotation());
  const double angle = aa.angle();
  if (angle >= 1e-6) {
    const Vec3 axis = aa.axis().normalized();
    const Vec3 t = T.translation();
    const Vec3 t_perp = t - axis.dot(t) * axis;
    // (I - R) p = t_perp has a one-dimensional null space along the axis;
    // adding axis*axis^T pins a.p = 0, i.e. the canonical pivot.
    const Mat3 m = Mat3::Identity() - T.rotation() + axis * axis.transpose();
    const Vec3 pivot = m.fullPivLu().solve(t_perp);
    out.revolute = ScrewDecomposition::Revolute{axis, pivot, angle};
  }

  const double dist = T.translation().norm();
  if (dist >= 1e-9)
    out.prismatic = ScrewDecomposition::Prismatic{T.translation() / dist, dist};

  return out;
}

RigidTransform apply_joint(const JointModel& joint, double state) {
  if (joint.type == JointType::Prismatic)
    return RigidTransform(Mat3::Identity(), state * joint.axis);
  const Mat3 r = Eigen::AngleAxisd(state, joint.axis).toRotationMatrix();
  return RigidTransform(r, joint.pivot - r * joint.pivot);
}

double chamfer_one_directional(std::span<const Vec3> query, const KdTree& target_index,
                               std::span<const double> weights) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < query.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    if (w == 0) continue;
    num += w * target_index.nearest(query[i]).distance;
    den += w;
  }
  return den > 0 ? num / den : 0.0;
}

Mat3 rotation_vector_jacobian(const Vec3& w, const Vec3& v) {
  const double theta2 = w.squaredNorm();
  if (theta2 < 1e-16) return -skew(v);
  const Mat3 r = Eigen::AngleAxisd(w.norm(), w.normalized()).toRotationMatrix();
  const Vec3 rv = r * v;
  Mat3 jac;
  const Mat3 i_r = Mat3::Identity() - r;
  for (int i = 0; i < 3; ++i) {
    const Mat3 a = (w(i) * skew(w) + skew(w.cross(i_r.col(i)))) / theta2;
    jac.col(i) = a * rv;
  }
  return jac;
}

double rotation_geodesic_distance(const Mat3& a, const Mat3& b) {
  // Quaternion form: atan2 stays accurate for angles near 0 and pi, where the
  // acos((trace-1)/2) formula loses half the significant digits.
  const Eigen::Quaterniond q(Mat3(a.transpose() * b));
  const double s = q.vec().norm();
  const double c = std::abs(q.w());
  return 2.0 * std::atan2(s, c);
}

}  // namespace artic
