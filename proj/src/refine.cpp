#include "artic/refine.hpp"

#include "artic/geometry.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace artic {

namespace {

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

Mat3 rotation_exp(const Vec3& w) {
  const double theta = w.norm();
  if (theta < 1e-14) return Mat3::Identity() + skew(w);
  return Eigen::AngleAxisd(theta, w / theta).toRotationMatrix();
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct Layout {
  int frames = 0;
  int cam_off = 0;
  int axis_off = 0;
  int pivot_off = -1;  // -1 when prismatic
  int states_off = 0;
  int logits_off = 0;
  int total = 0;
};

Layout make_layout(const RefineProblem& problem, JointType hypothesis) {
  Layout l;
  l.frames = problem.frame_dim();
  l.cam_off = 0;
  l.axis_off = 6 * (l.frames - 1);
  int off = l.axis_off + 3;
  if (hypothesis == JointType::Revolute) {
    l.pivot_off = off;
    off += 3;
  }
  l.states_off = off;
  off += l.frames - 1;
  l.logits_off = off;
  l.total = off + problem.moving_dim;
  return l;
}

// d(Rod(axis, theta) v)/dtheta
Vec3 rodrigues_dtheta(const Vec3& axis, double theta, const Vec3& v) {
  return -std::sin(theta) * v + std::cos(theta) * axis.cross(v) +
         std::sin(theta) * axis.dot(v) * axis;
}

}  // namespace

RigidTransform RefineState::camera_pose(int k) const {
  if (k == 0) return camera_base[0];
  const Eigen::Matrix<double, 6, 1>& d = camera_delta[k];
  const Vec3 w = d.head<3>();
  const Vec3 u = d.tail<3>();
  return camera_base[k] * RigidTransform(rotation_exp(w), u);
}

JointModel RefineState::joint_model() const {
  JointModel joint;
  joint.type = hypothesis;
  joint.axis = axis_raw.normalized();
  joint.pivot = hypothesis == JointType::Revolute ? pivot : Vec3::Zero();
  return joint;
}

Eigen::VectorXd RefineState::moving_probabilities() const {
  Eigen::VectorXd v(logits.size());
  for (Eigen::Index i = 0; i < logits.size(); ++i) v[i] = sigmoid(logits[i]);
  return v;
}

int RefineProblem::dof(JointType hypothesis) const {
  return make_layout(*this, hypothesis).total;
}

RefineProblem build_refine_problem(const Dataset& data, const std::vector<int>& selected,
                                   const PipelineConfig& config, std::uint64_t seed) {
  RefineProblem problem;
  problem.data = &data;
  problem.selected = selected;
  problem.surface_index = KdTree(data.surface.points);
  problem.config = config;
  problem.seed = seed;

  problem.segment_slot.assign(data.segments.size(), -1);
  for (std::size_t si = 0; si < data.segments.size(); ++si)
    if (data.segments[si].present_in_frame0) problem.segment_slot[si] = problem.moving_dim++;

  problem.frame_points.resize(selected.size());
  for (std::size_t k = 0; k < selected.size(); ++k) {
    const int t = selected[k];
    const FrameObservation& frame = data.frames[t];
    auto& fp = problem.frame_points[k];
    for (std::size_t i = 0; i < frame.points.size(); ++i) {
      const int pix = frame.pixels[i];
      std::vector<int> slots;
      bool newly = false;
      for (std::size_t si = 0; si < data.segments.size(); ++si) {
        if (!data.segments[si].masks[t][pix]) continue;
        if (problem.segment_slot[si] < 0)
          newly = true;
        else
          slots.push_back(problem.segment_slot[si]);
      }
      if (newly || slots.empty()) continue;  // untracked or newly-observed: no loss weight
      fp.point_index.push_back(static_cast<int>(i));
      fp.slots.push_back(std::move(slots));
    }
  }
  return problem;
}

Eigen::VectorXd init_moving_vector(const std::vector<SegmentTrack>& tracks,
                                   const std::vector<MovingMap>& maps,
                                   const std::vector<int>& selected,
                                   const PipelineConfig& config) {
  std::vector<double> values;
  for (const auto& track : tracks) {
    std::int64_t area = 0, inter = 0;
    for (int t : selected) {
      const auto& mask = track.masks[t];
      const auto& map = maps[t];
      for (std::size_t pix = 0; pix < mask.size(); ++pix) {
        if (!mask[pix]) continue;
        ++area;
        if (map[pix] >= 0.5f) ++inter;
      }
    }
    if (area == 0) {
      // Also empty outside the selection?
      bool any = false;
      for (const auto& mask : track.masks)
        for (std::uint8_t m : mask)
          if (m) any = true;
      if (!any) throw EmptySegment(track.id);
    }
    if (!track.present_in_frame0) continue;
    if (area == 0) throw EmptySegment(track.id);
    values.push_back(static_cast<double>(inter) / static_cast<double>(area));
  }

  Eigen::VectorXd logits(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    // Majority vote over the segment's pixels: per-pixel map errors are
    // independent, so the segment-level overlap ratio is a far more
    // reliable signal than its raw value. A mid-range start would also keep
    // both mixture branches active, dragging the geometric parameters
    // toward a compromise between the static and moved surface.
    const double v = values[i] >= 0.5 ? config.moving_vector_clamp_hi
                                      : config.moving_vector_clamp_lo;
    logits[static_cast<Eigen::Index>(i)] = std::log(v / (1.0 - v));
  }
  return logits;
}

Correspondences associate(const RefineProblem& problem, const RefineState& state, int iteration,
                          bool subsample) {
  const int f = problem.frame_dim();
  Correspondences corr(f);
  const JointModel joint = state.joint_model();
  const Eigen::VectorXd v = state.moving_probabilities();
  const double wcut = problem.config.moving_vector_clamp_lo + 1e-9;

  for (int k = 0; k < f; ++k) {
    const auto& fp = problem.frame_points[k];
    const int n = static_cast<int>(fp.point_index.size());
    auto& fc = corr[k];

    fc.sample.resize(n);
    std::iota(fc.sample.begin(), fc.sample.end(), 0);
    if (subsample && n > 1) {
      auto rng = seeded_stream(problem.seed,
                               100000ULL + 1009ULL * static_cast<std::uint64_t>(iteration) + k);
      std::shuffle(fc.sample.begin(), fc.sample.end(), rng);
      fc.sample.resize(std::max<std::size_t>(
          1, static_cast<std::size_t>(std::ceil(n * problem.config.point_subsample))));
      std::sort(fc.sample.begin(), fc.sample.end());
    }

    const RigidTransform pose = state.camera_pose(k);
    const RigidTransform undo = apply_joint(joint, -state.states[k]);
    const FrameObservation& frame = problem.data->frames[problem.selected[k]];

    fc.target_static.reserve(fc.sample.size());
    fc.target_dynamic.reserve(fc.sample.size());
    for (int pos : fc.sample) {
      double m_raw = 0;
      for (int d : fp.slots[pos]) m_raw += v[d];
      const double m = std::min(m_raw, 1.0);

      // Branches whose mixture weight is at the clamp floor carry no loss
      // (see evaluate); skip their lookups.
      const Vec3 z = pose * frame.points[fp.point_index[pos]];
      fc.target_static.push_back(
          1 - m > wcut ? problem.surface_index.points()[problem.surface_index.nearest(z).index]
                       : z);
      const Vec3 yd = undo * z;
      fc.target_dynamic.push_back(
          m > wcut ? problem.surface_index.points()[problem.surface_index.nearest(yd).index]
                   : yd);
    }
  }
  return corr;
}

namespace {

/// Shared forward/backward implementation; grad may be null.
double evaluate(const RefineProblem& problem, const RefineState& state,
                const Correspondences& corr, Eigen::VectorXd* grad, double* out_static,
                double* out_dynamic) {
  const int f = problem.frame_dim();
  const Layout layout = make_layout(problem, state.hypothesis);
  const bool revolute = state.hypothesis == JointType::Revolute;

  if (grad) grad->setZero(layout.total);

  const Eigen::VectorXd v = state.moving_probabilities();
  const double wcut = problem.config.moving_vector_clamp_lo + 1e-9;
  const Vec3 axis = state.axis_raw.normalized();
  const double axis_norm = state.axis_raw.norm();
  const Mat3 axis_jac = (Mat3::Identity() - axis * axis.transpose()) / axis_norm;

  Vec3 grad_axis = Vec3::Zero();  // w.r.t. the normalized axis; chained once at the end

  double total_static = 0, total_dynamic = 0;

  // scratch, reused across frames
  std::vector<double> sm, sds, sdd;
  std::vector<Vec3> sz, sus, sud;

  for (int k = 0; k < f; ++k) {
    const auto& fp = problem.frame_points[k];
    const auto& fc = corr[k];
    const std::size_t n = fc.sample.size();
    if (n == 0) continue;

    const RigidTransform pose = state.camera_pose(k);
    const double theta = -state.states[k];
    const Mat3 rot_undo =
        revolute ? Eigen::AngleAxisd(theta, axis).toRotationMatrix() : Mat3::Identity();
    const FrameObservation& frame = problem.data->frames[problem.selected[k]];

    sm.resize(n);
    sds.resize(n);
    sdd.resize(n);
    sz.resize(n);
    sus.resize(n);
    sud.resize(n);

    double num_s = 0, den_s = 0, num_d = 0, den_d = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const int pos = fc.sample[i];
      const Vec3 x = frame.points[fp.point_index[pos]];
      const Vec3 z = pose * x;
      double m_raw = 0;
      for (int d : fp.slots[pos]) m_raw += v[d];
      const double m = std::min(m_raw, 1.0);

      Vec3 yd;
      if (revolute)
        yd = rot_undo * (z - state.pivot) + state.pivot;
      else
        yd = z + theta * axis;  // theta = -s_t

      const Vec3 rs = z - fc.target_static[i];
      const Vec3 rd = yd - fc.target_dynamic[i];
      const double ds = rs.norm();
      const double dd = rd.norm();

      sm[i] = m;
      sds[i] = ds;
      sdd[i] = dd;
      sz[i] = z;
      sus[i] = ds > 1e-12 ? Vec3(rs / ds) : Vec3::Zero();
      sud[i] = dd > 1e-12 ? Vec3(rd / dd) : Vec3::Zero();

      // Mixture weights at the clamp floor count as certainty: the branch
      // carries no loss. Without this a confidently static point would keep
      // a residual pull toward the moved surface (and vice versa), biasing
      // the optimum away from the true configuration.
      const double ws = 1 - m > wcut ? 1 - m : 0.0;
      const double wd = m > wcut ? m : 0.0;
      num_s += ws * ds;
      den_s += ws;
      num_d += wd * dd;
      den_d += wd;
    }

    const double loss_s = den_s > 1e-12 ? num_s / den_s : 0.0;
    const double loss_d = den_d > 1e-12 ? num_d / den_d : 0.0;
    total_static += loss_s;
    total_dynamic += loss_d;

    if (!grad) continue;

    const double inv_f = 1.0 / f;
    Mat3 delta_a[3];
    Mat3 rot_base = pose.rotation();
    Mat3 rot_inc = Mat3::Identity();
    bool cam_free = k > 0;
    Vec3 w = Vec3::Zero();
    if (cam_free) {
      w = state.camera_delta[k].head<3>();
      rot_inc = rotation_exp(w);
      rot_base = state.camera_base[k].rotation();
      const double w2 = w.squaredNorm();
      if (w2 >= 1e-16) {
        const Mat3 i_r = Mat3::Identity() - rot_inc;
        for (int c = 0; c < 3; ++c)
          delta_a[c] = (w(c) * skew(w) + skew(w.cross(i_r.col(c)))) / w2;
      }
    }

    for (std::size_t i = 0; i < n; ++i) {
      const int pos = fc.sample[i];
      const double m = sm[i];
      const double ws = 1 - m > wcut ? 1 - m : 0.0;
      const double wd = m > wcut ? m : 0.0;
      const double cs = den_s > 1e-12 ? ws / den_s * inv_f : 0.0;
      const double cd = den_d > 1e-12 ? wd / den_d * inv_f : 0.0;

      // gradient w.r.t. the camera-transformed point z
      const Vec3 gz = cs * sus[i] + cd * (revolute ? Vec3(rot_undo.transpose() * sud[i]) : sud[i]);

      if (cam_free && !gz.isZero()) {
        const Vec3 g_local = rot_base.transpose() * gz;
        grad->segment<3>(layout.cam_off + 6 * (k - 1) + 3) += g_local;  // translation
        const Vec3 x = problem.data->frames[problem.selected[k]].points[fp.point_index[pos]];
        const Vec3 rx = rot_inc * x;
        Vec3 gw;
        if (w.squaredNorm() >= 1e-16)
          for (int c = 0; c < 3; ++c) gw(c) = (delta_a[c] * rx).dot(g_local);
        else
          gw = -skew(rx).transpose() * g_local;  // = rx x g_local
        grad->segment<3>(layout.cam_off + 6 * (k - 1)) += gw;
      }

      if (cd != 0.0 && k > 0) {  // s_0 frozen; at s=0 the joint grads vanish anyway
        const Vec3& ud = sud[i];
        if (revolute) {
          const Vec3 lever = sz[i] - state.pivot;
          // state (theta = -s)
          grad->coeffRef(layout.states_off + (k - 1)) +=
              cd * ud.dot(-rodrigues_dtheta(axis, theta, lever));
          // pivot
          grad->segment<3>(layout.pivot_off) +=
              cd * ((Mat3::Identity() - rot_undo).transpose() * ud);
          // axis (normalized)
          const Mat3 j_axis = -std::sin(theta) * skew(lever) +
                              (1 - std::cos(theta)) *
                                  (axis * lever.transpose() + axis.dot(lever) * Mat3::Identity());
          grad_axis += cd * (j_axis.transpose() * ud);
        } else {
          grad->coeffRef(layout.states_off + (k - 1)) += cd * (-axis).dot(ud);
          grad_axis += cd * theta * ud;  // y_d = z - s*axis, theta = -s
        }
      }

      // moving-vector logits
      double m_raw = 0;
      for (int d : fp.slots[pos]) m_raw += v[d];
      if (m_raw < 1.0) {
        double dl_dm = 0;
        if (ws > 0 && den_s > 1e-12)
          dl_dm += (num_s - sds[i] * den_s) / (den_s * den_s) * inv_f;
        if (wd > 0 && den_d > 1e-12)
          dl_dm += (sdd[i] * den_d - num_d) / (den_d * den_d) * inv_f;
        for (int d : fp.slots[pos])
          grad->coeffRef(layout.logits_off + d) += dl_dm * v[d] * (1 - v[d]);
      }
    }

    // states gradient for frame 0 does not exist (frozen), handled above.
  }

  if (grad) grad->segment<3>(layout.axis_off) += axis_jac.transpose() * grad_axis;

  if (out_static) *out_static = total_static / f;
  if (out_dynamic) *out_dynamic = total_dynamic / f;
  return (total_static + total_dynamic) / f;
}

}  // namespace

double forward_loss(const RefineProblem& problem, const RefineState& state,
                    const Correspondences& corr, double* l_static, double* l_dynamic) {
  return evaluate(problem, state, corr, nullptr, l_static, l_dynamic);
}

double loss_and_grad(const RefineProblem& problem, const RefineState& state,
                     const Correspondences& corr, Eigen::VectorXd* grad, double* l_static,
                     double* l_dynamic) {
  return evaluate(problem, state, corr, grad, l_static, l_dynamic);
}

Eigen::VectorXd pack_state(const RefineProblem& problem, const RefineState& state) {
  const Layout layout = make_layout(problem, state.hypothesis);
  Eigen::VectorXd x(layout.total);
  for (int k = 1; k < layout.frames; ++k)
    x.segment<6>(layout.cam_off + 6 * (k - 1)) = state.camera_delta[k];
  x.segment<3>(layout.axis_off) = state.axis_raw;
  if (layout.pivot_off >= 0) x.segment<3>(layout.pivot_off) = state.pivot;
  for (int k = 1; k < layout.frames; ++k) x[layout.states_off + (k - 1)] = state.states[k];
  x.segment(layout.logits_off, problem.moving_dim) = state.logits;
  return x;
}

void unpack_state(const RefineProblem& problem, const Eigen::VectorXd& x, RefineState* state) {
  const Layout layout = make_layout(problem, state->hypothesis);
  for (int k = 1; k < layout.frames; ++k)
    state->camera_delta[k] = x.segment<6>(layout.cam_off + 6 * (k - 1));
  state->axis_raw = x.segment<3>(layout.axis_off);
  if (layout.pivot_off >= 0) state->pivot = x.segment<3>(layout.pivot_off);
  for (int k = 1; k < layout.frames; ++k) state->states[k] = x[layout.states_off + (k - 1)];
  state->logits = x.segment(layout.logits_off, problem.moving_dim);
}

RefineState make_initial_state(const RefineProblem& problem, const CoarseEstimate& coarse,
                               JointType hypothesis) {
  const int f = problem.frame_dim();
  RefineState state;
  state.hypothesis = hypothesis;
  state.camera_base = coarse.cameras;
  state.camera_delta.assign(f, Eigen::Matrix<double, 6, 1>::Zero());
  state.states.assign(f, 0.0);

  const auto& own = coarse.hypothesis(hypothesis);
  const auto& other = coarse.hypothesis(hypothesis == JointType::Revolute ? JointType::Prismatic
                                                                          : JointType::Revolute);
  const auto& source = own.valid ? own : other;
  if (own.valid || other.valid) {
    state.axis_raw = source.axis;
    state.pivot = source.pivot;
    state.states = source.states;
  }
  if (hypothesis == JointType::Revolute && (!own.valid || state.pivot.norm() < 1e-12)) {
    // No revolute pivot from coarse: seed with the axis line through the
    // surface centroid.
    Vec3 centroid = Vec3::Zero();
    for (const Vec3& p : problem.data->surface.points) centroid += p;
    centroid /= std::max<std::size_t>(1, problem.data->surface.size());
    const Vec3 a = state.axis_raw.normalized();
    state.pivot = centroid - a.dot(centroid) * a;
  }
  state.logits =
      init_moving_vector(problem.data->segments, problem.data->maps, problem.selected,
                         problem.config);
  return state;
}

RefineState optimize(const RefineProblem& problem, const RefineState& initial) {
  RefineState state = initial;
  state.history.clear();
  const Layout layout = make_layout(problem, state.hypothesis);
  const PipelineConfig& cfg = problem.config;

  Eigen::VectorXd x = pack_state(problem, state);
  Eigen::VectorXd m = Eigen::VectorXd::Zero(layout.total);
  Eigen::VectorXd vv = Eigen::VectorXd::Zero(layout.total);
  Eigen::VectorXd grad(layout.total);

  for (int iter = 1; iter <= cfg.adam_iterations; ++iter) {
    const Correspondences corr = associate(problem, state, iter, true);
    double ls, ld;
    const double loss = loss_and_grad(problem, state, corr, &grad, &ls, &ld);
    if (!std::isfinite(loss)) throw NonFiniteLoss(iter);
    state.history.push_back({ls, ld, loss});

    m = cfg.adam_beta1 * m + (1 - cfg.adam_beta1) * grad;
    vv = cfg.adam_beta2 * vv.array().matrix() +
         (1 - cfg.adam_beta2) * grad.cwiseProduct(grad);
    const double bc1 = 1 - std::pow(cfg.adam_beta1, iter);
    const double bc2 = 1 - std::pow(cfg.adam_beta2, iter);
    for (int i = 0; i < layout.total; ++i)
      x[i] -= cfg.adam_lr * (m[i] / bc1) / (std::sqrt(vv[i] / bc2) + cfg.adam_epsilon);
    unpack_state(problem, x, &state);
  }

  const Correspondences full = associate(problem, state, 0, false);
  state.final_loss = forward_loss(problem, state, full);
  return state;
}

std::vector<MovingMap> reconstruct_moving_maps(const RefineProblem& problem,
                                               const RefineState& state) {
  const Dataset& data = *problem.data;
  const std::size_t n_pix = static_cast<std::size_t>(data.height) * data.width;
  const Eigen::VectorXd v = state.moving_probabilities();

  std::vector<MovingMap> maps(problem.selected.size());
  for (std::size_t k = 0; k < problem.selected.size(); ++k) {
    maps[k].assign(n_pix, 0.0f);
    const int t = problem.selected[k];
    for (std::size_t si = 0; si < data.segments.size(); ++si) {
      const int slot = problem.segment_slot[si];
      if (slot < 0) continue;
      const auto& mask = data.segments[si].masks[t];
      for (std::size_t pix = 0; pix < n_pix; ++pix)
        if (mask[pix]) maps[k][pix] = std::min(1.0f, maps[k][pix] + static_cast<float>(v[slot]));
    }
  }
  return maps;
}

JointSelection select_joint_type(const RefineState& revolute, const RefineState& prismatic,
                                 const RefineProblem& problem) {
  JointSelection sel;

  const Vec3 a = revolute.axis_raw.normalized();
  double min_dist = std::numeric_limits<double>::infinity();
  for (const Vec3& p : problem.data->surface.points) {
    const Vec3 r = p - revolute.pivot;
    min_dist = std::min(min_dist, (r - a.dot(r) * a).norm());
  }
  sel.axis_surface_distance = min_dist;

  if (min_dist > problem.config.prismatic_axis_distance) {
    sel.type = JointType::Prismatic;
    sel.forced_prismatic = true;
  } else {
    sel.type = revolute.final_loss <= prismatic.final_loss ? JointType::Revolute
                                                           : JointType::Prismatic;
  }

  const RefineState& winner = sel.type == JointType::Revolute ? revolute : prismatic;
  sel.joint = winner.joint_model();
  sel.joint.canonicalize();
  sel.states.states = winner.states;
  sel.maps = reconstruct_moving_maps(problem, winner);
  return sel;
}

}  // namespace artic
