#pragma once

#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "fleetsim/event_loop.hpp"

namespace fleetsim::tf {

struct FrameMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct Disconnected : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct Extrapolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MultiRoot : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CycleDetected : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmptyTree : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnmappedObject : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Vec3 {
  double x = 0, y = 0, z = 0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

struct Quat {
  double w = 1, x = 0, y = 0, z = 0;

  static Quat identity() { return {}; }
  static Quat from_axis_angle(const Vec3& axis, double angle_rad);

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
  Quat normalized() const;
  Quat conjugate() const { return {w, -x, -y, -z}; }
  Quat operator*(const Quat& q) const {
    return {w * q.w - x * q.x - y * q.y - z * q.z,
            w * q.x + x * q.w + y * q.z - z * q.y,
            w * q.y - x * q.z + y * q.w + z * q.x,
            w * q.z + x * q.y - y * q.x + z * q.w};
  }
  Vec3 rotate(const Vec3& v) const;
  double dot(const Quat& q) const {
    return w * q.w + x * q.x + y * q.y + z * q.z;
  }
};

// Shortest-arc spherical linear interpolation, u in [0, 1].
Quat slerp(const Quat& a, const Quat& b, double u);

using FrameId = std::string;

struct Transform {
  FrameId parent;
  FrameId child;
  Vec3 translation;
  Quat rotation;
  sim::TimeUs stamp = 0;
  bool static_flag = false;
};

// Renormalizes the rotation; throws on a degenerate (near-zero) quaternion.
Transform make_transform(FrameId parent, FrameId child, Vec3 translation,
                         Quat rotation, sim::TimeUs stamp = 0,
                         bool static_flag = false);

// Requires a.child == b.parent; the result spans a.parent -> b.child.
Transform compose(const Transform& a, const Transform& b);
Transform invert(const Transform& t);

// Parent/child rigid-transform forest with per-edge time history. Each child
// has exactly one parent at a time; dynamic edges keep timestamped samples.
class TfTree {
 public:
  void insert(const Transform& t);

  bool has_frame(const FrameId& f) const { return frames_.count(f) > 0; }

  // Transform spanning target -> source at `time`, chaining (and inverting)
  // edges along the unique tree path.
  Transform lookup(const FrameId& target, const FrameId& source,
                   sim::TimeUs time) const;

  // The unique parentless frame among `frames` (a parent outside the set also
  // counts as parentless). Throws EmptyTree / CycleDetected / MultiRoot.
  FrameId validate_single_root(const std::set<FrameId>& frames) const;

  std::set<FrameId> frames() const { return frames_; }

 private:
  struct Edge {
    FrameId parent;
    bool static_flag = false;
    // (stamp, transform), sorted by stamp; static edges keep one sample.
    std::vector<std::pair<sim::TimeUs, Transform>> samples;
  };

  const Edge* edge_of(const FrameId& child) const;
  Transform edge_at(const Edge& edge, sim::TimeUs time) const;

  std::map<FrameId, Edge> edges_;  // keyed by child
  std::set<FrameId> frames_;
};

// Tracked-object id -> marker frame. Injective: two objects cannot share a
// target frame.
class ViconMapping {
 public:
  void add(const std::string& object_id, const FrameId& marker_frame);
  const FrameId* find(const std::string& object_id) const;

 private:
  std::map<std::string, FrameId> by_object_;
  std::set<FrameId> used_frames_;
};

// Proxy-frame publication: looks up markers -> base inside the description,
// composes it with the measured map -> markers pose and inserts only the
// resulting map -> base edge, leaving the description single-rooted.
Transform vicon_bridge_publish(TfTree& tree, const ViconMapping& mapping,
                               const std::string& object_id,
                               const Transform& map_to_markers,
                               const FrameId& base_frame);

}  // namespace fleetsim::tf
