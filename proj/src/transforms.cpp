#include "fleetsim/transforms.hpp"

#include <algorithm>

namespace fleetsim::tf {

Quat Quat::from_axis_angle(const Vec3& axis, double angle_rad) {
  double n = axis.norm();
  if (n < 1e-12) return identity();
  double half = angle_rad / 2.0;
  double s = std::sin(half) / n;
  return Quat{std::cos(half), axis.x * s, axis.y * s, axis.z * s};
}

Quat Quat::normalized() const {
  double n = norm();
  if (n < 1e-12) {
    throw std::invalid_argument("cannot normalize near-zero quaternion");
  }
  return {w / n, x / n, y / n, z / n};
}

Vec3 Quat::rotate(const Vec3& v) const {
  Quat p{0, v.x, v.y, v.z};
  Quat r = (*this) * p * conjugate();
  return {r.x, r.y, r.z};
}

Quat slerp(const Quat& a, const Quat& b, double u) {
  Quat bb = b;
  double d = a.dot(b);
  if (d < 0) {  // shortest arc
    bb = {-b.w, -b.x, -b.y, -b.z};
    d = -d;
  }
  if (d > 1.0 - 1e-10) {
    Quat out{a.w + (bb.w - a.w) * u, a.x + (bb.x - a.x) * u,
             a.y + (bb.y - a.y) * u, a.z + (bb.z - a.z) * u};
    return out.normalized();
  }
  double theta = std::acos(std::clamp(d, -1.0, 1.0));
  double s = std::sin(theta);
  double ka = std::sin((1.0 - u) * theta) / s;
  double kb = std::sin(u * theta) / s;
  return Quat{a.w * ka + bb.w * kb, a.x * ka + bb.x * kb, a.y * ka + bb.y * kb,
              a.z * ka + bb.z * kb};
}

Transform make_transform(FrameId parent, FrameId child, Vec3 translation,
                         Quat rotation, sim::TimeUs stamp, bool static_flag) {
  Transform t;
  t.parent = std::move(parent);
  t.child = std::move(child);
  t.translation = translation;
  t.rotation = rotation.normalized();
  t.stamp = stamp;
  t.static_flag = static_flag;
  return t;
}

Transform compose(const Transform& a, const Transform& b) {
  if (a.child != b.parent) {
    throw FrameMismatch("compose: '" + a.child + "' != '" + b.parent + "'");
  }
  Transform out;
  out.parent = a.parent;
  out.child = b.child;
  out.rotation = (a.rotation * b.rotation).normalized();
  out.translation = a.translation + a.rotation.rotate(b.translation);
  out.stamp = std::max(a.stamp, b.stamp);
  out.static_flag = a.static_flag && b.static_flag;
  return out;
}

Transform invert(const Transform& t) {
  Transform out;
  out.parent = t.child;
  out.child = t.parent;
  out.rotation = t.rotation.conjugate();
  out.translation = -(out.rotation.rotate(t.translation));
  out.stamp = t.stamp;
  out.static_flag = t.static_flag;
  return out;
}

void TfTree::insert(const Transform& t) {
  frames_.insert(t.parent);
  frames_.insert(t.child);
  Edge& edge = edges_[t.child];
  if (edge.parent != t.parent) {
    // Reparenting replaces the edge history.
    edge.parent = t.parent;
    edge.samples.clear();
  }
  edge.static_flag = t.static_flag;
  if (t.static_flag) {
    edge.samples.assign(1, {t.stamp, t});
    return;
  }
  auto pos = std::upper_bound(
      edge.samples.begin(), edge.samples.end(), t.stamp,
      [](sim::TimeUs stamp, const auto& s) { return stamp < s.first; });
  edge.samples.insert(pos, {t.stamp, t});
}

const TfTree::Edge* TfTree::edge_of(const FrameId& child) const {
  auto it = edges_.find(child);
  return it == edges_.end() ? nullptr : &it->second;
}

Transform TfTree::edge_at(const Edge& edge, sim::TimeUs time) const {
  if (edge.samples.empty()) {
    throw Extrapolation("edge has no samples");
  }
  if (edge.static_flag) return edge.samples.front().second;
  // Latest sample at or before `time`.
  auto it = std::upper_bound(
      edge.samples.begin(), edge.samples.end(), time,
      [](sim::TimeUs t, const auto& s) { return t < s.first; });
  if (it == edge.samples.begin()) {
    throw Extrapolation("no sample at or before requested time");
  }
  return std::prev(it)->second;
}

Transform TfTree::lookup(const FrameId& target, const FrameId& source,
                         sim::TimeUs time) const {
  if (!has_frame(target) || !has_frame(source)) {
    throw Disconnected("unknown frame '" +
                       (has_frame(target) ? source : target) + "'");
  }
  if (target == source) {
    return make_transform(target, source, {}, Quat::identity(), time);
  }

  // Ancestor chains with cycle guards.
  auto ancestors = [this](const FrameId& f) {
    std::vector<FrameId> chain{f};
    std::set<FrameId> seen{f};
    const Edge* e = edge_of(f);
    while (e) {
      if (!seen.insert(e->parent).second) {
        throw CycleDetected("cycle through frame '" + e->parent + "'");
      }
      chain.push_back(e->parent);
      e = edge_of(e->parent);
    }
    return chain;
  };

  std::vector<FrameId> target_chain = ancestors(target);
  std::vector<FrameId> source_chain = ancestors(source);
  std::map<FrameId, size_t> target_depth;
  for (size_t i = 0; i < target_chain.size(); ++i) {
    target_depth[target_chain[i]] = i;
  }
  size_t source_idx = 0;
  FrameId common;
  for (; source_idx < source_chain.size(); ++source_idx) {
    if (target_depth.count(source_chain[source_idx])) {
      common = source_chain[source_idx];
      break;
    }
  }
  if (common.empty() && source_idx == source_chain.size()) {
    throw Disconnected("'" + target + "' and '" + source +
                       "' are in different trees");
  }

  // T(common -> f): compose stored parent->child edges walking down to f.
  auto down_from_common = [&](const std::vector<FrameId>& chain,
                              size_t common_idx) {
    Transform acc = make_transform(common, common, {}, Quat::identity(), time);
    for (size_t i = common_idx; i > 0; --i) {
      const Edge* e = edge_of(chain[i - 1]);
      Transform step = edge_at(*e, time);
      acc = compose(acc, step);
    }
    return acc;
  };

  size_t target_idx = target_depth[common];
  Transform common_to_target = down_from_common(target_chain, target_idx);
  Transform common_to_source = down_from_common(source_chain, source_idx);
  Transform result = compose(invert(common_to_target), common_to_source);
  result.stamp = time;
  return result;
}

FrameId TfTree::validate_single_root(const std::set<FrameId>& frames) const {
  if (frames.empty()) throw EmptyTree("no frames to validate");

  // Cycle scan: follow parents while they stay inside the set.
  for (const FrameId& start : frames) {
    std::set<FrameId> seen{start};
    const Edge* e = edge_of(start);
    while (e && frames.count(e->parent)) {
      if (!seen.insert(e->parent).second) {
        throw CycleDetected("cycle through frame '" + e->parent + "'");
      }
      e = edge_of(e->parent);
    }
  }

  std::vector<FrameId> roots;
  for (const FrameId& f : frames) {
    const Edge* e = edge_of(f);
    if (!e || !frames.count(e->parent)) roots.push_back(f);
  }
  if (roots.empty()) {
    throw CycleDetected("no root found");
  }
  if (roots.size() > 1) {
    std::string msg = "multiple roots:";
    for (const auto& r : roots) msg += " '" + r + "'";
    throw MultiRoot(msg);
  }
  return roots.front();
}

void ViconMapping::add(const std::string& object_id,
                       const FrameId& marker_frame) {
  if (!used_frames_.insert(marker_frame).second) {
    throw std::invalid_argument("marker frame '" + marker_frame +
                                "' already mapped");
  }
  by_object_[object_id] = marker_frame;
}

const FrameId* ViconMapping::find(const std::string& object_id) const {
  auto it = by_object_.find(object_id);
  return it == by_object_.end() ? nullptr : &it->second;
}

Transform vicon_bridge_publish(TfTree& tree, const ViconMapping& mapping,
                               const std::string& object_id,
                               const Transform& map_to_markers,
                               const FrameId& base_frame) {
  const FrameId* markers = mapping.find(object_id);
  if (!markers) {
    throw UnmappedObject("no mapping for tracked object '" + object_id + "'");
  }
  // Remap the measured pose onto the description's marker frame; the raw
  // Vicon child name never enters the tree.
  Transform measured =
      make_transform(map_to_markers.parent, *markers,
                     map_to_markers.translation, map_to_markers.rotation,
                     map_to_markers.stamp, false);
  Transform markers_to_base =
      tree.lookup(*markers, base_frame, map_to_markers.stamp);
  Transform map_to_base = compose(measured, markers_to_base);
  map_to_base.stamp = map_to_markers.stamp;
  tree.insert(map_to_base);
  return map_to_base;
}

}  // namespace fleetsim::tf
