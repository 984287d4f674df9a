#include "fleetsim/trajectory.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace fleetsim::traj {

void validate(const Trajectory& trajectory) {
  if (trajectory.waypoints.empty()) {
    throw SchemaError("trajectory '" + trajectory.name + "' has no waypoints");
  }
  double prev = -std::numeric_limits<double>::infinity();
  for (const Waypoint& wp : trajectory.waypoints) {
    if (wp.t < 0) {
      throw SchemaError("waypoint time must be >= 0");
    }
    if (wp.t <= prev) {
      throw SchemaError("waypoint times must be strictly increasing");
    }
    prev = wp.t;
  }
}

Pose sample(const Trajectory& trajectory, double t) {
  validate(trajectory);
  const auto& wps = trajectory.waypoints;
  if (t <= wps.front().t) return wps.front().pose;
  if (t >= wps.back().t) return wps.back().pose;

  // Bracketing segment: wps[i].t <= t < wps[i+1].t.
  size_t hi = 1;
  while (wps[hi].t <= t) ++hi;
  const Waypoint& a = wps[hi - 1];
  const Waypoint& b = wps[hi];
  double u = (t - a.t) / (b.t - a.t);

  Pose out;
  out.position = a.pose.position +
                 (b.pose.position - a.pose.position) * u;
  out.orientation = tf::slerp(a.pose.orientation, b.pose.orientation, u);
  return out;
}

tf::Quat orientation_from_direction(const tf::Vec3& direction,
                                    const tf::Quat& fallback) {
  double n = direction.norm();
  if (n < 1e-12) return fallback;
  double dx = direction.x / n;
  double dy = direction.y / n;
  double dz = direction.z / n;
  if (std::hypot(dx, dy) < 1e-12) {
    return fallback;  // direction parallel to world z: yaw undefined
  }
  double yaw = std::atan2(dy, dx);
  double pitch = -std::asin(std::clamp(dz, -1.0, 1.0));
  tf::Quat qz = tf::Quat::from_axis_angle({0, 0, 1}, yaw);
  tf::Quat qy = tf::Quat::from_axis_angle({0, 1, 0}, pitch);
  return (qz * qy).normalized();
}

Trajectory apply_alignment(Trajectory trajectory, AlignmentMode mode) {
  if (mode == AlignmentMode::Manual) return trajectory;
  auto& wps = trajectory.waypoints;
  if (wps.size() < 2) {
    throw TooFewWaypoints("alignment needs at least two waypoints");
  }
  if (mode == AlignmentMode::AlignToNext) {
    for (size_t i = 0; i + 1 < wps.size(); ++i) {
      tf::Vec3 dir = wps[i + 1].pose.position - wps[i].pose.position;
      wps[i].pose.orientation =
          orientation_from_direction(dir, wps[i].pose.orientation);
    }
    wps.back().pose.orientation = wps[wps.size() - 2].pose.orientation;
  } else {
    for (size_t i = wps.size(); i-- > 1;) {
      tf::Vec3 dir = wps[i].pose.position - wps[i - 1].pose.position;
      wps[i].pose.orientation =
          orientation_from_direction(dir, wps[i].pose.orientation);
    }
    wps.front().pose.orientation = wps[1].pose.orientation;
  }
  return trajectory;
}

std::string serialize_scene(const Scene& scene) {
  for (const Trajectory& t : scene) validate(t);
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "trajectories" << YAML::Value << YAML::BeginSeq;
  for (const Trajectory& t : scene) {
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << t.name;
    out << YAML::Key << "frame" << YAML::Value << t.frame;
    out << YAML::Key << "waypoints" << YAML::Value << YAML::BeginSeq;
    for (const Waypoint& wp : t.waypoints) {
      out << YAML::BeginMap;
      out << YAML::Key << "t" << YAML::Value << wp.t;
      out << YAML::Key << "position" << YAML::Value << YAML::Flow
          << YAML::BeginSeq << wp.pose.position.x << wp.pose.position.y
          << wp.pose.position.z << YAML::EndSeq;
      out << YAML::Key << "orientation_wxyz" << YAML::Value << YAML::Flow
          << YAML::BeginSeq << wp.pose.orientation.w << wp.pose.orientation.x
          << wp.pose.orientation.y << wp.pose.orientation.z << YAML::EndSeq;
      out << YAML::EndMap;
    }
    out << YAML::EndSeq;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::EndMap;
  std::string text = out.c_str();
  text += '\n';
  return text;
}

namespace {

YAML::Node require(const YAML::Node& node, const char* key) {
  YAML::Node value = node[key];
  if (!value) {
    throw SchemaError(std::string("missing key '") + key + "'");
  }
  return value;
}

tf::Vec3 vec3_from(const YAML::Node& node) {
  if (!node.IsSequence() || node.size() != 3) {
    throw SchemaError("position must be a 3-element sequence");
  }
  return {node[0].as<double>(), node[1].as<double>(), node[2].as<double>()};
}

tf::Quat quat_from(const YAML::Node& node) {
  if (!node.IsSequence() || node.size() != 4) {
    throw SchemaError("orientation_wxyz must be a 4-element sequence");
  }
  return tf::Quat{node[0].as<double>(), node[1].as<double>(),
                  node[2].as<double>(), node[3].as<double>()}
      .normalized();
}

}  // namespace

Scene deserialize_scene(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw SchemaError(std::string("invalid scene text: ") + e.what());
  }
  if (!root.IsMap()) throw SchemaError("scene must be a mapping");
  YAML::Node list = require(root, "trajectories");
  if (!list.IsSequence() && !list.IsNull()) {
    throw SchemaError("'trajectories' must be a sequence");
  }

  Scene scene;
  try {
    for (const YAML::Node& tn : list) {
      Trajectory t;
      t.name = require(tn, "name").as<std::string>();
      t.frame = require(tn, "frame").as<std::string>();
      for (const YAML::Node& wn : require(tn, "waypoints")) {
        Waypoint wp;
        wp.t = require(wn, "t").as<double>();
        wp.pose.position = vec3_from(require(wn, "position"));
        wp.pose.orientation = quat_from(require(wn, "orientation_wxyz"));
        t.waypoints.push_back(wp);
      }
      validate(t);
      scene.push_back(std::move(t));
    }
  } catch (const YAML::Exception& e) {
    throw SchemaError(std::string("invalid scene value: ") + e.what());
  }
  return scene;
}

Scene load_scene_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open scene file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return deserialize_scene(buffer.str());
}

void save_scene_file(const Scene& scene, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write scene file '" + path + "'");
  out << serialize_scene(scene);
}

}  // namespace fleetsim::traj
