#pragma once

#include <string>
#include <vector>

#include "fleetsim/transforms.hpp"

namespace fleetsim::traj {

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TooFewWaypoints : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Pose {
  tf::Vec3 position;
  tf::Quat orientation;
};

struct Waypoint {
  Pose pose;
  double t = 0;  // seconds, >= 0
};

struct Trajectory {
  std::string name;
  tf::FrameId frame = "map";
  std::vector<Waypoint> waypoints;  // t strictly increasing
};

// N >= 1, t >= 0 and strictly increasing. Throws SchemaError.
void validate(const Trajectory& trajectory);

// Piecewise interpolation with clamping: linear position, shortest-arc
// spherical-linear orientation, exact at the knots.
Pose sample(const Trajectory& trajectory, double t);

enum class AlignmentMode { Manual, AlignToNext, AlignToPrevious };

// Points the body x-axis along the neighbor direction with zero roll (yaw
// then pitch about world axes). Degenerate directions (coincident waypoints,
// direction parallel to world z) keep the existing orientation; the end
// waypoint without a neighbor copies its aligned neighbor.
Trajectory apply_alignment(Trajectory trajectory, AlignmentMode mode);

// Orientation construction used by the alignment modes; exposed for tests.
tf::Quat orientation_from_direction(const tf::Vec3& direction,
                                    const tf::Quat& fallback);

using Scene = std::vector<Trajectory>;

// YAML scene format:
//   trajectories:
//     - name: ...
//       frame: ...
//       waypoints:
//         - t: ...
//           position: [x, y, z]
//           orientation_wxyz: [w, x, y, z]
std::string serialize_scene(const Scene& scene);
Scene deserialize_scene(const std::string& text);  // throws SchemaError

Scene load_scene_file(const std::string& path);
void save_scene_file(const Scene& scene, const std::string& path);

}  // namespace fleetsim::traj
