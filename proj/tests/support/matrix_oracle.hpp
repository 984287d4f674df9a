#pragma once

// Independent 4x4 homogeneous-matrix route for checking the quaternion-based
// transform algebra. Deliberately avoids the library's Quat operations:
// rotation matrices are built directly from quaternion components and chained
// with plain matrix multiplication.

#include <array>
#include <cmath>

#include "fleetsim/transforms.hpp"

namespace oracle {

using Mat4 = std::array<double, 16>;  // row-major

inline Mat4 identity() {
  Mat4 m{};
  m[0] = m[5] = m[10] = m[15] = 1.0;
  return m;
}

inline Mat4 mul(const Mat4& a, const Mat4& b) {
  Mat4 c{};
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      double acc = 0;
      for (int k = 0; k < 4; ++k) acc += a[i * 4 + k] * b[k * 4 + j];
      c[i * 4 + j] = acc;
    }
  }
  return c;
}

inline Mat4 from_quat_trans(double w, double x, double y, double z, double tx,
                            double ty, double tz) {
  double n = std::sqrt(w * w + x * x + y * y + z * z);
  w /= n;
  x /= n;
  y /= n;
  z /= n;
  Mat4 m = identity();
  m[0] = 1 - 2 * (y * y + z * z);
  m[1] = 2 * (x * y - z * w);
  m[2] = 2 * (x * z + y * w);
  m[4] = 2 * (x * y + z * w);
  m[5] = 1 - 2 * (x * x + z * z);
  m[6] = 2 * (y * z - x * w);
  m[8] = 2 * (x * z - y * w);
  m[9] = 2 * (y * z + x * w);
  m[10] = 1 - 2 * (x * x + y * y);
  m[3] = tx;
  m[7] = ty;
  m[11] = tz;
  return m;
}

inline Mat4 from_transform(const fleetsim::tf::Transform& t) {
  return from_quat_trans(t.rotation.w, t.rotation.x, t.rotation.y,
                         t.rotation.z, t.translation.x, t.translation.y,
                         t.translation.z);
}

// Rigid inverse: R' = R^T, t' = -R^T t.
inline Mat4 invert_rigid(const Mat4& m) {
  Mat4 out = identity();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) out[i * 4 + j] = m[j * 4 + i];
  }
  for (int i = 0; i < 3; ++i) {
    double acc = 0;
    for (int j = 0; j < 3; ++j) acc += out[i * 4 + j] * m[j * 4 + 3];
    out[i * 4 + 3] = -acc;
  }
  return out;
}

// Max elementwise deviation, with the rotation part compared up to the q/-q
// sign ambiguity being irrelevant (matrices are sign-free already).
inline double max_diff(const Mat4& a, const Mat4& b) {
  double worst = 0;
  for (int i = 0; i < 16; ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace oracle
