#include "hintmvs/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "hintmvs/errors.hpp"

namespace hintmvs {

bool Pose::is_rigid(double tol) const {
  const Mat3 rtr = rotation.transpose() * rotation;
  if ((rtr - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(rotation.determinant() - 1.0) <= tol;
}

double Pose::rotation_angle_to(const Pose& other) const {
  const Mat3 rel = rotation.transpose() * other.rotation;
  const double c = std::clamp((rel.trace() - 1.0) * 0.5, -1.0, 1.0);
  return std::acos(c);
}

std::size_t DepthMap::count_valid() const {
  std::size_t n = 0;
  for (float v : values)
    if (v > 0.0f) ++n;
  return n;
}

float Image::at_clamped(int x, int y) const {
  x = std::clamp(x, 0, width - 1);
  y = std::clamp(y, 0, height - 1);
  return at(x, y);
}

float Image::sample_bilinear(double u, double v) const {
  const int x0 = static_cast<int>(std::floor(u));
  const int y0 = static_cast<int>(std::floor(v));
  const double fu = u - x0;
  const double fv = v - y0;
  const double v00 = at_clamped(x0, y0);
  const double v10 = at_clamped(x0 + 1, y0);
  const double v01 = at_clamped(x0, y0 + 1);
  const double v11 = at_clamped(x0 + 1, y0 + 1);
  const double top = v00 + (v10 - v00) * fu;
  const double bot = v01 + (v11 - v01) * fu;
  return static_cast<float>(top + (bot - top) * fv);
}

Image downsample_area(const Image& img, int factor) {
  if (factor <= 1) return img;
  Image out(img.width / factor, img.height / factor);
  const double inv = 1.0 / (factor * factor);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      double acc = 0.0;
      for (int dy = 0; dy < factor; ++dy)
        for (int dx = 0; dx < factor; ++dx)
          acc += img.at(x * factor + dx, y * factor + dy);
      out.at(x, y) = static_cast<float>(acc * inv);
    }
  }
  return out;
}

void TriangleMesh::transform(const Pose& t) {
  for (auto& v : vertices)
    v = (t.rotation * v.cast<double>() + t.translation).cast<float>();
}

double TriangleMesh::area() const {
  double total = 0.0;
  for (const auto& tri : triangles) {
    const Vec3 a = vertices[tri[0]].cast<double>();
    const Vec3 b = vertices[tri[1]].cast<double>();
    const Vec3 c = vertices[tri[2]].cast<double>();
    total += 0.5 * (b - a).cross(c - a).norm();
  }
  return total;
}

Projection project(const Vec3& point_world, const Pose& pose, const Intrinsics& k) {
  const Vec3 p = pose.to_camera(point_world);
  Projection out;
  out.z = p.z();
  if (p.z() <= 0.0) {
    out.behind = true;
    return out;
  }
  out.u = k.fx * p.x() / p.z() + k.cx;
  out.v = k.fy * p.y() / p.z() + k.cy;
  return out;
}

Vec3 backproject(double u, double v, double depth, const Pose& pose,
                 const Intrinsics& k) {
  const Vec3 p_cam((u - k.cx) / k.fx * depth, (v - k.cy) / k.fy * depth, depth);
  return pose.to_world(p_cam);
}

Warp warp_pixel(double u, double v, double depth, const Pose& ref_pose,
                const Intrinsics& ref_k, const Pose& src_pose,
                const Intrinsics& src_k) {
  if (depth <= 0.0) throw PreconditionError("warp_pixel: depth must be > 0");
  const Vec3 world = backproject(u, v, depth, ref_pose, ref_k);
  const Projection p = project(world, src_pose, src_k);
  Warp out;
  out.u = p.u;
  out.v = p.v;
  out.z = p.z;
  out.behind = p.behind;
  out.in_bounds = !p.behind && p.u >= -0.5 && p.u < src_k.width - 0.5 &&
                  p.v >= -0.5 && p.v < src_k.height - 0.5;
  return out;
}

std::vector<Vec3> backproject_depth_map(const DepthMap& depth, const Pose& pose,
                                        const Intrinsics& k) {
  std::vector<Vec3> cloud;
  cloud.reserve(depth.count_valid());
  for (int y = 0; y < depth.height; ++y) {
    for (int x = 0; x < depth.width; ++x) {
      const float d = depth.at(x, y);
      if (d <= 0.0f) continue;
      cloud.push_back(backproject(x, y, d, pose, k));
    }
  }
  return cloud;
}

Mat3 axis_angle_rotation(const Vec3& axis_unit, double angle_rad) {
  return Eigen::AngleAxisd(angle_rad, axis_unit).toRotationMatrix();
}

}  // namespace hintmvs
