#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace hintmvs {

using Vec3 = Eigen::Vector3d;
using Vec3f = Eigen::Vector3f;
using Mat3 = Eigen::Matrix3d;

// Pinhole camera. Continuous pixel coordinates put the center of pixel
// (ix, iy) at exactly (ix, iy); the image plane spans [-0.5, width-0.5).
struct Intrinsics {
  double fx = 0.0, fy = 0.0;
  double cx = 0.0, cy = 0.0;
  int width = 0, height = 0;

  bool valid() const {
    return fx > 0.0 && fy > 0.0 && width > 0 && height > 0 && cx >= 0.0 &&
           cx < width && cy >= 0.0 && cy < height;
  }

  // Intrinsics of the image downsampled by an integer factor with area
  // averaging. Low-res pixel x covers high-res columns [f*x, f*x + f - 1],
  // so its center sits at f*x + (f-1)/2 in high-res coordinates.
  Intrinsics scaled(int factor) const {
    Intrinsics s;
    s.fx = fx / factor;
    s.fy = fy / factor;
    s.cx = (cx - 0.5 * (factor - 1)) / factor;
    s.cy = (cy - 0.5 * (factor - 1)) / factor;
    s.width = width / factor;
    s.height = height / factor;
    return s;
  }

  Eigen::Matrix3d matrix() const {
    Eigen::Matrix3d k = Eigen::Matrix3d::Identity();
    k(0, 0) = fx;
    k(1, 1) = fy;
    k(0, 2) = cx;
    k(1, 2) = cy;
    return k;
  }
};

// Rigid camera-to-world transform: x_world = R * x_cam + t.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return Pose{}; }

  Vec3 to_world(const Vec3& p_cam) const { return rotation * p_cam + translation; }
  Vec3 to_camera(const Vec3& p_world) const {
    return rotation.transpose() * (p_world - translation);
  }

  Pose inverse() const {
    Pose inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(rotation.transpose() * translation);
    return inv;
  }

  // this ∘ other: apply `other` first, then this.
  Pose compose(const Pose& other) const {
    Pose out;
    out.rotation = rotation * other.rotation;
    out.translation = rotation * other.translation + translation;
    return out;
  }

  bool is_rigid(double tol = 1e-9) const;

  double translation_to(const Pose& other) const {
    return (translation - other.translation).norm();
  }
  // Relative rotation angle in radians.
  double rotation_angle_to(const Pose& other) const;
};

inline constexpr float kInvalidDepth = -1.0f;

// Per-pixel depth in meters; invalid pixels hold the sentinel -1.
struct DepthMap {
  int width = 0, height = 0;
  std::vector<float> values;

  DepthMap() = default;
  DepthMap(int w, int h, float fill = kInvalidDepth)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

  float& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  float at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
  bool valid_at(int x, int y) const { return at(x, y) > 0.0f; }
  std::size_t count_valid() const;
};

// Per-pixel confidence in [0, 1].
struct ConfidenceMap {
  int width = 0, height = 0;
  std::vector<float> values;

  ConfidenceMap() = default;
  ConfidenceMap(int w, int h, float fill = 0.0f)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

  float& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  float at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

// Grayscale intensity image, values in [0, 1].
struct Image {
  int width = 0, height = 0;
  std::vector<float> data;

  Image() = default;
  Image(int w, int h, float fill = 0.0f)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

  // Replicate-clamped integer read.
  float at_clamped(int x, int y) const;
  // Bilinear sample at continuous (u, v); taps are clamped to the image.
  float sample_bilinear(double u, double v) const;
};

Image downsample_area(const Image& img, int factor);

// Posed calibrated grayscale frame, optionally with ground-truth depth.
struct Frame {
  int id = 0;
  Intrinsics intrinsics;
  Pose pose;
  Image image;
  std::optional<DepthMap> gt_depth;
};

// Indexed triangle set in the world frame with per-vertex confidence.
struct TriangleMesh {
  std::vector<Vec3f> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;
  std::vector<float> vertex_confidence;

  bool empty() const { return triangles.empty(); }
  void transform(const Pose& t);
  double area() const;
};

// Perspective projection of a world point.
struct Projection {
  double u = 0.0, v = 0.0;
  double z = 0.0;
  bool behind = false;  // z <= 0: (u, v) meaningless
};

Projection project(const Vec3& point_world, const Pose& pose, const Intrinsics& k);

// Lift continuous pixel (u, v) at camera depth z to a world point.
Vec3 backproject(double u, double v, double depth, const Pose& pose,
                 const Intrinsics& k);

// Result of re-projecting a reference pixel into a source camera.
struct Warp {
  double u = 0.0, v = 0.0;
  double z = 0.0;
  bool behind = false;
  bool in_bounds = false;
};

// Backprojects (u, v, depth) through the reference camera and projects into
// the source camera. Throws PreconditionError if depth <= 0.
Warp warp_pixel(double u, double v, double depth, const Pose& ref_pose,
                const Intrinsics& ref_k, const Pose& src_pose,
                const Intrinsics& src_k);

// One world point per valid depth pixel, lifted through the pixel center.
std::vector<Vec3> backproject_depth_map(const DepthMap& depth, const Pose& pose,
                                        const Intrinsics& k);

// Axis-and-angle rotation helper used by pose noise and synthetic scenes.
Mat3 axis_angle_rotation(const Vec3& axis_unit, double angle_rad);

}  // namespace hintmvs
