#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "hintmvs/geometry.hpp"

namespace hintmvs {

struct TsdfConfig {
  double voxel_size = 0.02;      // meters
  double truncation = 0.06;      // meters, 3 voxels
  double max_fuse_depth = 3.0;   // meters
  std::uint32_t weight_cap = 128;
  double confidence_floor = 0.25;
};

struct Voxel {
  float tsdf = 0.0f;        // normalized signed distance, +1 free space
  float weight = 0.0f;      // 0 = unobserved
  float confidence = 0.0f;  // [0, 1]
};

inline constexpr int kBlockSize = 8;
inline constexpr int kBlockVoxels = kBlockSize * kBlockSize * kBlockSize;

struct VoxelBlock {
  Eigen::Vector3i coord;  // block grid coordinate
  std::array<Voxel, kBlockVoxels> voxels{};

  static int linear_index(int lx, int ly, int lz) {
    return (lz * kBlockSize + ly) * kBlockSize + lx;
  }
};

struct TsdfSample {
  float tsdf = 0.0f;
  float confidence = 0.0f;
  float weight = 0.0f;
};

// Sparse voxel-hashed truncated signed distance field with per-voxel fusion
// weight and confidence. Voxel (ix, iy, iz) spans [i*s, (i+1)*s) per axis,
// center at (i + 0.5) * s. Blocks are 8^3 voxels keyed by block coordinate.
//
// Thread model: integrate() is an exclusive writer; sampling and mesh
// extraction may run concurrently with each other but not with integrate.
class TsdfVolume {
 public:
  explicit TsdfVolume(const TsdfConfig& cfg = {}) : cfg_(cfg) {}

  const TsdfConfig& config() const { return cfg_; }
  std::size_t block_count() const { return blocks_.size(); }
  bool empty() const { return blocks_.empty(); }

  // Per-observation confidence/weight: quadratic falloff with camera
  // distance, clamped below at the confidence floor.
  double observation_weight(double z) const;

  // Fuses one depth map. Pixels with invalid depth or depth beyond
  // max_fuse_depth are skipped; voxels farther than `truncation` behind the
  // observed surface are untouched. Optional per-pixel confidence overrides
  // the distance-falloff confidence observation.
  void integrate(const DepthMap& depth, const Pose& pose, const Intrinsics& k,
                 const ConfidenceMap* depth_confidence = nullptr);

  // Trilinear interpolation over the 8 surrounding voxel centers; empty if
  // any of them is unobserved.
  std::optional<TsdfSample> sample(const Vec3& point_world) const;

  const Voxel* voxel_at(const Eigen::Vector3i& voxel_coord) const;
  Voxel& voxel_at_or_create(const Eigen::Vector3i& voxel_coord);

  // Blocks sorted by coordinate; mesh extraction and serialization iterate
  // in this order so outputs are deterministic.
  std::vector<const VoxelBlock*> sorted_blocks() const;

  Vec3 voxel_center(const Eigen::Vector3i& voxel_coord) const {
    return (voxel_coord.cast<double>() + Vec3::Constant(0.5)) * cfg_.voxel_size;
  }

  void save(const std::string& path) const;
  static TsdfVolume load(const std::string& path);

  bool equals(const TsdfVolume& other) const;

 private:
  friend class TsdfIntegrator;

  static std::uint64_t pack_key(const Eigen::Vector3i& c);

  VoxelBlock* find_block(const Eigen::Vector3i& block_coord);
  const VoxelBlock* find_block(const Eigen::Vector3i& block_coord) const;
  VoxelBlock& get_or_create_block(const Eigen::Vector3i& block_coord);

  TsdfConfig cfg_;
  std::unordered_map<std::uint64_t, std::unique_ptr<VoxelBlock>> blocks_;
};

inline Eigen::Vector3i block_of_voxel(const Eigen::Vector3i& v) {
  auto div = [](int a) { return a >= 0 ? a / kBlockSize : (a - kBlockSize + 1) / kBlockSize; };
  return {div(v.x()), div(v.y()), div(v.z())};
}

}  // namespace hintmvs
