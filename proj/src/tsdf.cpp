#include "hintmvs/tsdf.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <unordered_set>

#include "hintmvs/errors.hpp"
#include "hintmvs/parallel.hpp"

namespace hintmvs {

namespace {

constexpr char kMagic[4] = {'D', 'T', 'T', 'V'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr std::uint32_t kKindTsdf = 0;

int floor_div(int a, int b) { return a >= 0 ? a / b : (a - b + 1) / b; }

}  // namespace

std::uint64_t TsdfVolume::pack_key(const Eigen::Vector3i& c) {
  // 21 signed bits per axis.
  auto enc = [](int v) { return static_cast<std::uint64_t>(v & 0x1fffff); };
  return enc(c.x()) | (enc(c.y()) << 21) | (enc(c.z()) << 42);
}

VoxelBlock* TsdfVolume::find_block(const Eigen::Vector3i& c) {
  auto it = blocks_.find(pack_key(c));
  return it == blocks_.end() ? nullptr : it->second.get();
}

const VoxelBlock* TsdfVolume::find_block(const Eigen::Vector3i& c) const {
  auto it = blocks_.find(pack_key(c));
  return it == blocks_.end() ? nullptr : it->second.get();
}

VoxelBlock& TsdfVolume::get_or_create_block(const Eigen::Vector3i& c) {
  auto& slot = blocks_[pack_key(c)];
  if (!slot) {
    slot = std::make_unique<VoxelBlock>();
    slot->coord = c;
  }
  return *slot;
}

const Voxel* TsdfVolume::voxel_at(const Eigen::Vector3i& v) const {
  const VoxelBlock* block = find_block(block_of_voxel(v));
  if (!block) return nullptr;
  const int lx = v.x() - floor_div(v.x(), kBlockSize) * kBlockSize;
  const int ly = v.y() - floor_div(v.y(), kBlockSize) * kBlockSize;
  const int lz = v.z() - floor_div(v.z(), kBlockSize) * kBlockSize;
  return &block->voxels[VoxelBlock::linear_index(lx, ly, lz)];
}

Voxel& TsdfVolume::voxel_at_or_create(const Eigen::Vector3i& v) {
  VoxelBlock& block = get_or_create_block(block_of_voxel(v));
  const int lx = v.x() - floor_div(v.x(), kBlockSize) * kBlockSize;
  const int ly = v.y() - floor_div(v.y(), kBlockSize) * kBlockSize;
  const int lz = v.z() - floor_div(v.z(), kBlockSize) * kBlockSize;
  return block.voxels[VoxelBlock::linear_index(lx, ly, lz)];
}

double TsdfVolume::observation_weight(double z) const {
  if (z > cfg_.max_fuse_depth) return cfg_.confidence_floor;
  const double ratio = 1.0 - z / cfg_.max_fuse_depth;
  return std::max(cfg_.confidence_floor, ratio * ratio);
}

void TsdfVolume::integrate(const DepthMap& depth, const Pose& pose,
                           const Intrinsics& k,
                           const ConfidenceMap* depth_confidence) {
  if (depth.width != k.width || depth.height != k.height)
    throw PreconditionError("integrate: depth dimensions do not match intrinsics");

  const double trunc = cfg_.truncation;
  const double vs = cfg_.voxel_size;
  const Vec3 cam_origin = pose.translation;

  // Allocation pass: march each observed ray over its truncation band and
  // allocate every block it touches.
  std::unordered_set<std::uint64_t> touched;
  for (int y = 0; y < depth.height; ++y) {
    for (int x = 0; x < depth.width; ++x) {
      const float d = depth.at(x, y);
      if (d <= 0.0f || d > cfg_.max_fuse_depth) continue;
      const Vec3 surface = backproject(x, y, d, pose, k);
      const Vec3 dir = (surface - cam_origin) / d;  // unit per meter of depth
      const double t0 = std::max(0.0, static_cast<double>(d) - trunc);
      const double t1 = d + trunc;
      for (double t = t0;; t += vs) {
        const bool last = t >= t1;
        const Vec3 p = cam_origin + dir * std::min(t, t1);
        const Eigen::Vector3i voxel(
            static_cast<int>(std::floor(p.x() / vs)),
            static_cast<int>(std::floor(p.y() / vs)),
            static_cast<int>(std::floor(p.z() / vs)));
        touched.insert(pack_key(block_of_voxel(voxel)));
        if (last) break;
      }
    }
  }
  for (std::uint64_t key : touched) {
    // Decode is cheaper than a second map probe structure; recreate coord.
    auto dec = [](std::uint64_t bits) {
      int v = static_cast<int>(bits & 0x1fffff);
      if (v & 0x100000) v -= 0x200000;
      return v;
    };
    const Eigen::Vector3i c(dec(key), dec(key >> 21), dec(key >> 42));
    get_or_create_block(c);
  }

  // Update pass over every allocated block in the frustum; blocks are
  // disjoint so this parallelizes without locks.
  std::vector<VoxelBlock*> blocks;
  blocks.reserve(blocks_.size());
  for (auto& [key, block] : blocks_) blocks.push_back(block.get());

  const Pose world_to_cam = pose.inverse();
  const double block_extent = kBlockSize * vs;

  parallel_for(blocks.size(), [&](std::size_t bi) {
    VoxelBlock& block = *blocks[bi];
    // Frustum cull on the block's corners.
    bool maybe_visible = false;
    double min_u = 1e30, max_u = -1e30, min_v = 1e30, max_v = -1e30;
    bool any_in_front = false;
    for (int corner = 0; corner < 8 && !maybe_visible; ++corner) {
      const Vec3 p_world =
          block.coord.cast<double>() * block_extent +
          Vec3((corner & 1) ? block_extent : 0.0, (corner & 2) ? block_extent : 0.0,
               (corner & 4) ? block_extent : 0.0);
      const Vec3 p = world_to_cam.to_world(p_world);
      if (p.z() > 0.0 && p.z() <= cfg_.max_fuse_depth + trunc) {
        any_in_front = true;
        const double u = k.fx * p.x() / p.z() + k.cx;
        const double v = k.fy * p.y() / p.z() + k.cy;
        min_u = std::min(min_u, u);
        max_u = std::max(max_u, u);
        min_v = std::min(min_v, v);
        max_v = std::max(max_v, v);
      }
    }
    if (!any_in_front) return;
    if (max_u < -0.5 || min_u >= k.width - 0.5 || max_v < -0.5 ||
        min_v >= k.height - 0.5) {
      // All projecting corners fall on one side of the image; a block that
      // straddles the camera plane can still cover pixels, so only cull
      // when every corner was in front.
      if (min_u <= max_u) return;
    }

    for (int lz = 0; lz < kBlockSize; ++lz) {
      for (int ly = 0; ly < kBlockSize; ++ly) {
        for (int lx = 0; lx < kBlockSize; ++lx) {
          const Eigen::Vector3i voxel = block.coord * kBlockSize + Eigen::Vector3i(lx, ly, lz);
          const Vec3 center = voxel_center(voxel);
          const Vec3 p_cam = world_to_cam.to_world(center);
          const double z = p_cam.z();
          if (z <= 0.0 || z > cfg_.max_fuse_depth) continue;
          const int px = static_cast<int>(std::lround(k.fx * p_cam.x() / z + k.cx));
          const int py = static_cast<int>(std::lround(k.fy * p_cam.y() / z + k.cy));
          if (px < 0 || px >= depth.width || py < 0 || py >= depth.height) continue;
          const float d = depth.at(px, py);
          if (d <= 0.0f || d > cfg_.max_fuse_depth) continue;
          const double sdf = d - z;
          if (sdf < -trunc) continue;  // beyond the band: no carving

          Voxel& vox = block.voxels[VoxelBlock::linear_index(lx, ly, lz)];
          const float tsdf_obs =
              static_cast<float>(std::clamp(sdf / trunc, -1.0, 1.0));
          const float w_obs = static_cast<float>(observation_weight(z));
          const float c_obs = depth_confidence
                                  ? depth_confidence->at(px, py)
                                  : w_obs;
          const float w_old = vox.weight;
          const float w_sum = w_old + w_obs;
          vox.tsdf = (w_old * vox.tsdf + w_obs * tsdf_obs) / w_sum;
          vox.confidence = (w_old * vox.confidence + w_obs * c_obs) / w_sum;
          vox.weight = std::min(w_sum, static_cast<float>(cfg_.weight_cap));
        }
      }
    }
  });
}

std::optional<TsdfSample> TsdfVolume::sample(const Vec3& point_world) const {
  const Vec3 g = point_world / cfg_.voxel_size - Vec3::Constant(0.5);
  const Eigen::Vector3i base(static_cast<int>(std::floor(g.x())),
                             static_cast<int>(std::floor(g.y())),
                             static_cast<int>(std::floor(g.z())));
  const Vec3 f = g - base.cast<double>();

  double tsdf = 0.0, conf = 0.0, weight = 0.0;
  for (int corner = 0; corner < 8; ++corner) {
    const int dx = corner & 1, dy = (corner >> 1) & 1, dz = (corner >> 2) & 1;
    const Voxel* vox = voxel_at(base + Eigen::Vector3i(dx, dy, dz));
    if (!vox || vox->weight <= 0.0f) return std::nullopt;
    const double w = (dx ? f.x() : 1.0 - f.x()) * (dy ? f.y() : 1.0 - f.y()) *
                     (dz ? f.z() : 1.0 - f.z());
    tsdf += w * vox->tsdf;
    conf += w * vox->confidence;
    weight += w * vox->weight;
  }
  return TsdfSample{static_cast<float>(tsdf), static_cast<float>(conf),
                    static_cast<float>(weight)};
}

std::vector<const VoxelBlock*> TsdfVolume::sorted_blocks() const {
  std::vector<const VoxelBlock*> out;
  out.reserve(blocks_.size());
  for (const auto& [key, block] : blocks_) out.push_back(block.get());
  std::sort(out.begin(), out.end(), [](const VoxelBlock* a, const VoxelBlock* b) {
    if (a->coord.x() != b->coord.x()) return a->coord.x() < b->coord.x();
    if (a->coord.y() != b->coord.y()) return a->coord.y() < b->coord.y();
    return a->coord.z() < b->coord.z();
  });
  return out;
}

namespace {

template <typename T>
void write_pod(std::FILE* f, const T& v) {
  if (std::fwrite(&v, sizeof(T), 1, f) != 1) throw IoError("tsdf: short write");
}

template <typename T>
T read_pod(std::FILE* f, const char* what) {
  T v;
  if (std::fread(&v, sizeof(T), 1, f) != 1)
    throw IoError(std::string("tsdf: truncated file reading ") + what);
  return v;
}

}  // namespace

void TsdfVolume::save(const std::string& path) const {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot open " + path);
  struct Closer {
    std::FILE* f;
    ~Closer() { std::fclose(f); }
  } closer{f};

  std::fwrite(kMagic, 1, 4, f);
  write_pod<std::uint32_t>(f, kFormatVersion);
  write_pod<std::uint32_t>(f, kKindTsdf);
  write_pod<double>(f, cfg_.voxel_size);
  write_pod<double>(f, cfg_.truncation);
  write_pod<double>(f, cfg_.max_fuse_depth);
  write_pod<double>(f, cfg_.confidence_floor);
  write_pod<std::uint32_t>(f, cfg_.weight_cap);
  write_pod<std::uint64_t>(f, static_cast<std::uint64_t>(blocks_.size()));

  for (const VoxelBlock* block : sorted_blocks()) {
    const std::int32_t coord[3] = {block->coord.x(), block->coord.y(),
                                   block->coord.z()};
    if (std::fwrite(coord, sizeof(coord), 1, f) != 1)
      throw IoError("tsdf: short write");
    for (const Voxel& v : block->voxels) {
      const float rec[3] = {v.tsdf, v.weight, v.confidence};
      if (std::fwrite(rec, sizeof(rec), 1, f) != 1)
        throw IoError("tsdf: short write");
    }
  }
}

TsdfVolume TsdfVolume::load(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw IoError("cannot open " + path);
  struct Closer {
    std::FILE* f;
    ~Closer() { std::fclose(f); }
  } closer{f};

  char magic[4];
  if (std::fread(magic, 1, 4, f) != 4 || std::memcmp(magic, kMagic, 4) != 0)
    throw IoError(path + ": not a DTTV volume file");
  const auto version = read_pod<std::uint32_t>(f, "version");
  if (version != kFormatVersion)
    throw IoError(path + ": unsupported DTTV version " + std::to_string(version));
  const auto kind = read_pod<std::uint32_t>(f, "kind");
  if (kind != kKindTsdf)
    throw IoError(path + ": not a TSDF payload (kind " + std::to_string(kind) + ")");

  TsdfConfig cfg;
  cfg.voxel_size = read_pod<double>(f, "voxel_size");
  cfg.truncation = read_pod<double>(f, "truncation");
  cfg.max_fuse_depth = read_pod<double>(f, "max_fuse_depth");
  cfg.confidence_floor = read_pod<double>(f, "confidence_floor");
  cfg.weight_cap = read_pod<std::uint32_t>(f, "weight_cap");

  TsdfVolume volume(cfg);
  const auto n_blocks = read_pod<std::uint64_t>(f, "block count");
  for (std::uint64_t i = 0; i < n_blocks; ++i) {
    std::int32_t coord[3];
    if (std::fread(coord, sizeof(coord), 1, f) != 1)
      throw IoError(path + ": truncated block header");
    VoxelBlock& block =
        volume.get_or_create_block(Eigen::Vector3i(coord[0], coord[1], coord[2]));
    for (Voxel& v : block.voxels) {
      float rec[3];
      if (std::fread(rec, sizeof(rec), 1, f) != 1)
        throw IoError(path + ": truncated voxel payload");
      v.tsdf = rec[0];
      v.weight = rec[1];
      v.confidence = rec[2];
    }
  }
  return volume;
}

bool TsdfVolume::equals(const TsdfVolume& other) const {
  if (std::memcmp(&cfg_.voxel_size, &other.cfg_.voxel_size, sizeof(double)) != 0 ||
      cfg_.weight_cap != other.cfg_.weight_cap ||
      blocks_.size() != other.blocks_.size())
    return false;
  for (const auto& [key, block] : blocks_) {
    auto it = other.blocks_.find(key);
    if (it == other.blocks_.end()) return false;
    for (int i = 0; i < kBlockVoxels; ++i) {
      const Voxel& a = block->voxels[i];
      const Voxel& b = it->second->voxels[i];
      if (std::memcmp(&a, &b, sizeof(Voxel)) != 0) return false;
    }
  }
  return true;
}

}  // namespace hintmvs
