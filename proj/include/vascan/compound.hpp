#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vascan/imaging.hpp"
#include "vascan/pose.hpp"

namespace vascan {

double dice_score(const ImageGrid& a, const ImageGrid& b);
double iou_score(const ImageGrid& a, const ImageGrid& b);

// Ten equal bins over [0, 1]; the last bin is closed so a perfect score
// lands in [0.9, 1.0]. Throws on scores outside [0, 1].
std::array<int, 10> score_histogram(const std::vector<double>& scores);

// Axis-aligned binary voxel volume with isotropic spacing. Voxel (i, j, k)
// is centred at origin + spacing * (i, j, k).
class LabelVolume {
 public:
  LabelVolume() = default;
  LabelVolume(const Eigen::Vector3d& origin_mm, const Eigen::Vector3i& dims,
              double spacing_mm);

  int nx() const { return dims_.x(); }
  int ny() const { return dims_.y(); }
  int nz() const { return dims_.z(); }
  double spacing_mm() const { return spacing_mm_; }
  const Eigen::Vector3d& origin_mm() const { return origin_mm_; }
  std::int64_t occupied_count() const;

  bool contains(const Eigen::Vector3i& v) const;
  std::uint8_t at(int ix, int iy, int iz) const;
  void set(int ix, int iy, int iz, std::uint8_t value);
  Eigen::Vector3i voxel_of(const Eigen::Vector3d& point_mm) const;
  Eigen::Vector3d center_of(const Eigen::Vector3i& v) const;
  const std::vector<std::uint8_t>& raw() const { return vox_; }

  // Grows the grid so the point's voxel fits, padding by a margin to
  // amortise repeated growth. Existing content keeps its scene position.
  void ensure_contains(const Eigen::Vector3d& point_mm, int margin_voxels = 8);

 private:
  std::int64_t index(int ix, int iy, int iz) const;

  Eigen::Vector3d origin_mm_{0.0, 0.0, 0.0};
  Eigen::Vector3i dims_{0, 0, 0};
  double spacing_mm_ = 1.0;
  std::vector<std::uint8_t> vox_;  // x fastest, then y, then z
};

// Splats every lit mask pixel into its nearest voxel. Empty masks are
// valid no-ops. The volume grows as needed.
void insert_mask(LabelVolume& volume, const ImageGrid& mask,
                 const ProbePose& pose);

double dice_score(const LabelVolume& a, const LabelVolume& b);

// Surface voxels: occupied with an unoccupied or out-of-bounds 6-neighbour.
std::vector<Eigen::Vector3i> surface_voxels(const LabelVolume& volume);

// For every surface voxel of `predicted`, the Euclidean distance (mm) to
// the nearest surface voxel of `reference`, via an exact separable distance
// transform. Throws if either surface is empty. Volumes must share origin,
// dims and spacing.
std::vector<double> surface_distances_mm(const LabelVolume& predicted,
                                         const LabelVolume& reference);

// Exact 3-d squared Euclidean distance transform (voxel units) of a seed
// set given as flags over the volume grid.
std::vector<double> squared_distance_transform(const std::vector<std::uint8_t>& seeds,
                                               const Eigen::Vector3i& dims);

// Raw voxel dump plus a JSON sidecar describing origin, dims and spacing.
void save_volume(const std::string& path_base, const LabelVolume& volume);
LabelVolume load_volume(const std::string& path_base);

// Boundary faces of the occupied set as a quad mesh (OBJ).
void save_surface_mesh_obj(const std::string& path, const LabelVolume& volume);

}  // namespace vascan
