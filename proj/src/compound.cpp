#include "vascan/compound.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>

#include <json.hpp>

namespace vascan {

namespace {

void check_binary(const ImageGrid& m, const char* name) {
  if (m.empty()) throw std::invalid_argument(std::string(name) + " is empty");
  if (((m.data != 0.0f) && (m.data != 1.0f)).any()) {
    throw std::invalid_argument(std::string(name) + " is not binary");
  }
}

struct Overlap {
  double inter = 0.0;
  double a_sum = 0.0;
  double b_sum = 0.0;
};

Overlap overlap_counts(const ImageGrid& a, const ImageGrid& b) {
  check_binary(a, "mask a");
  check_binary(b, "mask b");
  if (a.height() != b.height() || a.width() != b.width()) {
    throw std::invalid_argument("mask dimensions disagree");
  }
  Overlap o;
  o.inter = static_cast<double>((a.data * b.data).sum());
  o.a_sum = static_cast<double>(a.data.sum());
  o.b_sum = static_cast<double>(b.data.sum());
  return o;
}

}  // namespace

double dice_score(const ImageGrid& a, const ImageGrid& b) {
  const Overlap o = overlap_counts(a, b);
  if (o.a_sum + o.b_sum == 0.0) return 1.0;
  return 2.0 * o.inter / (o.a_sum + o.b_sum);
}

double iou_score(const ImageGrid& a, const ImageGrid& b) {
  const Overlap o = overlap_counts(a, b);
  const double uni = o.a_sum + o.b_sum - o.inter;
  if (uni == 0.0) return 1.0;
  return o.inter / uni;
}

std::array<int, 10> score_histogram(const std::vector<double>& scores) {
  std::array<int, 10> bins{};
  for (const double s : scores) {
    if (!(s >= 0.0 && s <= 1.0)) {
      throw std::invalid_argument("score outside [0, 1]");
    }
    bins[static_cast<size_t>(std::min(static_cast<int>(s * 10.0), 9))]++;
  }
  return bins;
}

LabelVolume::LabelVolume(const Eigen::Vector3d& origin_mm,
                         const Eigen::Vector3i& dims, double spacing_mm)
    : origin_mm_(origin_mm), dims_(dims), spacing_mm_(spacing_mm) {
  if (spacing_mm <= 0.0) throw std::invalid_argument("voxel spacing <= 0");
  if ((dims.array() < 0).any()) throw std::invalid_argument("negative dims");
  vox_.assign(static_cast<size_t>(dims.x()) * dims.y() * dims.z(), 0);
}

std::int64_t LabelVolume::index(int ix, int iy, int iz) const {
  return static_cast<std::int64_t>(iz) * dims_.y() * dims_.x() +
         static_cast<std::int64_t>(iy) * dims_.x() + ix;
}

bool LabelVolume::contains(const Eigen::Vector3i& v) const {
  return (v.array() >= 0).all() && (v.array() < dims_.array()).all();
}

std::uint8_t LabelVolume::at(int ix, int iy, int iz) const {
  return vox_[static_cast<size_t>(index(ix, iy, iz))];
}

void LabelVolume::set(int ix, int iy, int iz, std::uint8_t value) {
  vox_[static_cast<size_t>(index(ix, iy, iz))] = value;
}

std::int64_t LabelVolume::occupied_count() const {
  return std::count_if(vox_.begin(), vox_.end(),
                       [](std::uint8_t v) { return v != 0; });
}

Eigen::Vector3i LabelVolume::voxel_of(const Eigen::Vector3d& point_mm) const {
  const Eigen::Vector3d rel = (point_mm - origin_mm_) / spacing_mm_;
  return {static_cast<int>(std::lround(rel.x())),
          static_cast<int>(std::lround(rel.y())),
          static_cast<int>(std::lround(rel.z()))};
}

Eigen::Vector3d LabelVolume::center_of(const Eigen::Vector3i& v) const {
  return origin_mm_ + spacing_mm_ * v.cast<double>();
}

void LabelVolume::ensure_contains(const Eigen::Vector3d& point_mm,
                                  int margin_voxels) {
  const Eigen::Vector3i v = voxel_of(point_mm);
  if (contains(v)) return;
  Eigen::Vector3i lo = Eigen::Vector3i::Zero();
  Eigen::Vector3i hi = dims_ - Eigen::Vector3i::Ones();
  if (dims_.prod() == 0) {
    lo = v;
    hi = v;
  }
  for (int a = 0; a < 3; ++a) {
    if (v[a] < lo[a]) lo[a] = v[a] - margin_voxels;
    if (v[a] > hi[a]) hi[a] = v[a] + margin_voxels;
  }
  LabelVolume grown(origin_mm_ + spacing_mm_ * lo.cast<double>(),
                    hi - lo + Eigen::Vector3i::Ones(), spacing_mm_);
  for (int z = 0; z < dims_.z(); ++z) {
    for (int y = 0; y < dims_.y(); ++y) {
      for (int x = 0; x < dims_.x(); ++x) {
        if (at(x, y, z)) grown.set(x - lo.x(), y - lo.y(), z - lo.z(), 1);
      }
    }
  }
  *this = std::move(grown);
}

void insert_mask(LabelVolume& volume, const ImageGrid& mask,
                 const ProbePose& pose) {
  check_binary(mask, "mask");
  validate(pose);
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.data(y, x) == 0.0f) continue;
      const Eigen::Vector3d p = image_point(pose, x, y, mask.spacing_mm,
                                            mask.width());
      volume.ensure_contains(p);
      const Eigen::Vector3i v = volume.voxel_of(p);
      volume.set(v.x(), v.y(), v.z(), 1);
    }
  }
}

double dice_score(const LabelVolume& a, const LabelVolume& b) {
  if (a.nx() != b.nx() || a.ny() != b.ny() || a.nz() != b.nz()) {
    throw std::invalid_argument("volume dimensions disagree");
  }
  std::int64_t inter = 0, total = 0;
  const auto& ra = a.raw();
  const auto& rb = b.raw();
  for (size_t i = 0; i < ra.size(); ++i) {
    inter += (ra[i] && rb[i]) ? 1 : 0;
    total += (ra[i] ? 1 : 0) + (rb[i] ? 1 : 0);
  }
  if (total == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(total);
}

std::vector<Eigen::Vector3i> surface_voxels(const LabelVolume& volume) {
  std::vector<Eigen::Vector3i> out;
  static const int d[6][3] = {{1, 0, 0},  {-1, 0, 0}, {0, 1, 0},
                              {0, -1, 0}, {0, 0, 1},  {0, 0, -1}};
  for (int z = 0; z < volume.nz(); ++z) {
    for (int y = 0; y < volume.ny(); ++y) {
      for (int x = 0; x < volume.nx(); ++x) {
        if (!volume.at(x, y, z)) continue;
        for (const auto& n : d) {
          const Eigen::Vector3i v(x + n[0], y + n[1], z + n[2]);
          if (!volume.contains(v) || !volume.at(v.x(), v.y(), v.z())) {
            out.emplace_back(x, y, z);
            break;
          }
        }
      }
    }
  }
  return out;
}

namespace {

constexpr double kFar = 1e18;

// 1-d lower envelope of parabolas (exact squared distance transform).
void dt_1d(const std::vector<double>& f, std::vector<double>& out,
           std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  v.assign(static_cast<size_t>(n), 0);
  z.assign(static_cast<size_t>(n) + 1, 0.0);
  int k = 0;
  v[0] = 0;
  z[0] = -kFar;
  z[1] = kFar;
  for (int q = 1; q < n; ++q) {
    double s;
    for (;;) {
      const int p = v[static_cast<size_t>(k)];
      s = ((f[static_cast<size_t>(q)] + q * q) -
           (f[static_cast<size_t>(p)] + p * p)) /
          (2.0 * q - 2.0 * p);
      if (s <= z[static_cast<size_t>(k)]) {
        --k;
      } else {
        break;
      }
    }
    ++k;
    v[static_cast<size_t>(k)] = q;
    z[static_cast<size_t>(k)] = s;
    z[static_cast<size_t>(k) + 1] = kFar;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[static_cast<size_t>(k) + 1] < q) ++k;
    const int p = v[static_cast<size_t>(k)];
    const double dq = q - p;
    out[static_cast<size_t>(q)] = dq * dq + f[static_cast<size_t>(p)];
  }
}

}  // namespace

std::vector<double> squared_distance_transform(
    const std::vector<std::uint8_t>& seeds, const Eigen::Vector3i& dims) {
  const int nx = dims.x(), ny = dims.y(), nz = dims.z();
  if (static_cast<std::int64_t>(seeds.size()) !=
      static_cast<std::int64_t>(nx) * ny * nz) {
    throw std::invalid_argument("seed flag count does not match dims");
  }
  std::vector<double> d(seeds.size());
  for (size_t i = 0; i < seeds.size(); ++i) d[i] = seeds[i] ? 0.0 : kFar;

  const auto idx = [nx, ny](int x, int y, int z) {
    return (static_cast<size_t>(z) * ny + y) * nx + x;
  };
  std::vector<double> line, out;
  std::vector<int> v;
  std::vector<double> zbuf;

  line.resize(static_cast<size_t>(nx));
  out.resize(static_cast<size_t>(nx));
  for (int z = 0; z < nz; ++z) {
    for (int y = 0; y < ny; ++y) {
      for (int x = 0; x < nx; ++x) line[static_cast<size_t>(x)] = d[idx(x, y, z)];
      dt_1d(line, out, v, zbuf);
      for (int x = 0; x < nx; ++x) d[idx(x, y, z)] = out[static_cast<size_t>(x)];
    }
  }
  line.resize(static_cast<size_t>(ny));
  out.resize(static_cast<size_t>(ny));
  for (int z = 0; z < nz; ++z) {
    for (int x = 0; x < nx; ++x) {
      for (int y = 0; y < ny; ++y) line[static_cast<size_t>(y)] = d[idx(x, y, z)];
      dt_1d(line, out, v, zbuf);
      for (int y = 0; y < ny; ++y) d[idx(x, y, z)] = out[static_cast<size_t>(y)];
    }
  }
  line.resize(static_cast<size_t>(nz));
  out.resize(static_cast<size_t>(nz));
  for (int y = 0; y < ny; ++y) {
    for (int x = 0; x < nx; ++x) {
      for (int z = 0; z < nz; ++z) line[static_cast<size_t>(z)] = d[idx(x, y, z)];
      dt_1d(line, out, v, zbuf);
      for (int z = 0; z < nz; ++z) d[idx(x, y, z)] = out[static_cast<size_t>(z)];
    }
  }
  return d;
}

std::vector<double> surface_distances_mm(const LabelVolume& predicted,
                                         const LabelVolume& reference) {
  if (predicted.nx() != reference.nx() || predicted.ny() != reference.ny() ||
      predicted.nz() != reference.nz() ||
      predicted.spacing_mm() != reference.spacing_mm() ||
      !predicted.origin_mm().isApprox(reference.origin_mm(), 1e-9)) {
    throw std::invalid_argument("volume grids disagree");
  }
  const std::vector<Eigen::Vector3i> pred_surf = surface_voxels(predicted);
  const std::vector<Eigen::Vector3i> ref_surf = surface_voxels(reference);
  if (pred_surf.empty() || ref_surf.empty()) {
    throw std::invalid_argument("surface distance on an empty surface");
  }
  const Eigen::Vector3i dims(predicted.nx(), predicted.ny(), predicted.nz());
  std::vector<std::uint8_t> seeds(predicted.raw().size(), 0);
  for (const auto& v : ref_surf) {
    seeds[(static_cast<size_t>(v.z()) * dims.y() + v.y()) * dims.x() + v.x()] = 1;
  }
  const std::vector<double> sq = squared_distance_transform(seeds, dims);
  std::vector<double> out;
  out.reserve(pred_surf.size());
  for (const auto& v : pred_surf) {
    const double s =
        sq[(static_cast<size_t>(v.z()) * dims.y() + v.y()) * dims.x() + v.x()];
    out.push_back(std::sqrt(s) * predicted.spacing_mm());
  }
  return out;
}

void save_volume(const std::string& path_base, const LabelVolume& volume) {
  {
    std::ofstream raw(path_base + ".raw", std::ios::binary);
    if (!raw) throw std::runtime_error("cannot write " + path_base + ".raw");
    raw.write(reinterpret_cast<const char*>(volume.raw().data()),
              static_cast<std::streamsize>(volume.raw().size()));
  }
  nlohmann::json j;
  j["origin_mm"] = {volume.origin_mm().x(), volume.origin_mm().y(),
                    volume.origin_mm().z()};
  j["dims"] = {volume.nx(), volume.ny(), volume.nz()};
  j["spacing_mm"] = volume.spacing_mm();
  j["occupied"] = volume.occupied_count();
  std::ofstream meta(path_base + ".json");
  if (!meta) throw std::runtime_error("cannot write " + path_base + ".json");
  meta << j.dump(2) << "\n";
}

LabelVolume load_volume(const std::string& path_base) {
  std::ifstream meta(path_base + ".json");
  if (!meta) throw std::runtime_error("cannot read " + path_base + ".json");
  nlohmann::json j;
  meta >> j;
  const Eigen::Vector3d origin(j["origin_mm"][0], j["origin_mm"][1],
                               j["origin_mm"][2]);
  const Eigen::Vector3i dims(j["dims"][0], j["dims"][1], j["dims"][2]);
  LabelVolume volume(origin, dims, j["spacing_mm"]);
  std::ifstream raw(path_base + ".raw", std::ios::binary);
  if (!raw) throw std::runtime_error("cannot read " + path_base + ".raw");
  std::vector<std::uint8_t> buf(static_cast<size_t>(dims.x()) * dims.y() *
                                dims.z());
  raw.read(reinterpret_cast<char*>(buf.data()),
           static_cast<std::streamsize>(buf.size()));
  if (!raw) throw std::runtime_error("truncated volume raster");
  for (int z = 0; z < dims.z(); ++z) {
    for (int y = 0; y < dims.y(); ++y) {
      for (int x = 0; x < dims.x(); ++x) {
        const std::uint8_t v =
            buf[(static_cast<size_t>(z) * dims.y() + y) * dims.x() + x];
        if (v) volume.set(x, y, z, 1);
      }
    }
  }
  return volume;
}

void save_surface_mesh_obj(const std::string& path, const LabelVolume& volume) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  std::map<std::array<int, 3>, int> vertex_ids;
  std::vector<std::array<int, 3>> vertices;
  std::vector<std::array<int, 4>> faces;
  const auto vertex = [&](int x, int y, int z) {
    const std::array<int, 3> key{x, y, z};
    const auto it = vertex_ids.find(key);
    if (it != vertex_ids.end()) return it->second;
    const int id = static_cast<int>(vertices.size()) + 1;  // OBJ is 1-based
    vertex_ids.emplace(key, id);
    vertices.push_back(key);
    return id;
  };
  // Corner offsets of the quad closing each of the six voxel faces.
  static const int face_corners[6][4][3] = {
      {{1, 0, 0}, {1, 1, 0}, {1, 1, 1}, {1, 0, 1}},  // +x
      {{0, 0, 0}, {0, 0, 1}, {0, 1, 1}, {0, 1, 0}},  // -x
      {{0, 1, 0}, {0, 1, 1}, {1, 1, 1}, {1, 1, 0}},  // +y
      {{0, 0, 0}, {1, 0, 0}, {1, 0, 1}, {0, 0, 1}},  // -y
      {{0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}},  // +z
      {{0, 0, 0}, {0, 1, 0}, {1, 1, 0}, {1, 0, 0}},  // -z
  };
  static const int neigh[6][3] = {{1, 0, 0},  {-1, 0, 0}, {0, 1, 0},
                                  {0, -1, 0}, {0, 0, 1},  {0, 0, -1}};
  for (int z = 0; z < volume.nz(); ++z) {
    for (int y = 0; y < volume.ny(); ++y) {
      for (int x = 0; x < volume.nx(); ++x) {
        if (!volume.at(x, y, z)) continue;
        for (int s = 0; s < 6; ++s) {
          const Eigen::Vector3i n(x + neigh[s][0], y + neigh[s][1],
                                  z + neigh[s][2]);
          if (volume.contains(n) && volume.at(n.x(), n.y(), n.z())) continue;
          std::array<int, 4> quad{};
          for (int c = 0; c < 4; ++c) {
            quad[static_cast<size_t>(c)] =
                vertex(x + face_corners[s][c][0], y + face_corners[s][c][1],
                       z + face_corners[s][c][2]);
          }
          faces.push_back(quad);
        }
      }
    }
  }
  f << "# voxel surface, " << faces.size() << " faces\n";
  const Eigen::Vector3d o = volume.origin_mm();
  const double sp = volume.spacing_mm();
  for (const auto& v : vertices) {
    f << "v " << o.x() + sp * (v[0] - 0.5) << " " << o.y() + sp * (v[1] - 0.5)
      << " " << o.z() + sp * (v[2] - 0.5) << "\n";
  }
  for (const auto& q : faces) {
    f << "f " << q[0] << " " << q[1] << " " << q[2] << " " << q[3] << "\n";
  }
}

}  // namespace vascan
