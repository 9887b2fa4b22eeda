#include "vascan/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "vascan/common.hpp"

namespace vascan {

void validate(const VesselModel& vessel) {
  if (vessel.centerline_mm.size() < 2) {
    throw std::invalid_argument("vessel needs at least two centerline samples");
  }
  if (vessel.radius_mm.size() != vessel.centerline_mm.size()) {
    throw std::invalid_argument("radius count does not match centerline");
  }
  for (const double r : vessel.radius_mm) {
    if (!(r > 0.0) || r > 25.0) {
      throw std::invalid_argument("vessel radius outside (0, 25] mm");
    }
  }
  if (!(vessel.pulsation_period_s > 0.0)) {
    throw std::invalid_argument("pulsation period must be positive");
  }
}

std::vector<double> arclengths_mm(const VesselModel& vessel) {
  std::vector<double> s(vessel.centerline_mm.size(), 0.0);
  for (size_t i = 1; i < vessel.centerline_mm.size(); ++i) {
    s[i] = s[i - 1] +
           (vessel.centerline_mm[i] - vessel.centerline_mm[i - 1]).norm();
  }
  return s;
}

VesselModel make_vessel(const VesselShapeParams& p) {
  if (!(p.length_mm > 0.0) || !(p.sample_step_mm > 0.0)) {
    throw std::invalid_argument("vessel length and step must be positive");
  }
  VesselModel v;
  const int n = static_cast<int>(std::ceil(p.length_mm / p.sample_step_mm)) + 1;
  v.centerline_mm.reserve(static_cast<size_t>(n));
  v.radius_mm.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double x = std::min(i * p.sample_step_mm, p.length_mm);
    const double y = p.lateral_mm +
                     p.wobble_y_mm * std::sin(2.0 * kPi * x /
                                              p.wobble_y_wavelength_mm +
                                              p.wobble_y_phase);
    const double z = p.depth_mm +
                     p.wobble_z_mm * std::sin(2.0 * kPi * x /
                                              p.wobble_z_wavelength_mm +
                                              p.wobble_z_phase);
    const double r = p.radius_mm +
                     p.radius_wobble_mm * std::sin(2.0 * kPi * x /
                                                   p.radius_wavelength_mm +
                                                   p.radius_phase);
    v.centerline_mm.emplace_back(x, y, z);
    v.radius_mm.push_back(r);
  }
  validate(v);
  return v;
}

DopplerResponseModel DopplerResponseModel::neutral() {
  DopplerResponseModel r;
  r.base_strength = 1.0;
  r.tilt_gain_floor = 1.0;
  r.bloom = 1.0;
  r.diastolic_floor = 1.0;
  r.dropout_zones.clear();
  return r;
}

double DopplerResponseModel::tilt_gain(double tilt_deg) const {
  const double x = std::abs(tilt_deg) / tilt_gain_saturation_deg;
  return tilt_gain_floor + (1.0 - tilt_gain_floor) * smoothstep01(x);
}

double DopplerResponseModel::zone_multiplier(double s_mm,
                                             double tilt_deg) const {
  double m = 1.0;
  for (const DropoutZone& z : dropout_zones) {
    if (s_mm < z.s0_mm || s_mm > z.s1_mm) continue;
    double eff = z.multiplier;
    if (z.recover_direction != 0) {
      const double aligned = z.recover_direction * tilt_deg / z.recover_deg;
      eff = z.multiplier + (1.0 - z.multiplier) * smoothstep01(aligned);
    }
    m *= eff;
  }
  return m;
}

bool DopplerResponseModel::in_zone(double s_mm) const {
  for (const DropoutZone& z : dropout_zones) {
    if (s_mm >= z.s0_mm && s_mm <= z.s1_mm) return true;
  }
  return false;
}

double DopplerResponseModel::pulse_area_fraction(double t_s,
                                                 double period_s) const {
  const double beat = std::max(0.0, std::sin(2.0 * kPi * t_s / period_s));
  return diastolic_floor + (1.0 - diastolic_floor) * beat;
}

double DopplerResponseModel::strength(double s_mm, double tilt_deg) const {
  return clamp01(base_strength * tilt_gain(tilt_deg) *
                 zone_multiplier(s_mm, tilt_deg));
}

void validate(const PhantomConfig& cfg) {
  if (cfg.width <= 0 || cfg.height <= 0) {
    throw std::invalid_argument("phantom image dims must be positive");
  }
  if (!(cfg.spacing_mm > 0.0)) {
    throw std::invalid_argument("phantom spacing must be positive");
  }
  if (!(cfg.frame_rate_hz > 0.0)) {
    throw std::invalid_argument("frame rate must be positive");
  }
  if (cfg.speckle_strength < 0.0 || cfg.speckle_strength >= 1.0) {
    throw std::invalid_argument("speckle strength outside [0, 1)");
  }
}

namespace {

struct TubeCrossing {
  double s_mm = 0.0;
  Eigen::Vector3d point_mm{0.0, 0.0, 0.0};
  double radius_mm = 0.0;
  double u_px = 0.0;
  double v_px = 0.0;
  int seg_index = 0;
};

std::vector<TubeCrossing> find_crossings(const VesselModel& tube,
                                         const std::vector<double>& s,
                                         const ProbePose& pose,
                                         double spacing_mm, int width_px) {
  const Eigen::Vector3d n = plane_normal(pose);
  const Eigen::Vector3d lat = lateral_axis(pose);
  const Eigen::Vector3d dep = depth_axis(pose);
  std::vector<TubeCrossing> out;
  const auto& c = tube.centerline_mm;
  double g_prev = n.dot(c[0] - pose.position);
  for (size_t i = 0; i + 1 < c.size(); ++i) {
    const double g_next = n.dot(c[i + 1] - pose.position);
    const bool crosses = (g_prev <= 0.0 && g_next > 0.0) ||
                         (g_prev >= 0.0 && g_next < 0.0);
    if (crosses) {
      const double denom = g_prev - g_next;
      const double tau = std::abs(denom) < 1e-12 ? 0.5 : g_prev / denom;
      TubeCrossing x;
      x.point_mm = c[i] + tau * (c[i + 1] - c[i]);
      x.s_mm = s[i] + tau * (s[i + 1] - s[i]);
      x.radius_mm = tube.radius_mm[i] +
                    tau * (tube.radius_mm[i + 1] - tube.radius_mm[i]);
      x.seg_index = static_cast<int>(i);
      const Eigen::Vector3d rel = x.point_mm - pose.position;
      x.u_px = rel.dot(lat) / spacing_mm + 0.5 * (width_px - 1);
      x.v_px = rel.dot(dep) / spacing_mm;
      out.push_back(x);
    }
    g_prev = g_next;
  }
  return out;
}

double point_segment_distance(const Eigen::Vector3d& p,
                              const Eigen::Vector3d& a,
                              const Eigen::Vector3d& b) {
  const Eigen::Vector3d ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 < 1e-18) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

// Distance to the tube axis and the local radius, rasterised into
// full-frame buffers but only within windows around the plane crossings.
void rasterize_tube_distance(const VesselModel& tube,
                             const std::vector<double>& s,
                             const std::vector<TubeCrossing>& crossings,
                             const ProbePose& pose, const PhantomConfig& cfg,
                             PlaneT<float>& dist_mm, PlaneT<float>& local_r_mm) {
  const double reach = 4.0;  // window half-size in local radii
  for (const TubeCrossing& x : crossings) {
    const double r = x.radius_mm;
    const double span_mm = reach * r;
    // Segment range covering the window's possible axial extent.
    int lo = x.seg_index, hi = x.seg_index + 1;
    while (lo > 0 && s[static_cast<size_t>(lo)] > x.s_mm - span_mm) --lo;
    while (hi + 1 < static_cast<int>(s.size()) &&
           s[static_cast<size_t>(hi)] < x.s_mm + span_mm) {
      ++hi;
    }
    const int halfwin = static_cast<int>(std::ceil(span_mm / cfg.spacing_mm)) + 2;
    const int u0 = std::max(0, static_cast<int>(std::floor(x.u_px)) - halfwin);
    const int u1 = std::min(cfg.width - 1,
                            static_cast<int>(std::ceil(x.u_px)) + halfwin);
    const int v0 = std::max(0, static_cast<int>(std::floor(x.v_px)) - halfwin);
    const int v1 = std::min(cfg.height - 1,
                            static_cast<int>(std::ceil(x.v_px)) + halfwin);
    for (int v = v0; v <= v1; ++v) {
      for (int u = u0; u <= u1; ++u) {
        const Eigen::Vector3d p =
            image_point(pose, u, v, cfg.spacing_mm, cfg.width);
        double best = std::numeric_limits<double>::infinity();
        int best_seg = x.seg_index;
        for (int i = lo; i < hi; ++i) {
          const double d = point_segment_distance(
              p, tube.centerline_mm[static_cast<size_t>(i)],
              tube.centerline_mm[static_cast<size_t>(i) + 1]);
          if (d < best) {
            best = d;
            best_seg = i;
          }
        }
        if (best < dist_mm(v, u)) {
          dist_mm(v, u) = static_cast<float>(best);
          local_r_mm(v, u) =
              static_cast<float>(tube.radius_mm[static_cast<size_t>(best_seg)]);
        }
      }
    }
  }
}

// Lumen intensity factor: contrast inside, 1 outside, smooth wall.
inline double lumen_factor(double dist_mm, double r_mm, double edge_mm,
                           double contrast) {
  const double x = (dist_mm - r_mm) / edge_mm * 0.5 + 0.5;
  return contrast + (1.0 - contrast) * smoothstep01(x);
}

}  // namespace

PhantomFrame slice_phantom(const Phantom& phantom, const ProbePose& pose,
                           double t_s, int frame_index) {
  validate(phantom.cfg);
  validate(phantom.artery);
  validate(pose);
  if (!(t_s >= 0.0) || !std::isfinite(t_s)) {
    throw std::invalid_argument("phantom time must be finite and >= 0");
  }
  const PhantomConfig& cfg = phantom.cfg;
  const int W = cfg.width;
  const int H = cfg.height;
  const double tilt = pose.out_of_plane_deg;

  PhantomFrame out;
  out.frame.bmode = ImageGrid::zeros(H, W, static_cast<float>(cfg.spacing_mm));
  out.frame.doppler = ImageGrid::zeros(H, W, static_cast<float>(cfg.spacing_mm));
  out.ground_truth = ImageGrid::zeros(H, W, static_cast<float>(cfg.spacing_mm));
  out.frame.timestamp_s = t_s;
  out.frame.pose = pose;
  out.frame.frame_index = frame_index;

  // Layered background: depth shading, skin line, fascia bands.
  PlaneT<float>& bm = out.frame.bmode.data;
  for (int v = 0; v < H; ++v) {
    const double v_mm = v * cfg.spacing_mm;
    double base = 0.52 - 0.10 * v_mm / (H * cfg.spacing_mm);
    base += 0.20 * std::exp(-0.5 * std::pow((v_mm - 0.8) / 0.5, 2.0));
    for (const TissueBand& b : phantom.bands) {
      base += b.gain * std::exp(-0.5 * std::pow((v_mm - b.depth_mm) / b.sigma_mm,
                                                2.0));
    }
    for (int u = 0; u < W; ++u) bm(v, u) = static_cast<float>(base);
  }

  // Tube cross-sections via true 3-d distance to each axis, so a tilted
  // plane shows the expected elongated section.
  PlaneT<float> dist_mm(H, W), local_r(H, W);
  const auto paint_lumen = [&](const VesselModel& tube, double washout_pow) {
    const std::vector<double> s = arclengths_mm(tube);
    const std::vector<TubeCrossing> crossings =
        find_crossings(tube, s, pose, cfg.spacing_mm, W);
    if (crossings.empty()) return crossings;
    dist_mm.setConstant(std::numeric_limits<float>::infinity());
    rasterize_tube_distance(tube, s, crossings, pose, cfg, dist_mm, local_r);
    for (int v = 0; v < H; ++v) {
      for (int u = 0; u < W; ++u) {
        const double d = dist_mm(v, u);
        if (!std::isfinite(d)) continue;
        const double r = local_r(v, u);
        if (d > r + 2.0 * cfg.edge_width_mm) continue;
        const double f =
            lumen_factor(d, r, cfg.edge_width_mm, cfg.lumen_contrast);
        bm(v, u) *= static_cast<float>(std::pow(f, washout_pow));
      }
    }
    return crossings;
  };

  // The artery first: its crossings fix the frame-level dropout state.
  const std::vector<double> artery_s = arclengths_mm(phantom.artery);
  const std::vector<TubeCrossing> artery_crossings =
      find_crossings(phantom.artery, artery_s, pose, cfg.spacing_mm, W);
  out.plane_hit = !artery_crossings.empty();
  double frame_eff = 1.0;
  for (const TubeCrossing& x : artery_crossings) {
    if (phantom.response.in_zone(x.s_mm)) out.in_dropout = true;
    frame_eff = std::min(frame_eff, phantom.response.strength(x.s_mm, tilt));
  }
  out.doppler_strength = out.plane_hit ? frame_eff : 1.0;

  // Acoustic-coupling washout: a dead zone attenuates the whole frame's
  // contrast, not just the colour signal.
  const double washout_pow = 0.15 + 0.85 * frame_eff;

  if (out.plane_hit) {
    dist_mm.setConstant(std::numeric_limits<float>::infinity());
    rasterize_tube_distance(phantom.artery, artery_s, artery_crossings, pose,
                            cfg, dist_mm, local_r);
    const double pulse = phantom.response.pulse_area_fraction(
        t_s, phantom.artery.pulsation_period_s);
    for (int v = 0; v < H; ++v) {
      for (int u = 0; u < W; ++u) {
        const double d = dist_mm(v, u);
        if (!std::isfinite(d)) continue;
        const double r = local_r(v, u);
        if (d <= r) out.ground_truth.data(v, u) = 1.0f;
        if (d > r + 2.0 * cfg.edge_width_mm) continue;
        const double f =
            lumen_factor(d, r, cfg.edge_width_mm, cfg.lumen_contrast);
        bm(v, u) *= static_cast<float>(std::pow(f, washout_pow));
      }
    }
    // The colour patch per crossing scales with the local strength and
    // the cardiac phase; bloom lets it overflow the wall slightly.
    for (const TubeCrossing& x : artery_crossings) {
      const double str = phantom.response.strength(x.s_mm, tilt);
      const double r_dop =
          phantom.response.bloom * x.radius_mm * std::sqrt(str * pulse);
      if (r_dop <= 0.0) continue;
      const int halfwin =
          static_cast<int>(std::ceil(r_dop / cfg.spacing_mm * 1.6)) + 2;
      const int u0 = std::max(0, static_cast<int>(x.u_px) - halfwin);
      const int u1 = std::min(W - 1, static_cast<int>(x.u_px) + halfwin);
      const int v0 = std::max(0, static_cast<int>(x.v_px) - halfwin);
      const int v1 = std::min(H - 1, static_cast<int>(x.v_px) + halfwin);
      for (int v = v0; v <= v1; ++v) {
        for (int u = u0; u <= u1; ++u) {
          if (std::isfinite(dist_mm(v, u)) && dist_mm(v, u) <= r_dop) {
            out.frame.doppler.data(v, u) = 1.0f;
          }
        }
      }
    }
  }

  for (const VesselModel& decoy : phantom.decoys) {
    validate(decoy);
    paint_lumen(decoy, washout_pow);
  }

  if (frame_eff < 1.0) {
    // Blend toward a flat haze as the acoustic window degrades.
    const float flat = 0.45f;
    const float m = static_cast<float>(0.25 + 0.75 * frame_eff);
    bm = flat + m * (bm - flat);
  }

  // Multiplicative speckle, then flash artifacts, from the per-frame
  // stream; draw order is fixed so frames are reproducible.
  std::mt19937_64 rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(frame_index)));
  if (cfg.speckle_strength > 0.0) {
    const double a = cfg.speckle_strength;
    for (int v = 0; v < H; ++v) {
      for (int u = 0; u < W; ++u) {
        bm(v, u) *= static_cast<float>(1.0 - a + a * rayleigh_unit_mean(rng));
      }
    }
  }
  for (int slot = 0; slot < 3; ++slot) {
    if (uniform01(rng) >= cfg.flash_rate / 3.0) continue;
    FlashArtifact fl;
    fl.center_px = {uniform(rng, 8.0, W - 9.0), uniform(rng, 8.0, H - 9.0)};
    fl.radius_mm = uniform01(rng) < 0.85 ? uniform(rng, 0.4, 1.15)
                                         : uniform(rng, 1.3, 1.8);
    const double ar = uniform(rng, 0.7, 1.3);
    const double phi = uniform(rng, 0.0, kPi);
    const double a_px = mm_to_px(fl.radius_mm, cfg.spacing_mm);
    const double b_px = a_px * ar;
    const double cph = std::cos(phi), sph = std::sin(phi);
    const int hw = static_cast<int>(std::ceil(std::max(a_px, b_px))) + 1;
    for (int v = std::max(0, static_cast<int>(fl.center_px.y()) - hw);
         v <= std::min(H - 1, static_cast<int>(fl.center_px.y()) + hw); ++v) {
      for (int u = std::max(0, static_cast<int>(fl.center_px.x()) - hw);
           u <= std::min(W - 1, static_cast<int>(fl.center_px.x()) + hw); ++u) {
        const double dx = u - fl.center_px.x();
        const double dy = v - fl.center_px.y();
        const double ex = (dx * cph + dy * sph) / a_px;
        const double ey = (-dx * sph + dy * cph) / b_px;
        if (ex * ex + ey * ey <= 1.0) out.frame.doppler.data(v, u) = 1.0f;
      }
    }
    out.flashes.push_back(fl);
  }

  bm = bm.cwiseMax(0.0f).cwiseMin(1.0f);
  return out;
}

std::vector<PhantomFrame> generate_sweep(const Phantom& phantom,
                                         const std::vector<ProbePose>& poses,
                                         double frame_rate_hz) {
  if (!(frame_rate_hz > 0.0)) {
    throw std::invalid_argument("frame rate must be positive");
  }
  std::vector<PhantomFrame> out;
  out.reserve(poses.size());
  for (size_t i = 0; i < poses.size(); ++i) {
    out.push_back(slice_phantom(phantom, poses[i],
                                static_cast<double>(i) / frame_rate_hz,
                                static_cast<int>(i)));
  }
  return out;
}

Phantom make_patient_phantom(const PatientSpec& spec,
                             const PhantomConfig& cfg) {
  validate(cfg);
  Phantom ph;
  ph.cfg = cfg;
  std::mt19937_64 rng(mix_seed(spec.patient_seed, 0xfa17a57));

  VesselShapeParams artery;
  artery.length_mm = spec.length_mm;
  artery.depth_mm = uniform(rng, 15.0, 21.0);
  artery.lateral_mm = uniform(rng, -2.0, 2.0);
  artery.wobble_y_mm = uniform(rng, 2.0, 4.0);
  artery.wobble_y_wavelength_mm = uniform(rng, 50.0, 90.0);
  artery.wobble_y_phase = uniform(rng, 0.0, 2.0 * kPi);
  artery.wobble_z_mm = uniform(rng, 1.0, 2.5);
  artery.wobble_z_wavelength_mm = uniform(rng, 60.0, 100.0);
  artery.wobble_z_phase = uniform(rng, 0.0, 2.0 * kPi);
  artery.radius_mm = uniform(rng, spec.vessel_radius_lo_mm,
                             spec.vessel_radius_hi_mm);
  artery.radius_wobble_mm = uniform(rng, 0.15, 0.4);
  artery.radius_phase = uniform(rng, 0.0, 2.0 * kPi);
  ph.artery = make_vessel(artery);

  for (int i = 0; i < spec.decoy_count; ++i) {
    VesselShapeParams vein = artery;
    const double side = (i % 2 == 0) ? 1.0 : -1.0;
    vein.lateral_mm = artery.lateral_mm +
                      side * uniform(rng, spec.decoy_lateral_lo_mm,
                                     spec.decoy_lateral_hi_mm);
    vein.depth_mm = artery.depth_mm + uniform(rng, spec.decoy_depth_lo_mm,
                                              spec.decoy_depth_hi_mm);
    vein.radius_mm =
        uniform(rng, spec.decoy_radius_lo_mm, spec.decoy_radius_hi_mm);
    vein.wobble_y_phase = uniform(rng, 0.0, 2.0 * kPi);
    vein.wobble_z_phase = uniform(rng, 0.0, 2.0 * kPi);
    VesselModel m = make_vessel(vein);
    m.doppler_active = false;
    ph.decoys.push_back(std::move(m));
  }

  const int band_count = uniform_int(rng, 2, 3);
  for (int i = 0; i < band_count; ++i) {
    TissueBand band;
    band.depth_mm = uniform(rng, 5.0, 38.0);
    band.gain = uniform(rng, 0.08, 0.18);
    band.sigma_mm = uniform(rng, 0.5, 1.2);
    ph.bands.push_back(band);
  }

  ph.response.diastolic_floor = spec.diastolic_floor;

  const std::vector<double> s = arclengths_mm(ph.artery);
  const double total = s.back();
  const int zone_count = uniform_int(rng, spec.zone_count_lo,
                                     spec.zone_count_hi);
  if (zone_count > 0) {
    const double lo = spec.zone_margin_mm;
    const double hi = total - spec.zone_margin_mm;
    const double slot = (hi - lo) / zone_count;
    for (int i = 0; i < zone_count; ++i) {
      DropoutZone z;
      const double len = uniform(rng, spec.zone_len_lo_mm, spec.zone_len_hi_mm);
      const double start =
          lo + i * slot + uniform(rng, 0.0, std::max(0.0, slot - len));
      z.s0_mm = start;
      z.s1_mm = start + len;
      z.multiplier = spec.zone_multiplier;
      z.recover_deg = spec.zone_recover_deg;
      z.recover_direction = (uniform01(rng) < 0.5) ? 1 : -1;
      ph.response.dropout_zones.push_back(z);
    }
  }
  return ph;
}

}  // namespace vascan
