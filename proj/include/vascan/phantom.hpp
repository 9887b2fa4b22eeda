#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "vascan/imaging.hpp"
#include "vascan/pose.hpp"

namespace vascan {

// Tube defined by a sampled 3-d centerline with a per-sample radius.
// Arteries carry colour flow; decoy tubes (veins) only darken the b-mode.
struct VesselModel {
  std::vector<Eigen::Vector3d> centerline_mm;
  std::vector<double> radius_mm;
  double pulsation_period_s = 1.0;
  bool doppler_active = true;
};

void validate(const VesselModel& vessel);
std::vector<double> arclengths_mm(const VesselModel& vessel);

struct VesselShapeParams {
  double length_mm = 120.0;
  double depth_mm = 18.0;    // z of the axis below the skin plane
  double lateral_mm = 0.0;   // y offset of the axis
  double wobble_y_mm = 3.0;
  double wobble_y_wavelength_mm = 60.0;
  double wobble_y_phase = 0.0;
  double wobble_z_mm = 2.0;
  double wobble_z_wavelength_mm = 80.0;
  double wobble_z_phase = 1.3;
  double radius_mm = 2.6;
  double radius_wobble_mm = 0.3;
  double radius_wavelength_mm = 55.0;
  double radius_phase = 0.7;
  double sample_step_mm = 0.5;
};

// Sinuous tube running along +x from x = 0 to x = length.
VesselModel make_vessel(const VesselShapeParams& p);

// Arclength interval of weak colour flow. A recovery direction lets an
// out-of-plane tilt of the right sign restore the signal (acoustic window
// regained); direction 0 means the zone is flat-dead regardless of tilt.
struct DropoutZone {
  double s0_mm = 0.0;
  double s1_mm = 0.0;
  double multiplier = 0.0;
  int recover_direction = 0;  // -1, 0, +1
  double recover_deg = 4.0;   // tilt magnitude giving full recovery
};

struct DopplerResponseModel {
  double base_strength = 1.0;
  double tilt_gain_floor = 0.75;          // gain at zero tilt
  double tilt_gain_saturation_deg = 10.0;  // |tilt| of full gain
  double bloom = 1.35;                     // patch overshoot vs lumen radius
  double diastolic_floor = 0.35;           // area fraction between beats
  std::vector<DropoutZone> dropout_zones;

  // Neutral response: the colour patch equals the lumen cross-section
  // exactly, with no tilt, pulse, or zone modulation.
  static DopplerResponseModel neutral();

  double tilt_gain(double tilt_deg) const;
  double zone_multiplier(double s_mm, double tilt_deg) const;
  double pulse_area_fraction(double t_s, double period_s) const;
  bool in_zone(double s_mm) const;

  // Product of base, tilt gain and zone multipliers, clamped to [0, 1].
  // The pulse enters separately because it scales area, not presence.
  double strength(double s_mm, double tilt_deg) const;
};

struct PhantomConfig {
  std::uint64_t seed = 1;
  int width = 320;
  int height = 320;
  double spacing_mm = 45.0 / 320.0;
  double frame_rate_hz = 10.0;
  double speckle_strength = 0.35;   // 0 disables speckle
  double lumen_contrast = 0.12;     // lumen-to-tissue intensity ratio
  double edge_width_mm = 0.1;       // lumen wall blur
  double flash_rate = 0.25;         // expected flash artifacts per frame
};

void validate(const PhantomConfig& cfg);

// Background texture band (fascia layer) at a given depth.
struct TissueBand {
  double depth_mm = 0.0;
  double gain = 0.0;
  double sigma_mm = 1.0;
};

struct Phantom {
  VesselModel artery;
  std::vector<VesselModel> decoys;
  std::vector<TissueBand> bands;
  DopplerResponseModel response;
  PhantomConfig cfg;
};

struct FlashArtifact {
  Eigen::Vector2d center_px{0.0, 0.0};
  double radius_mm = 0.0;
};

struct PhantomFrame {
  DuplexFrame frame;
  ImageGrid ground_truth;
  bool plane_hit = false;        // the artery crosses the image plane
  bool in_dropout = false;       // an artery crossing sits inside a zone
  double doppler_strength = 1.0;  // effective strength at the crossing
  std::vector<FlashArtifact> flashes;
};

// Renders the duplex frame the probe would see at this pose and time.
// Deterministic in (phantom, pose, t, frame_index).
PhantomFrame slice_phantom(const Phantom& phantom, const ProbePose& pose,
                           double t_s, int frame_index);

std::vector<PhantomFrame> generate_sweep(const Phantom& phantom,
                                         const std::vector<ProbePose>& poses,
                                         double frame_rate_hz);

// Draws a patient-specific phantom: vessel geometry, decoy veins, tissue
// bands and dropout-zone placement all derive from the patient seed.
struct PatientSpec {
  std::uint64_t patient_seed = 0;
  double length_mm = 120.0;
  double vessel_radius_lo_mm = 2.3;
  double vessel_radius_hi_mm = 3.0;
  int decoy_count = 2;
  double decoy_lateral_lo_mm = 5.0;  // offset from the artery axis
  double decoy_lateral_hi_mm = 9.0;
  double decoy_depth_lo_mm = -3.0;
  double decoy_depth_hi_mm = 4.0;
  double decoy_radius_lo_mm = 1.8;
  double decoy_radius_hi_mm = 2.8;
  int zone_count_lo = 3;
  int zone_count_hi = 5;
  double zone_len_lo_mm = 2.0;
  double zone_len_hi_mm = 4.0;
  double zone_multiplier = 0.05;
  double zone_recover_deg = 4.0;
  double zone_margin_mm = 12.0;  // keep zones away from the vessel ends
  double diastolic_floor = 0.35;  // 0 makes colour flow vanish between beats
};

Phantom make_patient_phantom(const PatientSpec& spec, const PhantomConfig& cfg);

}  // namespace vascan
