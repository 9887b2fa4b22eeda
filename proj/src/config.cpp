#include "vascan/config.hpp"

#include <json.hpp>

#include <fstream>

namespace vascan {
namespace {

using nlohmann::json;

json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("bad JSON in " + path + ": " + e.what());
  }
}

void read_patient(const json& j, PatientSpec& spec) {
  spec.patient_seed = j.value("patient_seed", spec.patient_seed);
  spec.length_mm = j.value("length_mm", spec.length_mm);
  spec.vessel_radius_lo_mm =
      j.value("vessel_radius_lo_mm", spec.vessel_radius_lo_mm);
  spec.vessel_radius_hi_mm =
      j.value("vessel_radius_hi_mm", spec.vessel_radius_hi_mm);
  spec.decoy_count = j.value("decoy_count", spec.decoy_count);
  spec.decoy_lateral_lo_mm =
      j.value("decoy_lateral_lo_mm", spec.decoy_lateral_lo_mm);
  spec.decoy_lateral_hi_mm =
      j.value("decoy_lateral_hi_mm", spec.decoy_lateral_hi_mm);
  spec.decoy_depth_lo_mm = j.value("decoy_depth_lo_mm", spec.decoy_depth_lo_mm);
  spec.decoy_depth_hi_mm = j.value("decoy_depth_hi_mm", spec.decoy_depth_hi_mm);
  spec.decoy_radius_lo_mm =
      j.value("decoy_radius_lo_mm", spec.decoy_radius_lo_mm);
  spec.decoy_radius_hi_mm =
      j.value("decoy_radius_hi_mm", spec.decoy_radius_hi_mm);
  spec.zone_count_lo = j.value("zone_count_lo", spec.zone_count_lo);
  spec.zone_count_hi = j.value("zone_count_hi", spec.zone_count_hi);
  spec.zone_len_lo_mm = j.value("zone_len_lo_mm", spec.zone_len_lo_mm);
  spec.zone_len_hi_mm = j.value("zone_len_hi_mm", spec.zone_len_hi_mm);
  spec.zone_multiplier = j.value("zone_multiplier", spec.zone_multiplier);
  spec.zone_recover_deg = j.value("zone_recover_deg", spec.zone_recover_deg);
  spec.zone_margin_mm = j.value("zone_margin_mm", spec.zone_margin_mm);
  spec.diastolic_floor = j.value("diastolic_floor", spec.diastolic_floor);
}

void read_phantom(const json& j, PhantomConfig& cfg) {
  cfg.seed = j.value("seed", cfg.seed);
  cfg.width = j.value("width", cfg.width);
  cfg.height = j.value("height", cfg.height);
  cfg.spacing_mm = j.value("spacing_mm", cfg.spacing_mm);
  cfg.frame_rate_hz = j.value("frame_rate_hz", cfg.frame_rate_hz);
  cfg.speckle_strength = j.value("speckle_strength", cfg.speckle_strength);
  cfg.lumen_contrast = j.value("lumen_contrast", cfg.lumen_contrast);
  cfg.edge_width_mm = j.value("edge_width_mm", cfg.edge_width_mm);
  cfg.flash_rate = j.value("flash_rate", cfg.flash_rate);
}

}  // namespace

PipelineConfig load_pipeline_config(const std::string& path) {
  const json j = parse_file(path);
  PipelineConfig cfg;
  cfg.seed = j.value("seed", cfg.seed);
  const std::string seg = j.value("segmenter", std::string("classical"));
  if (seg == "classical") {
    cfg.segmenter = SegmenterKind::kClassical;
  } else if (seg == "model") {
    cfg.segmenter = SegmenterKind::kModel;
  } else {
    throw std::runtime_error("unknown segmenter '" + seg + "' in " + path);
  }
  cfg.checkpoint_path = j.value("checkpoint", cfg.checkpoint_path);
  cfg.reident_enabled = j.value("reident_enabled", cfg.reident_enabled);
  cfg.sweep_speed_mm_s = j.value("sweep_speed_mm_s", cfg.sweep_speed_mm_s);
  cfg.sweep_margin_mm = j.value("sweep_margin_mm", cfg.sweep_margin_mm);
  cfg.volume_spacing_mm = j.value("volume_spacing_mm", cfg.volume_spacing_mm);
  cfg.max_frames = j.value("max_frames", cfg.max_frames);
  cfg.out_dir = j.value("out_dir", cfg.out_dir);
  if (j.contains("patient")) read_patient(j.at("patient"), cfg.patient);
  if (j.contains("phantom")) read_phantom(j.at("phantom"), cfg.phantom);
  if (j.contains("tracker")) {
    const json& t = j.at("tracker");
    cfg.tracker.min_radius_mm =
        t.value("min_radius_mm", cfg.tracker.min_radius_mm);
    cfg.tracker.max_match_dist_px =
        t.value("max_match_dist_px", cfg.tracker.max_match_dist_px);
  }
  if (j.contains("reident")) {
    const json& r = j.at("reident");
    cfg.reident.validity_window =
        r.value("validity_window", cfg.reident.validity_window);
    cfg.reident.validity_fraction =
        r.value("validity_fraction", cfg.reident.validity_fraction);
    cfg.reident.min_history = r.value("min_history", cfg.reident.min_history);
    cfg.reident.step_deg = r.value("step_deg", cfg.reident.step_deg);
    cfg.reident.dwell_s = r.value("dwell_s", cfg.reident.dwell_s);
    cfg.reident.max_orientations =
        r.value("max_orientations", cfg.reident.max_orientations);
    cfg.reident.safety_limit_deg =
        r.value("safety_limit_deg", cfg.reident.safety_limit_deg);
    cfg.reident.post_fail_block_s =
        r.value("post_fail_block_s", cfg.reident.post_fail_block_s);
  }
  if (cfg.segmenter == SegmenterKind::kModel && cfg.checkpoint_path.empty()) {
    throw std::runtime_error("model segmenter needs a checkpoint in " + path);
  }
  return cfg;
}

PhantomGenConfig load_phantom_gen_config(const std::string& path) {
  const json j = parse_file(path);
  PhantomGenConfig cfg;
  cfg.patients = j.value("patients", cfg.patients);
  cfg.sequences_per_patient =
      j.value("sequences_per_patient", cfg.sequences_per_patient);
  cfg.frames_per_sequence =
      j.value("frames_per_sequence", cfg.frames_per_sequence);
  cfg.sweep_speed_mm_s = j.value("sweep_speed_mm_s", cfg.sweep_speed_mm_s);
  cfg.tilt_range_deg = j.value("tilt_range_deg", cfg.tilt_range_deg);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("patient")) read_patient(j.at("patient"), cfg.base_spec);
  if (j.contains("phantom")) read_phantom(j.at("phantom"), cfg.phantom);
  return cfg;
}

}  // namespace vascan
