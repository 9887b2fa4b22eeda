#include "vascan/pipeline.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace vascan {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json episode_json(const ReidentEpisode& e) {
  json j;
  j["id"] = e.id;
  j["start_s"] = e.start_time_s;
  j["end_s"] = e.end_time_s;
  j["offsets_deg"] = e.offsets_visited_deg;
  j["recovered"] = e.recovered;
  j["aborted"] = e.aborted;
  return j;
}

json config_json(const PipelineConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["segmenter"] =
      cfg.segmenter == SegmenterKind::kClassical ? "classical" : "model";
  j["checkpoint"] = cfg.checkpoint_path;
  j["reident_enabled"] = cfg.reident_enabled;
  j["sweep_speed_mm_s"] = cfg.sweep_speed_mm_s;
  j["sweep_margin_mm"] = cfg.sweep_margin_mm;
  j["volume_spacing_mm"] = cfg.volume_spacing_mm;
  j["max_frames"] = cfg.max_frames;
  j["patient"] = {{"patient_seed", cfg.patient.patient_seed},
                  {"length_mm", cfg.patient.length_mm},
                  {"vessel_radius_lo_mm", cfg.patient.vessel_radius_lo_mm},
                  {"vessel_radius_hi_mm", cfg.patient.vessel_radius_hi_mm},
                  {"decoy_count", cfg.patient.decoy_count},
                  {"decoy_lateral_lo_mm", cfg.patient.decoy_lateral_lo_mm},
                  {"decoy_lateral_hi_mm", cfg.patient.decoy_lateral_hi_mm},
                  {"decoy_depth_lo_mm", cfg.patient.decoy_depth_lo_mm},
                  {"decoy_depth_hi_mm", cfg.patient.decoy_depth_hi_mm},
                  {"decoy_radius_lo_mm", cfg.patient.decoy_radius_lo_mm},
                  {"decoy_radius_hi_mm", cfg.patient.decoy_radius_hi_mm},
                  {"zone_count_lo", cfg.patient.zone_count_lo},
                  {"zone_count_hi", cfg.patient.zone_count_hi},
                  {"zone_len_lo_mm", cfg.patient.zone_len_lo_mm},
                  {"zone_len_hi_mm", cfg.patient.zone_len_hi_mm},
                  {"zone_multiplier", cfg.patient.zone_multiplier},
                  {"zone_recover_deg", cfg.patient.zone_recover_deg},
                  {"zone_margin_mm", cfg.patient.zone_margin_mm},
                  {"diastolic_floor", cfg.patient.diastolic_floor}};
  j["phantom"] = {{"width", cfg.phantom.width},
                  {"height", cfg.phantom.height},
                  {"spacing_mm", cfg.phantom.spacing_mm},
                  {"frame_rate_hz", cfg.phantom.frame_rate_hz},
                  {"speckle_strength", cfg.phantom.speckle_strength},
                  {"lumen_contrast", cfg.phantom.lumen_contrast},
                  {"edge_width_mm", cfg.phantom.edge_width_mm},
                  {"flash_rate", cfg.phantom.flash_rate}};
  j["tracker"] = {{"min_radius_mm", cfg.tracker.min_radius_mm},
                  {"max_match_dist_px", cfg.tracker.max_match_dist_px}};
  j["reident"] = {{"validity_window", cfg.reident.validity_window},
                  {"validity_fraction", cfg.reident.validity_fraction},
                  {"min_history", cfg.reident.min_history},
                  {"step_deg", cfg.reident.step_deg},
                  {"dwell_s", cfg.reident.dwell_s},
                  {"max_orientations", cfg.reident.max_orientations},
                  {"safety_limit_deg", cfg.reident.safety_limit_deg},
                  {"post_fail_block_s", cfg.reident.post_fail_block_s}};
  return j;
}

void write_text(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << body;
}

json arm_json(const AbArmSummary& arm) {
  json j;
  j["mean_dice"] = arm.mean_dice;
  j["sd_dice"] = arm.sd_dice;
  j["mean_iou"] = arm.mean_iou;
  j["mean_volume_dice"] = arm.mean_volume_dice;
  j["mean_moving_dice"] = arm.mean_moving_dice;
  j["episodes_total"] = arm.episodes_total;
  j["episodes_recovered"] = arm.episodes_recovered;
  j["dice_histogram"] = arm.dice_histogram;
  return j;
}

}  // namespace

void write_scan_outputs(const ScanReport& report, const PipelineConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  const fs::path dir(cfg.out_dir);

  json rep;
  rep["config"] = config_json(cfg);
  rep["frame_count"] = report.frames.size();
  rep["total_duration_s"] = report.total_duration_s;
  rep["sweep_distance_mm"] = report.sweep_distance_mm;
  rep["mean_dice"] = report.mean_dice;
  rep["sd_dice"] = report.sd_dice;
  rep["mean_iou"] = report.mean_iou;
  rep["moving_mean_dice"] = report.moving_mean_dice;
  rep["volume_dice"] = report.volume_dice;
  rep["dice_histogram"] = report.dice_histogram;
  rep["episodes_total"] = report.episodes_total;
  rep["episodes_recovered"] = report.episodes_recovered;
  rep["episodes_aborted"] = report.episodes_aborted;
  rep["reident_steps"] = report.reident_steps;
  rep["success_rate"] = report.success_rate;
  json eps = json::array();
  for (const ReidentEpisode& e : report.episodes) eps.push_back(episode_json(e));
  rep["episodes"] = eps;
  write_text((dir / "report.json").string(), rep.dump(2) + "\n");

  std::string csv =
      "frame,t_s,tilt_deg,progress_mm,dice,iou,dwell,sufficient,"
      "doppler_present,in_dropout\n";
  char line[256];
  for (const FrameScore& s : report.frames) {
    std::snprintf(line, sizeof(line),
                  "%d,%.6f,%.6f,%.6f,%.9f,%.9f,%d,%d,%d,%d\n", s.frame_index,
                  s.t_s, s.tilt_deg, s.progress_mm, s.dice, s.iou,
                  s.dwell ? 1 : 0, s.sufficient ? 1 : 0,
                  s.doppler_present ? 1 : 0, s.in_dropout ? 1 : 0);
    csv += line;
  }
  write_text((dir / "scores.csv").string(), csv);

  std::string events;
  for (const ReidentEpisode& e : report.episodes) {
    events += episode_json(e).dump() + "\n";
  }
  write_text((dir / "events.jsonl").string(), events);

  json timing;
  for (const auto& [name, stage] :
       {std::pair{"preprocess", &report.t_preprocess},
        std::pair{"segment", &report.t_segment},
        std::pair{"tracker", &report.t_tracker},
        std::pair{"monitor", &report.t_monitor},
        std::pair{"compound", &report.t_compound}}) {
    timing[name] = {{"mean_ms", stage->mean_ms},
                    {"sd_ms", stage->sd_ms},
                    {"max_ms", stage->max_ms}};
  }
  timing["budget_mean_ms"] = report.budget_mean_ms;
  timing["compounding_total_s"] = report.compounding_total_s;
  write_text((dir / "timing.json").string(), timing.dump(2) + "\n");

  json manifest;
  manifest["config"] = config_json(cfg);
  manifest["files"] = {"report.json",     "scores.csv",
                       "events.jsonl",    "timing.json",
                       "volume_pred.raw", "volume_pred.json",
                       "volume_gt.raw",   "volume_gt.json",
                       "mesh_pred.obj"};
  manifest["deterministic"] = {"report.json",     "scores.csv",
                               "events.jsonl",    "volume_pred.raw",
                               "volume_pred.json", "volume_gt.raw",
                               "volume_gt.json",  "mesh_pred.obj"};
  write_text((dir / "manifest.json").string(), manifest.dump(2) + "\n");
}

void write_ab_outputs(const AbSummary& summary, const PipelineConfig& cfg,
                      const std::string& out_dir) {
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);

  json rep;
  rep["config"] = config_json(cfg);
  rep["trials"] = summary.trials;
  rep["enabled"] = arm_json(summary.enabled);
  rep["disabled"] = arm_json(summary.disabled);
  rep["enabled_trial_dice"] = summary.enabled_trial_dice;
  rep["disabled_trial_dice"] = summary.disabled_trial_dice;
  write_text((dir / "ab_summary.json").string(), rep.dump(2) + "\n");

  std::string csv =
      "arm,mean_dice,sd_dice,mean_iou,mean_volume_dice,mean_moving_dice,"
      "episodes_total,episodes_recovered\n";
  char line[256];
  for (const auto& [name, arm] : {std::pair{"enabled", &summary.enabled},
                                  std::pair{"disabled", &summary.disabled}}) {
    std::snprintf(line, sizeof(line), "%s,%.9f,%.9f,%.9f,%.9f,%.9f,%d,%d\n",
                  name, arm->mean_dice, arm->sd_dice, arm->mean_iou,
                  arm->mean_volume_dice, arm->mean_moving_dice,
                  arm->episodes_total, arm->episodes_recovered);
    csv += line;
  }
  write_text((dir / "ab_summary.csv").string(), csv);

  json manifest;
  manifest["config"] = config_json(cfg);
  manifest["files"] = {"ab_summary.json", "ab_summary.csv"};
  write_text((dir / "manifest.json").string(), manifest.dump(2) + "\n");
}

}  // namespace vascan
