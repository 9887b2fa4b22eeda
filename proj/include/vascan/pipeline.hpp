#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "vascan/compound.hpp"
#include "vascan/control.hpp"
#include "vascan/dataset.hpp"
#include "vascan/monitor.hpp"
#include "vascan/phantom.hpp"
#include "vascan/tracker.hpp"

namespace vascan {

enum class SegmenterKind { kClassical, kModel };

struct PipelineConfig {
  PatientSpec patient;
  PhantomConfig phantom;
  double sweep_speed_mm_s = 10.0;
  double sweep_margin_mm = 8.0;  // keep the plane off the vessel ends
  SegmenterKind segmenter = SegmenterKind::kClassical;
  std::string checkpoint_path;  // model segmenter only
  bool reident_enabled = true;
  TrackerParams tracker;
  ReidentParams reident;
  double volume_spacing_mm = 0.5;
  int max_frames = 2000;  // hard stop against stuck dwell loops
  std::string out_dir;    // empty runs in memory only
  std::uint64_t seed = 1;
};

struct FrameScore {
  int frame_index = 0;
  double t_s = 0.0;
  double tilt_deg = 0.0;
  double progress_mm = 0.0;
  double dice = 0.0;
  double iou = 0.0;
  bool dwell = false;        // translation frozen by an episode
  bool sufficient = false;   // monitor verdict this frame
  bool doppler_present = false;
  bool in_dropout = false;
};

struct StageTiming {
  double mean_ms = 0.0;
  double sd_ms = 0.0;
  double max_ms = 0.0;
};

struct ScanReport {
  std::vector<FrameScore> frames;
  std::vector<ReidentEpisode> episodes;
  int episodes_total = 0;
  int episodes_recovered = 0;
  int episodes_aborted = 0;
  int reident_steps = 0;  // offsets visited across all episodes
  double success_rate = 0.0;
  double sweep_distance_mm = 0.0;
  double total_duration_s = 0.0;  // simulated scan time
  double mean_dice = 0.0;
  double sd_dice = 0.0;
  double mean_iou = 0.0;
  double moving_mean_dice = 0.0;  // dwell frames excluded
  std::array<int, 10> dice_histogram{};
  double volume_dice = 0.0;

  // Wall-clock per-frame stage costs; everything except segmentation
  // counts against the real-time budget.
  StageTiming t_preprocess, t_segment, t_tracker, t_monitor, t_compound;
  double budget_mean_ms = 0.0;  // preprocess + tracker + monitor + compound
  double compounding_total_s = 0.0;
  std::string out_dir;
};

// Closed-loop sweep over a synthetic patient: generate frame, segment,
// track, judge quality, possibly re-orient, advance the probe, compound.
// Deterministic given config and seed; with reident_enabled=false the
// monitor still runs and logs but its commands never reach the executor.
ScanReport run_scan(const PipelineConfig& cfg);

struct AbArmSummary {
  double mean_dice = 0.0;
  double sd_dice = 0.0;
  double mean_iou = 0.0;
  double mean_volume_dice = 0.0;
  double mean_moving_dice = 0.0;
  int episodes_total = 0;
  int episodes_recovered = 0;
  std::array<int, 10> dice_histogram{};
};

struct AbSummary {
  int trials = 0;
  AbArmSummary enabled;
  AbArmSummary disabled;
  std::vector<double> enabled_trial_dice;   // per-trial mean frame dice
  std::vector<double> disabled_trial_dice;
};

// Paired trials: each trial runs the identical phantom and seed once with
// re-identification and once without.
AbSummary ab_compare(const PipelineConfig& cfg, int trials);

struct PhantomGenConfig {
  int patients = 5;
  int sequences_per_patient = 2;
  int frames_per_sequence = 10;
  double sweep_speed_mm_s = 10.0;
  double tilt_range_deg = 4.0;  // constant per-sequence tilt drawn from this
  std::uint64_t seed = 1;
  PatientSpec base_spec;
  PhantomConfig phantom;
};

// Renders a training corpus: per patient a fresh phantom, per sequence a
// short straight sweep over a random portion at a random constant tilt.
Dataset generate_phantom_dataset(const PhantomGenConfig& cfg);

// Serialises the deterministic outputs (report.json, scores.csv,
// events.jsonl, pose_trace.csv, volumes, mesh, manifest.json) plus the
// wall-clock timing.json, which reruns are allowed to differ on.
void write_scan_outputs(const ScanReport& report, const PipelineConfig& cfg);
void write_ab_outputs(const AbSummary& summary, const PipelineConfig& cfg,
                      const std::string& out_dir);

}  // namespace vascan
