#pragma once

#include <optional>
#include <vector>

#include "vascan/control.hpp"
#include "vascan/imaging.hpp"
#include "vascan/tracker.hpp"

namespace vascan {

struct ReidentParams {
  // Object validity: share of freshly matched centres over the recent
  // history window, requiring a minimum history before judging at all.
  int validity_window = 15;
  double validity_fraction = 0.20;
  int min_history = 5;

  // Orientation search: offsets 0, +s, -s, +2s, -2s, ... relative to the
  // tilt at episode start, each held for dwell_s, at most max_orientations
  // of them, every commanded target clipped against the absolute safety limit.
  double step_deg = 5.0;
  double dwell_s = 2.0;
  int max_orientations = 5;
  double safety_limit_deg = 20.0;
  double post_fail_block_s = 3.0;
};

bool object_valid(const TrackObject& object, const ReidentParams& params);

enum class QualityReason : std::uint8_t {
  kOk,
  kNoValidObject,
  kCenterOutsideMask,
};

struct QualityVerdict {
  bool sufficient = false;
  std::vector<int> valid_object_ids;
  QualityReason reason = QualityReason::kNoValidObject;
};

// Signal is sufficient if some valid object's latest centre falls on a lit
// pixel of the segmentation mask.
QualityVerdict check_quality(const TrackerState& state,
                             const ImageGrid& segmentation_mask,
                             const ReidentParams& params);

enum class ReidentPhase : std::uint8_t {
  kInactive,
  kSweeping,   // command issued, probe still rotating toward it
  kDwelling,   // holding an offset, waiting for signal
  kReturning,  // search exhausted, rotating back
  kBlocked,    // post-failure cooldown
};

struct ReidentEpisode {
  int id = 0;
  double start_time_s = 0.0;
  double end_time_s = 0.0;
  std::vector<double> offsets_visited_deg;
  bool recovered = false;
  bool aborted = false;  // source ended mid-episode
};

struct ReidentState {
  ReidentPhase phase = ReidentPhase::kInactive;
  double trajectory_tilt_deg = 0.0;  // current trajectory orientation
  double episode_start_tilt_deg = 0.0;
  std::vector<double> offsets_deg;  // search list for the running episode
  size_t offset_index = 0;
  double dwell_start_s = 0.0;
  double block_until_s = 0.0;
  double last_clock_s = -1.0;
  int episode_counter = 0;
  std::vector<ReidentEpisode> episodes;  // closed episodes, then the open one
};

// One monitor tick. Emits at most one orientation command; the trajectory
// orientation is adopted from the successful offset (at most once per
// episode). Throws std::invalid_argument if the clock runs backwards.
std::optional<OrientationCommand> reident_step(ReidentState& state,
                                               const QualityVerdict& verdict,
                                               double clock_s,
                                               const ReidentParams& params);

// Marks a still-open episode as aborted at the given time (sweep ended).
void finish_reident(ReidentState& state, double clock_s);

}  // namespace vascan
