#include "vascan/monitor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vascan {

bool object_valid(const TrackObject& object, const ReidentParams& params) {
  const int len = static_cast<int>(object.history.size());
  if (len < params.min_history) return false;
  const int window = std::min(params.validity_window, len);
  int fresh = 0;
  for (int i = len - window; i < len; ++i) {
    if (object.history[static_cast<size_t>(i)].label == CenterLabel::kNew) {
      ++fresh;
    }
  }
  return static_cast<double>(fresh) >= params.validity_fraction * window - 1e-9;
}

QualityVerdict check_quality(const TrackerState& state,
                             const ImageGrid& segmentation_mask,
                             const ReidentParams& params) {
  if (segmentation_mask.empty()) {
    throw std::invalid_argument("empty segmentation mask");
  }
  QualityVerdict verdict;
  for (const TrackObject& obj : state.objects) {
    if (object_valid(obj, params)) verdict.valid_object_ids.push_back(obj.id);
  }
  if (verdict.valid_object_ids.empty()) {
    verdict.reason = QualityReason::kNoValidObject;
    return verdict;
  }
  for (const TrackObject& obj : state.objects) {
    if (!object_valid(obj, params)) continue;
    const Eigen::Vector2d c = obj.history.back().center_px;
    const int x = static_cast<int>(std::lround(c.x()));
    const int y = static_cast<int>(std::lround(c.y()));
    if (x < 0 || x >= segmentation_mask.width() || y < 0 ||
        y >= segmentation_mask.height()) {
      continue;
    }
    if (segmentation_mask.data(y, x) != 0.0f) {
      verdict.sufficient = true;
      verdict.reason = QualityReason::kOk;
      return verdict;
    }
  }
  verdict.reason = QualityReason::kCenterOutsideMask;
  return verdict;
}

namespace {

// Offsets 0, +s, -s, +2s, -2s, ... capped at max_orientations entries;
// targets outside the safety limit are skipped, not clamped.
std::vector<double> build_offsets(double start_tilt_deg,
                                  const ReidentParams& params) {
  std::vector<double> offsets;
  for (int rank = 0; rank < params.max_orientations; ++rank) {
    double off = 0.0;
    if (rank > 0) {
      const int magnitude = (rank + 1) / 2;
      const double sign = (rank % 2 == 1) ? 1.0 : -1.0;
      off = sign * magnitude * params.step_deg;
    }
    if (std::abs(start_tilt_deg + off) > params.safety_limit_deg + 1e-9) {
      continue;  // skipped outright, the list is not refilled
    }
    offsets.push_back(off);
  }
  return offsets;
}

ReidentEpisode& open_episode(ReidentState& state, double clock_s) {
  ReidentEpisode ep;
  ep.id = state.episode_counter++;
  ep.start_time_s = clock_s;
  state.episodes.push_back(ep);
  return state.episodes.back();
}

std::optional<OrientationCommand> begin_search(ReidentState& state,
                                               double clock_s,
                                               const ReidentParams& params) {
  state.episode_start_tilt_deg = state.trajectory_tilt_deg;
  state.offsets_deg = build_offsets(state.episode_start_tilt_deg, params);
  if (state.offsets_deg.empty()) return std::nullopt;
  state.offset_index = 0;
  state.dwell_start_s = clock_s;
  state.phase = ReidentPhase::kSweeping;
  ReidentEpisode& ep = open_episode(state, clock_s);
  ep.offsets_visited_deg.push_back(state.offsets_deg.front());
  return OrientationCommand{state.episode_start_tilt_deg +
                            state.offsets_deg.front()};
}

void close_episode(ReidentState& state, double clock_s, bool recovered) {
  ReidentEpisode& ep = state.episodes.back();
  ep.end_time_s = clock_s;
  ep.recovered = recovered;
}

}  // namespace

std::optional<OrientationCommand> reident_step(ReidentState& state,
                                               const QualityVerdict& verdict,
                                               double clock_s,
                                               const ReidentParams& params) {
  if (clock_s < state.last_clock_s) {
    throw std::invalid_argument("monitor clock ran backwards");
  }
  state.last_clock_s = clock_s;

  switch (state.phase) {
    case ReidentPhase::kBlocked:
      if (clock_s < state.block_until_s) return std::nullopt;
      state.phase = ReidentPhase::kInactive;
      [[fallthrough]];
    case ReidentPhase::kInactive:
      if (verdict.sufficient) return std::nullopt;
      if (clock_s < state.block_until_s) return std::nullopt;
      return begin_search(state, clock_s, params);

    case ReidentPhase::kSweeping:
      state.phase = ReidentPhase::kDwelling;
      [[fallthrough]];
    case ReidentPhase::kDwelling: {
      if (verdict.sufficient) {
        // Signal came back at this offset: fold it into the trajectory.
        state.trajectory_tilt_deg =
            state.episode_start_tilt_deg + state.offsets_deg[state.offset_index];
        state.phase = ReidentPhase::kInactive;
        close_episode(state, clock_s, true);
        return std::nullopt;
      }
      if (clock_s - state.dwell_start_s < params.dwell_s - 1e-9) {
        return std::nullopt;
      }
      ++state.offset_index;
      if (state.offset_index < state.offsets_deg.size()) {
        state.dwell_start_s = clock_s;
        state.phase = ReidentPhase::kSweeping;
        const double off = state.offsets_deg[state.offset_index];
        state.episodes.back().offsets_visited_deg.push_back(off);
        return OrientationCommand{state.episode_start_tilt_deg + off};
      }
      // Search exhausted: back to the episode-start orientation, then block.
      state.phase = ReidentPhase::kReturning;
      state.block_until_s = clock_s + params.post_fail_block_s;
      close_episode(state, clock_s, false);
      return OrientationCommand{state.episode_start_tilt_deg};
    }

    case ReidentPhase::kReturning:
      state.phase = ReidentPhase::kBlocked;
      return std::nullopt;
  }
  return std::nullopt;
}

void finish_reident(ReidentState& state, double clock_s) {
  const bool open = state.phase == ReidentPhase::kSweeping ||
                    state.phase == ReidentPhase::kDwelling;
  if (open && !state.episodes.empty() && !state.episodes.back().recovered &&
      state.episodes.back().end_time_s == 0.0) {
    ReidentEpisode& ep = state.episodes.back();
    ep.end_time_s = clock_s;
    ep.aborted = true;
  }
  state.phase = ReidentPhase::kInactive;
}

}  // namespace vascan
