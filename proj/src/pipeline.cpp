#include "vascan/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "vascan/checkpoint.hpp"
#include "vascan/classical.hpp"
#include "vascan/common.hpp"
#include "vascan/nn/model.hpp"

namespace vascan {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start)
      .count();
}

struct TimingAcc {
  double sum = 0.0, sumsq = 0.0, max = 0.0;
  std::int64_t n = 0;

  void add(double ms) {
    sum += ms;
    sumsq += ms * ms;
    max = std::max(max, ms);
    ++n;
  }
  StageTiming stats() const {
    StageTiming s;
    if (n == 0) return s;
    s.mean_ms = sum / static_cast<double>(n);
    const double var =
        std::max(0.0, sumsq / static_cast<double>(n) - s.mean_ms * s.mean_ms);
    s.sd_ms = std::sqrt(var);
    s.max_ms = max;
    return s;
  }
};

// Classical baseline or a checkpointed network behind one interface. The
// network keeps its hidden state across the whole sweep.
class Segmenter {
 public:
  explicit Segmenter(const PipelineConfig& cfg) : kind_(cfg.segmenter) {
    if (kind_ == SegmenterKind::kModel) {
      if (cfg.checkpoint_path.empty()) {
        throw std::invalid_argument("model segmenter needs a checkpoint");
      }
      const nn::ModelConfig mc = peek_checkpoint(cfg.checkpoint_path);
      net_.emplace(mc);
      load_checkpoint(cfg.checkpoint_path, *net_);
      res_ = mc.input_res;
    }
  }

  ImageGrid segment(const DuplexFrame& frame, double& preprocess_ms,
                    double& inference_ms) {
    if (kind_ == SegmenterKind::kClassical) {
      preprocess_ms = 0.0;
      const auto t0 = Clock::now();
      ImageGrid mask = classical_segment(frame);
      inference_ms = ms_since(t0);
      return mask;
    }
    const auto t0 = Clock::now();
    const ImageGrid bm = resample(frame.bmode, res_, res_, Resample::kBilinear);
    const ImageGrid dop =
        resample(frame.doppler, res_, res_, Resample::kNearest);
    nn::Tensor4<float> bmt = nn::Tensor4<float>::zeros(1, 1, res_, res_);
    nn::Tensor4<float> dpt = bmt.zeros_like();
    bmt.at(0, 0) = bm.data;
    dpt.at(0, 0) = dop.data;
    preprocess_ms = ms_since(t0);
    const auto t1 = Clock::now();
    nn::SegNet<float>::FrameCache cache;
    const nn::Tensor4<float> prob = net_->forward(bmt, dpt, state_, cache, false);
    ImageGrid small = ImageGrid::zeros(res_, res_, bm.spacing_mm);
    small.data = (prob.at(0, 0) > 0.5f).cast<float>();
    ImageGrid mask = resample(small, frame.bmode.width(),
                              frame.bmode.height(), Resample::kNearest);
    inference_ms = ms_since(t1);
    return mask;
  }

 private:
  SegmenterKind kind_;
  std::optional<nn::SegNet<float>> net_;
  nn::SegNet<float>::State state_;
  int res_ = 64;
};

LabelVolume sized_volume(double length_mm, double spacing_mm) {
  // The image plane reaches 45 mm from the probe and tilts up to the
  // safety limit, so pad the sweep segment accordingly on every axis.
  const Eigen::Vector3d origin(-20.0, -25.0, -3.0);
  const Eigen::Vector3i dims(
      static_cast<int>(std::ceil((length_mm + 40.0) / spacing_mm)) + 1,
      static_cast<int>(std::ceil(50.0 / spacing_mm)) + 1,
      static_cast<int>(std::ceil(53.0 / spacing_mm)) + 1);
  return LabelVolume(origin, dims, spacing_mm);
}

}  // namespace

ScanReport run_scan(const PipelineConfig& cfg) {
  validate(cfg.phantom);
  PhantomConfig ph_cfg = cfg.phantom;
  ph_cfg.seed = mix_seed(cfg.seed, 0xA1);
  const Phantom phantom = make_patient_phantom(cfg.patient, ph_cfg);
  const double length = cfg.patient.length_mm;
  if (length <= 2.0 * cfg.sweep_margin_mm) {
    throw std::invalid_argument("sweep margin leaves no path");
  }

  SweepPlan plan;
  plan.start = make_pose({cfg.sweep_margin_mm, 0.0, 0.0}, 0.0);
  plan.end = make_pose({length - cfg.sweep_margin_mm, 0.0, 0.0}, 0.0);
  plan.speed_mm_s = cfg.sweep_speed_mm_s;
  SweepExecutor exec(plan, ImpedanceParams::defaults(), 20.0,
                     cfg.reident.safety_limit_deg);

  Segmenter segmenter(cfg);
  TrackerState tracks;
  ReidentState monitor;
  // Startup grace: give the tracker enough history to judge validity
  // before the monitor may open an episode.
  monitor.block_until_s =
      (cfg.reident.min_history + 2) / ph_cfg.frame_rate_hz;

  LabelVolume pred_vol = sized_volume(length, cfg.volume_spacing_mm);
  LabelVolume gt_vol = sized_volume(length, cfg.volume_spacing_mm);

  ScanReport report;
  TimingAcc acc_pre, acc_seg, acc_trk, acc_mon, acc_cmp;
  double compound_total_ms = 0.0;

  const double dt = 1.0 / ph_cfg.frame_rate_hz;
  double t = 0.0;
  int frame = 0;
  while (!exec.finished() && frame < cfg.max_frames) {
    const ProbePose pose = exec.pose();
    const PhantomFrame pf = slice_phantom(phantom, pose, t, frame);

    double pre_ms = 0.0, seg_ms = 0.0;
    const ImageGrid mask = segmenter.segment(pf.frame, pre_ms, seg_ms);
    acc_pre.add(pre_ms);
    acc_seg.add(seg_ms);

    const auto t_trk = Clock::now();
    const std::vector<FlowContour> contours =
        extract_centers(pf.frame.doppler, cfg.tracker);
    update_tracker(tracks, contours, cfg.tracker);
    acc_trk.add(ms_since(t_trk));

    const auto t_mon = Clock::now();
    const QualityVerdict verdict = check_quality(tracks, mask, cfg.reident);
    const std::optional<OrientationCommand> cmd =
        reident_step(monitor, verdict, t, cfg.reident);
    acc_mon.add(ms_since(t_mon));

    const bool searching = monitor.phase == ReidentPhase::kSweeping ||
                           monitor.phase == ReidentPhase::kDwelling;
    const bool hold = cfg.reident_enabled && searching;
    exec.step(dt, cfg.reident_enabled ? cmd : std::nullopt,
              hold ? SweepMode::kPositionHold : SweepMode::kImpedance);

    const auto t_cmp = Clock::now();
    insert_mask(pred_vol, mask, pose);
    insert_mask(gt_vol, pf.ground_truth, pose);
    const double cmp_ms = ms_since(t_cmp);
    acc_cmp.add(cmp_ms);
    compound_total_ms += cmp_ms;

    FrameScore score;
    score.frame_index = frame;
    score.t_s = t;
    score.tilt_deg = pose.out_of_plane_deg;
    score.progress_mm = exec.progress_mm();
    score.dice = dice_score(mask, pf.ground_truth);
    score.iou = iou_score(mask, pf.ground_truth);
    score.dwell = hold;
    score.sufficient = verdict.sufficient;
    score.doppler_present = (pf.frame.doppler.data != 0.0f).any();
    score.in_dropout = pf.in_dropout;
    report.frames.push_back(score);

    t += dt;
    ++frame;
  }
  finish_reident(monitor, t);

  report.episodes = monitor.episodes;
  report.episodes_total = static_cast<int>(report.episodes.size());
  for (const ReidentEpisode& e : report.episodes) {
    report.episodes_recovered += e.recovered ? 1 : 0;
    report.episodes_aborted += e.aborted ? 1 : 0;
    report.reident_steps += static_cast<int>(e.offsets_visited_deg.size());
  }
  report.success_rate =
      report.episodes_total > 0
          ? static_cast<double>(report.episodes_recovered) /
                static_cast<double>(report.episodes_total)
          : 0.0;
  report.sweep_distance_mm = exec.progress_mm();
  report.total_duration_s = t;

  std::vector<double> dices;
  double dice_sum = 0.0, dice_sumsq = 0.0, iou_sum = 0.0;
  double moving_sum = 0.0;
  std::int64_t moving_n = 0;
  for (const FrameScore& s : report.frames) {
    dices.push_back(s.dice);
    dice_sum += s.dice;
    dice_sumsq += s.dice * s.dice;
    iou_sum += s.iou;
    if (!s.dwell) {
      moving_sum += s.dice;
      ++moving_n;
    }
  }
  const double n = static_cast<double>(report.frames.size());
  if (n > 0) {
    report.mean_dice = dice_sum / n;
    report.sd_dice =
        std::sqrt(std::max(0.0, dice_sumsq / n - report.mean_dice * report.mean_dice));
    report.mean_iou = iou_sum / n;
    report.dice_histogram = score_histogram(dices);
  }
  report.moving_mean_dice =
      moving_n > 0 ? moving_sum / static_cast<double>(moving_n) : 0.0;
  report.volume_dice = dice_score(pred_vol, gt_vol);

  report.t_preprocess = acc_pre.stats();
  report.t_segment = acc_seg.stats();
  report.t_tracker = acc_trk.stats();
  report.t_monitor = acc_mon.stats();
  report.t_compound = acc_cmp.stats();
  report.budget_mean_ms = report.t_preprocess.mean_ms +
                          report.t_tracker.mean_ms +
                          report.t_monitor.mean_ms + report.t_compound.mean_ms;
  report.compounding_total_s = compound_total_ms / 1000.0;
  report.out_dir = cfg.out_dir;

  if (!cfg.out_dir.empty()) {
    write_scan_outputs(report, cfg);
    save_volume(cfg.out_dir + "/volume_pred", pred_vol);
    save_volume(cfg.out_dir + "/volume_gt", gt_vol);
    save_surface_mesh_obj(cfg.out_dir + "/mesh_pred.obj", pred_vol);
  }
  return report;
}

namespace {

void accumulate_arm(AbArmSummary& arm, std::vector<double>& trial_dice,
                    std::vector<double>& all_frame_dice,
                    std::vector<double>& volume_dice,
                    std::vector<double>& moving_dice,
                    std::vector<double>& iou, const ScanReport& report) {
  trial_dice.push_back(report.mean_dice);
  volume_dice.push_back(report.volume_dice);
  moving_dice.push_back(report.moving_mean_dice);
  iou.push_back(report.mean_iou);
  for (const FrameScore& s : report.frames) all_frame_dice.push_back(s.dice);
  arm.episodes_total += report.episodes_total;
  arm.episodes_recovered += report.episodes_recovered;
}

double mean_of(const std::vector<double>& xs) {
  double sum = 0.0;
  for (double x : xs) sum += x;
  return xs.empty() ? 0.0 : sum / static_cast<double>(xs.size());
}

double sd_of(const std::vector<double>& xs) {
  const double m = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return xs.empty() ? 0.0 : std::sqrt(ss / static_cast<double>(xs.size()));
}

}  // namespace

AbSummary ab_compare(const PipelineConfig& cfg, int trials) {
  if (trials < 1) throw std::invalid_argument("need at least one trial");
  AbSummary summary;
  summary.trials = trials;
  std::vector<double> en_frames, dis_frames, en_vol, dis_vol, en_mov, dis_mov,
      en_iou, dis_iou;
  for (int k = 0; k < trials; ++k) {
    PipelineConfig trial = cfg;
    trial.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(k) + 1);
    trial.out_dir.clear();  // per-trial runs stay in memory

    trial.reident_enabled = true;
    const ScanReport on = run_scan(trial);
    accumulate_arm(summary.enabled, summary.enabled_trial_dice, en_frames,
                   en_vol, en_mov, en_iou, on);

    trial.reident_enabled = false;
    const ScanReport off = run_scan(trial);
    accumulate_arm(summary.disabled, summary.disabled_trial_dice, dis_frames,
                   dis_vol, dis_mov, dis_iou, off);
  }
  summary.enabled.mean_dice = mean_of(summary.enabled_trial_dice);
  summary.enabled.sd_dice = sd_of(summary.enabled_trial_dice);
  summary.enabled.mean_iou = mean_of(en_iou);
  summary.enabled.mean_volume_dice = mean_of(en_vol);
  summary.enabled.mean_moving_dice = mean_of(en_mov);
  summary.enabled.dice_histogram = score_histogram(en_frames);
  summary.disabled.mean_dice = mean_of(summary.disabled_trial_dice);
  summary.disabled.sd_dice = sd_of(summary.disabled_trial_dice);
  summary.disabled.mean_iou = mean_of(dis_iou);
  summary.disabled.mean_volume_dice = mean_of(dis_vol);
  summary.disabled.mean_moving_dice = mean_of(dis_mov);
  summary.disabled.dice_histogram = score_histogram(dis_frames);
  if (!cfg.out_dir.empty()) write_ab_outputs(summary, cfg, cfg.out_dir);
  return summary;
}

Dataset generate_phantom_dataset(const PhantomGenConfig& cfg) {
  if (cfg.patients < 1 || cfg.sequences_per_patient < 1 ||
      cfg.frames_per_sequence < 1) {
    throw std::invalid_argument("degenerate dataset configuration");
  }
  Dataset data;
  const double rate = cfg.phantom.frame_rate_hz;
  const double step_mm = cfg.sweep_speed_mm_s / rate;
  const double span_mm = step_mm * (cfg.frames_per_sequence - 1);
  for (int p = 0; p < cfg.patients; ++p) {
    PatientSpec spec = cfg.base_spec;
    spec.patient_seed = mix_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(p));
    PhantomConfig ph_cfg = cfg.phantom;
    ph_cfg.seed = mix_seed(cfg.seed, 2000 + static_cast<std::uint64_t>(p));
    const Phantom phantom = make_patient_phantom(spec, ph_cfg);
    for (int s = 0; s < cfg.sequences_per_patient; ++s) {
      std::mt19937_64 rng(mix_seed(
          cfg.seed, 3000 + 97 * static_cast<std::uint64_t>(p) +
                        static_cast<std::uint64_t>(s)));
      const double margin = 6.0;
      const double hi = spec.length_mm - margin - span_mm;
      const double x0 = hi > margin ? uniform(rng, margin, hi) : margin;
      const double tilt =
          uniform(rng, -cfg.tilt_range_deg, cfg.tilt_range_deg);
      std::vector<ProbePose> poses;
      for (int i = 0; i < cfg.frames_per_sequence; ++i) {
        poses.push_back(make_pose({x0 + step_mm * i, 0.0, 0.0}, tilt));
      }
      const std::vector<PhantomFrame> frames =
          generate_sweep(phantom, poses, rate);
      SequenceRecord record;
      record.patient_id = p;
      record.sequence_id = s;
      for (const PhantomFrame& f : frames) {
        record.bmode.push_back(f.frame.bmode);
        record.doppler.push_back(f.frame.doppler);
        record.gt.push_back(f.ground_truth);
        record.timestamps_s.push_back(f.frame.timestamp_s);
        record.tilt_deg.push_back(tilt);
      }
      data.sequences.push_back(std::move(record));
    }
  }
  return data;
}

}  // namespace vascan
