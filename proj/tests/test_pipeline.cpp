#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "vascan/pipeline.hpp"

using namespace vascan;

namespace {

PipelineConfig small_scan_config(std::uint64_t seed, bool with_dropout) {
  PipelineConfig cfg;
  cfg.seed = seed;
  cfg.patient.patient_seed = seed + 50;
  cfg.patient.length_mm = 70.0;
  cfg.patient.decoy_count = 1;
  if (with_dropout) {
    cfg.patient.zone_count_lo = 2;
    cfg.patient.zone_count_hi = 2;
    cfg.patient.zone_len_lo_mm = 8.0;
    cfg.patient.zone_len_hi_mm = 12.0;
    cfg.patient.zone_multiplier = 0.0;
  } else {
    cfg.patient.zone_count_lo = 0;
    cfg.patient.zone_count_hi = 0;
  }
  cfg.phantom.width = 160;
  cfg.phantom.height = 160;
  cfg.phantom.spacing_mm = 45.0 / 160.0;
  cfg.phantom.speckle_strength = 0.2;
  cfg.phantom.flash_rate = 0.0;
  cfg.sweep_speed_mm_s = 12.0;
  cfg.segmenter = SegmenterKind::kClassical;
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("a clean sweep completes without re-identification episodes") {
  const PipelineConfig cfg = small_scan_config(1, false);
  const ScanReport report = run_scan(cfg);

  CHECK(report.episodes_total == 0);
  CHECK(report.episodes.empty());
  CHECK(report.reident_steps == 0);
  REQUIRE(report.frames.size() > 10);
  CHECK(report.sweep_distance_mm > 40.0);
  CHECK(report.mean_dice > 0.6);
  CHECK(report.volume_dice > 0.5);
  CHECK(report.budget_mean_ms > 0.0);

  // The probe never tilts and never freezes on a healthy vessel.
  for (const FrameScore& f : report.frames) {
    CHECK(f.tilt_deg == 0.0);
    CHECK(!f.dwell);
    CHECK(!f.in_dropout);
  }
  // Progress is monotone and the histogram accounts for every frame.
  for (size_t i = 1; i < report.frames.size(); ++i) {
    CHECK(report.frames[i].progress_mm >= report.frames[i - 1].progress_mm);
  }
  int binned = 0;
  for (const int c : report.dice_histogram) binned += c;
  CHECK(binned == static_cast<int>(report.frames.size()));

  // Without episodes, disabling re-identification changes nothing.
  PipelineConfig off = cfg;
  off.reident_enabled = false;
  const ScanReport report_off = run_scan(off);
  CHECK(report_off.frames.size() == report.frames.size());
  CHECK(report_off.mean_dice == report.mean_dice);
}

TEST_CASE("dropout zones trigger bounded orientation searches") {
  const PipelineConfig cfg = small_scan_config(2, true);
  const ScanReport report = run_scan(cfg);

  CHECK(report.episodes_total >= 1);
  CHECK(report.episodes_total ==
        report.episodes_recovered + report.episodes_aborted);

  const std::set<double> allowed = {0.0, 5.0, -5.0, 10.0, -10.0};
  int steps = 0;
  for (const ReidentEpisode& ep : report.episodes) {
    CHECK(!ep.offsets_visited_deg.empty());
    CHECK(ep.offsets_visited_deg.front() == 0.0);
    for (const double off : ep.offsets_visited_deg) {
      CHECK(allowed.count(off) == 1);
    }
    steps += static_cast<int>(ep.offsets_visited_deg.size());
  }
  CHECK(report.reident_steps == steps);
  CHECK(report.success_rate ==
        doctest::Approx(double(report.episodes_recovered) /
                        double(report.episodes_total)));

  // Dwell freezes translation while the search runs.
  bool any_dwell = false;
  for (size_t i = 1; i < report.frames.size(); ++i) {
    if (report.frames[i].dwell) {
      any_dwell = true;
      CHECK(report.frames[i].progress_mm ==
            doctest::Approx(report.frames[i - 1].progress_mm));
    }
  }
  CHECK(any_dwell);

  // With the monitor disarmed the probe never tilts, so the artery segment
  // inside each zone never reaches the compounded volume.
  PipelineConfig off = cfg;
  off.reident_enabled = false;
  const ScanReport report_off = run_scan(off);
  for (const FrameScore& f : report_off.frames) CHECK(f.tilt_deg == 0.0);
  double max_tilt = 0.0;
  for (const FrameScore& f : report.frames) {
    max_tilt = std::max(max_tilt, std::abs(f.tilt_deg));
  }
  CHECK(max_tilt > 0.0);
  CHECK(report_off.volume_dice < report.volume_dice);
  CHECK(report_off.moving_mean_dice < report.moving_mean_dice);
}

TEST_CASE("scan outputs are byte-identical across reruns") {
  const std::filesystem::path base =
      std::filesystem::temp_directory_path() / "vascan_rerun_test";
  std::filesystem::remove_all(base);

  PipelineConfig cfg = small_scan_config(3, true);
  cfg.out_dir = (base / "a").string();
  const ScanReport ra = run_scan(cfg);
  write_scan_outputs(ra, cfg);
  cfg.out_dir = (base / "b").string();
  const ScanReport rb = run_scan(cfg);
  write_scan_outputs(rb, cfg);

  // Everything except the wall-clock timing file must match exactly.
  for (const std::string name :
       {"report.json", "scores.csv", "events.jsonl", "volume_pred.raw",
        "volume_pred.json", "volume_gt.raw", "volume_gt.json",
        "mesh_pred.obj", "manifest.json"}) {
    CAPTURE(name);
    CHECK(slurp(base / "a" / name) == slurp(base / "b" / name));
  }
  CHECK(std::filesystem::exists(base / "a" / "timing.json"));

  std::filesystem::remove_all(base);
}

TEST_CASE("paired trials run both arms on the same phantom") {
  PipelineConfig cfg = small_scan_config(4, true);
  const AbSummary summary = ab_compare(cfg, 2);
  CHECK(summary.trials == 2);
  REQUIRE(summary.enabled_trial_dice.size() == 2);
  REQUIRE(summary.disabled_trial_dice.size() == 2);
  for (const double d : summary.enabled_trial_dice) {
    CHECK(d > 0.0);
    CHECK(d <= 1.0);
  }
  // The enabled arm tilts back onto the artery inside each dropout zone;
  // the disabled arm only regains signal once translation leaves the zone,
  // so its compounded volume is missing the in-zone segment.
  CHECK(summary.enabled.mean_volume_dice > summary.disabled.mean_volume_dice);
  CHECK(summary.enabled.mean_moving_dice > summary.disabled.mean_moving_dice);
  CHECK(summary.disabled.episodes_total >= summary.enabled.episodes_total);

  CHECK_THROWS_AS(ab_compare(cfg, 0), std::invalid_argument);
}

TEST_CASE("generated datasets are deterministic and well formed") {
  PhantomGenConfig gen;
  gen.patients = 2;
  gen.sequences_per_patient = 2;
  gen.frames_per_sequence = 5;
  gen.seed = 77;
  gen.base_spec.length_mm = 70.0;
  gen.base_spec.zone_count_lo = 1;
  gen.base_spec.zone_count_hi = 2;
  gen.phantom.width = 96;
  gen.phantom.height = 96;
  gen.phantom.spacing_mm = 45.0 / 96.0;

  const Dataset a = generate_phantom_dataset(gen);
  REQUIRE(a.sequences.size() == 4);
  for (const SequenceRecord& rec : a.sequences) {
    CHECK_NOTHROW(validate(rec));
    CHECK(rec.frames() == 5);
    // The tilt is constant within a sequence and inside the draw range.
    for (const double t : rec.tilt_deg) {
      CHECK(t == rec.tilt_deg.front());
      CHECK(std::abs(t) <= gen.tilt_range_deg);
    }
  }
  CHECK(patient_ids(a) == std::vector<int>{0, 1});

  const Dataset b = generate_phantom_dataset(gen);
  for (size_t s = 0; s < a.sequences.size(); ++s) {
    for (size_t t = 0; t < 5; ++t) {
      CHECK(a.sequences[s].bmode[t].data.isApprox(
          b.sequences[s].bmode[t].data));
      CHECK(a.sequences[s].gt[t].data.isApprox(b.sequences[s].gt[t].data));
    }
  }

  // A different seed renders different imagery.
  gen.seed = 78;
  const Dataset c = generate_phantom_dataset(gen);
  CHECK(!a.sequences[0].bmode[0].data.isApprox(c.sequences[0].bmode[0].data));
}
