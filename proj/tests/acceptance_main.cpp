// Acceptance runner: executes the nine release gates end to end and prints
// one PASS/FAIL line per criterion. Criteria 5 and 6 train models from
// scratch and dominate the runtime (roughly 25 minutes on one core); the
// process exits nonzero if any criterion fails.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "vascan/checkpoint.hpp"
#include "vascan/common.hpp"
#include "vascan/compound.hpp"
#include "vascan/control.hpp"
#include "vascan/dataset.hpp"
#include "vascan/monitor.hpp"
#include "vascan/nn/loss.hpp"
#include "vascan/nn/model.hpp"
#include "vascan/pipeline.hpp"
#include "vascan/tracker.hpp"
#include "vascan/trainer.hpp"

using namespace vascan;
using namespace vascan::nn;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return "<unreadable:" + p.string() + ">";
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// 1. Metric exactness: the hand-computable loss and score values, plus the
// dice = 2*iou/(1+iou) identity across random masks.

Outcome metric_exactness() {
  std::vector<std::string> bad;

  {
    Tensor4<double> p = Tensor4<double>::zeros(1, 1, 5, 4);
    for (int j = 0; j < 10; ++j) p.at(0, 0)(j / 4, j % 4) = 1.0;
    if (std::abs(soft_dice_loss(p, p)) > 1e-12) bad.push_back("perfect-match loss");
  }
  {
    Tensor4<double> p = Tensor4<double>::zeros(1, 1, 2, 2);
    Tensor4<double> y = Tensor4<double>::zeros(1, 1, 2, 2);
    p.at(0, 0).setConstant(0.5);
    y.at(0, 0).setConstant(1.0);
    if (std::abs(soft_dice_loss(p, y) - (1.0 - 5.0 / 6.0)) > 1e-12) {
      bad.push_back("half-confidence loss");
    }
  }
  {
    Tensor4<double> p = Tensor4<double>::zeros(1, 1, 2, 5);
    Tensor4<double> y = Tensor4<double>::zeros(1, 1, 2, 5);
    p.at(0, 0).row(0).setConstant(1.0);
    y.at(0, 0).row(1).setConstant(1.0);
    if (std::abs(soft_dice_loss(p, y) - (1.0 - 1.0 / 11.0)) > 1e-12) {
      bad.push_back("disjoint loss");
    }
  }

  {
    ImageGrid a = ImageGrid::zeros(4, 4, 1.0f);
    ImageGrid b = ImageGrid::zeros(4, 4, 1.0f);
    a.data.topRows(2).setConstant(1.0f);  // 8 pixels
    b.data = a.data;
    if (std::abs(dice_score(a, b) - 1.0) > 1e-12) bad.push_back("dice identical");
    if (std::abs(iou_score(a, b) - 1.0) > 1e-12) bad.push_back("iou identical");

    b.data.setZero();
    b.data.bottomRows(2).setConstant(1.0f);
    if (std::abs(dice_score(a, b)) > 1e-12) bad.push_back("dice disjoint");
    if (std::abs(iou_score(a, b)) > 1e-12) bad.push_back("iou disjoint");

    // |A| = |B| = 4 with overlap 2: dice 1/2, iou 1/3 (union 6).
    a.data.setZero();
    b.data.setZero();
    a.data.row(0).setConstant(1.0f);
    b.data(0, 2) = b.data(0, 3) = b.data(1, 0) = b.data(1, 1) = 1.0f;
    if (std::abs(dice_score(a, b) - 0.5) > 1e-12) bad.push_back("dice overlap");
    if (std::abs(iou_score(a, b) - 1.0 / 3.0) > 1e-12) bad.push_back("iou overlap");
  }

  std::mt19937_64 rng(4242);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    ImageGrid a = ImageGrid::zeros(32, 32, 1.0f);
    ImageGrid b = ImageGrid::zeros(32, 32, 1.0f);
    if (i > 0) {  // pair 0 exercises the both-empty convention
      const double da = uniform(rng, 0.05, 0.6);
      const double db = uniform(rng, 0.05, 0.6);
      for (int r = 0; r < 32; ++r) {
        for (int c = 0; c < 32; ++c) {
          a.data(r, c) = uniform01(rng) < da ? 1.0f : 0.0f;
          b.data(r, c) = uniform01(rng) < db ? 1.0f : 0.0f;
        }
      }
      if (i == 1) b.data = a.data;
    }
    const double dice = dice_score(a, b);
    const double iou = iou_score(a, b);
    worst = std::max(worst, std::abs(dice - 2.0 * iou / (1.0 + iou)));
  }
  if (worst > 1e-12) bad.push_back(fmt("identity error %.2e", worst));

  Outcome out;
  out.pass = bad.empty();
  out.detail = bad.empty()
                   ? fmt("identity worst %.1e over 1000 pairs", worst)
                   : "failed: " + bad.front();
  return out;
}

// ---------------------------------------------------------------------------
// 2. Gradient fidelity: central finite differences over every parameter of
// randomized recurrent dual-encoder instances. Coordinates whose +/-eps
// probes land on different sides of a ReLU or pooling decision are skipped
// via the kink-pattern hash; the skip rate must stay marginal.

Tensor4<double> random_frame(std::mt19937_64& rng, int res, bool binary) {
  Tensor4<double> t = Tensor4<double>::zeros(1, 1, res, res);
  for (auto& p : t.planes) {
    for (int i = 0; i < p.rows(); ++i) {
      for (int j = 0; j < p.cols(); ++j) {
        p(i, j) = binary ? (uniform01(rng) > 0.6 ? 1.0 : 0.0)
                         : uniform01(rng) * 2.0 - 1.0;
      }
    }
  }
  return t;
}

Outcome gradient_fidelity() {
  long checked = 0, skipped = 0, gru_checked = 0;
  double worst = 0.0;
  std::string worst_at;
  const double eps = 1e-4;

  for (int trial = 0; trial < 20; ++trial) {
    const int res = 8 + 4 * (trial % 3);      // 8, 12, 16
    const int frames = 2 + trial % 2;         // 2 or 3
    ModelConfig cfg;                          // default variant: dopus4
    cfg.widths = {2, 3};
    cfg.init_seed = 300 + static_cast<std::uint64_t>(trial);
    SegNet<double> net(cfg);

    std::mt19937_64 rng(1300 + static_cast<std::uint64_t>(trial));
    std::vector<Tensor4<double>> bmode, doppler, target;
    for (int t = 0; t < frames; ++t) {
      bmode.push_back(random_frame(rng, res, false));
      doppler.push_back(random_frame(rng, res, true));
      target.push_back(random_frame(rng, res, true));
    }

    ParamList<double> params;
    net.collect_params(params);
    net.zero_grad();
    {
      SegNet<double>::State st;
      run_sequence_chunk(net, bmode, doppler, target, st, true);
    }

    for (auto& span : params) {
      const bool is_gru = span.name.rfind("gru", 0) == 0;
      for (std::int64_t j = 0; j < span.count; ++j) {
        const double keep = span.value[j];
        std::uint64_t hp = 0, hm = 0;
        span.value[j] = keep + eps;
        double lp;
        {
          SegNet<double>::State st;
          lp = run_sequence_chunk(net, bmode, doppler, target, st, false,
                                  nullptr, &hp);
        }
        span.value[j] = keep - eps;
        double lm;
        {
          SegNet<double>::State st;
          lm = run_sequence_chunk(net, bmode, doppler, target, st, false,
                                  nullptr, &hm);
        }
        span.value[j] = keep;
        if (hp != hm) {
          ++skipped;
          continue;
        }
        ++checked;
        if (is_gru) ++gru_checked;
        const double fd = (lp - lm) / (2 * eps);
        const double an = span.grad[j];
        const double rel =
            std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6});
        if (rel > worst) {
          worst = rel;
          worst_at = fmt("trial %d %s[%lld]", trial, span.name.c_str(),
                         static_cast<long long>(j));
        }
      }
    }
  }

  const double skip_frac =
      static_cast<double>(skipped) / static_cast<double>(checked + skipped);
  Outcome out;
  out.pass = worst < 1e-3 && checked > 0 && gru_checked > 0 && skip_frac < 0.05;
  out.detail = fmt("20 instances, worst rel %.2e (%s), skipped %.2f%%", worst,
                   worst_at.c_str(), 100.0 * skip_frac);
  return out;
}

// ---------------------------------------------------------------------------
// 3. Tracker oracle equivalence. The oracle restates the matching rule
// independently: every object takes its nearest centre when close enough,
// several objects may share one centre, and leftover centres spawn new
// objects in order.

struct OracleObject {
  int id = 0;
  std::vector<Eigen::Vector2d> centers;
  std::vector<CenterLabel> labels;
};

void oracle_update(std::vector<OracleObject>& objects, int& next_id,
                   const std::vector<FlowContour>& centers, double t_d) {
  std::vector<bool> used(centers.size(), false);
  for (OracleObject& obj : objects) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < centers.size(); ++i) {
      const double d = (centers[i].center_px - obj.centers.back()).norm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(i);
      }
    }
    if (best >= 0 && best_d <= t_d) {
      obj.centers.push_back(centers[static_cast<size_t>(best)].center_px);
      obj.labels.push_back(CenterLabel::kNew);
      used[static_cast<size_t>(best)] = true;
    } else {
      obj.centers.push_back(obj.centers.back());
      obj.labels.push_back(CenterLabel::kCopied);
    }
  }
  for (size_t i = 0; i < centers.size(); ++i) {
    if (used[i]) continue;
    OracleObject obj;
    obj.id = next_id++;
    obj.centers.push_back(centers[i].center_px);
    obj.labels.push_back(CenterLabel::kNew);
    objects.push_back(std::move(obj));
  }
}

Outcome tracker_equivalence() {
  TrackerParams params;
  long fresh_assignments = 0;
  size_t max_objects = 0;

  for (int instance = 0; instance < 1000; ++instance) {
    std::mt19937_64 rng(mix_seed(33000, static_cast<std::uint64_t>(instance)));
    const int frames = uniform_int(rng, 2, 5);
    TrackerState state;
    std::vector<OracleObject> oracle;
    int next_id = 0;

    for (int f = 0; f < frames; ++f) {
      std::vector<FlowContour> centers;
      if (f == 0) {
        const int k = uniform_int(rng, 1, 3);
        for (int i = 0; i < k; ++i) {
          FlowContour c;
          c.center_px = {uniform(rng, 0.0, 400.0), uniform(rng, 0.0, 400.0)};
          centers.push_back(c);
        }
      } else {
        for (const OracleObject& obj : oracle) {
          if (centers.size() >= 6 || uniform01(rng) >= 0.7) continue;
          FlowContour c;
          c.center_px = obj.centers.back() +
                        Eigen::Vector2d(uniform(rng, -20.0, 20.0),
                                        uniform(rng, -20.0, 20.0));
          centers.push_back(c);
        }
        if (centers.size() < 6 && uniform01(rng) < 0.4) {
          FlowContour c;
          c.center_px = {uniform(rng, 0.0, 400.0), uniform(rng, 0.0, 400.0)};
          centers.push_back(c);
        }
      }
      // Trim candidates until the oracle population stays within five.
      while (!centers.empty()) {
        std::vector<OracleObject> probe = oracle;
        int probe_id = next_id;
        oracle_update(probe, probe_id, centers, params.max_match_dist_px);
        if (probe.size() <= 5) break;
        centers.pop_back();
      }

      update_tracker(state, centers, params);
      oracle_update(oracle, next_id, centers, params.max_match_dist_px);
      max_objects = std::max(max_objects, oracle.size());

      if (state.objects.size() != oracle.size()) {
        return {false, fmt("instance %d frame %d: %zu objects vs oracle %zu",
                           instance, f, state.objects.size(), oracle.size())};
      }
      for (size_t i = 0; i < oracle.size(); ++i) {
        const TrackObject& got = state.objects[i];
        const OracleObject& want = oracle[i];
        if (got.id != want.id || got.history.size() != want.centers.size()) {
          return {false, fmt("instance %d object %zu: id/history mismatch",
                             instance, i)};
        }
        for (size_t t = 0; t < want.centers.size(); ++t) {
          const double err =
              (got.history[t].center_px - want.centers[t]).cwiseAbs().maxCoeff();
          if (err > 1e-12 || got.history[t].label != want.labels[t]) {
            return {false,
                    fmt("instance %d object %zu step %zu diverges", instance,
                        i, t)};
          }
        }
      }
    }

    // Freshly matched centres never jump past the distance threshold.
    for (const TrackObject& obj : state.objects) {
      for (size_t t = 1; t < obj.history.size(); ++t) {
        if (obj.history[t].label != CenterLabel::kNew) continue;
        ++fresh_assignments;
        const double d =
            (obj.history[t].center_px - obj.history[t - 1].center_px).norm();
        if (d > params.max_match_dist_px + 1e-9) {
          return {false, fmt("instance %d: fresh match jumped %.1f px",
                             instance, d)};
        }
      }
    }
  }

  return {true, fmt("1000 instances, %ld fresh assignments, peak %zu objects",
                    fresh_assignments, max_objects)};
}

// ---------------------------------------------------------------------------
// 4. Re-identification conformance: scripted (clock, verdict) traces must
// reproduce the frozen command traces byte for byte, covering the
// full-exhaustion walk with its return and block, and the ladder truncated
// by the safety limit in both directions.

struct MonitorScript {
  const char* name;
  std::vector<std::pair<double, bool>> steps;
  const char* golden;
};

std::string run_monitor_script(const std::vector<std::pair<double, bool>>& steps,
                               double& worst_cmd_deg) {
  ReidentState state;
  ReidentParams params;
  std::string trace;
  for (const auto& [t, ok] : steps) {
    QualityVerdict v;
    v.sufficient = ok;
    if (const auto cmd = reident_step(state, v, t, params)) {
      worst_cmd_deg = std::max(worst_cmd_deg, std::abs(cmd->target_tilt_deg));
      trace += fmt("t=%.2f cmd=%+.1f\n", t, cmd->target_tilt_deg);
    }
  }
  for (const ReidentEpisode& ep : state.episodes) {
    trace += fmt("episode %d %s t=[%.2f,%.2f] offsets=[", ep.id,
                 ep.recovered ? "RECOVERED" : (ep.aborted ? "ABORTED" : "FAILED"),
                 ep.start_time_s, ep.end_time_s);
    for (size_t i = 0; i < ep.offsets_visited_deg.size(); ++i) {
      trace += fmt(i == 0 ? "%+.1f" : ",%+.1f", ep.offsets_visited_deg[i]);
    }
    trace += "]\n";
  }
  trace += fmt("trajectory=%+.1f\n", state.trajectory_tilt_deg);
  return trace;
}

Outcome reident_conformance() {
  const std::vector<MonitorScript> scripts = {
      {"steady signal",
       {{0.0, true}, {0.5, true}, {1.0, true}, {1.5, true}, {2.0, true}},
       "trajectory=+0.0\n"},

      {"recovery at the first offset",
       {{0.0, false}, {0.5, true}},
       "t=0.00 cmd=+0.0\n"
       "episode 0 RECOVERED t=[0.00,0.50] offsets=[+0.0]\n"
       "trajectory=+0.0\n"},

      {"recovery at the second offset",
       {{0.0, false}, {1.0, false}, {2.0, false}, {2.5, true}},
       "t=0.00 cmd=+0.0\n"
       "t=2.00 cmd=+5.0\n"
       "episode 0 RECOVERED t=[0.00,2.50] offsets=[+0.0,+5.0]\n"
       "trajectory=+5.0\n"},

      {"exhaustion, return and block",
       {{0.0, false}, {2.0, false}, {4.0, false}, {6.0, false}, {8.0, false},
        {10.0, false}, {10.5, false}, {12.9, false}, {13.5, true}},
       "t=0.00 cmd=+0.0\n"
       "t=2.00 cmd=+5.0\n"
       "t=4.00 cmd=-5.0\n"
       "t=6.00 cmd=+10.0\n"
       "t=8.00 cmd=-10.0\n"
       "t=10.00 cmd=+0.0\n"
       "episode 0 FAILED t=[0.00,10.00] offsets=[+0.0,+5.0,-5.0,+10.0,-10.0]\n"
       "trajectory=+0.0\n"},

      {"fresh search once the block expires",
       {{0.0, false}, {2.0, false}, {4.0, false}, {6.0, false}, {8.0, false},
        {10.0, false}, {10.5, false}, {13.0, false}, {13.2, true}},
       "t=0.00 cmd=+0.0\n"
       "t=2.00 cmd=+5.0\n"
       "t=4.00 cmd=-5.0\n"
       "t=6.00 cmd=+10.0\n"
       "t=8.00 cmd=-10.0\n"
       "t=10.00 cmd=+0.0\n"
       "t=13.00 cmd=+0.0\n"
       "episode 0 FAILED t=[0.00,10.00] offsets=[+0.0,+5.0,-5.0,+10.0,-10.0]\n"
       "episode 1 RECOVERED t=[13.00,13.20] offsets=[+0.0]\n"
       "trajectory=+0.0\n"},

      {"positive ladder into the safety limit",
       {{0.0, false}, {2.0, false}, {4.0, false}, {6.0, false}, {6.5, true},
        {7.0, false}, {9.0, false}, {9.5, true},
        {10.0, false}, {12.0, false}, {14.0, false}, {16.0, false},
        {18.0, false}, {18.5, false}},
       "t=0.00 cmd=+0.0\n"
       "t=2.00 cmd=+5.0\n"
       "t=4.00 cmd=-5.0\n"
       "t=6.00 cmd=+10.0\n"
       "t=7.00 cmd=+10.0\n"
       "t=9.00 cmd=+15.0\n"
       "t=10.00 cmd=+15.0\n"
       "t=12.00 cmd=+20.0\n"
       "t=14.00 cmd=+10.0\n"
       "t=16.00 cmd=+5.0\n"
       "t=18.00 cmd=+15.0\n"
       "episode 0 RECOVERED t=[0.00,6.50] offsets=[+0.0,+5.0,-5.0,+10.0]\n"
       "episode 1 RECOVERED t=[7.00,9.50] offsets=[+0.0,+5.0]\n"
       "episode 2 FAILED t=[10.00,18.00] offsets=[+0.0,+5.0,-5.0,-10.0]\n"
       "trajectory=+15.0\n"},

      {"negative ladder into the safety limit",
       {{0.0, false}, {2.0, false}, {4.0, false}, {6.0, false}, {8.0, false},
        {8.5, true},
        {9.0, false}, {11.0, false}, {13.0, false}, {13.5, true},
        {14.0, false}, {16.0, false}, {18.0, false}, {20.0, false},
        {22.0, false}, {22.5, false}},
       "t=0.00 cmd=+0.0\n"
       "t=2.00 cmd=+5.0\n"
       "t=4.00 cmd=-5.0\n"
       "t=6.00 cmd=+10.0\n"
       "t=8.00 cmd=-10.0\n"
       "t=9.00 cmd=-10.0\n"
       "t=11.00 cmd=-5.0\n"
       "t=13.00 cmd=-15.0\n"
       "t=14.00 cmd=-15.0\n"
       "t=16.00 cmd=-10.0\n"
       "t=18.00 cmd=-20.0\n"
       "t=20.00 cmd=-5.0\n"
       "t=22.00 cmd=-15.0\n"
       "episode 0 RECOVERED t=[0.00,8.50] offsets=[+0.0,+5.0,-5.0,+10.0,-10.0]\n"
       "episode 1 RECOVERED t=[9.00,13.50] offsets=[+0.0,+5.0,-5.0]\n"
       "episode 2 FAILED t=[14.00,22.00] offsets=[+0.0,+5.0,-5.0,+10.0]\n"
       "trajectory=-15.0\n"},

      {"recovery on the dwell-expiry tick",
       {{0.0, false}, {2.0, true}},
       "t=0.00 cmd=+0.0\n"
       "episode 0 RECOVERED t=[0.00,2.00] offsets=[+0.0]\n"
       "trajectory=+0.0\n"},

      {"sparse irregular clock",
       {{0.0, false}, {3.7, false}, {5.6, false}, {5.7, false}, {6.0, true}},
       "t=0.00 cmd=+0.0\n"
       "t=3.70 cmd=+5.0\n"
       "t=5.70 cmd=-5.0\n"
       "episode 0 RECOVERED t=[0.00,6.00] offsets=[+0.0,+5.0,-5.0]\n"
       "trajectory=-5.0\n"},

      {"immediate re-trigger after adoption",
       {{0.0, false}, {2.0, false}, {2.1, true}, {2.2, false}, {4.2, false},
        {6.2, false}, {6.3, true}},
       "t=0.00 cmd=+0.0\n"
       "t=2.00 cmd=+5.0\n"
       "t=2.20 cmd=+5.0\n"
       "t=4.20 cmd=+10.0\n"
       "t=6.20 cmd=+0.0\n"
       "episode 0 RECOVERED t=[0.00,2.10] offsets=[+0.0,+5.0]\n"
       "episode 1 RECOVERED t=[2.20,6.30] offsets=[+0.0,+5.0,-5.0]\n"
       "trajectory=+0.0\n"}};

  double worst_cmd_deg = 0.0;
  for (const MonitorScript& s : scripts) {
    const std::string got = run_monitor_script(s.steps, worst_cmd_deg);
    if (got != s.golden) {
      return {false, fmt("'%s' diverges from its golden trace:\n%s", s.name,
                         got.c_str())};
    }
  }
  if (worst_cmd_deg > 20.0 + 1e-9) {
    return {false, fmt("command exceeded the safety limit: %.2f deg",
                       worst_cmd_deg)};
  }
  return {true, fmt("10 golden traces, peak command %.0f deg", worst_cmd_deg)};
}

// ---------------------------------------------------------------------------
// Shared training recipe for criteria 5 and 6: six synthetic patients, four
// sequences each, and the toy model sizes that train in minutes on a CPU.

PhantomGenConfig corpus_recipe(double diastolic_floor) {
  PhantomGenConfig g;
  g.patients = 6;
  g.sequences_per_patient = 4;
  g.frames_per_sequence = 10;
  g.tilt_range_deg = 4.0;
  g.seed = 21;
  g.base_spec.zone_count_lo = 3;
  g.base_spec.zone_count_hi = 5;
  g.base_spec.zone_len_lo_mm = 2.0;
  g.base_spec.zone_len_hi_mm = 4.0;
  g.base_spec.diastolic_floor = diastolic_floor;
  return g;
}

TrainConfig toy_train_config(const std::string& variant, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.model.variant = variant;
  cfg.model.input_res = 64;
  cfg.model.widths = {4, 8, 16};
  cfg.model.init_seed = seed;
  cfg.base_lr = 1e-3;
  cfg.batch_size = 6;
  cfg.max_epochs = 35;
  cfg.seed = seed;
  return cfg;
}

Dataset build_corpus(const fs::path& dir, double diastolic_floor) {
  // Round-trip through disk so training consumes exactly what the CLI
  // pipeline would (the image files quantize b-mode to 8 bits).
  {
    const Dataset data = generate_phantom_dataset(corpus_recipe(diastolic_floor));
    save_dataset(dir.string(), data);
  }
  return load_dataset(dir.string());
}

// ---------------------------------------------------------------------------
// 5. Recovery ablation: with the trained recurrent model, paired sweeps
// over a patient whose dropout zones are colour-dead at neutral tilt must
// show the orientation search rescuing the compounded volume.

Outcome recovery_ablation(const fs::path& work) {
  const Dataset data = build_corpus(work / "corpus_steady", 0.35);
  auto [train_set, val_set] = loocv_split(data, 0);

  TrainConfig tc = toy_train_config("dopus4", 4);
  SegNet<float> net(tc.model);
  train_model(net, train_set, val_set, tc);
  const fs::path ckpt = work / "dopus4.ckpt";
  save_checkpoint(ckpt.string(), net, tc.model);

  PipelineConfig cfg;
  cfg.seed = 7;
  cfg.segmenter = SegmenterKind::kModel;
  cfg.checkpoint_path = ckpt.string();
  cfg.patient.patient_seed = 11;
  cfg.patient.decoy_count = 4;
  cfg.patient.decoy_lateral_lo_mm = 2.5;
  cfg.patient.decoy_lateral_hi_mm = 6.0;
  cfg.patient.decoy_depth_lo_mm = -2.0;
  cfg.patient.decoy_depth_hi_mm = 3.0;
  cfg.patient.decoy_radius_lo_mm = 2.3;
  cfg.patient.decoy_radius_hi_mm = 3.0;
  cfg.patient.zone_count_lo = 3;
  cfg.patient.zone_count_hi = 3;
  cfg.patient.zone_len_lo_mm = 15.0;
  cfg.patient.zone_len_hi_mm = 22.0;
  cfg.patient.zone_multiplier = 0.0;
  cfg.phantom.speckle_strength = 0.25;

  const AbSummary s = ab_compare(cfg, 10);
  const double with = s.enabled.mean_volume_dice;
  const double without = s.disabled.mean_volume_dice;
  Outcome out;
  out.pass = with >= 0.80 && without <= 0.65 && with - without >= 0.10;
  out.detail = fmt("volume dice %.3f with recovery, %.3f without, 10 trials",
                   with, without);
  return out;
}

// ---------------------------------------------------------------------------
// 6. Variant ablation: averaged over three seeds, held-out dice must order
// the plain encoder below the doppler-fed one below the recurrent
// dual-encoder, with a clear gap at each step.

Outcome variant_ablation(const fs::path& work) {
  const Dataset data = build_corpus(work / "corpus_faint", 0.02);
  auto [train_set, val_set] = loocv_split(data, 0);

  const std::array<const char*, 3> variants = {"unet_b", "unet_bd", "dopus4"};
  std::array<double, 3> mean{};
  for (size_t v = 0; v < variants.size(); ++v) {
    for (const std::uint64_t seed : {3, 4, 5}) {
      TrainConfig tc = toy_train_config(variants[v], seed);
      SegNet<float> net(tc.model);
      const TrainResult r = train_model(net, train_set, val_set, tc);
      mean[v] += r.best_val_dice / 3.0;
    }
  }

  Outcome out;
  out.pass = mean[1] - mean[0] >= 0.01 && mean[2] - mean[1] >= 0.01;
  out.detail = fmt("held-out dice %.3f / %.3f / %.3f across 3 seeds", mean[0],
                   mean[1], mean[2]);
  return out;
}

// ---------------------------------------------------------------------------
// 7. Frame budget: everything around the segmenter must stay under 10 ms
// per 320x320 frame, and compounding a 500-frame sweep under a second.

Outcome frame_budget() {
  PipelineConfig cfg;
  cfg.seed = 99;
  cfg.patient.patient_seed = 99;
  cfg.patient.zone_count_lo = 0;
  cfg.patient.zone_count_hi = 0;
  cfg.sweep_speed_mm_s = 2.0;  // stretch the default patient past 500 frames

  const ScanReport r = run_scan(cfg);
  Outcome out;
  out.pass = r.frames.size() >= 500 && r.budget_mean_ms < 10.0 &&
             r.compounding_total_s < 1.0;
  out.detail = fmt("%zu frames, %.2f ms/frame outside segmentation, "
                   "compounding %.3f s total",
                   r.frames.size(), r.budget_mean_ms, r.compounding_total_s);
  return out;
}

// ---------------------------------------------------------------------------
// 8. Impedance law: the two hand examples exactly, then superposition and
// homogeneity over random gains, errors, and Jacobians with no feedforward.

Outcome impedance_law() {
  std::vector<std::string> bad;
  const Vector6d zero = Vector6d::Zero();
  const Eigen::Matrix<double, 6, Eigen::Dynamic> id6 = Matrix6d::Identity();

  {
    const ImpedanceParams p = ImpedanceParams::defaults();
    const Eigen::VectorXd tau = impedance_torque(id6, p, zero, zero, zero);
    Vector6d want = zero;
    want(2) = 1.0;
    if ((tau - want).cwiseAbs().maxCoeff() > 1e-12) bad.push_back("feedforward");
  }
  {
    ImpedanceParams p = ImpedanceParams::defaults();
    p.desired_wrench.setZero();
    Vector6d e = zero;
    e(2) = 0.01;  // 1 cm against 200 N/m
    const Eigen::VectorXd tau = impedance_torque(id6, p, e, zero, zero);
    Vector6d want = zero;
    want(2) = 2.0;
    if ((tau - want).cwiseAbs().maxCoeff() > 1e-12) bad.push_back("spring");
  }

  std::mt19937_64 rng(808);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int n = uniform_int(rng, 3, 7);
    Eigen::Matrix<double, 6, Eigen::Dynamic> jac(6, n);
    for (int r = 0; r < 6; ++r) {
      for (int c = 0; c < n; ++c) jac(r, c) = uniform(rng, -2.0, 2.0);
    }
    ImpedanceParams p = ImpedanceParams::defaults();
    p.desired_wrench.setZero();
    for (Matrix6d* gain : {&p.stiffness, &p.damping, &p.inertia}) {
      Matrix6d a;
      for (int r = 0; r < 6; ++r) {
        for (int c = 0; c < 6; ++c) a(r, c) = uniform(rng, -1.0, 1.0);
      }
      *gain = a.transpose() * a;  // symmetric positive semidefinite
    }
    std::array<Vector6d, 6> in;
    for (Vector6d& v : in) {
      for (int r = 0; r < 6; ++r) v(r) = uniform(rng, -1.0, 1.0);
    }
    const auto& [e1, de1, dde1, e2, de2, dde2] = in;

    const Eigen::VectorXd sum_of_parts =
        impedance_torque(jac, p, e1, de1, dde1) +
        impedance_torque(jac, p, e2, de2, dde2);
    const Eigen::VectorXd joint =
        impedance_torque(jac, p, e1 + e2, de1 + de2, dde1 + dde2);
    worst = std::max(worst, (joint - sum_of_parts).cwiseAbs().maxCoeff() /
                                std::max(1.0, joint.cwiseAbs().maxCoeff()));

    const double alpha = uniform(rng, -3.0, 3.0);
    const Eigen::VectorXd scaled =
        impedance_torque(jac, p, alpha * e1, alpha * de1, alpha * dde1);
    const Eigen::VectorXd reference =
        alpha * impedance_torque(jac, p, e1, de1, dde1);
    worst = std::max(worst, (scaled - reference).cwiseAbs().maxCoeff() /
                                std::max(1.0, reference.cwiseAbs().maxCoeff()));
  }
  if (worst > 1e-9) bad.push_back(fmt("superposition error %.2e", worst));

  Outcome out;
  out.pass = bad.empty();
  out.detail = bad.empty() ? fmt("exact examples, superposition worst %.1e", worst)
                           : "failed: " + bad.front();
  return out;
}

// ---------------------------------------------------------------------------
// 9. Run determinism, through the installed command-line interface: two
// identically configured and seeded sweeps must write byte-identical
// reports and volumes (only the wall-clock timing file may differ).

Outcome run_determinism(const fs::path& work, const fs::path& cli) {
  if (!fs::exists(cli)) {
    return {false, "scan binary not found at " + cli.string()};
  }
  const fs::path cfg_path = work / "scan.json";
  {
    std::ofstream out(cfg_path);
    out << R"({
  "segmenter": "classical",
  "sweep_speed_mm_s": 12.0,
  "patient": {
    "patient_seed": 55, "length_mm": 70.0, "decoy_count": 1,
    "zone_count_lo": 2, "zone_count_hi": 2,
    "zone_len_lo_mm": 8.0, "zone_len_hi_mm": 12.0, "zone_multiplier": 0.0
  },
  "phantom": {
    "width": 160, "height": 160, "spacing_mm": 0.28125,
    "speckle_strength": 0.2, "flash_rate": 0.0
  }
})";
  }

  for (const char* run : {"r1", "r2"}) {
    const fs::path out_dir = work / run;
    const std::string cmd = "\"" + cli.string() + "\" scan run --config \"" +
                            cfg_path.string() + "\" --seed 5 --out \"" +
                            out_dir.string() + "\" > \"" +
                            (work / (std::string(run) + ".log")).string() +
                            "\" 2>&1";
    if (std::system(cmd.c_str()) != 0) {
      return {false, fmt("scan run %s exited nonzero", run)};
    }
  }

  int compared = 0;
  for (const char* name :
       {"report.json", "scores.csv", "events.jsonl", "volume_pred.raw",
        "volume_pred.json", "volume_gt.raw", "volume_gt.json", "mesh_pred.obj",
        "manifest.json"}) {
    const std::string a = slurp(work / "r1" / name);
    const std::string b = slurp(work / "r2" / name);
    if (a.rfind("<unreadable:", 0) == 0) {
      return {false, std::string(name) + " missing from the first run"};
    }
    if (a != b) return {false, std::string(name) + " differs between runs"};
    ++compared;
  }
  if (!fs::exists(work / "r1" / "timing.json")) {
    return {false, "timing.json missing"};
  }
  return {true, fmt("%d files byte-identical across reruns", compared)};
}

}  // namespace

int main(int, char** argv) {
  const fs::path self = fs::absolute(fs::path(argv[0]));
  const fs::path work = fs::temp_directory_path() / "vascan_acceptance";
  std::error_code ec;
  fs::remove_all(work, ec);
  fs::create_directories(work);

  bool all_pass = true;
  const auto run = [&](int n, const char* name, double budget_s,
                       const std::function<Outcome()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = fn();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (out.pass && budget_s > 0.0 && secs >= budget_s) {
      out.pass = false;
      out.detail += fmt(" (over the %.0f s budget)", budget_s);
    }
    std::printf("criterion %d (%s): %s  [%.1f s]  %s\n", n, name,
                out.pass ? "PASS" : "FAIL", secs, out.detail.c_str());
    std::fflush(stdout);
    all_pass = all_pass && out.pass;
  };

  run(1, "metric exactness", 1.0, metric_exactness);
  run(2, "gradient fidelity", 120.0, gradient_fidelity);
  run(3, "tracker oracle equivalence", 10.0, tracker_equivalence);
  run(4, "re-identification conformance", 1.0, reident_conformance);
  run(5, "recovery ablation", 600.0, [&] { return recovery_ablation(work); });
  run(6, "variant ablation", 1800.0, [&] { return variant_ablation(work); });
  run(7, "frame budget", 0.0, frame_budget);
  run(8, "impedance law", 0.0, impedance_law);
  run(9, "run determinism", 0.0, [&] {
    return run_determinism(work, self.parent_path() / "vascan");
  });

  return all_pass ? 0 : 1;
}
