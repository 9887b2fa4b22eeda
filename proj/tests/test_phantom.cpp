#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "vascan/common.hpp"
#include "vascan/phantom.hpp"

using namespace vascan;

TEST_CASE("vessel construction samples the requested geometry") {
  VesselShapeParams p;
  p.length_mm = 50.0;
  p.sample_step_mm = 0.5;
  VesselModel v = make_vessel(p);
  CHECK_NOTHROW(validate(v));
  CHECK(v.centerline_mm.size() == 101);
  CHECK(v.centerline_mm.front().x() == doctest::Approx(0.0));
  CHECK(v.centerline_mm.back().x() == doctest::Approx(50.0));

  const std::vector<double> s = arclengths_mm(v);
  CHECK(s.front() == doctest::Approx(0.0));
  // Arclength at least spans the x extent and wobble adds little here.
  CHECK(s.back() >= 50.0);
  CHECK(s.back() < 55.0);

  VesselModel bad = v;
  bad.radius_mm.pop_back();
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad = v;
  bad.radius_mm[3] = -1.0;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
}

TEST_CASE("tilt gain rises from the floor to saturation") {
  DopplerResponseModel r;  // floor 0.75, saturation at 10 degrees
  CHECK(r.tilt_gain(0.0) == doctest::Approx(0.75));
  CHECK(r.tilt_gain(10.0) == doctest::Approx(1.0));
  CHECK(r.tilt_gain(-10.0) == doctest::Approx(1.0));
  CHECK(r.tilt_gain(5.0) == doctest::Approx(0.75 + 0.25 * 0.5));
  CHECK(r.tilt_gain(3.0) > 0.75);
  CHECK(r.tilt_gain(3.0) < 1.0);
}

TEST_CASE("dropout zones attenuate and recover with the right tilt") {
  DopplerResponseModel r = DopplerResponseModel::neutral();
  DropoutZone z;
  z.s0_mm = 20.0;
  z.s1_mm = 30.0;
  z.multiplier = 0.1;
  z.recover_direction = +1;
  z.recover_deg = 4.0;
  r.dropout_zones.push_back(z);

  CHECK(r.zone_multiplier(10.0, 0.0) == doctest::Approx(1.0));
  CHECK(r.zone_multiplier(25.0, 0.0) == doctest::Approx(0.1));
  CHECK_FALSE(r.in_zone(10.0));
  CHECK(r.in_zone(25.0));
  CHECK(r.in_zone(20.0));

  // Tilting the right way restores the signal smoothly; the wrong way
  // does nothing.
  CHECK(r.zone_multiplier(25.0, 4.0) == doctest::Approx(1.0));
  CHECK(r.zone_multiplier(25.0, 2.0) ==
        doctest::Approx(0.1 + 0.9 * smoothstep01(0.5)));
  CHECK(r.zone_multiplier(25.0, -4.0) == doctest::Approx(0.1));

  // A flat-dead zone ignores tilt entirely.
  r.dropout_zones[0].recover_direction = 0;
  CHECK(r.zone_multiplier(25.0, 4.0) == doctest::Approx(0.1));

  // Strength folds base, tilt gain and zone together.
  r.dropout_zones.clear();
  r.base_strength = 0.8;
  CHECK(r.strength(10.0, 0.0) == doctest::Approx(0.8));
}

TEST_CASE("the cardiac pulse modulates colour area down to the floor") {
  DopplerResponseModel r;
  r.diastolic_floor = 0.35;
  const double period = 1.0;
  CHECK(r.pulse_area_fraction(0.25, period) == doctest::Approx(1.0));
  // The whole negative half-cycle sits at the floor.
  CHECK(r.pulse_area_fraction(0.75, period) == doctest::Approx(0.35));
  CHECK(r.pulse_area_fraction(0.6, period) == doctest::Approx(0.35));
  r.diastolic_floor = 0.0;
  CHECK(r.pulse_area_fraction(0.75, period) == doctest::Approx(0.0));
}

namespace {

Phantom small_phantom(std::uint64_t patient_seed) {
  PatientSpec spec;
  spec.patient_seed = patient_seed;
  spec.length_mm = 80.0;
  spec.zone_count_lo = 1;
  spec.zone_count_hi = 1;
  spec.zone_len_lo_mm = 10.0;
  spec.zone_len_hi_mm = 10.0;
  PhantomConfig cfg;
  cfg.seed = 5;
  cfg.width = 160;
  cfg.height = 160;
  cfg.spacing_mm = 45.0 / 160.0;
  cfg.speckle_strength = 0.2;
  return make_patient_phantom(spec, cfg);
}

}  // namespace

TEST_CASE("patient phantoms are deterministic in the patient seed") {
  Phantom a = small_phantom(3);
  Phantom b = small_phantom(3);
  Phantom c = small_phantom(4);

  REQUIRE(a.artery.centerline_mm.size() == b.artery.centerline_mm.size());
  for (size_t i = 0; i < a.artery.centerline_mm.size(); ++i) {
    CHECK(a.artery.centerline_mm[i] == b.artery.centerline_mm[i]);
  }
  CHECK(a.decoys.size() == b.decoys.size());
  REQUIRE(a.response.dropout_zones.size() == 1);
  CHECK(a.response.dropout_zones[0].s0_mm ==
        b.response.dropout_zones[0].s0_mm);

  // A different patient draws different geometry.
  bool differs = false;
  for (size_t i = 0; i < a.artery.centerline_mm.size() &&
                     i < c.artery.centerline_mm.size();
       ++i) {
    if ((a.artery.centerline_mm[i] - c.artery.centerline_mm[i]).norm() >
        1e-9) {
      differs = true;
      break;
    }
  }
  CHECK(differs);
}

TEST_CASE("slicing renders the artery with aligned truth and colour") {
  Phantom ph = small_phantom(3);
  const double zone_mid = 0.5 * (ph.response.dropout_zones[0].s0_mm +
                                 ph.response.dropout_zones[0].s1_mm);
  // Pick a slice position well clear of the zone.
  const double x_clear = (zone_mid > 40.0) ? 15.0 : 60.0;

  // Systole puts the colour patch at full area.
  ProbePose pose = make_pose({x_clear, 0.0, 0.0}, 0.0);
  PhantomFrame f = slice_phantom(ph, pose, 0.25, 0);
  CHECK(f.plane_hit);
  CHECK_FALSE(f.in_dropout);
  CHECK(f.ground_truth.data.sum() > 0.0f);
  CHECK(f.frame.doppler.data.sum() > 0.0f);
  CHECK(f.frame.bmode.data.minCoeff() >= 0.0f);
  CHECK(f.frame.bmode.data.maxCoeff() <= 1.0f);

  // The colour patch sits on the vessel: every doppler pixel within the
  // bloomed radius of truth pixels, so overlap is high.
  const float inter = (f.frame.doppler.data * f.ground_truth.data).sum();
  CHECK(inter / f.frame.doppler.data.sum() > 0.5f);

  // Rendering the same pose and time twice is bit-identical.
  PhantomFrame g = slice_phantom(ph, pose, 0.25, 0);
  CHECK((f.frame.bmode.data == g.frame.bmode.data).all());
  CHECK((f.frame.doppler.data == g.frame.doppler.data).all());
  CHECK((f.ground_truth.data == g.ground_truth.data).all());
}

TEST_CASE("a dropout zone blanks colour until the probe tilts to recover") {
  Phantom ph = small_phantom(3);
  DropoutZone& z = ph.response.dropout_zones[0];
  z.multiplier = 0.0;
  z.recover_direction = +1;
  const double zone_mid = 0.5 * (z.s0_mm + z.s1_mm);
  // Arclength tracks x closely for these wobble amplitudes, so slicing at
  // the zone's mid arclength lands inside it.
  ProbePose flat = make_pose({zone_mid, 0.0, 0.0}, 0.0);
  PhantomFrame dead = slice_phantom(ph, flat, 0.25, 0);
  CHECK(dead.plane_hit);
  CHECK(dead.in_dropout);
  CHECK(dead.doppler_strength == doctest::Approx(0.0));
  CHECK(dead.frame.doppler.data.sum() == 0.0f);

  ProbePose tilted = make_pose({zone_mid, 0.0, 0.0}, z.recover_deg);
  PhantomFrame alive = slice_phantom(ph, tilted, 0.25, 0);
  CHECK(alive.in_dropout);
  // Full zone recovery, scaled only by the sub-saturation tilt gain.
  CHECK(alive.doppler_strength ==
        doctest::Approx(ph.response.tilt_gain(z.recover_deg)));
  CHECK(alive.frame.doppler.data.sum() > 0.0f);

  // Tilting against the recovery direction leaves the zone dead.
  ProbePose wrong = make_pose({zone_mid, 0.0, 0.0}, -z.recover_deg);
  PhantomFrame still_dead = slice_phantom(ph, wrong, 0.25, 0);
  CHECK(still_dead.frame.doppler.data.sum() == 0.0f);
}

TEST_CASE("diastole shrinks the colour patch") {
  Phantom ph = small_phantom(3);
  ph.response.diastolic_floor = 0.2;
  const double zone_mid = 0.5 * (ph.response.dropout_zones[0].s0_mm +
                                 ph.response.dropout_zones[0].s1_mm);
  ProbePose pose = make_pose({zone_mid > 40.0 ? 15.0 : 60.0, 0.0, 0.0}, 0.0);
  PhantomFrame sys = slice_phantom(ph, pose, 0.25, 0);
  PhantomFrame dia = slice_phantom(ph, pose, 0.75, 0);
  CHECK(dia.frame.doppler.data.sum() < sys.frame.doppler.data.sum());
  CHECK(dia.frame.doppler.data.sum() > 0.0f);

  ph.response.diastolic_floor = 0.0;
  PhantomFrame gone = slice_phantom(ph, pose, 0.75, 0);
  CHECK(gone.frame.doppler.data.sum() == 0.0f);
}

TEST_CASE("sweeps stamp consecutive frame times") {
  Phantom ph = small_phantom(3);
  std::vector<ProbePose> poses;
  for (int i = 0; i < 5; ++i) {
    poses.push_back(make_pose({10.0 + i, 0.0, 0.0}, 0.0));
  }
  std::vector<PhantomFrame> frames = generate_sweep(ph, poses, 10.0);
  REQUIRE(frames.size() == 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(frames[static_cast<size_t>(i)].frame.timestamp_s ==
          doctest::Approx(i / 10.0));
    CHECK(frames[static_cast<size_t>(i)].frame.frame_index == i);
  }
}

TEST_CASE("patient spec knobs place and size the decoys") {
  PatientSpec spec;
  spec.patient_seed = 9;
  spec.decoy_count = 0;
  PhantomConfig cfg;
  CHECK(make_patient_phantom(spec, cfg).decoys.empty());

  spec.decoy_count = 3;
  spec.decoy_lateral_lo_mm = 2.0;
  spec.decoy_lateral_hi_mm = 2.5;
  spec.decoy_depth_lo_mm = 0.0;
  spec.decoy_depth_hi_mm = 0.0;
  spec.decoy_radius_lo_mm = 3.0;
  spec.decoy_radius_hi_mm = 3.5;
  Phantom ph = make_patient_phantom(spec, cfg);
  REQUIRE(ph.decoys.size() == 3);
  for (const VesselModel& d : ph.decoys) {
    CHECK_FALSE(d.doppler_active);
    for (const double r : d.radius_mm) {
      // Shared radius wobble stays within 0.4 mm of the drawn base radius.
      CHECK(r > 2.5);
      CHECK(r < 4.0);
    }
  }
}
