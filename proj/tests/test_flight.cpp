#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include "airbrake/flight.hpp"
#include "airbrake/io.hpp"

namespace airbrake {
namespace {

// v^2 / (2 g) for v = 100, g = 9.81
constexpr double kBallisticApogee = 100.0 * 100.0 / (2.0 * 9.81);

RocketModel drag_free() {
  RocketModel m;
  m.rho0 = 0.0;  // no atmosphere: cd/area stay valid but drag vanishes
  m.lateral_accel_sigma = 0.0;
  return m;
}

FlightState ascending(double altitude, double v) {
  FlightState s;
  s.altitude = altitude;
  s.v_vertical = v;
  return s;
}

TEST(CoastDynamics, ZeroSpeedFeelsOnlyGravity) {
  const RocketModel m;
  for (bool open : {false, true}) {
    const auto sys = coast_dynamics(m, open);
    for (double alt : {0.0, 1500.0, 9000.0}) {
      const auto d = sys(0.0, CoastState{alt, 0.0});
      EXPECT_EQ(d[0], 0.0);
      EXPECT_EQ(d[1], -m.g);
    }
  }
}

TEST(CoastDynamics, NoDragCoefficientsIsBallistic) {
  RocketModel m;
  m.cd_airbrake_delta = 0.0;
  const CoastDynamics sys(m, true);
  // cd_clean must stay positive by invariant, so zero it after validation.
  CoastDynamics ballistic = sys;
  ballistic.drag_factor = 0.0;
  const auto d = ballistic(0.0, CoastState{1000.0, 250.0});
  EXPECT_EQ(d[0], 250.0);
  EXPECT_EQ(d[1], -m.g);
}

TEST(CoastDynamics, OpenAirbrakeDeceleratesMore) {
  const RocketModel m;
  const auto closed = coast_dynamics(m, false);
  const auto open = coast_dynamics(m, true);
  for (double v : {1.0, 50.0, 300.0}) {
    const CoastState y{800.0, v};
    EXPECT_LT(open(0.0, y)[1], closed(0.0, y)[1]);
  }
}

TEST(CoastDynamics, DragOpposesVelocity) {
  const RocketModel m;
  const auto sys = coast_dynamics(m, false);
  EXPECT_LT(sys(0.0, CoastState{100.0, 50.0})[1], -m.g);
  EXPECT_GT(sys(0.0, CoastState{100.0, -50.0})[1], -m.g);
}

TEST(RocketModel, ValidationNamesTheField) {
  RocketModel m;
  m.dry_mass = -1.0;
  try {
    m.validate();
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "rocket.dry_mass");
  }
  m = RocketModel{};
  m.scale_height = 0.0;
  EXPECT_THROW(m.validate(), ValidationError);
  m = RocketModel{};
  m.deadband = -1.0;
  EXPECT_THROW(m.validate(), ValidationError);
}

TEST(PredictApogee, DragFreeMatchesAnalytic) {
  const double apogee = predict_apogee(drag_free(), ascending(0.0, 100.0), 0.001, false);
  EXPECT_NEAR(apogee, kBallisticApogee, 0.05);
  EXPECT_NEAR(apogee, 509.684, 0.05);
}

TEST(PredictApogee, BarelyAscendingStaysPut) {
  const RocketModel m;
  const double apogee = predict_apogee(m, ascending(1234.5, 0.0001), 0.01, false);
  EXPECT_NEAR(apogee, 1234.5, 0.01);
}

TEST(PredictApogee, DragLowersApogee) {
  RocketModel m;
  m.lateral_accel_sigma = 0.0;
  const double with_drag = predict_apogee(m, ascending(0.0, 100.0), 0.001, false);
  EXPECT_LT(with_drag, kBallisticApogee);
}

TEST(PredictApogee, RejectsDescendingState) {
  EXPECT_THROW(predict_apogee(RocketModel{}, ascending(500.0, 0.0), 0.01, false),
               PreconditionError);
  EXPECT_THROW(predict_apogee(RocketModel{}, ascending(500.0, -3.0), 0.01, false),
               PreconditionError);
}

TEST(PredictApogee, OpeningNeverRaisesApogee) {
  const RocketModel m;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> alt(0.0, 3000.0);
  std::uniform_real_distribution<double> vel(0.5, 320.0);
  for (int i = 0; i < 50; ++i) {
    const auto s = ascending(alt(rng), vel(rng));
    EXPECT_LE(predict_apogee(m, s, 0.01, true), predict_apogee(m, s, 0.01, false));
  }
}

TEST(OracleLabel, ThresholdOnClosedPrediction) {
  RocketModel m = drag_free();
  m.deadband = 0.0;
  m.target_apogee = 509.0;
  EXPECT_EQ(oracle_label(m, ascending(0.0, 100.0), 0.001), 1);
  m.target_apogee = 600.0;
  EXPECT_EQ(oracle_label(m, ascending(0.0, 100.0), 0.001), 0);
}

TEST(OracleLabel, TieIsClosed) {
  RocketModel m = drag_free();
  const auto s = ascending(0.0, 100.0);
  m.target_apogee = predict_apogee(m, s, 0.001, false);
  EXPECT_EQ(oracle_label(m, s, 0.001), 0);
  // Same threshold reached through the deadband.
  m.deadband = 1.0;
  m.target_apogee -= 1.0;
  EXPECT_EQ(oracle_label(m, s, 0.001), 0);
}

TEST(OracleLabel, RelabelingIsStable) {
  const RocketModel m;
  const auto s = ascending(1100.0, 240.0);
  const int first = oracle_label(m, s, 0.01);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(oracle_label(m, s, 0.01), first);
  EXPECT_THROW(oracle_label(m, ascending(1.0, -1.0), 0.01), PreconditionError);
}

TEST(SimulateFlight, AlwaysClosedDragFreeReachesAnalyticApogee) {
  const auto traj = simulate_flight(drag_free(), ascending(0.0, 100.0), 0.001,
                                    AlwaysClosedController{}, 1);
  EXPECT_NEAR(traj.apogee, kBallisticApogee, 0.05);
  EXPECT_LE(traj.samples.back().v_vertical, 0.0);
  for (std::size_t i = 0; i + 1 < traj.samples.size(); ++i) {
    EXPECT_GT(traj.samples[i].v_vertical, 0.0);
    EXPECT_NEAR(traj.samples[i + 1].t - traj.samples[i].t, 0.001, 1e-12);
  }
}

TEST(SimulateFlight, ZeroSigmaGivesZeroLateral) {
  RocketModel m;
  m.lateral_accel_sigma = 0.0;
  const auto traj = simulate_flight(m, ascending(1000.0, 200.0), 0.01,
                                    AlwaysClosedController{}, 3);
  for (const auto& s : traj.samples) {
    EXPECT_EQ(s.accel[0], 0.0);
    EXPECT_EQ(s.accel[1], 0.0);
    EXPECT_TRUE(std::isfinite(s.accel[2]));
  }
}

TEST(SimulateFlight, OracleControllerCutsApogee) {
  RocketModel m = drag_free();
  m.rho0 = 1.225;
  const auto closed = simulate_flight(m, ascending(1200.0, 280.0), 0.01,
                                      AlwaysClosedController{}, 5);
  m.target_apogee = closed.apogee - 200.0;
  const auto controlled = simulate_flight(m, ascending(1200.0, 280.0), 0.01,
                                          OracleController{m, 0.01}, 5);
  EXPECT_LT(controlled.apogee, closed.apogee);
  EXPECT_GE(controlled.apogee, m.target_apogee * 0.95);
  bool any_open = false;
  for (const auto& s : controlled.samples) any_open = any_open || s.airbrake_open;
  EXPECT_TRUE(any_open);
}

TEST(SimulateFlight, ZeroDragConservesEnergy) {
  const RocketModel m = drag_free();
  const auto traj = simulate_flight(m, ascending(200.0, 150.0), 0.001,
                                    AlwaysClosedController{}, 0);
  const auto energy = [&](const FlightState& s) {
    return m.g * s.altitude + 0.5 * s.v_vertical * s.v_vertical;
  };
  const double e0 = energy(traj.samples.front());
  for (const auto& s : traj.samples) {
    EXPECT_NEAR(energy(s), e0, 1e-6 * e0);
  }
}

TEST(SimulateFlight, AltitudeNonNegativeAndApogeeIsMax) {
  const RocketModel m;
  const auto traj = simulate_flight(m, ascending(10.0, 150.0), 0.01,
                                    OracleController{m, 0.01}, 11);
  double max_alt = 0.0;
  for (const auto& s : traj.samples) {
    EXPECT_GE(s.altitude, 0.0);
    max_alt = std::max(max_alt, s.altitude);
  }
  EXPECT_EQ(traj.apogee, max_alt);
}

TEST(GenerateFlightBatch, PointRangeMatchesSingleFlight) {
  const RocketModel m;
  const InitialRanges point{900.0, 900.0, 210.0, 210.0};
  const auto batch =
      generate_flight_batch(m, 1, point, 0.01, AlwaysClosedController{}, 99);
  const auto single = simulate_flight(m, ascending(900.0, 210.0), 0.01,
                                      AlwaysClosedController{}, 99);
  ASSERT_EQ(batch.size(), 1U);
  EXPECT_EQ(trajectory_csv(batch[0]), trajectory_csv(single));
}

TEST(GenerateFlightBatch, SameSeedIsBitIdenticalAndThreadIndependent) {
  const RocketModel m;
  const InitialRanges ranges;
  const auto a = generate_flight_batch(m, 6, ranges, 0.01, AlwaysClosedController{}, 5);
  const auto b = generate_flight_batch(m, 6, ranges, 0.01, AlwaysClosedController{}, 5);
  const auto c =
      generate_flight_batch(m, 6, ranges, 0.01, AlwaysClosedController{}, 5, 3);
  ASSERT_EQ(a.size(), 6U);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(trajectory_csv(a[i]), trajectory_csv(b[i]));
    EXPECT_EQ(trajectory_csv(a[i]), trajectory_csv(c[i]));
  }
  // Flights are individually reproducible from their sub-seed.
  const auto third = simulate_flight(m, batch_initial_state(ranges, 5, 2), 0.01,
                                     AlwaysClosedController{}, 5 + 2);
  EXPECT_EQ(trajectory_csv(a[2]), trajectory_csv(third));
}

TEST(GenerateFlightBatch, DefaultFiftyFlightsReachDatasetScale) {
  const RocketModel m;
  const auto batch = generate_flight_batch(m, 50, InitialRanges{}, 0.01,
                                           AlwaysClosedController{}, 42);
  std::size_t total = 0;
  for (const auto& t : batch) total += t.samples.size();
  EXPECT_GE(total, 3699U);
}

TEST(GenerateFlightBatch, RejectsBadRanges) {
  const RocketModel m;
  EXPECT_THROW(generate_flight_batch(m, 0, InitialRanges{}, 0.01,
                                     AlwaysClosedController{}, 1),
               PreconditionError);
  EXPECT_THROW(generate_flight_batch(m, 2, InitialRanges{10, 5, 100, 200}, 0.01,
                                     AlwaysClosedController{}, 1),
               PreconditionError);
}

TEST(TrajectoryCsv, HeaderAndPrecision) {
  RocketModel m;
  const auto traj = simulate_flight(m, ascending(1000.0, 30.0), 0.01,
                                    AlwaysClosedController{}, 2);
  const std::string csv = trajectory_csv(traj);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line,
            "t_s,altitude_m,v_vertical_mps,accel_x_mps2,accel_y_mps2,"
            "accel_z_mps2,airbrake_open");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    const auto fields = io::split(line, ',');
    ASSERT_EQ(fields.size(), 7U);
    EXPECT_TRUE(fields[6] == "0" || fields[6] == "1");
    const auto alt = io::parse_double(fields[1]);
    ASSERT_TRUE(alt.has_value());
    EXPECT_EQ(*alt, traj.samples[rows].altitude);
    ++rows;
  }
  EXPECT_EQ(rows, traj.samples.size());
}

}  // namespace
}  // namespace airbrake
