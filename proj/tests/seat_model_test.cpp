#include <gtest/gtest.h>

#include <random>

#include "attend/error.hpp"
#include "attend/seat_model.hpp"
#include "support/test_support.hpp"

using namespace attend;
using namespace attend::seat;
using namespace std::chrono_literals;

namespace {

TEST(Adc, TareLinearityAndClamp) {
  LoadCellConfig cfg{8'000'000, 21'000, 0.5};
  EXPECT_DOUBLE_EQ(adc_to_kg(8'000'000, cfg), 0.0);
  EXPECT_DOUBLE_EQ(adc_to_kg(8'000'000 + 10 * 21'000, cfg), 10.0);
  EXPECT_DOUBLE_EQ(adc_to_kg(7'999'000, cfg), 0.0);
  // Negative scale: counts fall as load rises. Clamp still applies to the
  // converted weight, not the raw delta.
  LoadCellConfig inv{1000, -100, 0.5};
  EXPECT_DOUBLE_EQ(adc_to_kg(0, inv), 10.0);
  EXPECT_DOUBLE_EQ(adc_to_kg(2000, inv), 0.0);
}

TEST(Calibration, Examples) {
  auto cfg = calibrate(5.0, 60000, 10000);
  EXPECT_DOUBLE_EQ(cfg.scale_counts_per_kg, 10000.0);
  EXPECT_DOUBLE_EQ(cfg.tare_counts, 10000.0);
  EXPECT_DOUBLE_EQ(adc_to_kg(60000, cfg), 5.0);
  try {
    calibrate(5.0, 10000, 10000);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::calibration);
  }
  EXPECT_THROW(calibrate(0.0, 20000, 10000), Error);
}

TEST(Calibration, Closure) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> w(0.1, 200.0);
  std::uniform_int_distribution<RawCounts> r0(-(1 << 23), (1 << 23) - 1), span(1, 1 << 22);
  for (int i = 0; i < 10000; ++i) {
    const double kg = w(rng);
    const RawCounts zero = r0(rng);
    const RawCounts ref = zero + span(rng);
    EXPECT_NEAR(adc_to_kg(ref, calibrate(kg, ref, zero)), kg, 1e-9);
  }
}

TEST(Deadband, Examples) {
  LoadCellConfig cfg;
  EXPECT_DOUBLE_EQ(filter_reading(70.3, 70.0, cfg), 70.0);
  EXPECT_DOUBLE_EQ(filter_reading(71.0, 70.0, cfg), 71.0);
  EXPECT_DOUBLE_EQ(filter_reading(70.0, 70.0, cfg), 70.0);
  EXPECT_DOUBLE_EQ(filter_reading(69.5, 70.0, cfg), 70.0);
  EXPECT_DOUBLE_EQ(filter_reading(69.4, 70.0, cfg), 69.4);
}

TEST(Step, Examples) {
  auto [s1, e1] = step(Empty{}, 55.0, 0ms);
  ASSERT_TRUE(std::holds_alternative<Seated>(s1));
  EXPECT_EQ(std::get<Seated>(s1).kg, 55.0);
  ASSERT_TRUE(e1);
  EXPECT_EQ(e1->kind, SeatEventKind::SatDown);

  auto [s2, e2] = step(Seated{70.0, 0ms}, 5.0, 1000ms);
  EXPECT_TRUE(std::holds_alternative<Empty>(s2));
  ASSERT_TRUE(e2);
  EXPECT_EQ(e2->kind, SeatEventKind::StoodUp);
}

TEST(Step, RechecksAtOneSecondIntervals) {
  ChairState s = Empty{};
  std::vector<std::pair<SteadyMillis, int>> recheck_times;
  std::vector<SteadyMillis> unstable;
  int last = 0;
  for (SteadyMillis t = 0ms; t <= 10000ms; t += 100ms) {
    auto [next, ev] = step(s, 25.0, t);
    s = next;
    ASSERT_TRUE(std::holds_alternative<Transient>(s));
    const int done = std::get<Transient>(s).rechecks_done;
    EXPECT_LE(done, 3);
    if (done != last) recheck_times.emplace_back(t, done);
    last = done;
    if (ev) {
      EXPECT_EQ(ev->kind, SeatEventKind::Unstable);
      unstable.push_back(t);
    }
  }
  EXPECT_EQ(recheck_times, (std::vector<std::pair<SteadyMillis, int>>{{1000ms, 1}, {2000ms, 2}, {3000ms, 3}}));
  EXPECT_EQ(unstable, std::vector<SteadyMillis>{3000ms});
}

TEST(Step, ExhaustiveBandGrid) {
  const std::vector<double> grid{0, 5, 9.99, 10, 25, 39.99, 40, 70, 120};
  const std::vector<std::pair<const char*, ChairState>> sources{
      {"Empty", Empty{}},
      {"Transient0", Transient{0ms, 0, 25.0, false}},
      {"Transient3", Transient{0ms, 3, 25.0, false}},
      {"TransientFromSeated", Transient{0ms, 1, 30.0, true}},
      {"Seated", Seated{70.0, 0ms}},
  };
  for (const auto& [name, src] : sources) {
    for (double kg : grid) {
      auto [next, ev] = step(src, kg, 500ms);
      const int want = testsupport::oracle_band(kg);
      EXPECT_EQ(static_cast<int>(band_of(next)), want) << name << " " << kg;
      EXPECT_EQ(static_cast<int>(band_of(kg)), want) << kg;

      const int from = static_cast<int>(band_of(src));
      const bool was_seated = from == 2 || (from == 1 && std::get<Transient>(src).from_seated);
      std::optional<SeatEventKind> expect;
      if (want == 2 && !was_seated) expect = SeatEventKind::SatDown;
      if (want == 0 && was_seated) expect = SeatEventKind::StoodUp;
      EXPECT_EQ(ev ? std::optional(ev->kind) : std::nullopt, expect) << name << " " << kg;
    }
  }
}

TEST(Step, SeatedKgTracksReadingAndKeepsSince) {
  auto [s, ev] = step(Seated{70.0, 100ms}, 72.0, 900ms);
  EXPECT_FALSE(ev);
  EXPECT_EQ(std::get<Seated>(s), (Seated{72.0, 100ms}));
}

TEST(Step, ConstantInputIsEdgeTriggered) {
  for (double kg : {0.0, 25.0, 70.0}) {
    ChairState s = Empty{};
    int events = 0;
    for (int i = 0; i < 100000; ++i) {
      auto [next, ev] = step(s, kg, SteadyMillis{i * 100});
      s = next;
      events += ev.has_value();
    }
    EXPECT_LE(events, 1) << kg;
  }
}

TEST(Step, StandingUpThroughTheBand) {
  ChairState s = Seated{70.0, 0ms};
  auto [t1, e1] = step(s, 20.0, 100ms);
  EXPECT_FALSE(e1);
  EXPECT_TRUE(std::get<Transient>(t1).from_seated);
  auto [t2, e2] = step(t1, 3.0, 200ms);
  ASSERT_TRUE(e2);
  EXPECT_EQ(e2->kind, SeatEventKind::StoodUp);

  // Shifting in the seat dips into the band and back without any event.
  auto [u1, f1] = step(s, 35.0, 100ms);
  auto [u2, f2] = step(u1, 68.0, 300ms);
  EXPECT_FALSE(f1);
  EXPECT_FALSE(f2);
  EXPECT_TRUE(std::holds_alternative<Seated>(u2));
}

TEST(Step, RechecksDoNotResetWithinBand) {
  ChairState s = Empty{};
  std::tie(s, std::ignore) = step(s, 15.0, 0ms);
  std::tie(s, std::ignore) = step(s, 35.0, 1500ms);
  EXPECT_EQ(std::get<Transient>(s).rechecks_done, 1);
  EXPECT_EQ(std::get<Transient>(s).last_kg, 35.0);
  std::tie(s, std::ignore) = step(s, 12.0, 2000ms);
  EXPECT_EQ(std::get<Transient>(s).rechecks_done, 2);
}

TEST(Chair, FeedRawThroughCalibration) {
  Chair c("C1", calibrate(10.0, 1'210'000, 1'000'000));
  auto ev = c.feed_raw(1'000'000 + 70 * 21'000, 0ms);
  ASSERT_TRUE(ev);
  EXPECT_EQ(ev->kind, SeatEventKind::SatDown);
  EXPECT_EQ(ev->chair_id, "C1");
  EXPECT_NEAR(ev->kg, 70.0, 1e-9);
  // Inside the deadband the stable value does not move.
  EXPECT_FALSE(c.feed_raw(1'000'000 + 70 * 21'000 + 5000, 100ms));
  EXPECT_NEAR(c.last_stable_kg(), 70.0, 1e-9);
  c.tare(1'000'000 + 70 * 21'000);
  ev = c.feed_raw(1'000'000 + 70 * 21'000, 200ms);
  ASSERT_TRUE(ev);
  EXPECT_EQ(ev->kind, SeatEventKind::StoodUp);
}

}  // namespace
