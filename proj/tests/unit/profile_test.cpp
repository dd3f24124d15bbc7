#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "feedwarden/core/error.h"
#include "feedwarden/profile/preference_profile.h"

namespace feedwarden {
namespace {

InteractionWindow window_of(std::vector<std::pair<std::string, std::int64_t>> events,
                            TagSource kind = TagSource::kClick) {
  InteractionWindow w;
  for (auto& [tag, day] : events) w.events.push_back({tag, day * kMillisPerDay, kind});
  return w;
}

TEST(BaseImportance, FrequencyOverMaxWithinWindow) {
  const auto w = window_of({{"cooking", 10}, {"cooking", 10}, {"travel", 10}, {"cooking", 11}});
  EXPECT_DOUBLE_EQ(base_importance(w, "cooking"), 1.0);
  EXPECT_DOUBLE_EQ(base_importance(w, "travel"), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(base_importance(w, "unknown"), 0.0);
  EXPECT_DOUBLE_EQ(base_importance(InteractionWindow{}, "cooking"), 0.0);
}

TEST(BaseImportance, EventsOlderThanWindowAreIgnored) {
  // Newest event is day 20; day 13 is exactly seven days older and drops out.
  const auto w = window_of({{"old", 13}, {"old", 13}, {"old", 13}, {"new", 20}, {"mid", 14}});
  EXPECT_DOUBLE_EQ(base_importance(w, "old"), 0.0);
  EXPECT_DOUBLE_EQ(base_importance(w, "new"), 1.0);
  EXPECT_DOUBLE_EQ(base_importance(w, "mid"), 1.0);
}

TEST(Slider, SetsFinalImportanceThroughDelta) {
  PreferenceProfile p;
  p.ingest(window_of({{"cooking", 1}, {"cooking", 1}, {"travel", 1}}));
  const TagNode& n = p.apply_user_delta("travel", 0.8);
  EXPECT_DOUBLE_EQ(n.base_importance, 0.5);
  EXPECT_DOUBLE_EQ(n.delta, 0.8 - 0.5);
  EXPECT_DOUBLE_EQ(final_importance(n), 0.8);
  // Unknown tags start at base 0.
  EXPECT_DOUBLE_EQ(p.apply_user_delta("cooking-new", 0.8).delta, 0.8);
}

TEST(Slider, RangeAndIdempotence) {
  PreferenceProfile p;
  EXPECT_THROW(p.apply_user_delta("x", 1.2), Error);
  EXPECT_THROW(p.apply_user_delta("x", -0.1), Error);
  EXPECT_THROW(p.apply_user_delta("", 0.5), Error);
  p.apply_user_delta("x", 0.3);
  const auto once = p.snapshot();
  p.apply_user_delta("x", 0.3);
  EXPECT_EQ(p.snapshot(), once);
}

TEST(Decay, DeltaShrinksByGammaPerSession) {
  PreferenceProfile p;
  p.apply_user_delta("x", 0.8);
  p.decay_session();
  EXPECT_DOUBLE_EQ(p.find("x")->delta, 0.8 * 0.65);
  p.decay_session();
  EXPECT_DOUBLE_EQ(p.find("x")->delta, 0.8 * 0.65 * 0.65);
  EXPECT_EQ(p.session(), 2);
}

TEST(Decay, MatchesClosedFormUntilFloor) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> slider(0.0, 1.0);
  std::uniform_int_distribution<int> sessions(0, 40);
  for (int trial = 0; trial < 200; ++trial) {
    PreferenceProfile p;
    const double d0 = slider(rng);
    const int n = sessions(rng);
    p.apply_user_delta("t", d0);
    for (int i = 0; i < n; ++i) p.decay_session();
    double expected = d0;
    bool floored = false;
    for (int i = 0; i < n; ++i) {
      expected *= 0.65;
      if (std::fabs(expected) < 1e-3) floored = true;
    }
    if (floored) {
      EXPECT_EQ(p.find("t")->delta, 0.0);
    } else {
      EXPECT_NEAR(p.find("t")->delta, d0 * std::pow(0.65, n), 1e-9 * std::fabs(d0));
    }
  }
}

TEST(Decay, BaseIsUntouchedAndSevenSessionsNearZero) {
  PreferenceProfile p;
  p.ingest(window_of({{"cooking", 1}}));
  p.apply_user_delta("cooking", 0.0);  // delta = -1 against base 1
  for (int i = 0; i < 7; ++i) p.decay_session();
  EXPECT_DOUBLE_EQ(p.find("cooking")->base_importance, 1.0);
  EXPECT_LT(std::fabs(p.find("cooking")->delta), 0.05);
  EXPECT_LT(std::pow(0.65, 7), 0.05);
}

TEST(Ingest, SourceAndAbsentTags) {
  PreferenceProfile p;
  p.apply_user_delta("kept", 0.4);
  InteractionWindow w = window_of({{"rec", 1}, {"rec", 1}}, TagSource::kRecommendation);
  w.events.push_back({"click", kMillisPerDay, TagSource::kClick});
  p.ingest(w);
  EXPECT_EQ(p.find("rec")->source, TagSource::kRecommendation);
  EXPECT_EQ(p.find("click")->source, TagSource::kClick);
  EXPECT_DOUBLE_EQ(p.find("kept")->base_importance, 0.0);
  EXPECT_DOUBLE_EQ(p.find("kept")->delta, 0.4);
}

TEST(TopK, OrderedByFinalImportanceThenTag) {
  PreferenceProfile p;
  EXPECT_THROW(p.top_k(), Error);
  p.apply_user_delta("b", 0.5);
  p.apply_user_delta("a", 0.5);
  p.apply_user_delta("c", 0.9);
  const auto top = p.top_k(2);
  ASSERT_EQ(top.size(), 2u);
  EXPECT_EQ(top[0].tag, "c");
  EXPECT_EQ(top[1].tag, "a");
}

TEST(Snapshot, RoundTripsExactly) {
  PreferenceProfile p;
  p.ingest(window_of({{"cooking", 1}, {"travel", 1}, {"cooking", 2}}));
  p.apply_user_delta("travel", 0.9);
  p.decay_session();
  const auto snap = p.snapshot();
  const auto restored = PreferenceProfile::from_snapshot(snap, 0.65, 1e-3);
  EXPECT_EQ(restored.snapshot(), snap);
  EXPECT_EQ(restored.session(), 1);
  EXPECT_THROW(PreferenceProfile::from_snapshot(nlohmann::json{{"tags", 3}}, 0.65, 1e-3), Error);
}

TEST(Profile, RejectsBadParameters) {
  EXPECT_THROW(PreferenceProfile(1.0), Error);
  EXPECT_THROW(PreferenceProfile(0.0), Error);
  EXPECT_THROW(PreferenceProfile(0.5, -1.0), Error);
}

}  // namespace
}  // namespace feedwarden
