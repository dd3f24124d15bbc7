#include <gtest/gtest.h>

#include <random>

#include "feedwarden/core/error.h"
#include "feedwarden/pipeline/adjudicator.h"
#include "test_support.h"

namespace feedwarden {
namespace {

using testing::FlakyJudgeBackend;
using testing::FlakyVisionBackend;
using testing::make_item;
using testing::make_rule;
using testing::stepping_clock;
using testing::TempDir;

// Judge that records the call signature of every request and blocks on a token.
class SpyJudge final : public JudgeBackend {
 public:
  explicit SpyJudge(bool accepts_visual = true) : accepts_visual_(accepts_visual) {}
  JudgeCapabilities capabilities() const override { return {accepts_visual_}; }
  JudgeVerdict judge(const JudgeRequest& request) override {
    signatures.push_back(ReplayJudgeBackend::signature(request));
    if (failing) throw Error(ErrorCode::kBackendFailure, "judge down");
    if (malformed) return {true, std::nullopt, "no rule"};
    if (request.item.text().find("blockme") != std::string::npos) {
      return {true, request.rules.front().rule.id, "Contains blockme."};
    }
    return {false, std::nullopt, ""};
  }
  std::vector<std::string> signatures;
  bool failing = false;
  bool malformed = false;

 private:
  bool accepts_visual_;
};

class ThrowingSink final : public TelemetrySink {
 public:
  void record(TelemetryEvent) override { throw Error(ErrorCode::kStorageError, "disk full"); }
};

struct Rig {
  std::shared_ptr<SpyJudge> judge = std::make_shared<SpyJudge>();
  std::shared_ptr<FlakyVisionBackend> vision = std::make_shared<FlakyVisionBackend>();
  std::shared_ptr<ImageFixtureStore> images = std::make_shared<ImageFixtureStore>();
  std::shared_ptr<OfflineEmbeddingProvider> text = std::make_shared<OfflineEmbeddingProvider>();
  std::shared_ptr<DossierStore> dossiers = std::make_shared<DossierStore>();
  std::shared_ptr<EventLog> log = std::make_shared<EventLog>();
  AdjudicationContext context;

  Rig() {
    context.user_id = "u1";
    context.rules = std::make_shared<const std::vector<Rule>>(std::vector<Rule>{
        make_rule("rule_astro", "zodiac horoscope", -0.9, {"horoscope"}),
        make_rule("rule_mild", "celebrity gossip", -0.3, {"gossip"})});
    images->add_caption("img-astro", "zodiac horoscope chart");
    images->add_caption("img-calm", "quiet lake morning");
  }

  Backends backends(bool with_cross_modal = true) {
    Backends b;
    b.vision = vision;
    b.judge = judge;
    b.text = text;
    if (with_cross_modal) b.cross_modal = std::make_shared<CaptionCrossModalProvider>(images, text);
    return b;
  }

  Adjudicator make(PipelineMode mode = PipelineMode::kFull, bool with_cross_modal = true) {
    AdjudicationConfig config;
    config.mode = mode;
    return Adjudicator(backends(with_cross_modal), config, dossiers, log, stepping_clock(1000, 5));
  }
};

TEST(Adjudicator, NoRulesPassesWithoutCallingTheJudge) {
  Rig rig;
  rig.context.rules = std::make_shared<const std::vector<Rule>>();
  const auto r = rig.make().adjudicate(make_item("i", "blockme", "img-astro"), rig.context);
  EXPECT_EQ(r.adjudication.y_block, 0);
  EXPECT_EQ(r.adjudication.layer, Layer::kPass);
  EXPECT_TRUE(rig.judge->signatures.empty());
  EXPECT_EQ(rig.vision->calls, 0);
}

TEST(Adjudicator, CloudBlockRecordsDossierAndTelemetry) {
  Rig rig;
  const auto r = rig.make().adjudicate(make_item("i1", "please blockme", "img-astro"), rig.context);
  const Adjudication& a = r.adjudication;
  EXPECT_EQ(a.y_block, 1);
  EXPECT_EQ(a.layer, Layer::kCloud);
  EXPECT_EQ(a.triggered_rule_id, "rule_astro");
  EXPECT_EQ(a.reason, "Contains blockme.");
  EXPECT_EQ(a.y_star, 0.0);
  EXPECT_EQ(a.latency_ms, 5);
  ASSERT_TRUE(a.dossier_id.has_value());
  ASSERT_NE(r.dossier, nullptr);
  EXPECT_EQ(rig.dossiers->get(*a.dossier_id), r.dossier);
  EXPECT_EQ(r.dossier->rule_versions.size(), 2u);
  ASSERT_TRUE(r.dossier->evidence.has_value());
  EXPECT_EQ(r.dossier->evidence->cognition.subjects, "subject of img-astro");
  EXPECT_EQ(r.dossier->verdict->triggered_rule_id, "rule_astro");
  EXPECT_FALSE(r.dossier->fallback.has_value());
  EXPECT_EQ(r.dossier->config.at("mode"), "full");

  const auto events = *rig.log->snapshot();
  ASSERT_EQ(events.size(), 2u);
  EXPECT_EQ(events[0].kind, EventKind::kExposure);
  EXPECT_EQ(events[1].kind, EventKind::kOrigBlock);
  EXPECT_EQ(events[1].layer, Layer::kCloud);
  EXPECT_EQ(events[1].rule_id, "rule_astro");
  EXPECT_EQ(events[1].user_id, "u1");
}

TEST(Adjudicator, PassesGetNoDossierUnlessAuditingAll) {
  Rig rig;
  const auto r = rig.make().adjudicate(make_item("i1", "harmless", "img-calm"), rig.context);
  EXPECT_EQ(r.adjudication.y_block, 0);
  EXPECT_EQ(r.adjudication.layer, Layer::kCloud);
  EXPECT_EQ(r.dossier, nullptr);
  EXPECT_EQ(rig.log->size(), 1u);

  AdjudicationConfig config;
  config.audit_all = true;
  Adjudicator auditing(rig.backends(), config, rig.dossiers, nullptr, stepping_clock());
  const auto audited = auditing.adjudicate(make_item("i1", "harmless", "img-calm"), rig.context);
  ASSERT_NE(audited.dossier, nullptr);
  EXPECT_EQ(audited.dossier->y_block, 0);
}

TEST(Adjudicator, AblationsWireEvidenceAndCallStyle) {
  const auto item = make_item("i1", "harmless", "img-calm");
  const std::pair<PipelineMode, std::string> cases[] = {
      {PipelineMode::kFull, "decoupled_visual"},
      {PipelineMode::kRemoveImage, "decoupled_text"},
      {PipelineMode::kRemoveMa, "monolithic_visual"},
      {PipelineMode::kTextOnlyBaseline, "monolithic_text"},
  };
  for (const auto& [mode, signature] : cases) {
    Rig rig;
    rig.make(mode).adjudicate(item, rig.context);
    ASSERT_EQ(rig.judge->signatures.size(), 1u) << to_string(mode);
    EXPECT_EQ(rig.judge->signatures[0], signature) << to_string(mode);
    const bool visual = mode == PipelineMode::kFull || mode == PipelineMode::kRemoveMa;
    EXPECT_EQ(rig.vision->calls, visual ? 1 : 0) << to_string(mode);
  }
}

TEST(Adjudicator, KeywordBaselineUsesSubstringMatchOnly) {
  Rig rig;
  const auto adjudicator = rig.make(PipelineMode::kKeywordBaseline);
  const auto hit = adjudicator.adjudicate(make_item("i1", "Weekly Gossip roundup", "img-calm"), rig.context);
  EXPECT_EQ(hit.adjudication.y_block, 1);
  EXPECT_EQ(hit.adjudication.triggered_rule_id, "rule_mild");
  const auto miss = adjudicator.adjudicate(make_item("i2", "blockme", "img-astro"), rig.context);
  EXPECT_EQ(miss.adjudication.y_block, 0);
  EXPECT_TRUE(rig.judge->signatures.empty());
  EXPECT_EQ(rig.vision->calls, 0);

  AdjudicationConfig config;
  config.mode = PipelineMode::kKeywordBaseline;
  Backends no_judge;
  EXPECT_NO_THROW(Adjudicator(no_judge, config, nullptr, nullptr));
  config.mode = PipelineMode::kFull;
  EXPECT_THROW(Adjudicator(no_judge, config, nullptr, nullptr), Error);
}

TEST(Adjudicator, TextOnlyJudgeSkipsVision) {
  Rig rig;
  rig.judge = std::make_shared<SpyJudge>(false);
  rig.make().adjudicate(make_item("i1", "harmless", "img-calm"), rig.context);
  EXPECT_EQ(rig.vision->calls, 0);
  EXPECT_EQ(rig.judge->signatures.at(0), "decoupled_text");
}

TEST(Adjudicator, EvidenceCacheServesRepeatImages) {
  Rig rig;
  Backends b = rig.backends();
  b.cache = std::make_shared<EvidenceCache>();
  Adjudicator adjudicator(b, {}, rig.dossiers, nullptr, stepping_clock());
  adjudicator.adjudicate(make_item("i1", "a", "img-calm"), rig.context);
  adjudicator.adjudicate(make_item("i2", "b", "img-calm"), rig.context);
  EXPECT_EQ(rig.vision->calls, 1);
}

TEST(Adjudicator, JudgeFailureFallsBackToCrossModal) {
  Rig rig;
  rig.judge->failing = true;
  const auto adjudicator = rig.make();
  const auto blocked = adjudicator.adjudicate(make_item("i1", "anything", "img-astro"), rig.context);
  EXPECT_EQ(blocked.adjudication.y_block, 1);
  EXPECT_EQ(blocked.adjudication.layer, Layer::kClipFallback);
  EXPECT_EQ(blocked.adjudication.triggered_rule_id, "rule_astro");
  ASSERT_NE(blocked.dossier, nullptr);
  ASSERT_TRUE(blocked.dossier->fallback.has_value());
  EXPECT_EQ(blocked.dossier->fallback->method, FallbackMethod::kCrossModal);
  EXPECT_NE(blocked.dossier->fallback->failure.find("judge down"), std::string::npos);
  EXPECT_FALSE(blocked.dossier->verdict.has_value());

  const auto passed = adjudicator.adjudicate(make_item("i2", "anything", "img-calm"), rig.context);
  EXPECT_EQ(passed.adjudication.y_block, 0);
  EXPECT_EQ(passed.adjudication.layer, Layer::kPass);
}

TEST(Adjudicator, VisionFailureAndMalformedVerdictFallBack) {
  Rig rig;
  rig.vision->failing = true;
  auto r = rig.make().adjudicate(make_item("i1", "blockme", "img-astro"), rig.context);
  EXPECT_EQ(r.adjudication.layer, Layer::kClipFallback);
  EXPECT_TRUE(rig.judge->signatures.empty());

  Rig other;
  other.judge->malformed = true;
  r = other.make().adjudicate(make_item("i1", "x", "img-calm"), other.context);
  EXPECT_EQ(r.adjudication.layer, Layer::kPass);
  EXPECT_EQ(r.adjudication.y_block, 0);
}

TEST(Adjudicator, UnscorableImageBlocksWithSentinel) {
  Rig rig;
  rig.judge->failing = true;
  auto r = rig.make().adjudicate(make_item("i1", "x", "img-unknown"), rig.context);
  EXPECT_EQ(r.adjudication.y_block, 1);
  EXPECT_EQ(r.adjudication.triggered_rule_id, std::string(kFallbackUnavailableRule));
  r = rig.make(PipelineMode::kFull, false).adjudicate(make_item("i2", "x", "img-calm"), rig.context);
  EXPECT_EQ(r.adjudication.y_block, 1);
  EXPECT_EQ(r.adjudication.triggered_rule_id, std::string(kFallbackUnavailableRule));
}

TEST(Adjudicator, TextOnlyFallbackLeansToPass) {
  Rig rig;
  rig.judge->failing = true;
  const auto adjudicator = rig.make();
  EXPECT_EQ(adjudicator.adjudicate(make_item("i1", "celebrity gossip"), rig.context).adjudication.y_block, 0);
  const auto strong = adjudicator.adjudicate(make_item("i2", "today's horoscope"), rig.context);
  EXPECT_EQ(strong.adjudication.y_block, 1);
  EXPECT_EQ(strong.adjudication.triggered_rule_id, "rule_astro");
}

TEST(Adjudicator, StarsOnlyForPasses) {
  Rig rig;
  auto profile = std::make_shared<PreferenceProfile>();
  profile->apply_user_delta("lake", 1.0);
  rig.context.profile = profile;
  const auto adjudicator = rig.make();
  const auto pass = adjudicator.adjudicate(make_item("i1", "lake"), rig.context);
  EXPECT_EQ(pass.adjudication.y_star, 1.0);
  EXPECT_EQ(pass.adjudication.star_count, 2);
  const auto block = adjudicator.adjudicate(make_item("i2", "lake blockme"), rig.context);
  EXPECT_EQ(block.adjudication.y_block, 1);
  EXPECT_EQ(block.adjudication.y_star, 0.0);
  EXPECT_EQ(block.adjudication.star_count, 0);
}

TEST(Adjudicator, DossierIdsAreContentAddressed) {
  Rig rig;
  AdjudicationConfig config;
  const auto item = make_item("i1", "blockme", "img-astro");
  Adjudicator a(rig.backends(), config, rig.dossiers, nullptr, stepping_clock(42, 0));
  const auto first = a.adjudicate(item, rig.context).adjudication;
  const auto again = a.adjudicate(item, rig.context).adjudication;
  EXPECT_EQ(first.dossier_id, again.dossier_id);
  EXPECT_EQ(rig.dossiers->size(), 1u);
  Adjudicator later(rig.backends(), config, rig.dossiers, nullptr, stepping_clock(43, 0));
  EXPECT_NE(later.adjudicate(item, rig.context).adjudication.dossier_id, first.dossier_id);
}

TEST(Adjudicator, TelemetryFailureDoesNotChangeDecision) {
  Rig rig;
  AdjudicationConfig config;
  Adjudicator a(rig.backends(), config, rig.dossiers, std::make_shared<ThrowingSink>(), stepping_clock());
  EXPECT_EQ(a.adjudicate(make_item("i1", "blockme", "img-astro"), rig.context).adjudication.y_block, 1);
}

TEST(Adjudicator, EveryItemGetsADecisionUnderRandomFailures) {
  Rig rig;
  std::mt19937 rng(7);
  const auto adjudicator = rig.make();
  std::bernoulli_distribution coin(0.3);
  for (int i = 0; i < 2000; ++i) {
    rig.judge->failing = coin(rng);
    rig.judge->malformed = coin(rng);
    rig.vision->failing = coin(rng);
    std::optional<std::string> image;
    switch (i % 4) {
      case 0: image = "img-astro"; break;
      case 1: image = "img-calm"; break;
      case 2: image = "img-missing"; break;
      default: break;
    }
    const auto a = adjudicator.adjudicate(make_item("i" + std::to_string(i), "post " + std::to_string(i), image),
                                          rig.context)
                       .adjudication;
    ASSERT_TRUE(a.y_block == 0 || a.y_block == 1);
    ASSERT_NE(a.layer, Layer::kUnknown);
    if (a.y_block == 1) ASSERT_TRUE(a.dossier_id.has_value());
  }
}

TEST(DossierStore, PersistsAndReloads) {
  TempDir dir;
  std::string id;
  {
    Rig rig;
    rig.dossiers = std::make_shared<DossierStore>(dir / "dossiers.ndjson");
    id = *rig.make().adjudicate(make_item("i1", "blockme", "img-astro"), rig.context).adjudication.dossier_id;
  }
  DossierStore reloaded(dir / "dossiers.ndjson");
  ASSERT_EQ(reloaded.size(), 1u);
  const auto d = reloaded.get(id);
  ASSERT_NE(d, nullptr);
  EXPECT_EQ(d->item.id, "i1");
  EXPECT_EQ(d->layer, Layer::kCloud);
  EXPECT_EQ(to_json(*d), to_json(dossier_from_json(to_json(*d))));
}

TEST(AdjudicationJson, RoundTrips) {
  Adjudication a;
  a.item_id = "i";
  a.y_block = 1;
  a.layer = Layer::kClipFallback;
  a.triggered_rule_id = "rule_x";
  a.reason = "r";
  a.dossier_id = "dos_1";
  a.latency_ms = 12;
  EXPECT_EQ(adjudication_from_json(to_json(a)), a);
  EXPECT_EQ(parse_pipeline_mode("remove_ma"), PipelineMode::kRemoveMa);
  EXPECT_THROW(parse_pipeline_mode("everything"), Error);
}

}  // namespace
}  // namespace feedwarden
