#include <gtest/gtest.h>

#include <fstream>

#include "feedwarden/core/durable_file.h"
#include "feedwarden/core/error.h"
#include "feedwarden/core/hash.h"
#include "feedwarden/core/json_codec.h"
#include "feedwarden/core/model.h"
#include "feedwarden/core/text.h"
#include "test_support.h"

namespace feedwarden {
namespace {

using testing::TempDir;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::kInvalidArgument;
}

RuleCandidate candidate(std::optional<std::string> description, std::optional<double> weight,
                        std::optional<std::string> modality = "text") {
  RuleCandidate c;
  c.description = std::move(description);
  c.weight = weight;
  c.modality = std::move(modality);
  return c;
}

TEST(RuleValidation, AcceptsFilterAndAllowRules) {
  const Rule r = validate_rule(candidate("  Hide tarot readings ", -0.8));
  EXPECT_EQ(r.description, "Hide tarot readings");
  EXPECT_TRUE(r.is_filter());
  EXPECT_EQ(r.version, 1);
  EXPECT_TRUE(r.active);
  EXPECT_EQ(r.id, make_rule_id("Hide tarot readings"));
  EXPECT_TRUE(validate_rule(candidate("Show cooking", 0.5)).is_allow());
}

TEST(RuleValidation, RejectsBadFields) {
  EXPECT_EQ(code_of([] { validate_rule(candidate("x", 1.5)); }), ErrorCode::kWeightOutOfRange);
  EXPECT_EQ(code_of([] { validate_rule(candidate("x", -1.01)); }), ErrorCode::kWeightOutOfRange);
  EXPECT_EQ(code_of([] { validate_rule(candidate("x", 0.0)); }), ErrorCode::kZeroWeight);
  EXPECT_EQ(code_of([] { validate_rule(candidate("   ", -0.5)); }), ErrorCode::kEmptyDescription);
  EXPECT_EQ(code_of([] { validate_rule(candidate("x", -0.5, "video")); }), ErrorCode::kUnknownModality);
  EXPECT_NO_THROW(validate_rule(candidate("x", -1.0)));
  EXPECT_NO_THROW(validate_rule(candidate("x", 1.0)));
}

TEST(RuleValidation, RuleIdIsStableAndShaped) {
  const std::string id = make_rule_id("Hide tarot readings");
  EXPECT_EQ(id, make_rule_id("Hide tarot readings"));
  ASSERT_EQ(id.size(), 13u);
  EXPECT_EQ(id.substr(0, 5), "rule_");
  EXPECT_NE(id, make_rule_id("Hide tarot reading"));
}

TEST(IntensityBands, Boundaries) {
  EXPECT_EQ(intensity_band(-0.7), IntensityBand::kStrong);
  EXPECT_EQ(intensity_band(-0.69), IntensityBand::kMedium);
  EXPECT_EQ(intensity_band(-0.5), IntensityBand::kMedium);
  EXPECT_EQ(intensity_band(-0.49), IntensityBand::kMild);
  EXPECT_EQ(intensity_band(-1.0), IntensityBand::kStrong);
  EXPECT_EQ(intensity_band(0.9), IntensityBand::kAllow);
  EXPECT_EQ(strength_band(0.9), IntensityBand::kStrong);
}

TEST(Verdicts, InvariantsAreChecked) {
  EXPECT_NO_THROW(check_verdict({false, std::nullopt, ""}));
  EXPECT_NO_THROW(check_verdict({true, "rule_a", "Matches rule a."}));
  EXPECT_EQ(code_of([] { check_verdict({true, std::nullopt, "x"}); }), ErrorCode::kMalformedVerdict);
  EXPECT_EQ(code_of([] { check_verdict({false, "rule_a", ""}); }), ErrorCode::kMalformedVerdict);
  EXPECT_EQ(code_of([] { check_verdict({true, "rule_a", ""}); }), ErrorCode::kMalformedVerdict);
  std::string long_reason;
  for (int i = 0; i < 101; ++i) long_reason += "word ";
  EXPECT_EQ(code_of([&] { check_verdict({true, "rule_a", long_reason}); }), ErrorCode::kMalformedVerdict);
}

TEST(JsonCodec, RuleRoundTrip) {
  Rule r = testing::make_rule("rule_1", "Hide tarot", -0.8, {"tarot"});
  r.version = 3;
  r.parent_version = 2;
  r.exemptions = {"cat ears"};
  const Json j = r;
  EXPECT_EQ(j.at("modality"), "image_text");
  EXPECT_EQ(j.get<Rule>(), r);
}

TEST(JsonCodec, FeedItemRoundTripAndValidation) {
  FeedItem item = testing::make_item("i1", "Title", "img-1");
  item.snippet = "snippet";
  item.snippet_truncated = true;
  item.tags = {"a", "b"};
  item.persona = Persona::kB;
  item.ground_truth = 1;
  const Json j = item;
  EXPECT_EQ(j.get<FeedItem>(), item);
  EXPECT_THROW(Json::parse(R"({"title":"x"})").get<FeedItem>(), Error);
  EXPECT_THROW(Json::parse(R"({"id":"x","ground_truth":"yes"})").get<FeedItem>(), Error);
  EXPECT_EQ(item.text(), "Title snippet");
}

TEST(JsonCodec, EvidenceRoundTripAndFlatten) {
  VisualEvidence e;
  e.perception.brightness = "dim";
  e.cognition.ocr = "SALE";
  e.semantics.vibe = "mystic";
  const Json j = e;
  VisualEvidence back = j.get<VisualEvidence>();
  back.source = e.source;
  EXPECT_EQ(back, e);
  const std::string flat = e.flatten();
  EXPECT_NE(flat.find("dim"), std::string::npos);
  EXPECT_NE(flat.find("SALE"), std::string::npos);
  EXPECT_LT(flat.find("dim"), flat.find("mystic"));
}

TEST(Text, TokenizeLowercasesAndSplits) {
  EXPECT_EQ(tokenize("Tarot-Cards, cat EARS!"),
            (std::vector<std::string>{"tarot", "cards", "cat", "ears"}));
  EXPECT_TRUE(tokenize(" ,.; ").empty());
  EXPECT_EQ(tokenize("猫耳 tarot").size(), 2u);
  EXPECT_EQ(word_count("  a b\tc\n"), 3u);
  EXPECT_EQ(trim("  x y \n"), "x y");
}

TEST(Hashing, Fnv1aReferenceVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(Hashing, Md5ReferenceVectors) {
  EXPECT_EQ(md5_hex(""), "d41d8cd98f00b204e9800998ecf8427e");
  EXPECT_EQ(md5_hex("abc"), "900150983cd24fb0d6963f7d28e17f72");
  EXPECT_EQ(md5_hex("message digest"), "f96b697d7cb7938d525a2f31aaf161d0");
}

std::vector<std::string> replay(const std::filesystem::path& path, std::uint64_t* discarded = nullptr) {
  std::vector<std::string> records;
  AppendOnlyFile file(path, [&](std::string_view line) {
    if (line.empty() || line.front() != '{') return false;
    records.emplace_back(line);
    return true;
  });
  if (discarded) *discarded = file.discarded_bytes();
  return records;
}

TEST(AppendOnlyFile, AppendsSurviveReopen) {
  TempDir dir;
  {
    AppendOnlyFile file(dir / "log", [](std::string_view) { return true; });
    file.append("{1}");
    file.append("{2}");
    EXPECT_EQ(file.offset(), 8u);
  }
  EXPECT_EQ(replay(dir / "log"), (std::vector<std::string>{"{1}", "{2}"}));
}

TEST(AppendOnlyFile, TornTailIsDiscardedOnly) {
  TempDir dir;
  {
    std::ofstream out(dir / "log");
    out << "{1}\n{2}\n{3";
  }
  std::uint64_t discarded = 0;
  EXPECT_EQ(replay(dir / "log", &discarded), (std::vector<std::string>{"{1}", "{2}"}));
  EXPECT_EQ(discarded, 2u);
  EXPECT_EQ(std::filesystem::file_size(dir / "log"), 8u);
}

TEST(AppendOnlyFile, DamageBeforeTailIsCorrupt) {
  TempDir dir;
  {
    std::ofstream out(dir / "log");
    out << "{1}\ngarbage\n{3}\n";
  }
  EXPECT_EQ(code_of([&] { replay(dir / "log"); }), ErrorCode::kCorruptSnapshot);
}

TEST(AppendOnlyFile, AtomicWriteReplacesContent) {
  TempDir dir;
  write_file_atomic(dir / "f.json", "one");
  write_file_atomic(dir / "f.json", "two");
  EXPECT_EQ(read_file(dir / "f.json"), "two");
  EXPECT_THROW(read_file(dir / "missing"), Error);
}

}  // namespace
}  // namespace feedwarden
