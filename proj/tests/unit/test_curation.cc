#include <gtest/gtest.h>

#include "intentpipe/curation.h"
#include "intentpipe/error.h"
#include "test_support.h"

namespace ip = intentpipe;

namespace {

std::vector<ip::NormalizationPattern> url_patterns() {
  return ip::CurationConfig::defaults().normalization_patterns;
}

}  // namespace

TEST(Normalize, Empty) { EXPECT_EQ(ip::normalize("", url_patterns()), ""); }

TEST(Normalize, DefaultPatternsStripUrl) {
  // URL removal leaves both neighbouring spaces; collapsing them is a later
  // step of the pattern list, so apply only the URL pattern here.
  const auto defaults = url_patterns();
  std::vector<ip::NormalizationPattern> url_only;
  for (const auto& p : defaults) {
    if (p.pattern().find("https?") != std::string::npos) url_only.push_back(p);
  }
  ASSERT_EQ(url_only.size(), 1u);
  EXPECT_EQ(ip::normalize("Visit https://x.y now!!", url_only), "visit  now!!");
  EXPECT_EQ(ip::normalize("Visit https://x.y now!!", defaults), "visit now!!");
}

TEST(Normalize, LowercaseOnly) { EXPECT_EQ(ip::normalize("Hello", {}), "hello"); }

TEST(Normalize, UnicodeLowercaseAndNfc) {
  // "E" + combining acute composes to U+00E9 after lowercasing.
  EXPECT_EQ(ip::normalize("CAFE\xCC\x81", {}), "caf\xC3\xA9");
}

TEST(Normalize, PatternsApplyInOrder) {
  const std::vector<ip::NormalizationPattern> ab = {{"a", "b"}, {"b", "c"}};
  const std::vector<ip::NormalizationPattern> ba = {{"b", "c"}, {"a", "b"}};
  EXPECT_EQ(ip::normalize("ab", ab), "cc");
  EXPECT_EQ(ip::normalize("ab", ba), "bc");
}

TEST(Normalize, ReplacementIsLiteral) {
  EXPECT_EQ(ip::normalize("abc", {{"b", "$0\\1"}}), "a$0\\1c");
}

TEST(Normalize, InvalidPatternFailsAtConstruction) {
  EXPECT_THROW(ip::NormalizationPattern("([a-", ""), ip::ConfigError);
}

TEST(Tokenize, Examples) {
  EXPECT_TRUE(ip::tokenize("").empty());
  EXPECT_EQ(ip::tokenize("windows 10 won't boot"), (std::vector<std::string>{"windows", "10", "won't", "boot"}));
  EXPECT_EQ(ip::tokenize("e-mail!!!"), (std::vector<std::string>{"e-mail"}));
  EXPECT_EQ(ip::tokenize("sign-in -x- 'quoted' a--b"),
            (std::vector<std::string>{"sign-in", "x", "quoted", "a", "b"}));
  EXPECT_EQ(ip::tokenize("caf\xC3\xA9 na\xC3\xAFve"), (std::vector<std::string>{"caf\xC3\xA9", "na\xC3\xAFve"}));
}

TEST(Tokenize, EveryTokenMatchesGrammar) {
  for (const auto& t : ip::tokenize("it's a sign-in... 3.14, rock'n'roll -- x-")) {
    EXPECT_TRUE(ip::is_valid_token(t)) << t;
  }
  EXPECT_FALSE(ip::is_valid_token(""));
  EXPECT_FALSE(ip::is_valid_token("-a"));
  EXPECT_FALSE(ip::is_valid_token("a b"));
}

TEST(Stopwords, Examples) {
  const std::set<std::string> stop = {"how", "do", "i"};
  const auto split = ip::remove_stopwords({"how", "do", "i", "reset"}, stop);
  EXPECT_EQ(split.kept, (std::vector<std::string>{"reset"}));
  ASSERT_EQ(split.removed.size(), 3u);
  EXPECT_EQ(split.removed[2], (std::pair<std::size_t, std::string>{2, "i"}));

  const auto empty = ip::remove_stopwords({}, stop);
  EXPECT_TRUE(empty.kept.empty());
  EXPECT_TRUE(empty.removed.empty());

  EXPECT_TRUE(ip::remove_stopwords({"how", "i"}, stop).kept.empty());
}

TEST(Stopwords, ExactMatchOnly) {
  EXPECT_EQ(ip::remove_stopwords({"How", "how"}, {"how"}).kept, (std::vector<std::string>{"How"}));
}

TEST(Lemmatize, Examples) {
  ip::CurationConfig config;
  config.lemma_exceptions = {{"was", "be"}};
  config.suffix_rules = {{"s", "", 3}};
  EXPECT_EQ(ip::lemmatize("was", config), "be");
  EXPECT_EQ(ip::lemmatize("books", config), "book");
  EXPECT_EQ(ip::lemmatize("x", config), "x");
  EXPECT_EQ(ip::lemmatize("its", config), "its");  // stem "it" is shorter than 3
}

TEST(Lemmatize, FirstMatchingRuleWins) {
  ip::CurationConfig config;
  config.suffix_rules = {{"ies", "y", 2}, {"s", "", 1}};
  EXPECT_EQ(ip::lemmatize("entries", config), "entry");
  EXPECT_EQ(ip::lemmatize("ties", config), "tie");  // "t" too short for the first rule
}

TEST(Lemmatize, NeverEmpty) {
  ip::CurationConfig config;
  config.suffix_rules = {{"s", "", 0}};
  EXPECT_EQ(ip::lemmatize("s", config), "s");
}

TEST(Curate, EmptyText) {
  const auto c = ip::curate_text({"c", "u"}, "", ip::CurationConfig::defaults());
  EXPECT_TRUE(c.tokens.empty());
  EXPECT_TRUE(c.lemmas.empty());
}

TEST(Curate, GoldenFile) {
  const auto golden = ip::read_json_file(ip::testing::fixture("curation_golden.json"));
  const auto config = ip::CurationConfig::load(ip::testing::data_dir() / "curation" / "curation.json");
  for (const auto& c : golden.at("cases")) {
    const auto out = ip::curate_text({"c", "u"}, c.at("text").get<std::string>(), config);
    EXPECT_EQ(out.normalized_text, c.at("normalized_text").get<std::string>());
    EXPECT_EQ(out.all_tokens(), c.at("all_tokens").get<std::vector<std::string>>());
    EXPECT_EQ(out.lemmas, c.at("lemmas").get<std::vector<std::string>>());
    EXPECT_EQ(out.tokens, c.at("tokens").get<std::vector<std::string>>());
    EXPECT_EQ(out.kept_lemmas(), c.at("kept_lemmas").get<std::vector<std::string>>());
    std::vector<std::pair<std::size_t, std::string>> removed;
    for (const auto& r : c.at("removed")) removed.emplace_back(r.at(0).get<std::size_t>(), r.at(1).get<std::string>());
    EXPECT_EQ(out.removed_stopwords, removed);
  }
}

TEST(Curate, EmbeddedDefaultsMatchShippedFiles) {
  const auto loaded = ip::CurationConfig::load(ip::testing::data_dir() / "curation" / "curation.json");
  EXPECT_EQ(loaded.to_json(), ip::CurationConfig::defaults().to_json());
}

TEST(Curate, IdempotentOnFixtureText) {
  const auto config = ip::CurationConfig::defaults();
  const auto first = ip::curate_text({"c", "u"}, "See `x` at https://a.b/c,  it's   GREAT!", config);
  const auto second = ip::curate_text({"c", "u"}, first.normalized_text, config);
  EXPECT_EQ(first.tokens, second.tokens);
  EXPECT_EQ(first.lemmas, second.lemmas);
  EXPECT_EQ(first.normalized_text, second.normalized_text);
}

TEST(Curate, JsonRoundTrip) {
  const auto c = ip::curate_text({"c", "u"}, "The books were on the tables.", ip::CurationConfig::defaults());
  EXPECT_EQ(ip::clean_utterance_from_json(ip::to_json(c)), c);
}

TEST(CurationConfig, MissingFileIsConfigError) {
  EXPECT_THROW(ip::CurationConfig::load("/nonexistent/curation.json"), ip::ConfigError);
}
