#include <gtest/gtest.h>

#include "intentpipe/corpus.h"
#include "intentpipe/curation.h"
#include "intentpipe/features.h"
#include "intentpipe/synthetic.h"
#include "intentpipe/taxonomy.h"
#include "test_support.h"

namespace ip = intentpipe;

TEST(Synthetic, ShippedCorpusMatchesGenerator) {
  const auto shipped = ip::read_file(ip::testing::data_dir() / "corpus" / "synthetic_intents.json");
  EXPECT_EQ(shipped, ip::dump_json(ip::synthetic_corpus()));
}

TEST(Synthetic, ShapeAndLabels) {
  const auto result = ip::ingest_corpus(ip::synthetic_corpus().dump(), ip::FieldMapConfig::msdialog());
  ASSERT_EQ(result.conversations.size(), 100u);
  EXPECT_TRUE(result.diagnostics.empty());
  const auto map = ip::ConsolidationMap::defaults();
  std::array<std::size_t, ip::kCategoryCount> per_category{};
  std::size_t utterances = 0;
  for (const auto& c : result.conversations) {
    EXPECT_TRUE(ip::validate_conversation(c).valid());
    ip::CategorySet seen;
    for (const auto& u : c.utterances) {
      ++utterances;
      const auto cats = ip::consolidate(u.raw_tags, map);
      ASSERT_EQ(cats.size(), 1u);
      seen.insert(*cats.begin());
      ++per_category[static_cast<std::size_t>(*cats.begin())];
    }
    EXPECT_EQ(seen.size(), 5u);
  }
  EXPECT_EQ(utterances, 500u);
  for (auto n : per_category) EXPECT_EQ(n, 100u);
}

TEST(Synthetic, VocabulariesAreDisjointSurviveCurationAndCarryNoSentiment) {
  const auto& vocabs = ip::synthetic_vocabularies();
  const auto config = ip::CurationConfig::defaults();
  const auto lex = ip::Lexicons::defaults();
  std::set<std::string> all;
  std::size_t total = 0;
  for (const auto& words : vocabs) {
    for (const auto& w : words) {
      all.insert(w);
      ++total;
      EXPECT_EQ(config.stopwords.count(w), 0u) << w;
      EXPECT_EQ(ip::lemmatize(w, config), w) << w;
      EXPECT_EQ(lex.sentiment.positive().count(w) + lex.sentiment.negative().count(w), 0u) << w;
    }
  }
  EXPECT_EQ(all.size(), total);
}

TEST(Synthetic, SeedChangesCorpus) {
  ip::SyntheticSpec a, b;
  b.seed = a.seed + 1;
  EXPECT_NE(ip::synthetic_corpus(a), ip::synthetic_corpus(b));
  EXPECT_EQ(ip::synthetic_corpus(a), ip::synthetic_corpus(a));
}
