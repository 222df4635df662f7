#include <cmath>

#include <gtest/gtest.h>

#include "intentpipe/curation.h"
#include "intentpipe/error.h"
#include "intentpipe/features.h"
#include "test_support.h"

namespace ip = intentpipe;
using Tokens = std::vector<std::string>;

namespace {

ip::Lexicons small_lexicons() {
  ip::Lexicons lex;
  lex.pos.words = {{"windows", ip::PosTag::Noun}, {"the", ip::PosTag::Det}};
  lex.pos.suffix_rules = {{"ed", ip::PosTag::Verb}, {"ing", ip::PosTag::Verb}};
  lex.gazetteer.add("windows 10", "PRODUCT");
  lex.gazetteer.add("windows", "PRODUCT");
  lex.gazetteer.add("skype", "PRODUCT");
  lex.sentiment = ip::SentimentLexicon({"thanks"}, {"error", "crashed"});
  lex.thesaurus = {{"error", {"fault", "error", "bug"}}};
  lex.keywords = {"error", "skype"};
  return lex;
}

}  // namespace

TEST(PosTag, Examples) {
  const auto lex = small_lexicons();
  EXPECT_TRUE(ip::pos_tag({}, lex.pos).empty());
  EXPECT_EQ(ip::pos_tag({"the"}, lex.pos), (std::vector<std::pair<std::string, ip::PosTag>>{{"the", ip::PosTag::Det}}));
  EXPECT_EQ(ip::pos_tag({"rebooting"}, lex.pos)[0].second, ip::PosTag::Verb);
  EXPECT_EQ(ip::pos_tag({"laptop"}, lex.pos)[0].second, ip::PosTag::Noun);
  EXPECT_EQ(ip::pos_tag({"2016"}, lex.pos)[0].second, ip::PosTag::Num);
  EXPECT_EQ(ip::pos_tag({"red"}, lex.pos)[0].second, ip::PosTag::Noun);  // one character before the suffix
}

TEST(Ner, Examples) {
  const auto lex = small_lexicons();
  EXPECT_TRUE(ip::ner_extract({"no", "hit", "here"}, lex.gazetteer).empty());
  EXPECT_EQ(ip::ner_extract({"windows", "10", "crashed"}, lex.gazetteer),
            (std::vector<ip::Entity>{{0, 2, "PRODUCT", "windows 10"}}));
  const auto two = ip::ner_extract({"skype", "and", "skype"}, lex.gazetteer);
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(two[0].span_start, 0u);
  EXPECT_EQ(two[1].span_start, 2u);
}

TEST(Ner, SpansNeverOverlapOnRandomInput) {
  ip::Gazetteer g;
  g.add("a", "X");
  g.add("a b", "Y");
  g.add("b c d", "Z");
  g.add("c", "X");
  ip::Rng rng(5);
  const char* words[] = {"a", "b", "c", "d"};
  for (int trial = 0; trial < 500; ++trial) {
    Tokens tokens;
    for (std::size_t i = 0, n = rng.below(12); i < n; ++i) tokens.push_back(words[rng.below(4)]);
    const auto ents = ip::ner_extract(tokens, g);
    for (std::size_t i = 0; i < ents.size(); ++i) {
      EXPECT_LT(ents[i].span_start, ents[i].span_end);
      EXPECT_LE(ents[i].span_end, tokens.size());
      if (i + 1 < ents.size()) EXPECT_LE(ents[i].span_end, ents[i + 1].span_start);
    }
  }
}

TEST(WordFrequency, Examples) {
  using Freq = std::vector<std::pair<std::string, std::size_t>>;
  EXPECT_EQ(ip::word_frequency({"a", "b", "a"}, 2), (Freq{{"a", 2}, {"b", 1}}));
  EXPECT_TRUE(ip::word_frequency({}, 3).empty());
  EXPECT_EQ(ip::word_frequency({"y", "x"}, 2), (Freq{{"x", 1}, {"y", 1}}));
  EXPECT_EQ(ip::word_frequency({"y", "x", "x"}, 0), Freq{});
}

TEST(WordFrequency, CountsSumToTokenCount) {
  const Tokens tokens = {"q", "w", "q", "e", "w", "q"};
  std::size_t sum = 0;
  for (const auto& [t, n] : ip::word_frequency(tokens, 100)) sum += n;
  EXPECT_EQ(sum, tokens.size());
}

TEST(Sentiment, Examples) {
  const ip::SentimentLexicon lex({"thanks", "great"}, {"error", "failed"});
  EXPECT_EQ(ip::sentiment({}, lex).polarity, ip::Polarity::Neutral);
  EXPECT_EQ(ip::sentiment({}, lex).score, 0);
  const auto pos = ip::sentiment({"thanks", "works", "great"}, lex);
  EXPECT_EQ(pos.polarity, ip::Polarity::Positive);
  EXPECT_EQ(pos.score, 2);
  const auto neg = ip::sentiment({"error", "failed", "thanks"}, lex);
  EXPECT_EQ(neg.polarity, ip::Polarity::Negative);
  EXPECT_EQ(neg.score, -1);
  EXPECT_EQ(neg.positive_hits, 1);
  EXPECT_EQ(neg.negative_hits, 2);
}

TEST(Sentiment, OverlappingSetsRejected) {
  EXPECT_THROW(ip::SentimentLexicon({"ok"}, {"ok"}), ip::ConfigError);
}

TEST(Sentiment, SwappingLexiconFlipsPolarity) {
  const ip::SentimentLexicon lex({"good", "nice"}, {"bad"});
  const auto swapped = lex.swapped();
  ip::Rng rng(3);
  const char* words[] = {"good", "nice", "bad", "meh"};
  for (int trial = 0; trial < 300; ++trial) {
    Tokens tokens;
    for (std::size_t i = 0, n = rng.below(8); i < n; ++i) tokens.push_back(words[rng.below(4)]);
    const auto a = ip::sentiment(tokens, lex);
    const auto b = ip::sentiment(tokens, swapped);
    EXPECT_EQ(a.score, -b.score);
    if (a.polarity == ip::Polarity::Neutral) {
      EXPECT_EQ(b.polarity, ip::Polarity::Neutral);
    } else {
      EXPECT_NE(a.polarity, b.polarity);
      EXPECT_NE(b.polarity, ip::Polarity::Neutral);
    }
  }
}

TEST(Vocabulary, DocumentFrequencies) {
  const auto v = ip::Vocabulary::fit({{"a"}, {"a", "b"}});
  EXPECT_EQ(v.document_frequency("a"), 2u);
  EXPECT_EQ(v.document_frequency("b"), 1u);
  EXPECT_EQ(v.document_count(), 2u);

  const auto w = ip::Vocabulary::fit({{}, {"a"}});
  EXPECT_EQ(w.document_frequency("a"), 1u);
  EXPECT_EQ(w.document_count(), 2u);

  EXPECT_EQ(ip::Vocabulary::fit({{"a", "a", "a"}}).document_frequency("a"), 1u);
  EXPECT_THROW(ip::Vocabulary::fit({}), ip::DataError);
}

TEST(Vocabulary, JsonRoundTripPreservesHash) {
  const auto v = ip::Vocabulary::fit({{"x", "y"}, {"y", "z"}});
  const auto back = ip::Vocabulary::from_json(v.to_json());
  EXPECT_EQ(back.hash(), v.hash());
  EXPECT_EQ(back.terms(), v.terms());
}

TEST(Tfidf, Examples) {
  const auto v = ip::Vocabulary::fit({{"a"}, {"a", "b"}});
  EXPECT_TRUE(ip::tfidf_transform({}, v).empty());

  const auto one = ip::Vocabulary::fit({{"a"}});
  const auto single = ip::tfidf_transform({"a", "a"}, one);
  ASSERT_EQ(single.size(), 1u);
  EXPECT_DOUBLE_EQ(single[0].second, 1.0);

  // idf(a) = ln(3/3) + 1 = 1, idf(b) = ln(3/2) + 1; tf(b) = 2.
  const auto two = ip::tfidf_transform({"a", "b", "b", "zzz"}, v);
  ASSERT_EQ(two.size(), 2u);
  EXPECT_NEAR(two[0].second, 0.33517574332792605, 1e-12);
  EXPECT_NEAR(two[1].second, 0.9421556246632359, 1e-12);
}

TEST(Tfidf, NormIsZeroOrOne) {
  ip::Rng rng(11);
  const char* words[] = {"a", "b", "c", "d", "e", "oov"};
  std::vector<Tokens> docs;
  for (int d = 0; d < 30; ++d) {
    Tokens t;
    for (std::size_t i = 0, n = rng.below(6); i < n; ++i) t.push_back(words[rng.below(5)]);
    docs.push_back(t);
  }
  docs.push_back({"a"});
  const auto vocab = ip::Vocabulary::fit(docs);
  for (int trial = 0; trial < 200; ++trial) {
    Tokens t;
    for (std::size_t i = 0, n = rng.below(8); i < n; ++i) t.push_back(words[rng.below(6)]);
    const auto vec = ip::tfidf_transform(t, vocab);
    const double norm = ip::l2_norm(vec);
    EXPECT_TRUE(std::abs(norm) < 1e-9 || std::abs(norm - 1.0) < 1e-9);
    for (const auto& [i, w] : vec) EXPECT_GE(w, 0.0);
  }
  EXPECT_TRUE(ip::tfidf_transform({"oov", "oov"}, vocab).empty());
}

TEST(Synonyms, Examples) {
  const ip::Thesaurus t = {{"fix", {"repair", "resolve"}}, {"loop", {"loop", "cycle"}}};
  EXPECT_TRUE(ip::synonyms_lookup("absent", t).empty());
  EXPECT_EQ(ip::synonyms_lookup("fix", t), (Tokens{"repair", "resolve"}));
  EXPECT_EQ(ip::synonyms_lookup("loop", t), (Tokens{"cycle"}));
}

TEST(ExtractFeatures, EmptyUtterance) {
  const auto vocab = ip::Vocabulary::fit({{"a"}});
  const auto b = ip::extract_features(ip::CleanUtterance{}, vocab, small_lexicons());
  EXPECT_TRUE(b.pos_tags.empty());
  EXPECT_TRUE(b.word_freq.empty());
  EXPECT_TRUE(b.verb_freq.empty());
  EXPECT_TRUE(b.entities.empty());
  EXPECT_EQ(b.sentiment.polarity, ip::Polarity::Neutral);
  EXPECT_TRUE(b.tfidf.empty());
}

TEST(ExtractFeatures, GoldenBundle) {
  ip::CleanUtterance c;
  c.source = {"c1", "u1"};
  c.tokens = {"windows", "10", "crashed", "skype", "error", "error", "thanks"};
  c.lemmas = {"windows", "10", "crash", "skype", "error", "error", "thanks"};
  const auto vocab = ip::Vocabulary::fit({{"error", "crash"}, {"skype"}, {"windows"}});
  const auto b = ip::extract_features(c, vocab, small_lexicons());

  using P = ip::PosTag;
  EXPECT_EQ(b.pos_tags, (std::vector<std::pair<std::string, P>>{{"windows", P::Noun},
                                                                {"10", P::Num},
                                                                {"crashed", P::Verb},
                                                                {"skype", P::Noun},
                                                                {"error", P::Noun},
                                                                {"error", P::Noun},
                                                                {"thanks", P::Noun}}));
  EXPECT_EQ(b.entities, (std::vector<ip::Entity>{{0, 2, "PRODUCT", "windows 10"}, {3, 4, "PRODUCT", "skype"}}));
  EXPECT_EQ(b.word_freq, (std::map<std::string, std::size_t>{
                             {"10", 1}, {"crashed", 1}, {"error", 2}, {"skype", 1}, {"thanks", 1}, {"windows", 1}}));
  EXPECT_EQ(b.verb_freq, (std::map<std::string, std::size_t>{{"crash", 1}}));
  EXPECT_EQ(b.keyword_freq, (std::map<std::string, std::size_t>{{"error", 2}, {"skype", 1}}));
  EXPECT_EQ(b.synonyms, (std::map<std::string, Tokens>{{"error", {"fault", "bug"}}}));
  EXPECT_EQ(b.sentiment, (ip::SentimentResult{1, 3, -2, ip::Polarity::Negative}));

  // Terms crash, error, skype, windows share idf; tf 1, 2, 1, 1 over norm sqrt(7).
  const double r7 = 1.0 / std::sqrt(7.0);
  ASSERT_EQ(b.tfidf.size(), 4u);
  const double expected[] = {r7, 2 * r7, r7, r7};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(b.tfidf[i].first, i);
    EXPECT_NEAR(b.tfidf[i].second, expected[i], 1e-12);
  }

  EXPECT_EQ(ip::feature_bundle_from_json(ip::to_json(b)), b);
}

TEST(Lexicons, EmbeddedDefaultsMatchShippedFiles) {
  EXPECT_EQ(ip::Lexicons::load(ip::testing::data_dir() / "lexicons").to_json(), ip::Lexicons::defaults().to_json());
}
