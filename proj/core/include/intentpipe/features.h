#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "intentpipe/corpus.h"
#include "intentpipe/curation.h"
#include "intentpipe/io.h"

namespace intentpipe {

enum class PosTag { Noun, Verb, Adj, Adv, Det, Pron, Num, Other };

std::string_view to_string(PosTag t);
std::optional<PosTag> parse_pos_tag(std::string_view s);

enum class Polarity { Positive, Negative, Neutral };

std::string_view to_string(Polarity p);
std::optional<Polarity> parse_polarity(std::string_view s);

struct PosLexicon {
  std::map<std::string, PosTag> words;
  std::vector<std::pair<std::string, PosTag>> suffix_rules;  // tried in order
};

struct Entity {
  std::size_t span_start = 0;  // token index, inclusive
  std::size_t span_end = 0;    // token index, exclusive
  std::string entity_type;
  std::string surface;

  bool operator==(const Entity&) const = default;
};

// Surface form -> entity type. Surfaces are stored as space-joined token
// sequences produced by the curation tokenizer.
class Gazetteer {
 public:
  void add(std::string_view surface, std::string entity_type);

  std::optional<std::string> find(const std::string& joined_tokens) const;
  std::size_t max_phrase_tokens() const { return max_tokens_; }
  std::set<std::string> entity_types() const;
  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
  std::size_t max_tokens_ = 0;
};

class SentimentLexicon {
 public:
  SentimentLexicon() = default;
  // Throws ConfigError when a word is in both sets.
  SentimentLexicon(std::set<std::string> positive, std::set<std::string> negative);

  const std::set<std::string>& positive() const { return positive_; }
  const std::set<std::string>& negative() const { return negative_; }

  // Positive and negative sets exchanged.
  SentimentLexicon swapped() const { return SentimentLexicon(negative_, positive_); }

 private:
  std::set<std::string> positive_;
  std::set<std::string> negative_;
};

using Thesaurus = std::map<std::string, std::vector<std::string>>;

struct Lexicons {
  PosLexicon pos;
  Gazetteer gazetteer;
  SentimentLexicon sentiment;
  Thesaurus thesaurus;
  std::vector<std::string> keywords;  // sorted, unique

  // The shipped data/lexicons files, compiled in.
  static Lexicons defaults();
  // Reads pos_lexicon.tsv, pos_suffixes.tsv, gazetteer.tsv, sentiment.tsv,
  // thesaurus.tsv and keywords.txt from dir; every file must exist.
  static Lexicons load(const std::filesystem::path& dir);

  std::vector<std::string> entity_types() const;
  Json to_json() const;
};

struct SentimentResult {
  int positive_hits = 0;
  int negative_hits = 0;
  int score = 0;
  Polarity polarity = Polarity::Neutral;

  bool operator==(const SentimentResult&) const = default;
};

using SparseVector = std::vector<std::pair<std::uint32_t, double>>;  // sorted by index

double l2_norm(const SparseVector& v);

class Vocabulary {
 public:
  Vocabulary() = default;

  // Indices follow lexicographic term order. Throws DataError on an empty corpus.
  static Vocabulary fit(const std::vector<std::vector<std::string>>& documents);

  std::optional<std::uint32_t> index(const std::string& term) const;
  std::size_t size() const { return terms_.size(); }
  const std::vector<std::string>& terms() const { return terms_; }
  std::size_t document_frequency(std::uint32_t index) const { return document_frequency_[index]; }
  std::size_t document_frequency(const std::string& term) const;
  std::size_t document_count() const { return document_count_; }

  // ln((1 + N) / (1 + df)) + 1
  double idf(std::uint32_t index) const;

  Json to_json() const;
  static Vocabulary from_json(const Json& j);
  std::string hash() const;

 private:
  std::vector<std::string> terms_;
  std::map<std::string, std::uint32_t> index_;
  std::vector<std::size_t> document_frequency_;
  std::size_t document_count_ = 0;
};

std::vector<std::pair<std::string, PosTag>> pos_tag(const std::vector<std::string>& tokens, const PosLexicon& lexicon);

// Greedy longest match, left to right, non-overlapping.
std::vector<Entity> ner_extract(const std::vector<std::string>& tokens, const Gazetteer& gazetteer);

// Sorted by count descending, ties by token ascending; at most top_k entries.
std::vector<std::pair<std::string, std::size_t>> word_frequency(const std::vector<std::string>& tokens,
                                                                std::size_t top_k);

SentimentResult sentiment(const std::vector<std::string>& tokens, const SentimentLexicon& lexicon);

// Raw term count times smoothed idf, then L2-normalized. Out-of-vocabulary
// tokens are ignored.
SparseVector tfidf_transform(const std::vector<std::string>& tokens, const Vocabulary& vocab);

// Exact-match lookup; never returns the query itself.
std::vector<std::string> synonyms_lookup(const std::string& token, const Thesaurus& thesaurus);

struct FeatureBundle {
  UtteranceKey source;
  std::vector<std::pair<std::string, PosTag>> pos_tags;
  std::vector<Entity> entities;
  std::map<std::string, std::size_t> word_freq;
  std::map<std::string, std::size_t> verb_freq;
  std::map<std::string, std::size_t> keyword_freq;
  std::map<std::string, std::vector<std::string>> synonyms;
  SentimentResult sentiment;
  SparseVector tfidf;

  bool operator==(const FeatureBundle&) const = default;
};

// Sub-extractors run on the kept tokens; TF-IDF and verb frequency use the
// aligned lemmas.
FeatureBundle extract_features(const CleanUtterance& clean, const Vocabulary& vocab, const Lexicons& lexicons);

Json to_json(const FeatureBundle& b);
FeatureBundle feature_bundle_from_json(const Json& j);

}  // namespace intentpipe
