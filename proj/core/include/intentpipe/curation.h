#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "intentpipe/corpus.h"
#include "intentpipe/io.h"

namespace intentpipe {

// One normalization step. Patterns use Perl syntax (Boost.Regex) over UTF-8
// bytes and are compiled when the config is built, so an invalid pattern is a
// ConfigError at load time. The replacement is literal text.
class NormalizationPattern {
 public:
  NormalizationPattern(std::string pattern, std::string replacement);

  const std::string& pattern() const { return pattern_; }
  const std::string& replacement() const { return replacement_; }

  std::string apply(const std::string& text) const;

 private:
  struct Compiled;
  std::string pattern_;
  std::string replacement_;
  std::shared_ptr<const Compiled> compiled_;
};

struct SuffixRule {
  std::string suffix;
  std::string replacement;
  std::size_t min_stem_length = 1;  // bytes left after removing the suffix
};

struct CurationConfig {
  std::vector<NormalizationPattern> normalization_patterns;  // applied in order
  std::set<std::string> stopwords;
  std::map<std::string, std::string> lemma_exceptions;
  std::vector<SuffixRule> suffix_rules;  // first match wins

  // The shipped data/curation files, compiled in: code-block and URL
  // stripping, apostrophe folding, whitespace collapse; a 179-word English
  // stopword list; an irregular-form table; plural-stripping suffix rules.
  static CurationConfig defaults();

  // Sections that are absent stay empty. Relative *_file paths resolve
  // against base_dir.
  static CurationConfig from_json(const Json& j, const std::filesystem::path& base_dir = {});
  static CurationConfig load(const std::filesystem::path& path);

  // Fully inlined form (no file references); used for artifacts and hashing.
  Json to_json() const;
};

// NFC, lowercase, NFC again, then every pattern left to right.
std::string normalize(std::string_view text, const std::vector<NormalizationPattern>& patterns);

// Maximal runs of letters/digits; an ASCII apostrophe or hyphen is kept when
// it sits between two letters/digits ("won't", "sign-in").
std::vector<std::string> tokenize(std::string_view text);

// True when token is a non-empty string produced by the token grammar above.
bool is_valid_token(std::string_view token);

struct StopwordSplit {
  std::vector<std::string> kept;
  std::vector<std::pair<std::size_t, std::string>> removed;  // (position, token)
};

StopwordSplit remove_stopwords(const std::vector<std::string>& tokens, const std::set<std::string>& stopwords);

std::string lemmatize(const std::string& token, const CurationConfig& config);

struct CleanUtterance {
  UtteranceKey source;
  std::string normalized_text;
  std::vector<std::string> tokens;  // kept tokens, stopwords removed
  std::vector<std::string> lemmas;  // one per token before stopword removal
  std::vector<std::pair<std::size_t, std::string>> removed_stopwords;

  // Lemmas aligned with `tokens`.
  std::vector<std::string> kept_lemmas() const;
  // Token list before stopword removal.
  std::vector<std::string> all_tokens() const;

  bool operator==(const CleanUtterance&) const = default;
};

CleanUtterance curate_text(const UtteranceKey& source, std::string_view text, const CurationConfig& config);
CleanUtterance curate_utterance(const std::string& conversation_id, const Utterance& u,
                                const CurationConfig& config);

Json to_json(const CleanUtterance& c);
CleanUtterance clean_utterance_from_json(const Json& j);

}  // namespace intentpipe
