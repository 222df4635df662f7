#include "intentpipe/curation.h"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <functional>
#include <boost/regex.hpp>

#include "intentpipe/error.h"
#include "intentpipe/resources.h"

namespace intentpipe {

struct NormalizationPattern::Compiled {
  boost::regex re;
};

NormalizationPattern::NormalizationPattern(std::string pattern, std::string replacement)
    : pattern_(std::move(pattern)), replacement_(std::move(replacement)) {
  try {
    compiled_ = std::make_shared<const Compiled>(Compiled{boost::regex(pattern_, boost::regex::perl)});
  } catch (const boost::regex_error& e) {
    throw ConfigError("invalid normalization pattern '" + pattern_ + "': " + e.what());
  }
}

std::string NormalizationPattern::apply(const std::string& text) const {
  return boost::regex_replace(text, compiled_->re, replacement_,
                              boost::match_default | boost::regex_constants::format_literal);
}

namespace {

using FileReader = std::function<std::string(const std::string&)>;

std::string read_embedded_curation(const std::string& name) {
  return std::string(require_resource("curation/" + name));
}

void check_lemma_entry(const std::string& word, const std::string& lemma) {
  if (word.empty() || lemma.empty()) throw ConfigError("lemma exception entries must be non-empty");
}

CurationConfig parse_config(const Json& j, const FileReader& read) {
  if (!j.is_object()) throw ConfigError("curation config must be a JSON object");
  CurationConfig c;
  try {
    if (auto it = j.find("normalization_patterns"); it != j.end()) {
      for (const auto& p : *it) {
        c.normalization_patterns.emplace_back(p.at("pattern").get<std::string>(),
                                              p.value("replacement", std::string()));
      }
    }

    if (auto it = j.find("stopwords"); it != j.end()) {
      for (const auto& w : *it) c.stopwords.insert(w.get<std::string>());
    } else if (auto f = j.find("stopwords_file"); f != j.end()) {
      for (auto& row : parse_table(read(f->get<std::string>()))) c.stopwords.insert(std::move(row.key));
    }

    if (auto it = j.find("lemma_exceptions"); it != j.end()) {
      for (const auto& [w, l] : it->items()) {
        check_lemma_entry(w, l.get<std::string>());
        c.lemma_exceptions[w] = l.get<std::string>();
      }
    } else if (auto f = j.find("lemma_exceptions_file"); f != j.end()) {
      for (const auto& row : parse_table(read(f->get<std::string>()))) {
        check_lemma_entry(row.key, row.value);
        c.lemma_exceptions[row.key] = row.value;
      }
    }

    if (auto it = j.find("suffix_rules"); it != j.end()) {
      for (const auto& r : *it) {
        SuffixRule rule{r.at("suffix").get<std::string>(), r.value("replacement", std::string()),
                        r.value("min_stem_length", std::size_t{1})};
        if (rule.suffix.empty()) throw ConfigError("suffix rule with empty suffix");
        if (rule.min_stem_length == 0) throw ConfigError("suffix rule min_stem_length must be >= 1");
        c.suffix_rules.push_back(std::move(rule));
      }
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("curation config: ") + e.what());
  }
  return c;
}

}  // namespace

CurationConfig CurationConfig::defaults() {
  static const CurationConfig config =
      parse_config(Json::parse(require_resource("curation/curation.json")), read_embedded_curation);
  return config;
}

CurationConfig CurationConfig::from_json(const Json& j, const std::filesystem::path& base_dir) {
  return parse_config(j, [&](const std::string& name) {
    std::filesystem::path path(name);
    if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
    return read_file(path);
  });
}

CurationConfig CurationConfig::load(const std::filesystem::path& path) {
  return from_json(read_json_file(path), path.parent_path());
}

Json CurationConfig::to_json() const {
  Json patterns = Json::array();
  for (const auto& p : normalization_patterns) {
    patterns.push_back({{"pattern", p.pattern()}, {"replacement", p.replacement()}});
  }
  Json exceptions = Json::object();
  for (const auto& [w, l] : lemma_exceptions) exceptions[w] = l;
  Json rules = Json::array();
  for (const auto& r : suffix_rules) {
    rules.push_back({{"suffix", r.suffix}, {"replacement", r.replacement}, {"min_stem_length", r.min_stem_length}});
  }
  return Json{{"normalization_patterns", patterns},
              {"stopwords", Json(std::vector<std::string>(stopwords.begin(), stopwords.end()))},
              {"lemma_exceptions", exceptions},
              {"suffix_rules", rules}};
}

namespace {

std::string nfc_lower(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalizer unavailable");
  icu::UnicodeString us = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  icu::UnicodeString out = nfc->normalize(us, status);
  out.toLower(icu::Locale::getRoot());
  out = nfc->normalize(out, status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU normalization failed");
  std::string result;
  out.toUTF8String(result);
  return result;
}

std::string nfc(const std::string& text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
  icu::UnicodeString us = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  if (n->isNormalized(us, status) && U_SUCCESS(status)) return text;
  icu::UnicodeString out = n->normalize(us, status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU normalization failed");
  std::string result;
  out.toUTF8String(result);
  return result;
}

bool is_word_char(UChar32 c) { return c >= 0 && (u_isalpha(c) || u_isdigit(c)); }

}  // namespace

std::string normalize(std::string_view text, const std::vector<NormalizationPattern>& patterns) {
  std::string out = nfc_lower(text);
  for (const auto& p : patterns) out = p.apply(out);
  // A pattern may strip the base of a combining sequence; renormalize.
  return nfc(out);
}

std::vector<std::string> tokenize(std::string_view text) {
  struct CodePoint {
    UChar32 c;
    std::size_t begin, end;
  };
  std::vector<CodePoint> cps;
  const auto* bytes = reinterpret_cast<const uint8_t*>(text.data());
  const auto length = static_cast<int32_t>(text.size());
  for (int32_t i = 0; i < length;) {
    const int32_t start = i;
    UChar32 c;
    U8_NEXT(bytes, i, length, c);
    cps.push_back({c, static_cast<std::size_t>(start), static_cast<std::size_t>(i)});
  }

  std::vector<std::string> tokens;
  std::string current;
  for (std::size_t k = 0; k < cps.size(); ++k) {
    const UChar32 c = cps[k].c;
    const bool joiner = (c == '\'' || c == '-') && !current.empty() && k + 1 < cps.size() &&
                        is_word_char(cps[k + 1].c);
    if (is_word_char(c) || joiner) {
      current.append(text.substr(cps[k].begin, cps[k].end - cps[k].begin));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

bool is_valid_token(std::string_view token) {
  const auto t = tokenize(token);
  return t.size() == 1 && t.front() == token;
}

StopwordSplit remove_stopwords(const std::vector<std::string>& tokens, const std::set<std::string>& stopwords) {
  StopwordSplit out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (stopwords.count(tokens[i])) {
      out.removed.emplace_back(i, tokens[i]);
    } else {
      out.kept.push_back(tokens[i]);
    }
  }
  return out;
}

std::string lemmatize(const std::string& token, const CurationConfig& config) {
  if (auto it = config.lemma_exceptions.find(token); it != config.lemma_exceptions.end()) return it->second;
  for (const auto& rule : config.suffix_rules) {
    if (token.size() < rule.suffix.size()) continue;
    if (token.compare(token.size() - rule.suffix.size(), rule.suffix.size(), rule.suffix) != 0) continue;
    const std::size_t stem = token.size() - rule.suffix.size();
    if (stem < rule.min_stem_length || stem + rule.replacement.size() == 0) continue;
    return token.substr(0, stem) + rule.replacement;
  }
  return token;
}

std::vector<std::string> CleanUtterance::kept_lemmas() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  std::size_t r = 0;
  for (std::size_t i = 0; i < lemmas.size(); ++i) {
    if (r < removed_stopwords.size() && removed_stopwords[r].first == i) {
      ++r;
      continue;
    }
    out.push_back(lemmas[i]);
  }
  return out;
}

std::vector<std::string> CleanUtterance::all_tokens() const {
  std::vector<std::string> out;
  out.reserve(lemmas.size());
  std::size_t r = 0, k = 0;
  for (std::size_t i = 0; i < lemmas.size(); ++i) {
    if (r < removed_stopwords.size() && removed_stopwords[r].first == i) {
      out.push_back(removed_stopwords[r++].second);
    } else {
      out.push_back(tokens[k++]);
    }
  }
  return out;
}

CleanUtterance curate_text(const UtteranceKey& source, std::string_view text, const CurationConfig& config) {
  CleanUtterance out;
  out.source = source;
  out.normalized_text = normalize(text, config.normalization_patterns);
  const auto tokens = tokenize(out.normalized_text);
  out.lemmas.reserve(tokens.size());
  for (const auto& t : tokens) out.lemmas.push_back(lemmatize(t, config));
  auto split = remove_stopwords(tokens, config.stopwords);
  out.tokens = std::move(split.kept);
  out.removed_stopwords = std::move(split.removed);
  return out;
}

CleanUtterance curate_utterance(const std::string& conversation_id, const Utterance& u,
                                const CurationConfig& config) {
  return curate_text({conversation_id, u.utterance_id}, u.text, config);
}

Json to_json(const CleanUtterance& c) {
  Json removed = Json::array();
  for (const auto& [pos, tok] : c.removed_stopwords) removed.push_back(Json::array({pos, tok}));
  return Json{{"conversation_id", c.source.conversation_id},
              {"utterance_id", c.source.utterance_id},
              {"normalized_text", c.normalized_text},
              {"tokens", c.tokens},
              {"lemmas", c.lemmas},
              {"removed_stopwords", removed}};
}

CleanUtterance clean_utterance_from_json(const Json& j) {
  CleanUtterance c;
  try {
    c.source = {j.at("conversation_id").get<std::string>(), j.at("utterance_id").get<std::string>()};
    c.normalized_text = j.at("normalized_text").get<std::string>();
    c.tokens = j.at("tokens").get<std::vector<std::string>>();
    c.lemmas = j.at("lemmas").get<std::vector<std::string>>();
    for (const auto& r : j.at("removed_stopwords")) {
      c.removed_stopwords.emplace_back(r.at(0).get<std::size_t>(), r.at(1).get<std::string>());
    }
  } catch (const Json::exception& e) {
    throw DataError(std::string("clean utterance record: ") + e.what());
  }
  if (c.tokens.size() + c.removed_stopwords.size() != c.lemmas.size()) {
    throw DataError("clean utterance record: token/lemma counts disagree");
  }
  return c;
}

}  // namespace intentpipe
