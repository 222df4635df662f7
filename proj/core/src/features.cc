#include "intentpipe/features.h"

#include <algorithm>
#include <cmath>
#include <functional>

#include "intentpipe/error.h"
#include "intentpipe/resources.h"

namespace intentpipe {

namespace {

constexpr std::pair<PosTag, std::string_view> kPosNames[] = {
    {PosTag::Noun, "NOUN"}, {PosTag::Verb, "VERB"}, {PosTag::Adj, "ADJ"},  {PosTag::Adv, "ADV"},
    {PosTag::Det, "DET"},   {PosTag::Pron, "PRON"}, {PosTag::Num, "NUM"}, {PosTag::Other, "OTHER"},
};

bool all_digits(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::string join(const std::vector<std::string>& tokens, std::size_t begin, std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (i > begin) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

using FileReader = std::function<std::string(const std::string&)>;

Lexicons parse_lexicons(const FileReader& read) {
  Lexicons lex;
  for (const auto& row : parse_table(read("pos_lexicon.tsv"))) {
    auto tag = parse_pos_tag(row.value);
    if (!tag) throw ConfigError("pos_lexicon.tsv:" + std::to_string(row.line) + ": unknown tag '" + row.value + "'");
    lex.pos.words[row.key] = *tag;
  }
  for (const auto& row : parse_table(read("pos_suffixes.tsv"))) {
    auto tag = parse_pos_tag(row.value);
    if (!tag) throw ConfigError("pos_suffixes.tsv:" + std::to_string(row.line) + ": unknown tag '" + row.value + "'");
    lex.pos.suffix_rules.emplace_back(row.key, *tag);
  }
  for (const auto& row : parse_table(read("gazetteer.tsv"))) {
    if (row.value.empty()) throw ConfigError("gazetteer.tsv:" + std::to_string(row.line) + ": missing entity type");
    lex.gazetteer.add(row.key, row.value);
  }
  std::set<std::string> positive, negative;
  for (const auto& row : parse_table(read("sentiment.tsv"))) {
    auto p = parse_polarity(row.value);
    if (p == Polarity::Positive) {
      positive.insert(row.key);
    } else if (p == Polarity::Negative) {
      negative.insert(row.key);
    } else {
      throw ConfigError("sentiment.tsv:" + std::to_string(row.line) + ": expected positive or negative");
    }
  }
  lex.sentiment = SentimentLexicon(std::move(positive), std::move(negative));
  for (const auto& row : parse_table(read("thesaurus.tsv"))) {
    auto& list = lex.thesaurus[row.key];
    for (const auto& syn : split(row.value, ',')) {
      std::string s = trim(syn);
      if (!s.empty() && std::find(list.begin(), list.end(), s) == list.end()) list.push_back(std::move(s));
    }
  }
  std::set<std::string> keywords;
  for (auto& row : parse_table(read("keywords.txt"))) keywords.insert(std::move(row.key));
  lex.keywords.assign(keywords.begin(), keywords.end());
  return lex;
}

}  // namespace

std::string_view to_string(PosTag t) {
  for (const auto& [tag, name] : kPosNames) {
    if (tag == t) return name;
  }
  return "OTHER";
}

std::optional<PosTag> parse_pos_tag(std::string_view s) {
  for (const auto& [tag, name] : kPosNames) {
    if (name == s) return tag;
  }
  return std::nullopt;
}

std::string_view to_string(Polarity p) {
  switch (p) {
    case Polarity::Positive: return "positive";
    case Polarity::Negative: return "negative";
    case Polarity::Neutral: return "neutral";
  }
  return "neutral";
}

std::optional<Polarity> parse_polarity(std::string_view s) {
  if (s == "positive") return Polarity::Positive;
  if (s == "negative") return Polarity::Negative;
  if (s == "neutral") return Polarity::Neutral;
  return std::nullopt;
}

void Gazetteer::add(std::string_view surface, std::string entity_type) {
  const auto tokens = tokenize(normalize(surface, {}));
  if (tokens.empty()) throw ConfigError("gazetteer surface '" + std::string(surface) + "' has no tokens");
  max_tokens_ = std::max(max_tokens_, tokens.size());
  entries_[join(tokens, 0, tokens.size())] = std::move(entity_type);
}

std::optional<std::string> Gazetteer::find(const std::string& joined_tokens) const {
  auto it = entries_.find(joined_tokens);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::set<std::string> Gazetteer::entity_types() const {
  std::set<std::string> out;
  for (const auto& [surface, type] : entries_) out.insert(type);
  return out;
}

SentimentLexicon::SentimentLexicon(std::set<std::string> positive, std::set<std::string> negative)
    : positive_(std::move(positive)), negative_(std::move(negative)) {
  for (const auto& w : positive_) {
    if (negative_.count(w)) throw ConfigError("sentiment lexicon: '" + w + "' is both positive and negative");
  }
}

Lexicons Lexicons::defaults() {
  static const Lexicons lex =
      parse_lexicons([](const std::string& name) { return std::string(require_resource("lexicons/" + name)); });
  return lex;
}

Lexicons Lexicons::load(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ConfigError("lexicon directory not found: " + dir.string());
  return parse_lexicons([&](const std::string& name) { return read_file(dir / name); });
}

std::vector<std::string> Lexicons::entity_types() const {
  const auto types = gazetteer.entity_types();
  return {types.begin(), types.end()};
}

Json Lexicons::to_json() const {
  Json pos_words = Json::object();
  for (const auto& [w, t] : pos.words) pos_words[w] = std::string(to_string(t));
  Json suffixes = Json::array();
  for (const auto& [s, t] : pos.suffix_rules) suffixes.push_back(Json::array({s, std::string(to_string(t))}));
  Json gaz = Json::object();
  for (const auto& [s, t] : gazetteer.entries()) gaz[s] = t;
  Json thes = Json::object();
  for (const auto& [w, syns] : thesaurus) thes[w] = syns;
  return Json{{"pos_lexicon", pos_words},
              {"pos_suffixes", suffixes},
              {"gazetteer", gaz},
              {"sentiment_positive", std::vector<std::string>(sentiment.positive().begin(), sentiment.positive().end())},
              {"sentiment_negative", std::vector<std::string>(sentiment.negative().begin(), sentiment.negative().end())},
              {"thesaurus", thes},
              {"keywords", keywords}};
}

double l2_norm(const SparseVector& v) {
  double sum = 0.0;
  for (const auto& [i, w] : v) sum += w * w;
  return std::sqrt(sum);
}

Vocabulary Vocabulary::fit(const std::vector<std::vector<std::string>>& documents) {
  if (documents.empty()) throw DataError("cannot fit a vocabulary on an empty corpus");
  std::map<std::string, std::size_t> df;
  for (const auto& doc : documents) {
    const std::set<std::string> distinct(doc.begin(), doc.end());
    for (const auto& term : distinct) ++df[term];
  }
  Vocabulary v;
  v.document_count_ = documents.size();
  v.terms_.reserve(df.size());
  v.document_frequency_.reserve(df.size());
  for (const auto& [term, count] : df) {
    v.index_.emplace(term, static_cast<std::uint32_t>(v.terms_.size()));
    v.terms_.push_back(term);
    v.document_frequency_.push_back(count);
  }
  return v;
}

std::optional<std::uint32_t> Vocabulary::index(const std::string& term) const {
  auto it = index_.find(term);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Vocabulary::document_frequency(const std::string& term) const {
  auto i = index(term);
  return i ? document_frequency_[*i] : 0;
}

double Vocabulary::idf(std::uint32_t index) const {
  return std::log((1.0 + static_cast<double>(document_count_)) /
                  (1.0 + static_cast<double>(document_frequency_[index]))) +
         1.0;
}

Json Vocabulary::to_json() const {
  return Json{{"document_count", document_count_}, {"terms", terms_}, {"document_frequency", document_frequency_}};
}

Vocabulary Vocabulary::from_json(const Json& j) {
  Vocabulary v;
  try {
    v.document_count_ = j.at("document_count").get<std::size_t>();
    v.terms_ = j.at("terms").get<std::vector<std::string>>();
    v.document_frequency_ = j.at("document_frequency").get<std::vector<std::size_t>>();
  } catch (const Json::exception& e) {
    throw DataError(std::string("vocabulary: ") + e.what());
  }
  if (v.terms_.size() != v.document_frequency_.size()) throw DataError("vocabulary: length mismatch");
  for (std::size_t i = 0; i < v.terms_.size(); ++i) {
    if (v.document_frequency_[i] > v.document_count_) throw DataError("vocabulary: df exceeds document count");
    if (!v.index_.emplace(v.terms_[i], static_cast<std::uint32_t>(i)).second) {
      throw DataError("vocabulary: duplicate term '" + v.terms_[i] + "'");
    }
  }
  return v;
}

std::string Vocabulary::hash() const { return sha256_hex(to_json().dump()); }

std::vector<std::pair<std::string, PosTag>> pos_tag(const std::vector<std::string>& tokens, const PosLexicon& lexicon) {
  std::vector<std::pair<std::string, PosTag>> out;
  out.reserve(tokens.size());
  for (const auto& tok : tokens) {
    PosTag tag = PosTag::Noun;
    if (auto it = lexicon.words.find(tok); it != lexicon.words.end()) {
      tag = it->second;
    } else if (all_digits(tok)) {
      tag = PosTag::Num;
    } else {
      for (const auto& [suffix, t] : lexicon.suffix_rules) {
        if (tok.size() >= suffix.size() + 2 && tok.compare(tok.size() - suffix.size(), suffix.size(), suffix) == 0) {
          tag = t;
          break;
        }
      }
    }
    out.emplace_back(tok, tag);
  }
  return out;
}

std::vector<Entity> ner_extract(const std::vector<std::string>& tokens, const Gazetteer& gazetteer) {
  std::vector<Entity> out;
  std::size_t i = 0;
  while (i < tokens.size()) {
    const std::size_t longest = std::min(gazetteer.max_phrase_tokens(), tokens.size() - i);
    bool matched = false;
    for (std::size_t len = longest; len >= 1; --len) {
      std::string surface = join(tokens, i, i + len);
      if (auto type = gazetteer.find(surface)) {
        out.push_back({i, i + len, *type, std::move(surface)});
        i += len;
        matched = true;
        break;
      }
    }
    if (!matched) ++i;
  }
  return out;
}

std::vector<std::pair<std::string, std::size_t>> word_frequency(const std::vector<std::string>& tokens,
                                                                std::size_t top_k) {
  std::map<std::string, std::size_t> counts;
  for (const auto& t : tokens) ++counts[t];
  std::vector<std::pair<std::string, std::size_t>> out(counts.begin(), counts.end());
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (out.size() > top_k) out.resize(top_k);
  return out;
}

SentimentResult sentiment(const std::vector<std::string>& tokens, const SentimentLexicon& lexicon) {
  SentimentResult r;
  for (const auto& t : tokens) {
    if (lexicon.positive().count(t)) ++r.positive_hits;
    if (lexicon.negative().count(t)) ++r.negative_hits;
  }
  r.score = r.positive_hits - r.negative_hits;
  r.polarity = r.score > 0 ? Polarity::Positive : r.score < 0 ? Polarity::Negative : Polarity::Neutral;
  return r;
}

SparseVector tfidf_transform(const std::vector<std::string>& tokens, const Vocabulary& vocab) {
  std::map<std::uint32_t, double> tf;
  for (const auto& t : tokens) {
    if (auto i = vocab.index(t)) tf[*i] += 1.0;
  }
  SparseVector v;
  v.reserve(tf.size());
  for (const auto& [i, count] : tf) v.emplace_back(i, count * vocab.idf(i));
  const double norm = l2_norm(v);
  if (norm > 0.0) {
    for (auto& [i, w] : v) w /= norm;
  }
  return v;
}

std::vector<std::string> synonyms_lookup(const std::string& token, const Thesaurus& thesaurus) {
  auto it = thesaurus.find(token);
  if (it == thesaurus.end()) return {};
  std::vector<std::string> out;
  for (const auto& s : it->second) {
    if (s != token) out.push_back(s);
  }
  return out;
}

FeatureBundle extract_features(const CleanUtterance& clean, const Vocabulary& vocab, const Lexicons& lexicons) {
  FeatureBundle b;
  b.source = clean.source;
  const auto& tokens = clean.tokens;
  const auto lemmas = clean.kept_lemmas();

  b.pos_tags = pos_tag(tokens, lexicons.pos);
  b.entities = ner_extract(tokens, lexicons.gazetteer);
  for (const auto& t : tokens) ++b.word_freq[t];
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (b.pos_tags[i].second == PosTag::Verb) ++b.verb_freq[lemmas[i]];
  }
  for (const auto& t : tokens) {
    if (std::binary_search(lexicons.keywords.begin(), lexicons.keywords.end(), t)) ++b.keyword_freq[t];
  }
  for (const auto& [t, count] : b.word_freq) {
    auto syns = synonyms_lookup(t, lexicons.thesaurus);
    if (!syns.empty()) b.synonyms.emplace(t, std::move(syns));
  }
  b.sentiment = sentiment(tokens, lexicons.sentiment);
  b.tfidf = tfidf_transform(lemmas, vocab);
  return b;
}

namespace {

template <typename Map>
Json map_to_json(const Map& m) {
  Json out = Json::object();
  for (const auto& [k, v] : m) out[k] = v;
  return out;
}

}  // namespace

Json to_json(const FeatureBundle& b) {
  Json pos = Json::array();
  for (const auto& [tok, tag] : b.pos_tags) pos.push_back(Json::array({tok, std::string(to_string(tag))}));
  Json ents = Json::array();
  for (const auto& e : b.entities) {
    ents.push_back({{"start", e.span_start}, {"end", e.span_end}, {"type", e.entity_type}, {"surface", e.surface}});
  }
  Json tfidf = Json::array();
  for (const auto& [i, w] : b.tfidf) tfidf.push_back(Json::array({i, w}));
  return Json{{"conversation_id", b.source.conversation_id},
              {"utterance_id", b.source.utterance_id},
              {"pos_tags", pos},
              {"entities", ents},
              {"word_freq", map_to_json(b.word_freq)},
              {"verb_freq", map_to_json(b.verb_freq)},
              {"keyword_freq", map_to_json(b.keyword_freq)},
              {"synonyms", map_to_json(b.synonyms)},
              {"sentiment",
               {{"positive_hits", b.sentiment.positive_hits},
                {"negative_hits", b.sentiment.negative_hits},
                {"score", b.sentiment.score},
                {"polarity", std::string(to_string(b.sentiment.polarity))}}},
              {"tfidf", tfidf}};
}

FeatureBundle feature_bundle_from_json(const Json& j) {
  FeatureBundle b;
  try {
    b.source = {j.at("conversation_id").get<std::string>(), j.at("utterance_id").get<std::string>()};
    for (const auto& p : j.at("pos_tags")) {
      auto tag = parse_pos_tag(p.at(1).get<std::string>());
      if (!tag) throw DataError("feature bundle: unknown POS tag");
      b.pos_tags.emplace_back(p.at(0).get<std::string>(), *tag);
    }
    for (const auto& e : j.at("entities")) {
      b.entities.push_back({e.at("start").get<std::size_t>(), e.at("end").get<std::size_t>(),
                            e.at("type").get<std::string>(), e.at("surface").get<std::string>()});
    }
    for (const auto& [k, v] : j.at("word_freq").items()) b.word_freq[k] = v.get<std::size_t>();
    for (const auto& [k, v] : j.at("verb_freq").items()) b.verb_freq[k] = v.get<std::size_t>();
    for (const auto& [k, v] : j.at("keyword_freq").items()) b.keyword_freq[k] = v.get<std::size_t>();
    for (const auto& [k, v] : j.at("synonyms").items()) b.synonyms[k] = v.get<std::vector<std::string>>();
    const auto& s = j.at("sentiment");
    b.sentiment.positive_hits = s.at("positive_hits").get<int>();
    b.sentiment.negative_hits = s.at("negative_hits").get<int>();
    b.sentiment.score = s.at("score").get<int>();
    auto pol = parse_polarity(s.at("polarity").get<std::string>());
    if (!pol) throw DataError("feature bundle: unknown polarity");
    b.sentiment.polarity = *pol;
    for (const auto& p : j.at("tfidf")) b.tfidf.emplace_back(p.at(0).get<std::uint32_t>(), p.at(1).get<double>());
  } catch (const Json::exception& e) {
    throw DataError(std::string("feature bundle: ") + e.what());
  }
  return b;
}

}  // namespace intentpipe
