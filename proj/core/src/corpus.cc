#include "intentpipe/corpus.h"

#include <algorithm>
#include <charconv>
#include <set>

#include "intentpipe/error.h"

namespace intentpipe {

namespace {

constexpr bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

const Json* lookup(const Json& object, std::string_view path) {
  if (path.empty()) return nullptr;
  const Json* cur = &object;
  for (const auto& key : split(path, '.')) {
    if (!cur->is_object()) return nullptr;
    auto it = cur->find(key);
    if (it == cur->end()) return nullptr;
    cur = &*it;
  }
  return cur->is_null() ? nullptr : cur;
}

void assign(Json& object, std::string_view path, Json value) {
  if (path.empty()) return;
  Json* cur = &object;
  const auto keys = split(path, '.');
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
    Json& next = (*cur)[keys[i]];
    if (!next.is_object()) next = Json::object();
    cur = &next;
  }
  (*cur)[keys.back()] = std::move(value);
}

std::optional<std::int64_t> as_integer(const Json& v) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d == static_cast<double>(static_cast<std::int64_t>(d))) return static_cast<std::int64_t>(d);
    return std::nullopt;
  }
  if (v.is_string()) {
    const std::string s = trim(v.get<std::string>());
    std::int64_t out = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec == std::errc() && ptr == s.data() + s.size() && !s.empty()) return out;
  }
  return std::nullopt;
}

std::optional<bool> as_bool(const Json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (auto i = as_integer(v)) return *i != 0;
  if (v.is_string()) {
    std::string s = trim(v.get<std::string>());
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "true" || s == "yes") return true;
    if (s == "false" || s == "no" || s.empty()) return false;
  }
  return std::nullopt;
}

std::optional<std::string> as_text(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number() || v.is_boolean()) return v.dump();
  return std::nullopt;
}

// Per-conversation parse failure; the conversation is skipped.
struct SkipRecord {
  std::string reason;
  std::string detail;
};

struct SourceUtterance {
  Utterance u;
  std::int64_t source_position = 0;
  std::size_t source_index = 0;
};

Conversation parse_conversation(const std::string& id, const Json& entry, const FieldMapConfig& fm,
                                std::vector<IngestDiagnostic>& repairs) {
  if (!entry.is_object()) throw SkipRecord{"entry is not an object", ""};

  const auto repair = [&](std::string reason, std::string detail = {}) {
    repairs.push_back({IngestDiagnostic::Kind::Repaired, id, std::move(reason), std::move(detail)});
  };
  const auto optional_text = [&](const std::string& path, const char* name) -> std::string {
    if (path.empty()) return {};
    const Json* v = lookup(entry, path);
    if (!v) {
      repair(std::string("missing field: ") + name);
      return {};
    }
    if (auto s = as_text(*v)) return *s;
    repair(std::string("invalid field: ") + name);
    return {};
  };

  Conversation c;
  c.conversation_id = id;
  c.title = optional_text(fm.title, "title");
  c.category = optional_text(fm.category, "category");
  c.timestamp = optional_text(fm.timestamp, "timestamp");

  const Json* utts = lookup(entry, fm.utterances);
  if (!utts) throw SkipRecord{"missing field: utterances", ""};
  if (!utts->is_array()) throw SkipRecord{"invalid field: utterances", ""};
  if (utts->empty()) throw SkipRecord{"no utterances", ""};

  std::vector<SourceUtterance> parsed;
  parsed.reserve(utts->size());
  for (std::size_t i = 0; i < utts->size(); ++i) {
    const Json& raw = (*utts)[i];
    const std::string where = "utterance " + std::to_string(i);
    if (!raw.is_object()) throw SkipRecord{"utterance is not an object", where};

    SourceUtterance su;
    su.source_index = i;
    Utterance& u = su.u;

    const Json* text = lookup(raw, fm.text);
    if (!text) throw SkipRecord{"missing field: text", where};
    if (!text->is_string()) throw SkipRecord{"invalid field: text", where};
    u.text = text->get<std::string>();

    const Json* actor = lookup(raw, fm.actor);
    if (!actor) throw SkipRecord{"missing field: actor", where};
    auto actor_value = actor->is_string() ? parse_actor(actor->get<std::string>()) : std::nullopt;
    if (!actor_value) throw SkipRecord{"invalid field: actor", where};
    u.actor = *actor_value;
    u.actor_identity = std::string(to_string(u.actor));

    if (!fm.position.empty()) {
      const Json* pos = lookup(raw, fm.position);
      if (!pos) throw SkipRecord{"missing field: position", where};
      auto p = as_integer(*pos);
      if (!p) throw SkipRecord{"invalid field: position", where};
      su.source_position = *p;
    } else {
      su.source_position = static_cast<std::int64_t>(i);
    }

    if (!fm.id.empty()) {
      const Json* uid = lookup(raw, fm.id);
      auto s = uid ? as_text(*uid) : std::nullopt;
      if (!s) {
        repair(uid ? "invalid field: id" : "missing field: id", where);
        u.utterance_id = std::to_string(i);
      } else {
        u.utterance_id = *s;
      }
    } else {
      u.utterance_id = std::to_string(i);
    }

    if (!fm.user.empty()) {
      const Json* user = lookup(raw, fm.user);
      auto s = user ? as_text(*user) : std::nullopt;
      if (s) {
        u.actor_identity = *s;
      } else {
        repair(user ? "invalid field: user" : "missing field: user", where);
      }
    }

    if (!fm.tags.empty()) {
      const Json* tags = lookup(raw, fm.tags);
      if (!tags) {
        repair("missing field: tags", where);
      } else if (tags->is_string()) {
        u.raw_tags = parse_tags(tags->get<std::string>());
      } else if (tags->is_array()) {
        std::string joined;
        for (const auto& t : *tags) {
          if (t.is_string()) joined += t.get<std::string>() + " ";
        }
        u.raw_tags = parse_tags(joined);
      } else {
        repair("invalid field: tags", where);
      }
    }

    if (!fm.is_answer.empty()) {
      const Json* v = lookup(raw, fm.is_answer);
      auto b = v ? as_bool(*v) : std::nullopt;
      if (b) {
        u.is_answer = *b;
      } else {
        repair(v ? "invalid field: is_answer" : "missing field: is_answer", where);
      }
    }

    if (!fm.vote.empty()) {
      const Json* v = lookup(raw, fm.vote);
      auto n = v ? as_integer(*v) : std::nullopt;
      if (n) {
        u.vote = *n;
      } else {
        repair(v ? "invalid field: vote" : "missing field: vote", where);
      }
    }

    parsed.push_back(std::move(su));
  }

  std::stable_sort(parsed.begin(), parsed.end(), [](const SourceUtterance& a, const SourceUtterance& b) {
    return a.source_position < b.source_position;
  });
  for (std::size_t i = 1; i < parsed.size(); ++i) {
    if (parsed[i].source_position == parsed[i - 1].source_position) {
      repair("duplicate position", "utterance " + std::to_string(parsed[i].source_index));
    }
  }

  std::set<std::string> utterance_ids;
  std::set<std::string> identities;
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    Utterance& u = parsed[i].u;
    u.position = i;
    if (!utterance_ids.insert(u.utterance_id).second) {
      throw SkipRecord{"duplicate utterance id", "utterance " + std::to_string(parsed[i].source_index)};
    }
    identities.insert(u.actor_identity);
    c.utterances.push_back(std::move(u));
  }
  c.participant_count = identities.size();
  return c;
}

}  // namespace

std::string to_string(const UtteranceKey& k) { return k.conversation_id + "/" + k.utterance_id; }

std::string_view to_string(Actor a) { return a == Actor::User ? "User" : "Agent"; }

std::optional<Actor> parse_actor(std::string_view s) {
  std::string lower(trim(s));
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "user") return Actor::User;
  if (lower == "agent") return Actor::Agent;
  return std::nullopt;
}

FieldMapConfig FieldMapConfig::canonical() {
  FieldMapConfig fm;
  fm.id = "id";
  fm.title = "title";
  fm.category = "category";
  fm.timestamp = "timestamp";
  fm.utterances = "utterances";
  fm.text = "text";
  fm.actor = "actor";
  fm.position = "position";
  fm.tags = "tags";
  fm.is_answer = "is_answer";
  fm.vote = "vote";
  fm.user = "user";
  return fm;
}

FieldMapConfig FieldMapConfig::from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("field map must be a JSON object");
  FieldMapConfig fm;
  const std::pair<const char*, std::string*> fields[] = {
      {"id", &fm.id},           {"title", &fm.title},     {"category", &fm.category},
      {"timestamp", &fm.timestamp}, {"utterances", &fm.utterances}, {"text", &fm.text},
      {"actor", &fm.actor},     {"position", &fm.position}, {"tags", &fm.tags},
      {"is_answer", &fm.is_answer}, {"vote", &fm.vote},   {"user", &fm.user},
  };
  for (const auto& [key, value] : j.items()) {
    auto it = std::find_if(std::begin(fields), std::end(fields),
                           [&](const auto& f) { return key == f.first; });
    if (it == std::end(fields)) throw ConfigError("field map: unknown logical field '" + key + "'");
    if (value.is_null()) {
      it->second->clear();
    } else if (value.is_string()) {
      *it->second = value.get<std::string>();
    } else {
      throw ConfigError("field map: '" + key + "' must be a string or null");
    }
  }
  for (const auto* required : {&fm.utterances, &fm.text, &fm.actor}) {
    if (required->empty()) throw ConfigError("field map: utterances, text and actor must be mapped");
  }
  return fm;
}

FieldMapConfig FieldMapConfig::load(const std::filesystem::path& path) {
  return from_json(read_json_file(path));
}

Json FieldMapConfig::to_json() const {
  const auto opt = [](const std::string& s) { return s.empty() ? Json(nullptr) : Json(s); };
  return Json{{"id", opt(id)},           {"title", opt(title)},       {"category", opt(category)},
              {"timestamp", opt(timestamp)}, {"utterances", utterances}, {"text", text},
              {"actor", actor},          {"position", opt(position)}, {"tags", opt(tags)},
              {"is_answer", opt(is_answer)}, {"vote", opt(vote)},     {"user", opt(user)}};
}

std::size_t IngestResult::skipped_count() const {
  return static_cast<std::size_t>(std::count_if(diagnostics.begin(), diagnostics.end(), [](const auto& d) {
    return d.kind == IngestDiagnostic::Kind::Skipped;
  }));
}

std::vector<std::string> parse_tags(std::string_view raw) {
  std::vector<std::string> tags;
  std::size_t i = 0;
  while (i < raw.size()) {
    while (i < raw.size() && is_ascii_space(raw[i])) ++i;
    std::size_t j = i;
    while (j < raw.size() && !is_ascii_space(raw[j])) ++j;
    if (j > i) {
      std::string tag(raw.substr(i, j - i));
      for (char& ch : tag) {
        if (ch >= 'a' && ch <= 'z') ch = static_cast<char>(ch - 'a' + 'A');
      }
      if (std::find(tags.begin(), tags.end(), tag) == tags.end()) tags.push_back(std::move(tag));
    }
    i = j;
  }
  return tags;
}

IngestResult ingest_corpus(std::string_view source, const FieldMapConfig& field_map) {
  Json doc;
  try {
    doc = Json::parse(source.begin(), source.end());
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("malformed corpus: ") + e.what(), e.byte);
  }
  if (!doc.is_object()) {
    throw ParseError("malformed corpus: top level must be an object keyed by conversation id", 0);
  }

  IngestResult result;
  result.entry_count = doc.size();
  for (const auto& [id, entry] : doc.items()) {
    std::vector<IngestDiagnostic> repairs;
    try {
      result.conversations.push_back(parse_conversation(id, entry, field_map, repairs));
      result.diagnostics.insert(result.diagnostics.end(), repairs.begin(), repairs.end());
    } catch (const SkipRecord& skip) {
      result.diagnostics.push_back({IngestDiagnostic::Kind::Skipped, id, skip.reason, skip.detail});
    }
  }
  return result;
}

Json serialize_corpus(const std::vector<Conversation>& corpus, const FieldMapConfig& fm) {
  Json doc = Json::object();
  for (const auto& c : corpus) {
    Json entry = Json::object();
    assign(entry, fm.title, c.title);
    assign(entry, fm.category, c.category);
    assign(entry, fm.timestamp, c.timestamp);
    Json utts = Json::array();
    for (const auto& u : c.utterances) {
      Json ju = Json::object();
      assign(ju, fm.id, u.utterance_id);
      assign(ju, fm.position, u.position);
      assign(ju, fm.actor, std::string(to_string(u.actor)));
      assign(ju, fm.user, u.actor_identity);
      assign(ju, fm.text, u.text);
      std::string tags;
      for (const auto& t : u.raw_tags) tags += (tags.empty() ? "" : " ") + t;
      assign(ju, fm.tags, tags);
      assign(ju, fm.is_answer, u.is_answer);
      assign(ju, fm.vote, u.vote);
      utts.push_back(std::move(ju));
    }
    assign(entry, fm.utterances, std::move(utts));
    doc[c.conversation_id] = std::move(entry);
  }
  return doc;
}

std::string_view to_string(ValidationRule r) {
  switch (r) {
    case ValidationRule::MinTurns: return "min_turns";
    case ValidationRule::MaxTurns: return "max_turns";
    case ValidationRule::MinParticipants: return "min_participants";
    case ValidationRule::MaxParticipants: return "max_participants";
    case ValidationRule::RequireAnswer: return "require_answer";
  }
  return "unknown";
}

ValidationVerdict validate_conversation(const Conversation& c, const ValidationRules& rules) {
  ValidationVerdict v;
  const std::size_t turns = c.utterances.size();
  if (turns < rules.min_turns) {
    v.violations.push_back({ValidationRule::MinTurns, "turns < " + std::to_string(rules.min_turns)});
  }
  if (turns > rules.max_turns) {
    v.violations.push_back({ValidationRule::MaxTurns, "turns > " + std::to_string(rules.max_turns)});
  }
  if (c.participant_count < rules.min_participants) {
    v.violations.push_back(
        {ValidationRule::MinParticipants, "participants < " + std::to_string(rules.min_participants)});
  }
  if (c.participant_count > rules.max_participants) {
    v.violations.push_back(
        {ValidationRule::MaxParticipants, "participants > " + std::to_string(rules.max_participants)});
  }
  if (rules.require_answer &&
      std::none_of(c.utterances.begin(), c.utterances.end(), [](const Utterance& u) { return u.is_answer; })) {
    v.violations.push_back({ValidationRule::RequireAnswer, "no answer"});
  }
  return v;
}

CorpusStats corpus_stats(const std::vector<Conversation>& corpus, const ValidationRules& rules) {
  if (corpus.empty()) throw DataError("empty corpus");
  CorpusStats s;
  s.conversation_count = corpus.size();
  for (const auto& c : corpus) {
    s.utterance_count += c.utterances.size();
    ++s.turn_histogram[c.utterances.size()];
    for (const auto& u : c.utterances) {
      ++s.actor_counts[std::string(to_string(u.actor))];
      if (u.raw_tags.empty()) ++s.untagged_utterance_count;
      for (const auto& t : u.raw_tags) ++s.tag_vocabulary[t];
    }
    const auto verdict = validate_conversation(c, rules);
    if (verdict.valid()) {
      ++s.valid_count;
    } else {
      ++s.invalid_count;
      for (const auto& v : verdict.violations) ++s.violation_counts[std::string(to_string(v.rule))];
    }
  }
  return s;
}

Json to_json(const CorpusStats& s) {
  Json hist = Json::object();
  for (const auto& [turns, count] : s.turn_histogram) hist[std::to_string(turns)] = count;
  Json tags = Json::object();
  for (const auto& [tag, count] : s.tag_vocabulary) tags[tag] = count;
  Json actors = Json::object();
  for (const auto& [actor, count] : s.actor_counts) actors[actor] = count;
  Json violations = Json::object();
  for (const auto& [rule, count] : s.violation_counts) violations[rule] = count;
  return Json{{"conversation_count", s.conversation_count},
              {"utterance_count", s.utterance_count},
              {"turn_histogram", hist},
              {"tag_vocabulary_size", s.tag_vocabulary.size()},
              {"tag_vocabulary", tags},
              {"actor_counts", actors},
              {"untagged_utterance_count", s.untagged_utterance_count},
              {"valid_count", s.valid_count},
              {"invalid_count", s.invalid_count},
              {"violation_counts", violations}};
}

Json to_json(const IngestDiagnostic& d) {
  return Json{{"kind", d.kind == IngestDiagnostic::Kind::Skipped ? "skipped" : "repaired"},
              {"conversation_id", d.conversation_id},
              {"reason", d.reason},
              {"detail", d.detail}};
}

}  // namespace intentpipe
