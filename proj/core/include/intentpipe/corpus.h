#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "intentpipe/io.h"

namespace intentpipe {

enum class Actor { User, Agent };

// Identifies one utterance across pipeline artifacts.
struct UtteranceKey {
  std::string conversation_id;
  std::string utterance_id;

  auto operator<=>(const UtteranceKey&) const = default;
  bool operator==(const UtteranceKey&) const = default;
};

std::string to_string(const UtteranceKey& k);

std::string_view to_string(Actor a);
std::optional<Actor> parse_actor(std::string_view s);

struct Utterance {
  std::string utterance_id;
  std::size_t position = 0;  // 0-based, contiguous within the conversation
  Actor actor = Actor::User;
  std::string actor_identity;  // user id when mapped, otherwise the actor type
  std::string text;            // raw, unmodified
  std::vector<std::string> raw_tags;  // uppercased, deduplicated, source order
  bool is_answer = false;
  std::int64_t vote = 0;

  bool operator==(const Utterance&) const = default;
};

struct Conversation {
  std::string conversation_id;
  std::string title;
  std::string category;
  std::string timestamp;  // opaque, preserved verbatim
  std::vector<Utterance> utterances;
  std::size_t participant_count = 0;

  bool operator==(const Conversation&) const = default;
};

// Maps logical field names to dotted key paths inside a conversation entry
// (title, category, timestamp, utterances) or inside an utterance object
// (id, text, actor, position, tags, is_answer, vote, user). An empty path
// means the field is not present in this layout.
struct FieldMapConfig {
  std::string id = "id";
  std::string title = "title";
  std::string category = "category";
  std::string timestamp = "dialog_time";
  std::string utterances = "utterances";
  std::string text = "utterance";
  std::string actor = "actor_type";
  std::string position = "utterance_pos";
  std::string tags = "tags";
  std::string is_answer = "is_answer";
  std::string vote = "vote";
  std::string user = "user_id";

  // The public MSDialog-Intent layout.
  static FieldMapConfig msdialog() { return {}; }
  // The layout written by serialize_corpus for internal artifacts.
  static FieldMapConfig canonical();

  static FieldMapConfig from_json(const Json& j);
  static FieldMapConfig load(const std::filesystem::path& path);
  Json to_json() const;
};

struct IngestDiagnostic {
  enum class Kind { Skipped, Repaired };
  Kind kind = Kind::Skipped;
  std::string conversation_id;
  std::string reason;  // e.g. "missing field: text"
  std::string detail;  // locates the offending utterance, when there is one
};

struct IngestResult {
  std::vector<Conversation> conversations;
  std::vector<IngestDiagnostic> diagnostics;
  std::size_t entry_count = 0;  // top-level entries seen in the source

  std::size_t skipped_count() const;
};

// Parses a JSON object keyed by conversation id. Throws ParseError (with byte
// offset) for a malformed document. Records with a missing required field
// (utterances, text, actor, or a mapped position) are skipped with a
// diagnostic; missing optional fields are defaulted with a Repaired diagnostic.
IngestResult ingest_corpus(std::string_view source, const FieldMapConfig& field_map);

// Inverse of ingest_corpus for accepted records: writes the corpus back in
// the layout described by field_map.
Json serialize_corpus(const std::vector<Conversation>& corpus, const FieldMapConfig& field_map);

// Splits on ASCII whitespace, uppercases, collapses duplicates.
std::vector<std::string> parse_tags(std::string_view raw);

enum class ValidationRule { MinTurns, MaxTurns, MinParticipants, MaxParticipants, RequireAnswer };

std::string_view to_string(ValidationRule r);

struct ValidationRules {
  std::size_t min_turns = 3;
  std::size_t max_turns = 10;
  std::size_t min_participants = 2;
  std::size_t max_participants = 4;
  bool require_answer = true;
};

struct Violation {
  ValidationRule rule;
  std::string message;  // e.g. "turns > 10"
};

struct ValidationVerdict {
  std::vector<Violation> violations;
  bool valid() const { return violations.empty(); }
};

ValidationVerdict validate_conversation(const Conversation& c, const ValidationRules& rules = {});

struct CorpusStats {
  std::size_t conversation_count = 0;
  std::size_t utterance_count = 0;
  std::map<std::size_t, std::size_t> turn_histogram;  // turns -> conversations
  std::map<std::string, std::size_t> tag_vocabulary;  // tag -> occurrences
  std::map<std::string, std::size_t> actor_counts;
  std::size_t untagged_utterance_count = 0;
  std::size_t valid_count = 0;
  std::size_t invalid_count = 0;
  std::map<std::string, std::size_t> violation_counts;  // rule -> conversations violating it
};

// Throws DataError("empty corpus") on an empty input.
CorpusStats corpus_stats(const std::vector<Conversation>& corpus, const ValidationRules& rules = {});

Json to_json(const CorpusStats& stats);
Json to_json(const IngestDiagnostic& d);

}  // namespace intentpipe
