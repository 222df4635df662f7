#include "intentpipe/synthetic.h"

#include <algorithm>
#include <numeric>

#include "intentpipe/rng.h"

namespace intentpipe {

namespace {

// Chosen to be non-stopwords, lemma-stable and absent from the sentiment
// lexicon, so that only the keyword block separates the intents.
const std::array<std::vector<std::string>, kCategoryCount> kVocabularies = {{
    {"ask", "wonder", "query", "unclear", "puzzle", "inquire", "curious", "clarify", "question",
     "explain", "figure", "understand", "confuse", "know", "learn", "tell", "anyone", "somebody",
     "idea", "possible", "guidance", "advice", "howto", "suggest", "whether"},
    {"solution", "install", "configure", "reinstall", "navigate", "click", "select", "open", "enable",
     "disable", "restart", "download", "setting", "option", "menu", "panel", "step", "follow", "run",
     "command", "uninstall", "reboot", "registry", "driver", "toggle"},
    {"acknowledge", "noted", "attempted", "result", "outcome", "still", "attempt", "confirm", "report",
     "followup", "verify", "retest", "applied", "tested", "checked", "retried", "reply", "respond",
     "mention", "suggestion", "finally", "anyway", "meanwhile", "earlier", "indeed"},
    {"detail", "version", "build", "screenshot", "log", "code", "message", "specification", "laptop",
     "desktop", "model", "serial", "hardware", "processor", "memory", "attach", "output", "trace",
     "dump", "event", "viewer", "information", "additional", "context", "firmware"},
    {"hello", "hi", "regard", "cheer", "greeting", "bye", "cya", "morning", "evening", "weekend",
     "friend", "kindly", "sir", "madam", "hey", "lol", "joke", "haha", "okay", "ok", "sure", "greet",
     "yeah", "yep", "alright"},
}};

const std::vector<std::string> kPositive = {"great", "excellent", "perfect", "glad", "helpful", "awesome"};
const std::vector<std::string> kNegative = {"broken", "frustrated", "terrible", "stuck", "annoying", "wrong"};
const std::vector<std::string> kFiller = {"windows", "computer", "today", "really", "new"};

const std::array<std::vector<std::string>, kCategoryCount> kTags = {{
    {"OQ", "RQ", "CQ", "FQ"},
    {"PA"},
    {"PF", "NF"},
    {"FD", "IR"},
    {"GG", "JK", "O"},
}};

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& items) {
  return items[rng.below(items.size())];
}

}  // namespace

const std::array<std::vector<std::string>, kCategoryCount>& synthetic_vocabularies() { return kVocabularies; }

Json synthetic_corpus(const SyntheticSpec& spec) {
  Rng rng(spec.seed);
  Json corpus = Json::object();
  for (std::size_t c = 0; c < spec.conversations; ++c) {
    char id[16];
    std::snprintf(id, sizeof id, "syn%04zu", c + 1);
    const std::string user = std::string("user") + id;
    const std::string agent = "agent" + std::to_string(1 + rng.below(9));

    std::array<std::size_t, kCategoryCount> order;
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span<std::size_t>(order));

    Json utterances = Json::array();
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const auto cat = static_cast<Category>(order[pos]);
      const auto& vocab = kVocabularies[order[pos]];

      std::vector<std::string> pool = vocab;
      rng.shuffle(std::span<std::string>(pool));
      const std::size_t n = spec.keywords_min + rng.below(spec.keywords_max - spec.keywords_min + 1);
      std::vector<std::string> words(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n));

      std::string tag = pick(rng, kTags[order[pos]]);
      // 0 positive, 1 negative, 2 neutral
      std::size_t mood = rng.below(3);
      if (cat == Category::Feedback) mood = tag == "PF" ? 0 : 1;
      const std::size_t extras = mood == 2 ? 0 : 1 + rng.below(2);
      for (std::size_t k = 0; k < extras; ++k) words.push_back(pick(rng, mood == 0 ? kPositive : kNegative));
      const std::size_t fillers = 1 + rng.below(2);
      for (std::size_t k = 0; k < fillers; ++k) words.push_back(pick(rng, kFiller));
      rng.shuffle(std::span<std::string>(words));

      std::string text;
      for (const auto& w : words) text += (text.empty() ? "" : " ") + w;
      text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
      text += cat == Category::Question ? "?" : ".";

      const bool by_agent = cat == Category::Answer;
      utterances.push_back(Json{{"id", static_cast<std::int64_t>(pos + 1)},
                                {"utterance_pos", static_cast<std::int64_t>(pos + 1)},
                                {"actor_type", by_agent ? "Agent" : "User"},
                                {"user_id", by_agent ? agent : user},
                                {"utterance", text},
                                {"tags", tag},
                                {"is_answer", by_agent ? 1 : 0},
                                {"vote", static_cast<std::int64_t>(by_agent ? rng.below(3) : 0)}});
    }
    corpus[id] = Json{{"title", std::string("Synthetic dialogue ") + id},
                      {"category", "Synthetic"},
                      {"dialog_time", "2020-01-01T00:00:00"},
                      {"utterances", utterances}};
  }
  return corpus;
}

}  // namespace intentpipe
