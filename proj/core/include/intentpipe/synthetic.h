#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "intentpipe/io.h"
#include "intentpipe/taxonomy.h"

namespace intentpipe {

// Separable toy corpus in the MSDialog layout: every utterance carries one
// intent whose keywords come from a vocabulary no other intent uses.
struct SyntheticSpec {
  std::size_t conversations = 100;
  std::size_t keywords_min = 16;
  std::size_t keywords_max = 20;
  std::uint64_t seed = 7;
};

// Keyword vocabulary per consolidated category, in category order.
const std::array<std::vector<std::string>, kCategoryCount>& synthetic_vocabularies();

// Each conversation has five utterances, one per category, in random order.
Json synthetic_corpus(const SyntheticSpec& spec = {});

}  // namespace intentpipe
