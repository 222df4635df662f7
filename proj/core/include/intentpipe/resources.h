#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace intentpipe {

// Default data files compiled into the library (paths relative to the
// repository's data/ directory, e.g. "curation/stopwords_en.txt").
std::optional<std::string_view> embedded_resource(std::string_view name);

// As above, throwing std::logic_error when the resource is missing.
std::string_view require_resource(std::string_view name);

}  // namespace intentpipe
