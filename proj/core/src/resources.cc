#include "intentpipe/resources.h"

#include <stdexcept>

namespace intentpipe {

std::string_view require_resource(std::string_view name) {
  if (auto r = embedded_resource(name)) return *r;
  throw std::logic_error("missing embedded resource: " + std::string(name));
}

}  // namespace intentpipe
