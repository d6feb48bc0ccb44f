#pragma once

#include <map>
#include <string>

namespace prbox::cli {

/// Output schemas keyed by file stem, generated from schemas/*.json at build time.
const std::map<std::string, std::string>& embedded_schemas();

} // namespace prbox::cli
