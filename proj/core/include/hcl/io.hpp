#pragma once

#include <string>

namespace hcl {

/// Writes to a temp file in the same directory, then renames into place.
void atomic_write(const std::string& path, const std::string& content);

}  // namespace hcl
