#pragma once

#include <string>
#include <string_view>

namespace audit {

/// Lowercase hex SHA-256 of `data`. All content addresses in the toolkit
/// (window ids, query hashes, prompt hashes) are derived from this.
std::string sha256_hex(std::string_view data);

}  // namespace audit
