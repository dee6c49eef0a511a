#pragma once

#include <string>
#include <string_view>

namespace agentdistill {

// Lowercase hex SHA-256 of the raw bytes.
std::string sha256_hex(std::string_view bytes);

// CRLF and lone CR become LF, trailing spaces/tabs are stripped from every
// line, and trailing blank lines are dropped.
std::string normalize_script(std::string_view script_text);

// sha256_hex(normalize_script(script_text))
std::string content_digest(std::string_view script_text);

std::string base64_encode(std::string_view bytes);

}  // namespace agentdistill
