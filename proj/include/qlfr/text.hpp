#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace qlfr::text {

std::string trim(std::string_view s);

/// ASCII case fold; bytes >= 0x80 pass through unchanged.
std::string casefold(std::string_view s);

/// trim + casefold. The only normalization applied to label names.
std::string normalize_label(std::string_view s);

/// Joins two context fragments with ". ".
///
/// `left` is never modified, so the result always starts with it. When
/// `left` already ends in sentence punctuation the separator's period is
/// dropped to avoid "..".
std::string join_context(std::string_view left, std::string_view right);

/// Appends `sep` then `right` to `left`, collapsing the separator's leading
/// punctuation when `left` already ends with '.', '!' or '?'.
std::string join_with(std::string_view left, std::string_view sep, std::string_view right);

std::string join_context(const std::vector<std::string>& parts);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

bool contains(std::string_view haystack, std::string_view needle);

}  // namespace qlfr::text

namespace qlfr::text {

/// Current UTC time as "YYYY-MM-DDTHH:MM:SSZ".
std::string utc_timestamp();

}  // namespace qlfr::text
