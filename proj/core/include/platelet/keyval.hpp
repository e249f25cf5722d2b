#pragma once

#include <string>
#include <utility>
#include <vector>

namespace platelet::io {

// `key = value` lines; '#' starts a comment; blank lines ignored.
// Order-preserving so configs echo back deterministically.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

KeyValues parse_keyvalues(const std::string& text);
KeyValues read_keyvalues(const std::string& path);
std::string keyvalues_to_text(const KeyValues& kv);

bool has_key(const KeyValues& kv, const std::string& key);
std::string get(const KeyValues& kv, const std::string& key);  // throws if absent
std::string get_or(const KeyValues& kv, const std::string& key, const std::string& fallback);

}  // namespace platelet::io
