#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace stand::config {

// Flat key=value document. `#` starts a comment; blank lines ignored.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse(const std::string& text);
KeyValues load_file(const std::string& path);

std::string get(const KeyValues& kv, const std::string& key, const std::string& fallback);
double get_real(const KeyValues& kv, const std::string& key, double fallback);
long get_int(const KeyValues& kv, const std::string& key, long fallback);
bool get_bool(const KeyValues& kv, const std::string& key, bool fallback);

// FNV-1a over the canonical "key=value\n" serialization (sorted keys).
std::uint64_t hash(const KeyValues& kv);
std::string hash_hex(const KeyValues& kv);

}  // namespace stand::config
