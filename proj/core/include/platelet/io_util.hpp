#pragma once

#include <string>
#include <vector>

namespace platelet::io {

// Shortest decimal form that round-trips the double exactly. Used by every
// writer so reports are byte-reproducible.
std::string fmt(double v);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

std::vector<std::string> split(const std::string& line, char sep);
std::string trim(const std::string& s);

double parse_double(const std::string& s);  // throws on garbage
long long parse_int(const std::string& s);

// FNV-1a over bytes; used for resume-manifest content hashes.
std::uint64_t content_hash(const std::string& bytes);
std::string hash_hex(std::uint64_t h);

}  // namespace platelet::io
