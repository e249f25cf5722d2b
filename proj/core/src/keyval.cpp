#include "platelet/keyval.hpp"

#include <sstream>
#include <stdexcept>

#include "platelet/io_util.hpp"

namespace platelet::io {

KeyValues parse_keyvalues(const std::string& text) {
    KeyValues kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(lineno) +
                                     ": expected 'key = value'");
        kv.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return kv;
}

KeyValues read_keyvalues(const std::string& path) {
    return parse_keyvalues(read_file(path));
}

std::string keyvalues_to_text(const KeyValues& kv) {
    std::string out;
    for (const auto& [k, v] : kv) {
        out += k;
        out += " = ";
        out += v;
        out += "\n";
    }
    return out;
}

bool has_key(const KeyValues& kv, const std::string& key) {
    for (const auto& [k, v] : kv)
        if (k == key) return true;
    return false;
}

std::string get(const KeyValues& kv, const std::string& key) {
    for (const auto& [k, v] : kv)
        if (k == key) return v;
    throw std::runtime_error("config: missing key '" + key + "'");
}

std::string get_or(const KeyValues& kv, const std::string& key, const std::string& fallback) {
    for (const auto& [k, v] : kv)
        if (k == key) return v;
    return fallback;
}

}  // namespace platelet::io
