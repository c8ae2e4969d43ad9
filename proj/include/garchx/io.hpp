#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace garchx::io {

/// Flat view of a key-value config file. Keys inside an `[section]` are
/// reported as `section.key`. Later duplicates override earlier ones.
using KeyValues = std::map<std::string, std::string>;

KeyValues read_key_values(std::istream& in);
KeyValues read_key_values_file(const std::string& path);

double get_double(const KeyValues& kv, const std::string& key, double fallback);
long long get_int(const KeyValues& kv, const std::string& key, long long fallback);
std::string get_string(const KeyValues& kv, const std::string& key, const std::string& fallback);
/// Comma or whitespace separated list of reals; `start:step:stop` is expanded inclusively.
std::vector<double> get_doubles(const KeyValues& kv, const std::string& key,
                                const std::vector<double>& fallback);

std::vector<double> parse_doubles(const std::string& text);

/// {start, start + step, ..., stop}, built by index to avoid accumulated drift.
std::vector<double> linear_grid(double start, double step, double stop);

}  // namespace garchx::io
