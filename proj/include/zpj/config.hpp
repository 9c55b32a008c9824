#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace zpj {

// Ordered key=value text. Lines starting with '#' and blank lines are ignored.
class KeyValues {
 public:
  static KeyValues parse(const std::string& text, const std::string& origin = "<string>");
  static KeyValues load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  // Keys of `other` overwrite ours.
  void merge(const KeyValues& other);

  std::string get(const std::string& key, const std::string& fallback) const;
  int get_int(const std::string& key, int fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& items() const { return values_; }
  std::string str() const;
  std::uint64_t hash() const;

 private:
  std::map<std::string, std::string> values_;
};

std::string format_double(double v);
std::string hex64(std::uint64_t v);

}  // namespace zpj
