#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mxl {

/// Flat key-value configuration / manifest: `section.key = value` lines,
/// `#` comments. Kept diff-friendly and dependency-free on purpose.
class KvConfig {
 public:
  static KvConfig parse(const std::string& text);
  static KvConfig load(const std::string& path);
  void save(const std::string& path) const;
  std::string dump() const;

  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  const std::string& str(const std::string& key) const;
  std::string str_or(const std::string& key, const std::string& def) const;
  double num(const std::string& key) const;
  double num_or(const std::string& key, double def) const;
  std::int64_t integer(const std::string& key) const;
  std::int64_t integer_or(const std::string& key, std::int64_t def) const;
  bool flag_or(const std::string& key, bool def) const;

  void set(const std::string& key, const std::string& value) { kv_[key] = value; }
  void set_num(const std::string& key, double v);
  void set_int(const std::string& key, std::int64_t v);
  void set_flag(const std::string& key, bool v) { kv_[key] = v ? "true" : "false"; }

  /// Complex vectors are stored as `re,im;re,im;...` with full precision.
  void set_cvec(const std::string& key, const std::vector<std::complex<double>>& v);
  std::vector<std::complex<double>> cvec(const std::string& key) const;

  std::vector<std::string> keys_with_prefix(const std::string& prefix) const;
  void erase(const std::string& key) { kv_.erase(key); }

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace mxl
