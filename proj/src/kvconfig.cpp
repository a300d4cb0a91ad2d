#include "mxl/kvconfig.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mxl {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

KvConfig KvConfig::parse(const std::string& text) {
  KvConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config parse error at line " + std::to_string(line_no) +
                               ": expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error("config parse error at line " + std::to_string(line_no) +
                               ": empty key");
    cfg.kv_[key] = value;
  }
  return cfg;
}

KvConfig KvConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void KvConfig::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("config: cannot write " + path);
  out << dump();
}

std::string KvConfig::dump() const {
  std::ostringstream out;
  for (const auto& [k, v] : kv_) out << k << " = " << v << "\n";
  return out.str();
}

const std::string& KvConfig::str(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw std::runtime_error("config: missing field '" + key + "'");
  return it->second;
}

std::string KvConfig::str_or(const std::string& key, const std::string& def) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? def : it->second;
}

double KvConfig::num(const std::string& key) const {
  const std::string& v = str(key);
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw std::runtime_error("config: field '" + key + "' is not a number: '" + v + "'");
  }
}

double KvConfig::num_or(const std::string& key, double def) const {
  return has(key) ? num(key) : def;
}

std::int64_t KvConfig::integer(const std::string& key) const {
  const std::string& v = str(key);
  try {
    std::size_t pos = 0;
    const long long d = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw std::runtime_error("config: field '" + key + "' is not an integer: '" + v + "'");
  }
}

std::int64_t KvConfig::integer_or(const std::string& key, std::int64_t def) const {
  return has(key) ? integer(key) : def;
}

bool KvConfig::flag_or(const std::string& key, bool def) const {
  if (!has(key)) return def;
  const std::string& v = str(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::runtime_error("config: field '" + key + "' is not a boolean: '" + v + "'");
}

void KvConfig::set_num(const std::string& key, double v) { kv_[key] = fmt_double(v); }

void KvConfig::set_int(const std::string& key, std::int64_t v) { kv_[key] = std::to_string(v); }

void KvConfig::set_cvec(const std::string& key, const std::vector<std::complex<double>>& v) {
  std::ostringstream out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out << ";";
    out << fmt_double(v[i].real()) << "," << fmt_double(v[i].imag());
  }
  kv_[key] = out.str();
}

std::vector<std::complex<double>> KvConfig::cvec(const std::string& key) const {
  const std::string& s = str(key);
  std::vector<std::complex<double>> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ';')) {
    const auto comma = item.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error("config: field '" + key + "' has malformed complex entry");
    out.emplace_back(std::stod(item.substr(0, comma)), std::stod(item.substr(comma + 1)));
  }
  return out;
}

std::vector<std::string> KvConfig::keys_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& [k, v] : kv_)
    if (k.rfind(prefix, 0) == 0) out.push_back(k);
  return out;
}

}  // namespace mxl
