#pragma once

#include <cstdint>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace mgc {

// Flat key = value report; insertion order is kept and doubles carry 17 significant digits,
// so equal runs give byte-identical files.
class Report {
 public:
  void set(const std::string& key, double v) { put(key, fmt(v)); }
  void set(const std::string& key, bool v) { put(key, v ? "true" : "false"); }
  void set(const std::string& key, const std::string& v) { put(key, v); }
  void set(const std::string& key, const char* v) { put(key, v); }
  template <class I, std::enable_if_t<std::is_integral_v<I> && !std::is_same_v<I, bool>, int> = 0>
  void set(const std::string& key, I v) {
    put(key, std::to_string(v));
  }
  void set(const std::string& key, const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(v[i]);
    put(key, s);
  }

  const std::vector<std::pair<std::string, std::string>>& entries() const { return kv_; }
  std::string get(const std::string& key) const {
    for (const auto& [k, v] : kv_)
      if (k == key) return v;
    return {};
  }

  void write(std::ostream& os) const {
    for (const auto& [k, v] : kv_) os << k << " = " << v << "\n";
  }
  std::string str() const {
    std::ostringstream os;
    write(os);
    return os.str();
  }

  static std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
  }

 private:
  void put(const std::string& key, std::string v) {
    for (auto& kv : kv_)
      if (kv.first == key) {
        kv.second = std::move(v);
        return;
      }
    kv_.emplace_back(key, std::move(v));
  }
  std::vector<std::pair<std::string, std::string>> kv_;
};

}  // namespace mgc
