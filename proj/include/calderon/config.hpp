#ifndef CALDERON_CONFIG_HPP
#define CALDERON_CONFIG_HPP

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace calderon {

/// Configuration problems: malformed lines, unknown or missing keys, values
/// that fail validation. The runner maps these to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Line-oriented `section.key = value` config. `#` starts a comment, blank
/// lines are ignored, duplicate keys are errors. Every lookup marks its key
/// as consumed; fail_unconsumed() rejects leftovers so typos cannot pass
/// silently.
class RunConfig {
 public:
  static RunConfig parse_file(const std::string& path);
  static RunConfig parse_string(const std::string& text, const std::string& origin);

  bool has(const std::string& key) const;

  std::string require_string(const std::string& key);
  double require_real(const std::string& key);
  int require_int(const std::string& key);
  std::vector<double> require_reals(const std::string& key);  // comma-separated

  std::string get_string(const std::string& key, const std::string& dflt);
  double get_real(const std::string& key, double dflt);
  int get_int(const std::string& key, int dflt);

  /// Throws ConfigError naming the first key that no getter touched.
  void fail_unconsumed() const;

  const std::string& origin() const { return origin_; }

 private:
  struct Entry {
    std::string value;
    int line = 0;
    mutable bool consumed = false;
  };

  const Entry& find(const std::string& key);  // marks consumed
  [[noreturn]] void missing(const std::string& key) const;

  std::string origin_;
  std::map<std::string, Entry> entries_;
};

}  // namespace calderon

#endif
