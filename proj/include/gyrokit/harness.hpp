#pragma once

#include "gyrokit/field_models.hpp"

#include <functional>
#include <future>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gyrokit {

// Invalid experiment spec or config; the CLI maps it to exit code 2.
struct SpecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat `key = value` file with optional [section] headers. A lookup of `key`
// inside scope `s` tries `s.key` first, then the unsectioned `key`.
class Config {
 public:
  Config() = default;
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  Config scoped(const std::string& section) const;
  std::optional<std::string> raw(const std::string& key) const;

  double real(const std::string& key, double fallback) const;
  int integer(const std::string& key, int fallback) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  std::vector<double> reals(const std::string& key, const std::vector<double>& fallback) const;

  // Keys visible in the current scope (section keys with the prefix removed).
  std::vector<std::string> visible_keys() const;

 private:
  std::map<std::string, std::string> values_;
  std::string scope_;
};

// ε grid: nonempty, strictly decreasing, inside (0, 1].
void validate_eps_grid(const std::vector<double>& eps, const std::string& key = "eps");

struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::pair<std::string, std::string>> footer;

  void add_row(std::vector<double> row);
  void note(const std::string& key, double value);
  void note(const std::string& key, const std::string& value);
  // Header, rows with 17 significant digits, then `# key=value` lines. LF only.
  std::string to_csv() const;
};

std::string format_real(double v);

struct ExperimentResult {
  ResultTable table;
  std::vector<std::string> failures;

  bool passed() const { return failures.empty(); }
  // Records a failure naming the row when `ok` is false.
  void check(bool ok, std::size_t row, const std::string& what);
  void check(bool ok, const std::string& what);
};

struct Experiment {
  std::string name;
  std::string summary;
  std::vector<std::string> keys;  // accepted config keys
  std::function<ExperimentResult(const Config&)> run;
};

const std::vector<Experiment>& experiments();
const Experiment* find_experiment(const std::string& name);

// Scopes the config to the experiment's section, rejects unknown keys, runs
// it and appends the pass/fail footer. Throws SpecError on an unknown name.
ExperimentResult run_experiment(const std::string& name, const Config& config);

// Model from `model = constant | fixed | harmonic` and its parameters.
std::unique_ptr<MagneticFieldModel> make_model(const Config& config, const std::string& fallback_kind);
inline const std::vector<std::string> kModelKeys = {"model", "b0", "a", "k1", "c", "k2", "alpha", "beta"};

// f(0..n-1) evaluated concurrently, results in index order.
template <class F>
auto parallel_map(std::size_t n, F f) {
  using R = decltype(f(std::size_t{0}));
  std::vector<std::future<R>> futures;
  futures.reserve(n);
  for (std::size_t i = 0; i < n; ++i) futures.push_back(std::async(std::launch::async, f, i));
  std::vector<R> out;
  out.reserve(n);
  for (auto& fu : futures) out.push_back(fu.get());
  return out;
}

}  // namespace gyrokit
