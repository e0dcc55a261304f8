#include "gyrokit/harness.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace gyrokit {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (trim(v.substr(used)).empty() && std::isfinite(d)) return d;
  } catch (const std::exception&) {
  }
  throw SpecError(fmt::format("config key '{}': '{}' is not a finite number", key, v));
}

}  // namespace

Config Config::parse(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw SpecError(fmt::format("config parse error: {}", e.message()));
  }
  Config c;
  for (const auto& [k, node] : tree) {
    if (node.empty()) {
      c.values_[k] = trim(node.data());
      continue;
    }
    for (const auto& [kk, leaf] : node) {
      if (!leaf.empty()) throw SpecError(fmt::format("config: nested section under [{}]", k));
      c.values_[k + "." + kk] = trim(leaf.data());
    }
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError(fmt::format("cannot read config file '{}'", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

Config Config::scoped(const std::string& section) const {
  Config c = *this;
  c.scope_ = section;
  return c;
}

std::optional<std::string> Config::raw(const std::string& key) const {
  if (!scope_.empty()) {
    if (auto it = values_.find(scope_ + "." + key); it != values_.end()) return it->second;
  }
  if (auto it = values_.find(key); it != values_.end()) return it->second;
  return std::nullopt;
}

double Config::real(const std::string& key, double fallback) const {
  const auto v = raw(key);
  return v ? parse_real(key, *v) : fallback;
}

int Config::integer(const std::string& key, int fallback) const {
  const auto v = raw(key);
  if (!v) return fallback;
  const double d = parse_real(key, *v);
  if (d != std::floor(d) || std::abs(d) > 1e9) throw SpecError(fmt::format("config key '{}': '{}' is not an integer", key, *v));
  return static_cast<int>(d);
}

std::string Config::text(const std::string& key, const std::string& fallback) const { return raw(key).value_or(fallback); }

std::vector<double> Config::reals(const std::string& key, const std::vector<double>& fallback) const {
  const auto v = raw(key);
  if (!v) return fallback;
  std::vector<double> out;
  std::stringstream ss(*v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_real(key, trim(item)));
  if (out.empty()) throw SpecError(fmt::format("config key '{}': empty list", key));
  return out;
}

std::vector<std::string> Config::visible_keys() const {
  std::vector<std::string> keys;
  for (const auto& [k, v] : values_) {
    const auto dot = k.find('.');
    if (dot == std::string::npos)
      keys.push_back(k);
    else if (k.substr(0, dot) == scope_)
      keys.push_back(k.substr(dot + 1));
  }
  return keys;
}

void validate_eps_grid(const std::vector<double>& eps, const std::string& key) {
  if (eps.empty()) throw SpecError(fmt::format("'{}': empty epsilon grid", key));
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0.0 && eps[i] <= 1.0)) throw SpecError(fmt::format("'{}': value {} outside (0, 1]", key, eps[i]));
    if (i > 0 && !(eps[i] < eps[i - 1])) throw SpecError(fmt::format("'{}': grid must be strictly decreasing", key));
  }
}

std::string format_real(double v) {
  if (v == 0.0) return "0";  // drops the sign of −0
  return fmt::format("{:.17g}", v);
}

void ResultTable::add_row(std::vector<double> row) {
  if (row.size() != columns.size())
    throw std::logic_error(fmt::format("row has {} values for {} columns", row.size(), columns.size()));
  rows.push_back(std::move(row));
}

void ResultTable::note(const std::string& key, double value) { footer.emplace_back(key, format_real(value)); }
void ResultTable::note(const std::string& key, const std::string& value) { footer.emplace_back(key, value); }

std::string ResultTable::to_csv() const {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + format_real(row[i]);
    out += '\n';
  }
  for (const auto& [k, v] : footer) out += "# " + k + "=" + v + '\n';
  return out;
}

void ExperimentResult::check(bool ok, std::size_t row, const std::string& what) {
  if (!ok) failures.push_back(fmt::format("row {}: {}", row, what));
}

void ExperimentResult::check(bool ok, const std::string& what) {
  if (!ok) failures.push_back(what);
}

const Experiment* find_experiment(const std::string& name) {
  for (const auto& e : experiments())
    if (e.name == name) return &e;
  return nullptr;
}

ExperimentResult run_experiment(const std::string& name, const Config& config) {
  const Experiment* e = find_experiment(name);
  if (!e) throw SpecError(fmt::format("unknown experiment '{}' (see --list)", name));
  const Config scoped = config.scoped(name);
  const std::set<std::string> known(e->keys.begin(), e->keys.end());
  for (const auto& k : scoped.visible_keys())
    if (!known.count(k)) throw SpecError(fmt::format("experiment '{}' does not accept config key '{}'", name, k));
  ExperimentResult r;
  try {
    r = e->run(scoped);
  } catch (const DomainError& err) {
    throw SpecError(err.what());
  }
  r.table.note("failures", static_cast<double>(r.failures.size()));
  r.table.note("status", r.passed() ? "pass" : "fail");
  return r;
}

std::unique_ptr<MagneticFieldModel> make_model(const Config& c, const std::string& fallback_kind) {
  const std::string kind = c.text("model", fallback_kind);
  if (kind == "constant") return std::make_unique<ConstantField>(Vec3(0.0, 0.0, c.real("b0", 1.0)));
  if (kind == "fixed") {
    FixedDirectionField::Params p;
    p.b0 = c.real("b0", p.b0);
    p.a = c.real("a", p.a);
    p.k1 = c.real("k1", p.k1);
    p.c = c.real("c", p.c);
    p.k2 = c.real("k2", p.k2);
    return std::make_unique<FixedDirectionField>(p);
  }
  if (kind == "harmonic") {
    HarmonicField::Params p;
    p.alpha = c.real("alpha", p.alpha);
    p.beta = c.real("beta", p.beta);
    return std::make_unique<HarmonicField>(p);
  }
  throw SpecError(fmt::format("unknown model '{}' (constant, fixed, harmonic)", kind));
}

}  // namespace gyrokit
