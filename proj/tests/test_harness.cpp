#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gyrokit/harness.hpp"

#include <algorithm>
#include <atomic>

using namespace gyrokit;

namespace {

std::string footer(const ResultTable& t, const std::string& key) {
  for (const auto& [k, v] : t.footer)
    if (k == key) return v;
  return {};
}

}  // namespace

TEST_CASE("config parsing") {
  const Config c = Config::parse(
      "eps = 0.1, 0.01 ,1e-3\n"
      "name = fixed\n"
      "; comment\n"
      "[converge-fixed]\n"
      "t_final = 0.25\n"
      "samples = 11\n");
  CHECK(c.reals("eps", {}) == std::vector<double>{0.1, 0.01, 1e-3});
  CHECK(c.text("name", "") == "fixed");
  CHECK(c.real("t_final", 7.0) == 7.0);
  const Config s = c.scoped("converge-fixed");
  CHECK(s.real("t_final", 7.0) == 0.25);
  CHECK(s.integer("samples", 0) == 11);
  CHECK(s.reals("eps", {}).size() == 3);
  auto keys = s.visible_keys();
  std::sort(keys.begin(), keys.end());
  CHECK(keys == std::vector<std::string>{"eps", "name", "samples", "t_final"});
  CHECK(c.scoped("volume").visible_keys().size() == 2);
}

TEST_CASE("section keys shadow top-level keys") {
  const Config c = Config::parse("t = 1\n[a]\nt = 2\n");
  CHECK(c.scoped("a").real("t", 0.0) == 2.0);
  CHECK(c.scoped("b").real("t", 0.0) == 1.0);
}

TEST_CASE("bad values are spec errors") {
  const Config c = Config::parse("x = abc\ny = 1.5\nz = 1, , 2\nw = inf\n");
  CHECK_THROWS_AS(c.real("x", 0.0), SpecError);
  CHECK_THROWS_AS(c.integer("y", 0), SpecError);
  CHECK_THROWS_AS(c.reals("z", {}), SpecError);
  CHECK_THROWS_AS(c.real("w", 0.0), SpecError);
  CHECK_THROWS_AS(Config::parse("[a]\nx = 1\n[a]\ny = 2\n"), SpecError);
  CHECK_THROWS_AS(Config::load("/nonexistent/gyrokit.ini"), SpecError);
}

TEST_CASE("epsilon grid validation") {
  CHECK_NOTHROW(validate_eps_grid({1.0, 0.1, 0.01}));
  CHECK_THROWS_AS(validate_eps_grid({}), SpecError);
  CHECK_THROWS_AS(validate_eps_grid({0.1, 0.1}), SpecError);
  CHECK_THROWS_AS(validate_eps_grid({0.01, 0.1}), SpecError);
  CHECK_THROWS_AS(validate_eps_grid({2.0, 0.1}), SpecError);
  CHECK_THROWS_AS(validate_eps_grid({0.1, 0.0}), SpecError);
}

TEST_CASE("csv rendering") {
  ResultTable t;
  t.columns = {"a", "b"};
  t.add_row({0.1, -0.0});
  t.add_row({1.0 / 3.0, 1e-300});
  t.note("slope", 2.0);
  t.note("kind", "0=x 1=y");
  CHECK(t.to_csv() ==
        "a,b\n"
        "0.10000000000000001,0\n"
        "0.33333333333333331,1e-300\n"
        "# slope=2\n"
        "# kind=0=x 1=y\n");
  CHECK_THROWS_AS(t.add_row({1.0}), std::logic_error);
  CHECK(format_real(123456789.0) == "123456789");
}

TEST_CASE("failures name the row") {
  ExperimentResult r;
  r.check(true, 0, "fine");
  CHECK(r.passed());
  r.check(false, 3, "value 2 above 1");
  r.check(false, "slope off");
  CHECK(r.failures == std::vector<std::string>{"row 3: value 2 above 1", "slope off"});
}

TEST_CASE("experiment registry") {
  const std::vector<std::string> names = {"validate-field", "oracle-homogeneous", "converge-fixed", "converge-general",
                                          "symbols", "shell", "transfer-identity", "osc-scaling", "prepared-vs-ill",
                                          "volume", "diffeo-margin"};
  REQUIRE(experiments().size() == names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    CHECK(experiments()[i].name == names[i]);
    CHECK_FALSE(experiments()[i].summary.empty());
  }
  CHECK(find_experiment("volume") != nullptr);
  CHECK(find_experiment("nope") == nullptr);
}

TEST_CASE("run_experiment rejects bad specs") {
  CHECK_THROWS_AS(run_experiment("nope", {}), SpecError);
  CHECK_THROWS_AS(run_experiment("shell", Config::parse("[shell]\ntypo = 1\n")), SpecError);
  CHECK_THROWS_AS(run_experiment("shell", Config::parse("t = 1, -1\n")), SpecError);
  CHECK_THROWS_AS(run_experiment("volume", Config::parse("eps = 0.01, 0.1\n")), SpecError);
  CHECK_THROWS_AS(run_experiment("volume", Config::parse("model = dipole\n")), SpecError);
  // Keys of other experiments' sections are ignored.
  CHECK_NOTHROW(run_experiment("shell", Config::parse("[volume]\ndet_tol = 1\n")));
}

TEST_CASE("failing checks are reported, not thrown") {
  const ExperimentResult r = run_experiment("converge-fixed", Config::parse("slope_x_range = 2.5, 3\n"));
  REQUIRE(r.failures.size() == 1);
  CHECK(r.failures[0].rfind("slope_x", 0) == 0);
  CHECK(footer(r.table, "status") == "fail");
  CHECK(footer(r.table, "failures") == "1");
}

TEST_CASE("frozen experiment results") {
  const ExperimentResult f = run_experiment("converge-fixed", {});
  CHECK(f.passed());
  CHECK(footer(f.table, "slope_x") == "1.9940638589589337");
  CHECK(footer(f.table, "slope_xi") == "0.9999278871280376");
  const ExperimentResult g = run_experiment("converge-general", {});
  CHECK(footer(g.table, "slope_u") == "1.9966481764461099");
  CHECK(footer(g.table, "slope_theta") == "0.99380943111571218");
  const ExperimentResult p = run_experiment("prepared-vs-ill", {});
  CHECK(footer(p.table, "slope_dt_ill") == "-0.92457572265338661");
  CHECK(footer(p.table, "slope_dt_prepared") == "-0.021203842015024947");
}

TEST_CASE("runs are byte-identical") {
  for (const char* name : {"validate-field", "oracle-homogeneous", "symbols", "volume"}) {
    const std::string a = run_experiment(name, {}).table.to_csv();
    const std::string b = run_experiment(name, {}).table.to_csv();
    CHECK(a == b);
    CHECK(a.find('\r') == std::string::npos);
  }
}

TEST_CASE("model factory") {
  CHECK(make_model({}, "fixed")->kind() == FieldKind::fixed_direction);
  CHECK(make_model(Config::parse("model = constant\nb0 = 2\n"), "fixed")->b(Vec3::Zero()) == 2.0);
  CHECK(make_model(Config::parse("model = harmonic\n"), "fixed")->kind() == FieldKind::general_direction);
  CHECK_THROWS_AS(make_model(Config::parse("model = dipole\n"), "fixed"), SpecError);
}

TEST_CASE("parallel_map keeps index order") {
  std::atomic<int> calls{0};
  const auto v = parallel_map(16, [&](std::size_t i) {
    ++calls;
    return static_cast<int>(i * i);
  });
  CHECK(calls == 16);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(v[i] == static_cast<int>(i * i));
}
