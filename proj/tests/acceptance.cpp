// Acceptance driver: runs every registered experiment with default settings,
// re-checks the pinned tolerances from the emitted tables and prints one
// PASS/FAIL line per criterion. Exit status is nonzero if any line fails.

#include "gyrokit/harness.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <functional>
#include <map>

using namespace gyrokit;

namespace {

struct Run {
  ExperimentResult result;
  double seconds = 0.0;
  std::string csv;
};

Run timed(const std::string& name) {
  const auto t0 = std::chrono::steady_clock::now();
  Run r;
  r.result = run_experiment(name, {});
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.csv = r.result.table.to_csv();
  return r;
}

double footer_real(const ResultTable& t, const std::string& key) {
  for (const auto& [k, v] : t.footer)
    if (k == key) return std::stod(v);
  throw std::runtime_error("missing footer " + key);
}

std::size_t column(const ResultTable& t, const std::string& name) {
  for (std::size_t i = 0; i < t.columns.size(); ++i)
    if (t.columns[i] == name) return i;
  throw std::runtime_error("missing column " + name);
}

bool in_range(double v, double lo, double hi) { return v >= lo && v <= hi; }

struct Verdict {
  bool ok = true;
  std::string detail;
  void require(bool cond, const std::string& what) {
    if (!cond) ok = false;
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

}  // namespace

int main() {
  std::map<std::string, Run> runs;
  for (const auto& e : experiments()) runs[e.name] = timed(e.name);

  int failed = 0;
  auto report = [&](int id, const std::string& exp, double limit_s, const std::function<void(const ResultTable&, Verdict&)>& body) {
    Verdict v;
    const Run& run = runs.at(exp);
    try {
      body(run.result.table, v);
    } catch (const std::exception& err) {
      v.require(false, err.what());
    }
    v.require(run.seconds <= limit_s, fmt::format("runtime {:.2f}s (limit {}s)", run.seconds, limit_s));
    if (!v.ok) ++failed;
    fmt::print("criterion {:2d} [{}]: {} {}\n", id, exp, v.ok ? "PASS" : "FAIL", v.detail);
  };

  report(1, "converge-fixed", 120.0, [](const ResultTable& t, Verdict& v) {
    const double sx = footer_real(t, "slope_x"), sxi = footer_real(t, "slope_xi");
    v.require(in_range(sx, 1.7, 2.3), fmt::format("slope_x {:.4f} in [1.7, 2.3]", sx));
    v.require(in_range(sxi, 0.7, 1.3), fmt::format("slope_xi {:.4f} in [0.7, 1.3]", sxi));
  });

  report(2, "converge-general", 300.0, [](const ResultTable& t, Verdict& v) {
    const double su = footer_real(t, "slope_u"), st = footer_real(t, "slope_theta");
    v.require(in_range(su, 1.6, 2.4), fmt::format("slope_u {:.4f} in [1.6, 2.4]", su));
    v.require(in_range(st, 0.6, 1.4), fmt::format("slope_theta {:.4f} in [0.6, 1.4]", st));
  });

  report(3, "oracle-homogeneous", 10.0, [](const ResultTable& t, Verdict& v) {
    const std::size_t cx = column(t, "err_x"), cxi = column(t, "err_xi");
    double worst = 0.0;
    for (const auto& row : t.rows) worst = std::max({worst, row[cx], row[cxi]});
    v.require(!t.rows.empty() && worst <= 1e-8, fmt::format("max error {:.3e} <= 1e-8", worst));
  });

  report(4, "volume", 30.0, [](const ResultTable& t, Verdict& v) {
    const std::size_t q = column(t, "quantity"), val = column(t, "value");
    double drift = 0.0, det = 0.0;
    for (const auto& row : t.rows) {
      double& worst = row[q] == 0.0 ? drift : det;
      worst = std::max(worst, row[val]);
    }
    v.require(drift <= 1e-10, fmt::format("norm drift {:.3e} <= 1e-10", drift));
    v.require(det <= 1e-6, fmt::format("|det - 1| {:.3e} <= 1e-6", det));
  });

  report(5, "symbols", 10.0, [](const ResultTable& t, Verdict& v) {
    bool bounds = t.rows.size() == 3;
    double dev = 0.0;
    for (const auto& r : t.rows) {
      bounds = bounds && r[1] <= r[3] && r[4] <= r[6];
      dev = std::max({dev, std::abs(r[1] - r[2]), std::abs(r[4] - r[5])});
    }
    v.require(bounds, "sups below the closed-form bounds for R in {0.5, 1, 2}");
    v.require(dev <= 1e-3, fmt::format("max |sup - sharp| {:.3e} <= 1e-3", dev));
  });

  report(6, "shell", 10.0, [](const ResultTable& t, Verdict& v) {
    double unit = 0.0, odd = 0.0;
    for (const auto& r : t.rows) {
      if (r[0] == 0.0) unit = std::max(unit, r[4]);
      if (r[0] == 1.0) odd = std::max(odd, r[4]);
    }
    v.require(unit <= 1e-6, fmt::format("unit case rel error {:.3e} <= 1e-6", unit));
    v.require(odd <= 1e-10, fmt::format("odd case {:.3e} <= 1e-10", odd));
  });

  report(7, "transfer-identity", 60.0, [](const ResultTable& t, Verdict& v) {
    const std::size_t rel = column(t, "rel_diff"), abs = column(t, "abs_diff");
    v.require(t.rows.size() == 3, "three cases");
    v.require(t.rows.at(0)[rel] <= 1e-4, fmt::format("fixed-direction rel diff {:.3e} <= 1e-4", t.rows[0][rel]));
    v.require(t.rows.at(2)[abs] <= 1e-10, fmt::format("theta-independent {:.3e} <= 1e-10", t.rows[2][abs]));
  });

  report(8, "osc-scaling", 120.0, [](const ResultTable& t, Verdict& v) {
    double dev = 0.0;
    bool bound = true;
    int closed = 0;
    for (const auto& r : t.rows)
      if (r[0] == 0.0) {
        ++closed;
        dev = std::max(dev, std::abs(r[3] - r[4]));
        bound = bound && r[3] <= r[4] + 1e-12;
      }
    const double s = footer_real(t, "slope_osc");
    v.require(closed > 0 && bound && dev <= 1e-12, fmt::format("closed form |I| = 2eps<xi>/|n| within {:.1e}", dev));
    v.require(in_range(s, 0.7, 1.3), fmt::format("slope {:.4f} in [0.7, 1.3]", s));
  });

  report(9, "prepared-vs-ill", 120.0, [](const ResultTable& t, Verdict& v) {
    const std::size_t res = column(t, "residual_max");
    double worst = 0.0;
    for (const auto& r : t.rows) worst = std::max(worst, r[res]);
    const double si = footer_real(t, "slope_dt_ill"), sp = footer_real(t, "slope_dt_prepared");
    v.require(worst <= 1e-10, fmt::format("residual {:.3e} <= 1e-10", worst));
    v.require(std::abs(si + 1.0) <= 0.3, fmt::format("ill slope {:.4f} = -1 +- 0.3", si));
    v.require(std::abs(sp) <= 0.3, fmt::format("prepared slope {:.4f} = 0 +- 0.3", sp));
  });

  {
    Verdict v;
    std::size_t same = 0;
    for (const auto& e : experiments()) {
      const Run again = timed(e.name);
      if (again.csv == runs.at(e.name).csv)
        ++same;
      else
        v.require(false, e.name + " differs");
    }
    v.require(same == experiments().size(), fmt::format("{}/{} experiments byte-identical", same, experiments().size()));
    if (!v.ok) ++failed;
    fmt::print("criterion 10 [all]: {} {}\n", v.ok ? "PASS" : "FAIL", v.detail);
  }
  return failed == 0 ? 0 : 1;
}
