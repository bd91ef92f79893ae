#include <doctest.h>

#include <cmath>
#include <sstream>

#include "savac/mc.hpp"

using namespace savac;

namespace {

ExperimentPlan small_plan() {
  ExperimentPlan p;
  p.dim = 1;
  p.final_time = 0.0625;
  p.reference = {6, 0x1.0p-10};
  p.ladder = {{4, 0x1.0p-8}, {5, 0x1.0p-9}};
  p.samples = 3;
  p.master_seed = 17;
  p.modes = NoiseModel::default_modes(1);
  return p;
}

std::string csv(const ErrorReport& r) {
  std::ostringstream os;
  write_eoc_csv(os, r);
  write_mc_csv(os, r);
  return os.str();
}

}  // namespace

TEST_SUITE("mc") {
  TEST_CASE("compute_eoc") {
    const std::vector<double> paper{0.08, 0.17};
    CHECK(compute_eoc(paper)[0] == doctest::Approx(1.0874628).epsilon(1e-6));
    CHECK(compute_eoc(std::vector<double>{0.4, 0.2})[0] == doctest::Approx(-1.0));
    CHECK(compute_eoc(std::vector<double>{0.2, 0.4})[0] == doctest::Approx(1.0));
    CHECK(compute_eoc(std::vector<double>{0.3, 0.3})[0] == 0.0);
    const auto two = compute_eoc(std::vector<double>{1.0, 2.0, 4.0});
    REQUIRE(two.size() == 2);
    CHECK(two[0] == doctest::Approx(1.0));
    CHECK(two[1] == doctest::Approx(1.0));
    // Quadrupling tau and doubling the error is order 1/2 in tau.
    CHECK(compute_eoc(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0, 4.0})[0] == doctest::Approx(0.5));
    CHECK(compute_eoc(std::vector<double>{0.08, 0.17}, std::vector<double>{2e-5, 4e-5})[0] ==
          doctest::Approx(compute_eoc(paper)[0]));
  }

  TEST_CASE("integer ratios and step counts") {
    CHECK(step_count(0.25, 0x1.0p-14) == 4096);
    CHECK(step_count(0.25, 0x1.0p-16) == 16384);
    CHECK(step_count(1.04, 1e-5) == 104000);
    CHECK(step_count(1.04, 3.2e-3) == 325);
    CHECK_THROWS_AS(step_count(1.0, 0.3), std::invalid_argument);
    CHECK(integer_ratio(1.6e-4, 1e-5) == 16);
    CHECK_THROWS_AS(integer_ratio(1.5e-5, 1e-5), std::invalid_argument);
  }

  TEST_CASE("plan validation lists every problem") {
    auto p = small_plan();
    CHECK_NOTHROW(p.validate());
    p.ladder.push_back({7, 0.003});
    p.samples = 0;
    try {
      p.validate();
      FAIL("expected invalid_argument");
    } catch (const std::invalid_argument& e) {
      const std::string msg = e.what();
      CHECK(msg.find("level") != std::string::npos);
      CHECK(msg.find("multiple") != std::string::npos);
      CHECK(msg.find("samples") != std::string::npos);
    }
    CHECK(small_plan().comparison_tau() == 0x1.0p-8);
  }

  TEST_CASE("self comparison gives exactly zero error") {
    auto p = small_plan();
    p.ladder = {p.reference};
    p.samples = 2;
    const auto r = run_ensemble(p);
    REQUIRE(r.rows.size() == 1);
    CHECK(r.rows[0].e_l2 == 0.0);
    CHECK(r.rows[0].e_h1 == 0.0);
    CHECK(std::isnan(r.rows[0].eoc_l2));
    CHECK(r.common_path_verified);
  }

  TEST_CASE("report shape, ordering and positivity") {
    const auto r = run_ensemble(small_plan());
    REQUIRE(r.rows.size() == 2);
    CHECK(r.rows[0].entry.tau < r.rows[1].entry.tau);
    CHECK(r.samples == 3);
    CHECK(r.common_path_verified);
    CHECK(r.compare_times.size() == 16);
    for (const auto& row : r.rows) {
      CHECK(row.e_l2 > 0.0);
      CHECK(row.e_h1 > 0.0);
      CHECK(row.e_tot == doctest::Approx(std::hypot(row.e_l2, row.e_h1)));
      CHECK(row.mean_l2_sq.size() == r.compare_times.size());
    }
    CHECK(r.rows[1].e_tot > r.rows[0].e_tot);
    CHECK(r.rows[1].eoc_l2 == doctest::Approx(std::log2(r.rows[1].e_l2 / r.rows[0].e_l2)));

    std::istringstream eoc([&] {
      std::ostringstream os;
      write_eoc_csv(os, r);
      return os.str();
    }());
    std::string line;
    std::getline(eoc, line);
    CHECK(line == "level,h,tau,E_L2,EOC_L2,E_H1,EOC_H1,E_tot,EOC_tot,samples");
    int rows = 0;
    while (std::getline(eoc, line)) ++rows;
    CHECK(rows == 2);
  }

  TEST_CASE("results do not depend on the worker count") {
    auto p = small_plan();
    p.samples = 4;
    const auto one = csv(run_ensemble(p));
    p.workers = 3;
    CHECK(csv(run_ensemble(p)) == one);
    CHECK(csv(run_ensemble(p)) == one);
  }

  TEST_CASE("a failing sample is reported with its id and step") {
    auto p = small_plan();
    p.solver.max_iterations = 1;
    p.solver.rel_tolerance = 1e-15;
    p.samples = 2;
    try {
      (void)run_ensemble(p);
      FAIL("expected failure");
    } catch (const std::exception& e) {
      const std::string msg = e.what();
      CHECK(msg.find("sample 0") != std::string::npos);
      CHECK(msg.find("step 1") != std::string::npos);
    }
  }

  TEST_CASE("tracking study") {
    auto p = small_plan();
    p.samples = 2;
    const auto rows = r_tracking_study(p, 5, {0x1.0p-9, 0x1.0p-7, 0x1.0p-8});
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].tau == 0x1.0p-7);
    CHECK(rows[2].tau == 0x1.0p-9);
    CHECK(std::isnan(rows[0].observed_order));
    for (const auto& r : rows) CHECK(std::isfinite(r.mean_max_tracking_error));
    CHECK(rows[2].observed_order == doctest::Approx(std::log2(rows[1].mean_max_tracking_error / rows[2].mean_max_tracking_error)));

    std::ostringstream os;
    write_rtrack_csv(os, rows);
    CHECK(os.str().rfind("tau,mean_max_tracking_error,observed_order\n", 0) == 0);
  }

  TEST_CASE("zero noise tracking error stays below 1e-6") {
    // Resolved interfaces (h well below epsilon) close to the stationary profile.
    auto p = small_plan();
    p.modes.clear();
    p.samples = 1;
    const auto rows = r_tracking_study(p, 9, {0x1.0p-8, 0x1.0p-9});
    for (const auto& r : rows) CHECK(r.mean_max_tracking_error <= 1e-6);
  }
}
