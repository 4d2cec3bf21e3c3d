// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "mmrc/experiments.hpp"

using namespace mmrc;

namespace {

// small enough to run in a couple of seconds
ExperimentSpec tinySpec() {
  ExperimentSpec spec = deskDefaults();
  spec.system.n_az = 4;
  spec.system.n_el = 4;
  spec.system.n_sc = 16;
  spec.system.n_cp = 4;
  spec.system.taps = 2;
  spec.system.n_data = 2;
  spec.rc.window = 4;
  spec.rc.max_delay = 1;
  spec.wesn.buffer = 4;
  spec.wesn.neurons = 16;
  spec.trials = 2;
  spec.snr_grid = {10.0, 20.0};
  spec.detectors = {"lmmse", "rc_joint"};
  return spec;
}

}  // namespace

TEST_CASE("csv formatting") {
  CsvTable t;
  t.header = {"a", "b"};
  t.rows = {{"1", "x"}, {"2", "y"}};
  CHECK(t.toString() == "a,b\n1,x\n2,y\n");
  CHECK(formatDouble(0.5) == "0.5");
  CHECK(formatDouble(1.0 / 3.0) == "0.33333333333333331");
}

TEST_CASE("config parsing roundtrip and errors") {
  ExperimentSpec spec = parseConfigText(
      "# comment\n"
      "[system]\n"
      "n_sc = 128\n"
      "snr_db = 7.5\n"
      "impairment = one_bit\n"
      "[rc]\n"
      "neurons = 12\n"
      "identity_perm_only = true\n"
      "[experiment]\n"
      "kind = contour\n"
      "trials = 3\n"
      "snr_grid = 0, 5, 10\n"
      "detectors = lmmse, wesn\n"
      "antennas = 8x8, 10x10\n");
  CHECK(spec.system.n_sc == 128);
  CHECK(spec.system.snr_db == 7.5);
  CHECK(spec.system.impairment == Impairment::OneBit);
  CHECK(spec.rc.neurons == 12);
  CHECK(spec.rc.identity_perm_only);
  CHECK(spec.kind == ExperimentKind::Contour);
  CHECK(spec.trials == 3);
  CHECK(spec.snr_grid == std::vector<double>{0.0, 5.0, 10.0});
  CHECK(spec.detectors == std::vector<std::string>{"lmmse", "wesn"});
  REQUIRE(spec.antenna_grid.size() == 2);
  CHECK(spec.antenna_grid[1] == std::pair<int, int>(10, 10));

  CHECK_THROWS_WITH_AS(parseConfigText("[system]\nbogus = 1\n"),
                       doctest::Contains("system.bogus"), std::runtime_error);
  CHECK_THROWS_AS(parseConfigText("[nope]\nx = 1\n"), std::runtime_error);
  CHECK_THROWS_AS(parseConfigText("x = 1\n"), std::runtime_error);
  CHECK_THROWS_AS(parseConfigText("[system]\nn_sc\n"), std::runtime_error);
  CHECK_THROWS_AS(parseConfigText("[system]\nn_sc = soon\n"), std::runtime_error);
  CHECK_THROWS_AS(parseConfigFile("/nonexistent/conf.ini"), std::runtime_error);
}

TEST_CASE("spec validation") {
  ExperimentSpec spec = tinySpec();
  spec.trials = 0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = tinySpec();
  spec.detectors = {"psychic"};
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = tinySpec();
  spec.snr_grid.clear();
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

TEST_CASE("ber sweep: schema, determinism, thread independence") {
  ExperimentSpec spec = tinySpec();
  CsvTable a = runBerSweep(spec);
  CHECK(a.header == std::vector<std::string>{"detector", "snr_db", "trials", "bit_errors",
                                             "bits", "ber"});
  CHECK(a.rows.size() == 4);  // 2 detectors x 2 SNR points
  CHECK(a.rows[0][0] == "lmmse");
  CHECK(a.rows[2][0] == "rc_joint");

  CsvTable b = runBerSweep(spec);
  CHECK(a.toString() == b.toString());

  ExperimentSpec threaded = spec;
  threaded.threads = 3;
  CsvTable c = runBerSweep(threaded);
  CHECK(a.toString() == c.toString());
}

TEST_CASE("als trace: schema and monotone loss per variant") {
  ExperimentSpec spec = tinySpec();
  CsvTable t = runAlsTrace(spec);
  CHECK(t.header == std::vector<std::string>{"variant", "iteration", "train_ber", "test_ber",
                                             "loss"});
  std::string cur;
  double prev = 0.0;
  int variants = 0;
  for (const auto& row : t.rows) {
    double loss = std::stod(row[4]);
    if (row[0] != cur) {
      cur = row[0];
      ++variants;
    } else {
      CHECK(loss <= prev * (1.0 + 1e-10) + 1e-12);
    }
    prev = loss;
  }
  CHECK(variants == 3);
}

TEST_CASE("contour: schema and uniqueness flag placement") {
  ExperimentSpec spec = tinySpec();
  spec.ns_grid = {2, 40};
  spec.window_grid = {1, 8};
  CsvTable t = runContour(spec);
  CHECK(t.header == std::vector<std::string>{"N_s", "T_prime", "log_loss", "test_ber",
                                             "uniqueness_pass"});
  REQUIRE(t.rows.size() == 4);
  // bound with n_az=n_el=4, N_c=16, N_cp=4: N_f-1 = 2 N_s + 8 T' vs 2 + 20
  for (const auto& row : t.rows) {
    int ns = std::stoi(row[0]);
    int tp = std::stoi(row[1]);
    bool want = 2 * ns + (4 + 4) * tp <= 2 + 20;
    CHECK(row[4] == (want ? "1" : "0"));
  }
}

TEST_CASE("onebit sweep: schema and antenna grid expansion") {
  ExperimentSpec spec = tinySpec();
  spec.detectors = {"lmmse"};
  spec.trials = 1;
  spec.snr_grid = {10.0};
  spec.antenna_grid = {{4, 4}, {2, 4}};
  CsvTable t = runOnebitSweep(spec);
  CHECK(t.header == std::vector<std::string>{"detector", "antenna_config", "snr_db", "ber"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][1] == "4x4");
  CHECK(t.rows[1][1] == "2x4");
}

TEST_CASE("csv files are written with newline endings") {
  CsvTable t;
  t.header = {"h"};
  t.rows = {{"v"}};
  std::string path = "/tmp/mmrc_csv_test.csv";
  writeCsv(t, path);
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  CHECK(ss.str() == "h\nv\n");
  CHECK_THROWS_AS(writeCsv(t, "/nonexistent_dir/x.csv"), std::runtime_error);
}
