// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mmrc/detectors.hpp"
#include "mmrc/mimo.hpp"

namespace mmrc {

enum class ExperimentKind { BerSweep, AlsTrace, Contour, OnebitSweep };

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::BerSweep;
  SysConfig system;       // defaulted to desk scale by deskDefaults()
  RcDetectOptions rc;
  WesnOptions wesn;
  std::vector<double> snr_grid = {0.0, 5.0, 10.0, 15.0};
  int trials = 20;
  std::vector<std::string> detectors = {"lmmse", "rc_decomposed", "rc_joint", "wesn"};
  std::string output_path;
  int threads = 1;
  std::vector<int> ns_grid = {2, 4, 8, 16, 32, 64, 96, 128};      // contour N_s axis
  std::vector<int> window_grid = {1, 2, 4, 8, 12, 16};            // contour T' axis
  std::vector<std::pair<int, int>> antenna_grid = {{8, 8}, {10, 10}};  // onebit

  void validate() const;
};

/// Desk-scale CI defaults: N_c=64, QPSK, 20 trials (paper scale reachable via
/// config overrides).
ExperimentSpec deskDefaults();

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::string toString() const;  // header + rows, '\n' line endings
};

std::string formatDouble(double v);  // shortest round-trip decimal

CsvTable runBerSweep(const ExperimentSpec& spec);
CsvTable runAlsTrace(const ExperimentSpec& spec);
CsvTable runContour(const ExperimentSpec& spec);
CsvTable runOnebitSweep(const ExperimentSpec& spec);

/// Dispatch on spec.kind; writes to spec.output_path when nonempty.
CsvTable runExperiment(const ExperimentSpec& spec);

void writeCsv(const CsvTable& table, const std::string& path);

/// Flat sectioned key=value config text; unknown keys are an error.
ExperimentSpec parseConfigText(const std::string& text);
ExperimentSpec parseConfigFile(const std::string& path);

/// Runs fn(0..n-1) on `threads` workers; results must be written into
/// index-addressed slots so the reduction order never depends on scheduling.
void parallelFor(int n, int threads, const std::function<void(int)>& fn);

}  // namespace mmrc
