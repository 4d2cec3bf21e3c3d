// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <optional>

#include "mmrc/experiments.hpp"
#include "mmrc/rng.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> trials;
  std::string snr;
  std::string detectors;
  std::optional<int> threads;
};

void addCommon(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "Experiment config file (sectioned key=value)");
  cmd->add_option("--seed", f.seed, "Master seed override");
  cmd->add_option("--out", f.out, "Output CSV path");
  cmd->add_option("--trials", f.trials, "Monte-Carlo subframe count");
  cmd->add_option("--snr", f.snr, "Comma list of SNR points in dB");
  cmd->add_option("--detectors", f.detectors, "Comma list: rc_joint,rc_decomposed,lmmse,wesn");
  cmd->add_option("--threads", f.threads, "Worker pool size");
}

mmrc::ExperimentSpec buildSpec(const CommonFlags& f, mmrc::ExperimentKind kind) {
  mmrc::ExperimentSpec spec =
      f.config.empty() ? mmrc::deskDefaults() : mmrc::parseConfigFile(f.config);
  spec.kind = kind;
  if (f.seed) spec.system.seed = *f.seed;
  if (!f.out.empty()) spec.output_path = f.out;
  if (f.trials) spec.trials = *f.trials;
  if (f.threads) spec.threads = *f.threads;
  if (!f.snr.empty()) {
    // Reuse the config parser so the list syntax stays identical.
    mmrc::ExperimentSpec tmp =
        mmrc::parseConfigText("[experiment]\nsnr_grid = " + f.snr + "\n");
    spec.snr_grid = tmp.snr_grid;
  }
  if (!f.detectors.empty()) {
    mmrc::ExperimentSpec tmp =
        mmrc::parseConfigText("[experiment]\ndetectors = " + f.detectors + "\n");
    spec.detectors = tmp.detectors;
  }
  return spec;
}

int runKind(const CommonFlags& f, mmrc::ExperimentKind kind) {
  mmrc::ExperimentSpec spec = buildSpec(f, kind);
  spec.validate();
  mmrc::CsvTable t = mmrc::runExperiment(spec);
  if (spec.output_path.empty()) std::fputs(t.toString().c_str(), stdout);
  return 0;
}

int runSelftest() {
  using namespace mmrc;
  int failures = 0;
  auto check = [&](const char* name, bool ok) {
    std::printf("%-32s %s\n", name, ok ? "ok" : "FAIL");
    if (!ok) ++failures;
  };

  Tensor x({2, 2, 2});
  for (Index i = 0; i < 8; ++i) x.data()[i] = cplx(static_cast<double>(i + 1), 0.0);
  MatrixXcd u = unfold(x, 0);
  check("tensor unfold convention", u(0, 0) == cplx(1) && u(0, 1) == cplx(5) &&
                                        u(0, 2) == cplx(3) && u(0, 3) == cplx(7) &&
                                        u(1, 3) == cplx(8));

  Rng rng(42);
  MatrixXcd a = rng.uniformComplexMatrix(6, 10);
  MatrixXcd b = rng.uniformComplexMatrix(3, 10);
  MatrixXcd w = solveRightLS(b, a);
  check("least squares residual normal", ((w * a - b) * a.adjoint()).norm() < 1e-9);

  SysConfig cfg = deskDefaults().system;
  cfg.snr_db = kSnrInf;
  cfg.taps = 1;
  Subframe sf = buildSubframe(cfg);
  ChannelRealization ch = genChannel(cfg);
  RxRecord rec = applyChannel(sf.tx_time, ch, cfg);
  check("noiseless lmmse exact", lmmseDetect(cfg, sf, rec).ber == 0.0);
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-mode reservoir computing experiments for massive MIMO-OFDM detection"};
  app.require_subcommand(1);

  CommonFlags ber, trace, contour, onebit;
  CLI::App* cberr = app.add_subcommand("ber-sweep", "BER vs SNR over Monte-Carlo subframes");
  addCommon(cberr, ber);
  CLI::App* ctrace = app.add_subcommand("als-trace", "Train/test BER per ALS iteration, three model variants");
  addCommon(ctrace, trace);
  CLI::App* ccont = app.add_subcommand("contour", "Training log-loss over the (N_s, T') plane");
  addCommon(ccont, contour);
  CLI::App* cone = app.add_subcommand("onebit", "BER sweep with the one-bit quantized front end");
  addCommon(cone, onebit);
  CLI::App* cself = app.add_subcommand("selftest", "Quick property checks on the built binary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (cberr->parsed()) return runKind(ber, mmrc::ExperimentKind::BerSweep);
    if (ctrace->parsed()) return runKind(trace, mmrc::ExperimentKind::AlsTrace);
    if (ccont->parsed()) return runKind(contour, mmrc::ExperimentKind::Contour);
    if (cone->parsed()) return runKind(onebit, mmrc::ExperimentKind::OnebitSweep);
    if (cself->parsed()) return runSelftest();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
