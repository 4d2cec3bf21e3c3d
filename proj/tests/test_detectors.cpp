// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "mmrc/detectors.hpp"
#include "mmrc/ofdm.hpp"
#include "mmrc/rng.hpp"

using namespace mmrc;

namespace {

// noiseless single-tap sandbox where every detector should be exact
SysConfig sanityConfig() {
  SysConfig cfg;
  cfg.n_az = 4;
  cfg.n_el = 4;
  cfg.n_sc = 32;
  cfg.n_cp = 4;
  cfg.taps = 1;
  cfg.n_data = 3;
  cfg.snr_db = kSnrInf;
  cfg.pilot_style = PilotStyle::Orthogonal;  // keeps the LMMSE estimate exact
  cfg.seed = 71;
  return cfg;
}

struct World {
  Subframe sf;
  RxRecord rec;
};

World makeWorld(const SysConfig& cfg) {
  World w;
  w.sf = buildSubframe(cfg);
  w.rec = applyChannel(w.sf.tx_time, genChannel(cfg), cfg);
  return w;
}

RcDetectOptions quickRc() {
  RcDetectOptions rc;
  rc.window = 4;
  rc.max_delay = 1;
  return rc;
}

}  // namespace

TEST_CASE("ber basics") {
  std::vector<std::uint8_t> a{0, 1, 1, 0}, b{0, 1, 1, 0}, c{1, 0, 0, 1}, d{0, 1, 0, 1};
  CHECK(ber(a, b) == 0.0);
  CHECK(ber(a, c) == 1.0);
  CHECK(ber(a, d) == 0.5);
  std::vector<std::uint8_t> shorter{0, 1};
  CHECK_THROWS_AS(ber(a, shorter), std::invalid_argument);
}

TEST_CASE("lmmse is exact on a noiseless linear channel") {
  SysConfig cfg = sanityConfig();
  cfg.taps = 3;  // also with memory: CP handles it
  World w = makeWorld(cfg);
  DetectionResult res = lmmseDetect(cfg, w.sf, w.rec);
  CHECK(res.ber == 0.0);
  CHECK(res.bits.size() == w.sf.bits.size());
  // symbol estimates themselves are tight
  int d0 = 0;
  for (const MatrixXcd& est : res.est_grid) {
    CHECK((est - w.sf.grid[static_cast<size_t>(cfg.n_pilot + d0)]).norm() <= 1e-9 * est.norm());
    ++d0;
  }
}

TEST_CASE("lmmse refuses underdetermined pilots") {
  SysConfig cfg = sanityConfig();
  cfg.pilot_style = PilotStyle::Random;  // orthogonal style would refuse earlier
  cfg.n_pilot = 2;  // < N_t = 4
  World w = makeWorld(cfg);
  CHECK_THROWS_AS(lmmseDetect(cfg, w.sf, w.rec), std::invalid_argument);
}

TEST_CASE("wesn is exact on the noiseless single-tap channel") {
  SysConfig cfg = sanityConfig();
  World w = makeWorld(cfg);
  WesnOptions opts;
  opts.neurons = 16;
  opts.buffer = 4;
  DetectionResult res = wesnDetect(cfg, w.sf, w.rec, opts);
  CHECK(res.ber == 0.0);

  // mild ridge keeps it working
  opts.ridge = 1e-10;
  CHECK(wesnDetect(cfg, w.sf, w.rec, opts).ber == 0.0);
}

TEST_CASE("rc joint is exact on the noiseless single-tap channel") {
  SysConfig cfg = sanityConfig();
  World w = makeWorld(cfg);
  DetectionResult res = rcDetectJoint(cfg, w.sf, w.rec, quickRc());
  CHECK(res.ber == 0.0);
  CHECK(res.bits.size() == w.sf.bits.size());
  REQUIRE(!res.loss_trace.empty());
  for (size_t i = 1; i < res.loss_trace.size(); ++i)
    CHECK(res.loss_trace[i] <= res.loss_trace[i - 1] * (1.0 + 1e-10) + 1e-12);
}

TEST_CASE("rc decomposed is exact and matches joint for a single stream") {
  SysConfig cfg = sanityConfig();
  World w = makeWorld(cfg);
  DetectionResult res = rcDetectDecomposed(cfg, w.sf, w.rec, quickRc());
  CHECK(res.ber == 0.0);

  SysConfig single = sanityConfig();
  single.n_users = 1;
  single.n_ant_per_user = 1;
  single.n_pilot = 1;
  World ws = makeWorld(single);
  DetectionResult dj = rcDetectJoint(single, ws.sf, ws.rec, quickRc());
  DetectionResult dd = rcDetectDecomposed(single, ws.sf, ws.rec, quickRc());
  CHECK(dj.bits == dd.bits);
  for (size_t s = 0; s < dj.est_grid.size(); ++s)
    CHECK((dj.est_grid[s] - dd.est_grid[s]).norm() <= 1e-8 * (1.0 + dj.est_grid[s].norm()));
}

TEST_CASE("iterate log mirrors the final joint fit") {
  SysConfig cfg = sanityConfig();
  World w = makeWorld(cfg);
  RcDetectOptions rc = quickRc();
  std::vector<std::vector<MatrixXcd>> log;
  rc.iterate_log = &log;
  RcModel model = rcTrainJoint(cfg, w.sf, w.rec, rc);
  REQUIRE(!log.empty());
  CHECK(log.size() == model.loss_trace.size());
  CHECK((log.back()[0] - model.factors[0]).norm() == 0.0);
  CHECK((log.back()[1] - model.factors[1]).norm() == 0.0);
}

TEST_CASE("detectors only need the pilot prefix of the truth") {
  // scrubbing the data-symbol grid entries must not change training results
  SysConfig cfg = sanityConfig();
  World w = makeWorld(cfg);
  Subframe scrubbed = w.sf;
  Index dataStart = static_cast<Index>(cfg.n_pilot) * cfg.symbolSamples();
  scrubbed.tx_time.rightCols(scrubbed.tx_time.cols() - dataStart).setZero();
  for (int s = cfg.n_pilot; s < cfg.totalSymbols(); ++s)
    scrubbed.grid[static_cast<size_t>(s)].setZero();
  RcModel a = rcTrainJoint(cfg, w.sf, w.rec, quickRc());
  RcModel b = rcTrainJoint(cfg, scrubbed, w.rec, quickRc());
  CHECK((a.factors[0] - b.factors[0]).norm() == 0.0);
  CHECK((a.factors[1] - b.factors[1]).norm() == 0.0);
}
