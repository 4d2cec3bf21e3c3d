// SPDX-License-Identifier: Apache-2.0
#include "mmrc/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "mmrc/rng.hpp"

namespace mmrc {

void ExperimentSpec::validate() const {
  system.validate();
  if (trials < 1) throw std::invalid_argument("ExperimentSpec: trials must be >= 1");
  if ((kind == ExperimentKind::BerSweep || kind == ExperimentKind::OnebitSweep) && snr_grid.empty())
    throw std::invalid_argument("ExperimentSpec: snr_grid must be nonempty for sweeps");
  if (threads < 1) throw std::invalid_argument("ExperimentSpec: threads must be >= 1");
  for (const std::string& d : detectors)
    if (d != "rc_joint" && d != "rc_decomposed" && d != "lmmse" && d != "wesn")
      throw std::invalid_argument("ExperimentSpec: unknown detector '" + d + "'");
}

ExperimentSpec deskDefaults() {
  ExperimentSpec spec;
  spec.system.n_sc = 64;
  spec.system.n_cp = 16;
  spec.system.taps = 4;
  // T' = 4 keeps the readout inside the uniqueness bound
  // (2 N_s + T'(N_a + N_e) = 80 <= N_u + N_T + N_K = 86) so the fitted model
  // generalizes instead of memorizing the four pilot symbols.
  spec.rc.window = 4;
  spec.rc.input_scale = 0.3;
  spec.rc.als_iters = 12;
  spec.wesn.buffer = 16;
  return spec;
}

std::string formatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string CsvTable::toString() const {
  std::string out;
  for (size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += header[i];
  }
  out += '\n';
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += row[i];
    }
    out += '\n';
  }
  return out;
}

void writeCsv(const CsvTable& table, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file '" + path + "'");
  f << table.toString();
  if (!f) throw std::runtime_error("failed writing output file '" + path + "'");
}

void parallelFor(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::atomic<bool> failed{false};
  std::string message;
  std::mutex mu;
  int workers = std::min(threads, n);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= n || failed.load()) return;
        try {
          fn(i);
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(mu);
          failed = true;
          message = e.what();
          return;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failed) throw std::runtime_error(message);
}

namespace {

struct TrialData {
  Subframe sf;
  RxRecord rec;
};

TrialData makeTrial(SysConfig cfg) {
  TrialData d;
  d.sf = buildSubframe(cfg);
  ChannelRealization ch = genChannel(cfg);
  d.rec = applyChannel(d.sf.tx_time, ch, cfg);
  return d;
}

DetectionResult runDetector(const std::string& name, const SysConfig& cfg, const TrialData& d,
                            const ExperimentSpec& spec) {
  if (name == "rc_joint") return rcDetectJoint(cfg, d.sf, d.rec, spec.rc);
  if (name == "rc_decomposed") return rcDetectDecomposed(cfg, d.sf, d.rec, spec.rc);
  if (name == "lmmse") return lmmseDetect(cfg, d.sf, d.rec);
  if (name == "wesn") return wesnDetect(cfg, d.sf, d.rec, spec.wesn);
  throw std::invalid_argument("unknown detector '" + name + "'");
}

struct ErrorCount {
  std::uint64_t errors = 0;
  std::uint64_t bits = 0;
};

// Per (snr, trial) job counting bit errors for every requested detector;
// reduction is by job index so thread count never changes the totals.
std::vector<std::vector<ErrorCount>> sweepCounts(const ExperimentSpec& spec,
                                                 const SysConfig& base) {
  const int nsnr = static_cast<int>(spec.snr_grid.size());
  const int jobs = nsnr * spec.trials;
  std::vector<std::vector<ErrorCount>> counts(
      static_cast<size_t>(jobs), std::vector<ErrorCount>(spec.detectors.size()));
  parallelFor(jobs, spec.threads, [&](int j) {
    int s = j / spec.trials;
    int r = j % spec.trials;
    SysConfig cfg = base;
    cfg.snr_db = spec.snr_grid[static_cast<size_t>(s)];
    cfg.seed = Rng::derive(base.seed, static_cast<std::uint64_t>(r) + 1);
    TrialData d = makeTrial(cfg);
    for (size_t k = 0; k < spec.detectors.size(); ++k) {
      DetectionResult res = runDetector(spec.detectors[k], cfg, d, spec);
      ErrorCount& c = counts[static_cast<size_t>(j)][k];
      c.bits = d.sf.bits.size();
      for (size_t i = 0; i < d.sf.bits.size(); ++i) c.errors += d.sf.bits[i] != res.bits[i];
    }
  });
  return counts;
}

}  // namespace

CsvTable runBerSweep(const ExperimentSpec& spec) {
  spec.validate();
  auto counts = sweepCounts(spec, spec.system);

  std::vector<std::string> order = spec.detectors;
  std::sort(order.begin(), order.end());
  CsvTable t;
  t.header = {"detector", "snr_db", "trials", "bit_errors", "bits", "ber"};
  for (const std::string& name : order) {
    size_t k = static_cast<size_t>(
        std::find(spec.detectors.begin(), spec.detectors.end(), name) - spec.detectors.begin());
    for (size_t s = 0; s < spec.snr_grid.size(); ++s) {
      ErrorCount total;
      for (int r = 0; r < spec.trials; ++r) {
        const ErrorCount& c = counts[s * static_cast<size_t>(spec.trials) + static_cast<size_t>(r)][k];
        total.errors += c.errors;
        total.bits += c.bits;
      }
      double rate = total.bits ? static_cast<double>(total.errors) / static_cast<double>(total.bits) : 0.0;
      t.rows.push_back({name, formatDouble(spec.snr_grid[s]), std::to_string(spec.trials),
                        std::to_string(total.errors), std::to_string(total.bits),
                        formatDouble(rate)});
    }
  }
  return t;
}

CsvTable runAlsTrace(const ExperimentSpec& spec) {
  spec.validate();
  SysConfig cfg = spec.system;
  cfg.snr_db = 15.0;
  cfg.seed = Rng::derive(spec.system.seed, 1);
  TrialData d = makeTrial(cfg);
  std::vector<MatrixXcd> pilotGrid(d.sf.grid.begin(), d.sf.grid.begin() + cfg.n_pilot);
  std::vector<std::uint8_t> pilotBits = demapGrid(pilotGrid, cfg.qam_order);
  std::vector<int> pilotSyms(static_cast<size_t>(cfg.n_pilot));
  std::iota(pilotSyms.begin(), pilotSyms.end(), 0);
  std::vector<int> dataSyms(static_cast<size_t>(cfg.n_data));
  std::iota(dataSyms.begin(), dataSyms.end(), cfg.n_pilot);

  struct Variant {
    std::string name;
    RcDetectOptions rc;
  };
  RcDetectOptions noPerm = spec.rc;
  noPerm.identity_perm_only = true;
  RcDetectOptions oversized = spec.rc;
  oversized.neurons = 128;
  std::vector<Variant> variants{{"full", spec.rc}, {"no_perm", noPerm}, {"oversized", oversized}};

  CsvTable t;
  t.header = {"variant", "iteration", "train_ber", "test_ber", "loss"};
  std::vector<std::vector<std::vector<std::string>>> rows(variants.size());
  parallelFor(static_cast<int>(variants.size()), spec.threads, [&](int v) {
    Variant& var = variants[static_cast<size_t>(v)];
    std::vector<std::vector<MatrixXcd>> log;
    var.rc.iterate_log = &log;
    RcModel model = rcTrainJoint(cfg, d.sf, d.rec, var.rc);
    for (size_t it = 0; it < log.size(); ++it) {
      RcModel snap = model;
      snap.factors = log[it];
      auto trainGrid = rcEstimateGrid(snap, cfg, d.rec, pilotSyms);
      auto testGrid = rcEstimateGrid(snap, cfg, d.rec, dataSyms);
      double trainBer = ber(pilotBits, demapGrid(trainGrid, cfg.qam_order));
      double testBer = ber(d.sf.bits, demapGrid(testGrid, cfg.qam_order));
      rows[static_cast<size_t>(v)].push_back({var.name, std::to_string(it + 1),
                                              formatDouble(trainBer), formatDouble(testBer),
                                              formatDouble(model.loss_trace[it])});
    }
  });
  for (auto& r : rows) t.rows.insert(t.rows.end(), r.begin(), r.end());
  return t;
}

CsvTable runContour(const ExperimentSpec& spec) {
  spec.validate();
  SysConfig base = spec.system;
  base.n_pilot = 1;  // single-batch training
  base.taps = 1;     // flat channel: window-starved grid points would otherwise
                     // underfit for temporal reasons unrelated to identifiability
  base.validate();

  const int jobs = static_cast<int>(spec.ns_grid.size() * spec.window_grid.size());
  CsvTable t;
  t.header = {"N_s", "T_prime", "log_loss", "test_ber", "uniqueness_pass"};
  t.rows.resize(static_cast<size_t>(jobs));
  parallelFor(jobs, spec.threads, [&](int j) {
    int wi = j % static_cast<int>(spec.window_grid.size());
    int ni = j / static_cast<int>(spec.window_grid.size());
    int ns = spec.ns_grid[static_cast<size_t>(ni)];
    int tp = spec.window_grid[static_cast<size_t>(wi)];
    SysConfig cfg = base;
    cfg.seed = Rng::derive(base.seed, static_cast<std::uint64_t>(j) + 0xc0);
    RcDetectOptions rc = spec.rc;
    rc.neurons = ns;
    rc.window = tp;
    TrialData d = makeTrial(cfg);
    RcModel model = rcTrainJoint(cfg, d.sf, d.rec, rc);

    double targetEnergy = 0.0;
    for (int p = 0; p < cfg.n_pilot; ++p)
      targetEnergy += d.sf.tx_time
                          .middleCols(static_cast<Index>(p) * cfg.symbolSamples(), cfg.symbolSamples())
                          .squaredNorm();
    double rel = model.loss_trace.back() / targetEnergy;
    double logLoss = std::log10(std::max(rel, 1e-30));

    std::vector<Index> nOut{cfg.n_users, cfg.n_ant_per_user};
    std::vector<Index> nF{model.rc.featureDim(0), model.rc.featureDim(1)};
    UniquenessReport rep = uniquenessCheck(nOut, nF, cfg.symbolSamples(), cfg.n_pilot, true);

    std::vector<int> dataSyms(static_cast<size_t>(cfg.n_data));
    std::iota(dataSyms.begin(), dataSyms.end(), cfg.n_pilot);
    auto grid = rcEstimateGrid(model, cfg, d.rec, dataSyms);
    double testBer = ber(d.sf.bits, demapGrid(grid, cfg.qam_order));

    t.rows[static_cast<size_t>(j)] = {std::to_string(ns), std::to_string(tp),
                                      formatDouble(logLoss), formatDouble(testBer),
                                      rep.all ? "1" : "0"};
  });
  return t;
}

CsvTable runOnebitSweep(const ExperimentSpec& spec) {
  spec.validate();
  CsvTable t;
  t.header = {"detector", "antenna_config", "snr_db", "ber"};
  for (auto [na, ne] : spec.antenna_grid) {
    SysConfig base = spec.system;
    base.n_az = na;
    base.n_el = ne;
    base.impairment = Impairment::OneBit;
    auto counts = sweepCounts(spec, base);
    std::vector<std::string> order = spec.detectors;
    std::sort(order.begin(), order.end());
    std::string arr = std::to_string(na) + "x" + std::to_string(ne);
    for (const std::string& name : order) {
      size_t k = static_cast<size_t>(
          std::find(spec.detectors.begin(), spec.detectors.end(), name) - spec.detectors.begin());
      for (size_t s = 0; s < spec.snr_grid.size(); ++s) {
        ErrorCount total;
        for (int r = 0; r < spec.trials; ++r) {
          const ErrorCount& c =
              counts[s * static_cast<size_t>(spec.trials) + static_cast<size_t>(r)][k];
          total.errors += c.errors;
          total.bits += c.bits;
        }
        double rate =
            total.bits ? static_cast<double>(total.errors) / static_cast<double>(total.bits) : 0.0;
        t.rows.push_back({name, arr, formatDouble(spec.snr_grid[s]), formatDouble(rate)});
      }
    }
  }
  return t;
}

CsvTable runExperiment(const ExperimentSpec& spec) {
  CsvTable t;
  switch (spec.kind) {
    case ExperimentKind::BerSweep: t = runBerSweep(spec); break;
    case ExperimentKind::AlsTrace: t = runAlsTrace(spec); break;
    case ExperimentKind::Contour: t = runContour(spec); break;
    case ExperimentKind::OnebitSweep: t = runOnebitSweep(spec); break;
  }
  if (!spec.output_path.empty()) writeCsv(t, spec.output_path);
  return t;
}

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> splitList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int toInt(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (...) {
    throw std::runtime_error("config: key '" + key + "' needs an integer, got '" + v + "'");
  }
}

double toDouble(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (...) {
    throw std::runtime_error("config: key '" + key + "' needs a number, got '" + v + "'");
  }
}

std::uint64_t toU64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    std::uint64_t x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (...) {
    throw std::runtime_error("config: key '" + key + "' needs an unsigned integer, got '" + v + "'");
  }
}

bool toBool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::runtime_error("config: key '" + key + "' needs true/false, got '" + v + "'");
}

void applyKey(ExperimentSpec& spec, const std::string& section, const std::string& key,
              const std::string& value) {
  std::string full = section + "." + key;
  if (section == "system") {
    SysConfig& s = spec.system;
    if (key == "n_az") s.n_az = toInt(full, value);
    else if (key == "n_el") s.n_el = toInt(full, value);
    else if (key == "n_users") s.n_users = toInt(full, value);
    else if (key == "n_ant_per_user") s.n_ant_per_user = toInt(full, value);
    else if (key == "n_sc") s.n_sc = toInt(full, value);
    else if (key == "n_cp") s.n_cp = toInt(full, value);
    else if (key == "n_pilot") s.n_pilot = toInt(full, value);
    else if (key == "n_data") s.n_data = toInt(full, value);
    else if (key == "taps") s.taps = toInt(full, value);
    else if (key == "paths_per_tap") s.paths_per_tap = toInt(full, value);
    else if (key == "qam_order") s.qam_order = toInt(full, value);
    else if (key == "snr_db") s.snr_db = toDouble(full, value);
    else if (key == "adc_max") s.adc_max = toDouble(full, value);
    else if (key == "seed") s.seed = toU64(full, value);
    else if (key == "pilot_style") {
      if (value == "random") s.pilot_style = PilotStyle::Random;
      else if (value == "orthogonal") s.pilot_style = PilotStyle::Orthogonal;
      else throw std::runtime_error("config: pilot_style must be random or orthogonal, got '" + value + "'");
    }
    else if (key == "impairment") {
      if (value == "linear") s.impairment = Impairment::Linear;
      else if (value == "one_bit") s.impairment = Impairment::OneBit;
      else throw std::runtime_error("config: impairment must be linear or one_bit, got '" + value + "'");
    } else throw std::runtime_error("config: unknown key '" + full + "'");
  } else if (section == "rc") {
    RcDetectOptions& r = spec.rc;
    if (key == "neurons") r.neurons = toInt(full, value);
    else if (key == "window") r.window = toInt(full, value);
    else if (key == "max_delay") r.max_delay = toInt(full, value);
    else if (key == "spectral_radius") r.spectral_radius = toDouble(full, value);
    else if (key == "input_scale") r.input_scale = toDouble(full, value);
    else if (key == "identity_perm_only") r.identity_perm_only = toBool(full, value);
    else if (key == "als_iters") r.als_iters = toInt(full, value);
    else if (key == "ridge") r.ridge = toDouble(full, value);
    else if (key == "seed") r.seed = toU64(full, value);
    else throw std::runtime_error("config: unknown key '" + full + "'");
  } else if (section == "wesn") {
    WesnOptions& w = spec.wesn;
    if (key == "neurons") w.neurons = toInt(full, value);
    else if (key == "buffer") w.buffer = toInt(full, value);
    else if (key == "max_delay") w.max_delay = toInt(full, value);
    else if (key == "spectral_radius") w.spectral_radius = toDouble(full, value);
    else if (key == "input_scale") w.input_scale = toDouble(full, value);
    else if (key == "ridge") w.ridge = toDouble(full, value);
    else if (key == "seed") w.seed = toU64(full, value);
    else throw std::runtime_error("config: unknown key '" + full + "'");
  } else if (section == "experiment") {
    if (key == "kind") {
      if (value == "ber_sweep") spec.kind = ExperimentKind::BerSweep;
      else if (value == "als_trace") spec.kind = ExperimentKind::AlsTrace;
      else if (value == "contour") spec.kind = ExperimentKind::Contour;
      else if (value == "onebit_sweep") spec.kind = ExperimentKind::OnebitSweep;
      else throw std::runtime_error("config: unknown experiment kind '" + value + "'");
    } else if (key == "trials") spec.trials = toInt(full, value);
    else if (key == "threads") spec.threads = toInt(full, value);
    else if (key == "output") spec.output_path = value;
    else if (key == "snr_grid") {
      spec.snr_grid.clear();
      for (const std::string& v : splitList(value)) spec.snr_grid.push_back(toDouble(full, v));
    } else if (key == "detectors") {
      spec.detectors = splitList(value);
    } else if (key == "ns_grid") {
      spec.ns_grid.clear();
      for (const std::string& v : splitList(value)) spec.ns_grid.push_back(toInt(full, v));
    } else if (key == "window_grid") {
      spec.window_grid.clear();
      for (const std::string& v : splitList(value)) spec.window_grid.push_back(toInt(full, v));
    } else if (key == "antennas") {
      spec.antenna_grid.clear();
      for (const std::string& v : splitList(value)) {
        size_t x = v.find('x');
        if (x == std::string::npos)
          throw std::runtime_error("config: antennas entries look like 8x8, got '" + v + "'");
        spec.antenna_grid.emplace_back(toInt(full, v.substr(0, x)), toInt(full, v.substr(x + 1)));
      }
    } else throw std::runtime_error("config: unknown key '" + full + "'");
  } else {
    throw std::runtime_error("config: unknown section '" + section + "'");
  }
}

}  // namespace

ExperimentSpec parseConfigText(const std::string& text) {
  ExperimentSpec spec = deskDefaults();
  std::stringstream ss(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::runtime_error("config line " + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (section.empty())
      throw std::runtime_error("config line " + std::to_string(lineno) + ": key outside any section");
    applyKey(spec, section, key, value);
  }
  return spec;
}

ExperimentSpec parseConfigFile(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parseConfigText(ss.str());
}

}  // namespace mmrc
