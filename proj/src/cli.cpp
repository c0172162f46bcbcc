#include "bgamp/cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "bgamp/dcsolve.hpp"
#include "bgamp/distortion.hpp"
#include "bgamp/mismatch.hpp"
#include "bgamp/smallsig.hpp"

namespace bgamp {

namespace {

constexpr const char* kCrlf = "\r\n";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fp(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.11e", v);
  return buf;
}

TopologyKind kind_of(const std::string& name) {
  if (name == "ccs" || name == "ccs_bg") return TopologyKind::CCS_BG;
  if (name == "ccs_ol") return TopologyKind::CCS_OL;
  if (name == "scmfb") return TopologyKind::DIFF_SCMFB;
  if (name == "dcmfb") return TopologyKind::DIFF_DCMFB;
  throw UsageError("unknown template '" + name + "' (ccs, ccs_ol, scmfb, dcmfb)");
}

struct Cards {
  DefaultCards c;
  Supplies& supplies() { return c.supplies; }
};

Cards make_cards(const RunConfig& cfg, double length_um) {
  Cards k{default_cards()};
  if (cfg.chi_override) {
    k.c.n.chi_mag = k.c.p.chi_mag = *cfg.chi_override;
    k.c.cmfb_n.chi_mag = k.c.cmfb_p.chi_mag = *cfg.chi_override;
  }
  k.c.n.length = k.c.p.length = k.c.cmfb_n.length = k.c.cmfb_p.length = length_um;
  return k;
}

Topology make_template(const RunConfig& cfg, TopologyKind kind, double length_um) {
  Cards k = make_cards(cfg, length_um);
  return build_topology(kind, k.c.n, k.c.p, k.c.cmfb_n, k.c.cmfb_p, k.c.supplies);
}

std::vector<double> default_lengths(const std::string& command) {
  if (command == "gain" || command == "dist") {
    std::vector<double> l;
    for (int i = 0; i < 8; ++i) l.push_back(0.15 + (1.0 - 0.15) * i / 7.0);
    return l;
  }
  if (command == "cmrr" || command == "mc") return {0.15, 1.0};
  return {1.0};
}

std::vector<double> noise_grid() {
  std::vector<double> f;
  for (int k = 0; k <= 90; ++k) f.push_back(std::pow(10.0, k / 10.0));
  return f;
}

std::map<std::string, DerivativeSet> derivative_map(const Topology& t, const OperatingPoint& op,
                                                    double temp) {
  std::map<std::string, DerivativeSet> d;
  for (const auto& dev : t.devices)
    d[dev.name] = derivatives(dev.params, op.device_biases.at(dev.name), 3, temp);
  return d;
}

// Fit about the bias with an output swing capped near a quarter volt;
// halves the window if the amplitude self-check objects.
PowerSeries fit_at_bias(const Circuit& c, const std::string& in_node,
                        const std::string& out_node, double center, double a1_hint,
                        const OperatingPoint& center_op, double temp) {
  double amp = std::min(1e-3, 0.25 / std::max(1.0, std::abs(a1_hint)));
  SolveOptions opt;
  opt.temperature = temp;
  // High-gain stages need not re-solve cold at the window edge; seed from the
  // known center op and let the sweep's own continuation track the rest.
  opt.initial_guess = center_op.node_voltages;
  for (int attempt = 0;; ++attempt) {
    try {
      TransferCurve curve = sweep_dc(c, in_node, {center - amp, center + amp}, 201, out_node, opt);
      return fit_series(curve, center, amp);
    } catch (const std::runtime_error&) {
      if (attempt >= 3) throw;
      amp *= 0.5;
    }
  }
}

struct MatchedPair {
  BiasMatchResult match;
  Circuit ol_circuit, bg_circuit;
  CombinedConductances g;
  double gm_over_id;  // N input device, at the shared operating point
};

MatchedPair matched_ccs(const RunConfig& cfg, double length_um, double input_bias, double temp) {
  Cards k = make_cards(cfg, length_um);
  Topology ol = build_topology(TopologyKind::CCS_OL, k.c.n, k.c.p, {}, {}, k.c.supplies);
  Topology bg = build_topology(TopologyKind::CCS_BG, k.c.n, k.c.p, {}, {}, k.c.supplies);
  ol.input_bias = bg.input_bias = input_bias;

  MatchedPair m{bias_match(ol, bg, temp), {}, {}, {}, 0};
  m.ol_circuit = build_circuit(m.match.matched_ol);
  m.bg_circuit = build_circuit(bg);
  const auto& bias_n = m.match.bg_op.device_biases.at("m1");
  const auto& bias_p = m.match.bg_op.device_biases.at("m2");
  const DerivativeSet dn = derivatives(bg.devices[0].params, bias_n, 3, temp);
  const DerivativeSet dp = derivatives(bg.devices[1].params, bias_p, 3, temp);
  m.g = combine(bg.devices[0].params, dn, bg.devices[1].params, dp);
  m.gm_over_id = dn.gm1 / bias_n.ids;
  return m;
}

void require_single_template(const RunConfig& cfg, const char* command) {
  if (cfg.netlist_path.size())
    throw UsageError(std::string(command) + " requires --template, not --netlist");
  if (cfg.templates.size() != 1)
    throw UsageError(std::string(command) + " takes exactly one --template");
}

// ---- commands ----------------------------------------------------------

void cmd_op(const RunConfig& cfg, std::string& csv) {
  Circuit c;
  if (!cfg.netlist_path.empty()) {
    std::ifstream in(cfg.netlist_path);
    if (!in) throw UsageError("cannot open netlist '" + cfg.netlist_path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    c = build_circuit(parse_netlist(ss.str()));
  } else {
    if (cfg.templates.size() != 1) throw UsageError("op takes exactly one --template or --netlist");
    double length = cfg.lengths_um.empty() ? 1.0 : cfg.lengths_um.front();
    c = build_circuit(make_template(cfg, kind_of(cfg.templates[0]), length));
  }
  SolveOptions opt;
  opt.temperature = cfg.temperature;
  csv += std::string("item,value") + kCrlf;
  const OperatingPoint op = solve_op(c, opt);
  for (const auto& [node, v] : op.node_voltages) csv += "node:" + node + "," + fp(v) + kCrlf;
  for (const auto& [dev, b] : op.device_biases) {
    csv += "device:" + dev + ":vgs," + fp(b.vgs) + kCrlf;
    csv += "device:" + dev + ":vds," + fp(b.vds) + kCrlf;
    csv += "device:" + dev + ":vbs," + fp(b.vbs) + kCrlf;
    csv += "device:" + dev + ":ids," + fp(b.ids) + kCrlf;
  }
  csv += "iterations," + std::to_string(op.iterations) + kCrlf;
  csv += "residual_a," + fp(op.residual) + kCrlf;
}

void cmd_sweep(const RunConfig& cfg, std::string& csv) {
  Circuit c;
  std::string in_node, out_node;
  double center = 0;
  if (!cfg.netlist_path.empty()) {
    std::ifstream in(cfg.netlist_path);
    if (!in) throw UsageError("cannot open netlist '" + cfg.netlist_path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    c = build_circuit(parse_netlist(ss.str()));
    int src = -1;
    for (size_t j = 0; j < c.sources.size(); ++j)
      if (c.sources[j].name == "vin") src = static_cast<int>(j);
    if (src < 0) throw UsageError("sweep over a netlist drives the source named 'vin'");
    in_node = c.nodes[c.sources[src].npos];
    out_node = "out";
    center = c.sources[src].volts;
  } else {
    if (cfg.templates.size() != 1)
      throw UsageError("sweep takes exactly one --template or --netlist");
    const TopologyKind kind = kind_of(cfg.templates[0]);
    const double length = cfg.lengths_um.empty() ? 1.0 : cfg.lengths_um.front();
    const Topology t = make_template(cfg, kind, length);
    c = build_circuit(t);
    in_node = t.input_nodes.front();
    out_node = t.devices[0].drain;
    center = t.input_bias;
  }
  SolveOptions opt;
  opt.temperature = cfg.temperature;
  // The model covers saturation only, so size the window to the stage gain:
  // keep the expected output excursion inside roughly half the supply.
  const OperatingPoint op = solve_op(c, opt);
  const double gain = nodal_oracle(c, op, in_node, out_node, cfg.temperature);
  const double half = std::min(0.2, 0.9 / std::max(1.0, std::abs(gain)));
  const int points = cfg.n > 0 ? cfg.n : 201;
  opt.initial_guess = op.node_voltages;  // continuation seed for the first point
  const TransferCurve tc =
      sweep_dc(c, in_node, {center - half, center + half}, points, out_node, opt);
  csv += std::string("input_v,output_v") + kCrlf;
  for (size_t i = 0; i < tc.input.size(); ++i)
    csv += fp(tc.input[i]) + "," + fp(tc.output[i]) + kCrlf;
}

void cmd_gain(const RunConfig& cfg, std::string& csv) {
  require_single_template(cfg, "gain");
  const TopologyKind kind = kind_of(cfg.templates[0]);
  const std::vector<double> lengths =
      cfg.lengths_um.empty() ? default_lengths("gain") : cfg.lengths_um;
  SolveOptions opt;
  opt.temperature = cfg.temperature;

  if (kind == TopologyKind::CCS_BG || kind == TopologyKind::CCS_OL) {
    csv += std::string(
               "L_um,gain_ol_calc,gain_ol_oracle,gain_bg_calc,gain_bg_oracle,gain_bg_asymptote") +
           kCrlf;
    for (double length : lengths) {
      const Topology ol = make_template(cfg, TopologyKind::CCS_OL, length);
      const Topology bg = make_template(cfg, TopologyKind::CCS_BG, length);
      const Circuit col = build_circuit(ol), cbg = build_circuit(bg);
      const OperatingPoint op_ol = solve_op(col, opt), op_bg = solve_op(cbg, opt);
      const auto dol = derivative_map(ol, op_ol, cfg.temperature);
      const auto dbg = derivative_map(bg, op_bg, cfg.temperature);
      const double ol_calc = gain_ccs_ol(dol.at("m1"), dol.at("m2"));
      const double ol_orc = nodal_oracle(col, op_ol, "in", "out", cfg.temperature);
      const BgGain bgg = gain_ccs_bg(dbg.at("m1"), dbg.at("m2"));
      const double bg_orc = nodal_oracle(cbg, op_bg, "in", "out", cfg.temperature);
      csv += fp(length) + "," + fp(ol_calc) + "," + fp(ol_orc) + "," + fp(bgg.exact) + "," +
             fp(bg_orc) + "," + fp(bgg.asymptote) + kCrlf;
    }
  } else {
    csv += std::string("L_um,gain_dm_calc,gain_dm_oracle,gain_dm_asymptote") + kCrlf;
    for (double length : lengths) {
      const Topology t = make_template(cfg, kind, length);
      const Circuit c = build_circuit(t);
      const OperatingPoint op = solve_op(c, opt);
      const auto d = derivative_map(t, op, cfg.temperature);
      const BgGain g = gain_ccs_bg(d.at("m1"), d.at("m3"));
      const double orc = diff_dm_oracle(c, op, cfg.temperature);
      csv += fp(length) + "," + fp(g.exact) + "," + fp(orc) + "," + fp(g.asymptote) + kCrlf;
    }
  }
}

void cmd_noise(const RunConfig& cfg, std::string& csv) {
  require_single_template(cfg, "noise");
  const TopologyKind kind = kind_of(cfg.templates[0]);
  const double length = cfg.lengths_um.empty() ? 1.0 : cfg.lengths_um.front();
  const std::vector<double> freqs = noise_grid();

  if (kind == TopologyKind::CCS_BG || kind == TopologyKind::CCS_OL) {
    Cards k = make_cards(cfg, length);
    double bias = k.c.supplies.cmfb_ref;
    if (!cfg.gm_over_id.empty())
      bias = gm_over_id_bias(k.c.n, cfg.gm_over_id.front(), k.c.supplies, cfg.temperature).vgs;
    const MatchedPair m = matched_ccs(cfg, length, bias, cfg.temperature);
    const Topology bg_topo = build_topology(TopologyKind::CCS_BG, k.c.n, k.c.p, {}, {},
                                            k.c.supplies);
    std::vector<std::pair<DerivativeSet, DeviceParams>> devs_ol, devs_bg;
    for (size_t i = 0; i < bg_topo.devices.size(); ++i) {
      const auto& name = bg_topo.devices[i].name;
      devs_ol.emplace_back(derivatives(m.match.matched_ol.devices[i].params,
                                       m.match.ol_op.device_biases.at(name), 3, cfg.temperature),
                           m.match.matched_ol.devices[i].params);
      devs_bg.emplace_back(derivatives(bg_topo.devices[i].params,
                                       m.match.bg_op.device_biases.at(name), 3, cfg.temperature),
                           bg_topo.devices[i].params);
    }
    const NoiseReport ol = noise_input_referred(devs_ol, freqs, false, cfg.temperature);
    const NoiseReport bg = noise_input_referred(devs_bg, freqs, false, cfg.temperature);
    csv += std::string("freq_hz,psd_ol_v2hz,psd_bg_v2hz") + kCrlf;
    for (size_t i = 0; i < freqs.size(); ++i)
      csv += fp(freqs[i]) + "," + fp(ol.psd[i].psd_v2_per_hz) + "," +
             fp(bg.psd[i].psd_v2_per_hz) + kCrlf;
  } else {
    const Topology t = make_template(cfg, kind, length);
    SolveOptions opt;
    opt.temperature = cfg.temperature;
    const OperatingPoint op = solve_op(t, opt);
    std::vector<std::pair<DerivativeSet, DeviceParams>> devs;
    for (const auto& dev : t.devices) {
      if (dev.name == "m1" || dev.name == "m3")  // one signal half; x2 flag covers the pair
        devs.emplace_back(derivatives(dev.params, op.device_biases.at(dev.name), 3,
                                      cfg.temperature),
                          dev.params);
    }
    const NoiseReport r = noise_input_referred(devs, freqs, true, cfg.temperature);
    csv += std::string("freq_hz,psd_v2hz") + kCrlf;
    for (const auto& pt : r.psd) csv += fp(pt.freq_hz) + "," + fp(pt.psd_v2_per_hz) + kCrlf;
  }
}

void cmd_dist(const RunConfig& cfg, std::string& csv) {
  require_single_template(cfg, "dist");
  const TopologyKind kind = kind_of(cfg.templates[0]);
  if (kind != TopologyKind::CCS_BG && kind != TopologyKind::CCS_OL)
    throw UsageError("dist runs on the ccs template (the comparison is open loop vs back gate)");
  const std::vector<double> lengths =
      cfg.lengths_um.empty() ? default_lengths("dist") : cfg.lengths_um;

  csv += std::string("L_um,gm_over_id,ip3_ol_v,ip3_bg_v,enhancement_pred,enhancement_measured,"
                     "enhancement_over_pred,ip3_ol_fit_v,ip3_bg_fit_v") +
         kCrlf;
  for (double length : lengths) {
    Cards k = make_cards(cfg, length);
    std::vector<double> biases;
    if (cfg.gm_over_id.empty()) {
      biases.push_back(k.c.supplies.cmfb_ref);
    } else {
      for (double target : cfg.gm_over_id)
        biases.push_back(gm_over_id_bias(k.c.n, target, k.c.supplies, cfg.temperature).vgs);
    }
    for (double bias : biases) {
      const MatchedPair m = matched_ccs(cfg, length, bias, cfg.temperature);
      const PowerSeries ol = series_open_loop(m.g);
      const PowerSeries bg = series_backgate(m.g);
      const EnhancementReport rep = ip3_enhancement_report(m.g);
      const PowerSeries ol_fit =
          fit_at_bias(m.ol_circuit, "in", "out", bias, ol.a1, m.match.ol_op, cfg.temperature);
      const PowerSeries bg_fit =
          fit_at_bias(m.bg_circuit, "in", "out", bias, bg.a1, m.match.bg_op, cfg.temperature);
      csv += fp(length) + "," + fp(m.gm_over_id) + "," + fp(ip3(ol)) + "," + fp(ip3(bg)) + "," +
             fp(rep.predicted) + "," + fp(rep.measured) + "," + fp(rep.measured_over_pred) + "," +
             fp(ip3(ol_fit)) + "," + fp(ip3(bg_fit)) + kCrlf;
    }
  }
}

void cmd_cmrr(const RunConfig& cfg, std::string& csv) {
  if (!cfg.netlist_path.empty()) throw UsageError("cmrr requires --template");
  std::vector<std::string> names =
      cfg.templates.empty() ? std::vector<std::string>{"scmfb", "dcmfb"} : cfg.templates;
  const std::vector<double> lengths =
      cfg.lengths_um.empty() ? default_lengths("cmrr") : cfg.lengths_um;
  SolveOptions opt;
  opt.temperature = cfg.temperature;

  csv += std::string("topology,L_um,a_dm,a_cm_calc,a_cm_oracle,cmrr_db") + kCrlf;
  for (const auto& name : names) {
    const TopologyKind kind = kind_of(name);
    if (kind != TopologyKind::DIFF_SCMFB && kind != TopologyKind::DIFF_DCMFB)
      throw UsageError("cmrr runs on differential templates (scmfb, dcmfb)");
    for (double length : lengths) {
      const Topology t = make_template(cfg, kind, length);
      const Circuit c = build_circuit(t);
      const OperatingPoint op = solve_op(c, opt);
      const auto d = derivative_map(t, op, cfg.temperature);
      const double a_dm = diff_dm_oracle(c, op, cfg.temperature);
      const double a_cm_calc = cm_gain(kind, d);
      const double a_cm_orc = diff_cm_oracle(c, op, cfg.temperature);
      const double cmrr_db = 20.0 * std::log10(std::abs(a_dm / a_cm_orc));
      csv += to_string(kind) + "," + fp(length) + "," + fp(a_dm) + "," + fp(a_cm_calc) + "," +
             fp(a_cm_orc) + "," + fp(cmrr_db) + kCrlf;
    }
  }
}

void cmd_mc(const RunConfig& cfg, std::string& csv, int& exit_code) {
  if (!cfg.netlist_path.empty()) throw UsageError("mc requires --template");
  std::vector<std::string> names =
      cfg.templates.empty() ? std::vector<std::string>{"scmfb", "dcmfb"} : cfg.templates;
  const std::vector<double> lengths =
      cfg.lengths_um.empty() ? default_lengths("mc") : cfg.lengths_um;

  MismatchSpec spec;
  spec.samples = cfg.n > 0 ? cfg.n : 100;
  spec.seed = cfg.seed;
  if (cfg.a_vt) spec.a_vt = *cfg.a_vt;

  csv += std::string("topology,length_um,cmrr_mean_db,cmrr_std_db,n,n_failed,seed") + kCrlf;
  bool valid = true;
  for (const auto& name : names) {
    const TopologyKind kind = kind_of(name);
    if (kind != TopologyKind::DIFF_SCMFB && kind != TopologyKind::DIFF_DCMFB)
      throw UsageError("mc runs on differential templates (scmfb, dcmfb)");
    Cards k = make_cards(cfg, 1.0);
    const CmrrStats stats = cmrr_monte_carlo(kind, lengths, spec, k.c.n, k.c.p, k.c.cmfb_n,
                                             k.c.cmfb_p, k.c.supplies, cfg.temperature);
    valid = valid && stats.valid;
    for (const auto& r : stats.rows)
      csv += r.topology + "," + fp(r.length_um) + "," + fp(r.mean_db) + "," + fp(r.std_db) + "," +
             std::to_string(r.samples) + "," + std::to_string(r.failed) + "," +
             std::to_string(r.seed) + kCrlf;
  }
  if (!valid) {
    csv += std::string("# ERROR: non-convergence above 5% of samples; run flagged invalid") +
           kCrlf;
    exit_code = 1;
  }
}

void write_output(const std::string& path, const std::string& csv) {
  if (path.empty()) {
    std::cout << csv;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write output file '" + path + "'");
  out << csv;
}

}  // namespace

std::vector<double> parse_axis(const std::string& text) {
  auto number = [](const std::string& s) {
    size_t pos = 0;
    double v;
    try {
      v = std::stod(s, &pos);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad number '" + s + "' in axis");
    }
    if (pos != s.size()) throw std::invalid_argument("bad number '" + s + "' in axis");
    return v;
  };

  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    std::istringstream ss(text);
    std::string a, b, c;
    if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, c) ||
        c.empty())
      throw std::invalid_argument("axis range needs start:stop:count");
    const double lo = number(a), hi = number(b);
    const double cnt = number(c);
    const int n = static_cast<int>(cnt);
    if (n < 2 || cnt != n) throw std::invalid_argument("axis count must be an integer >= 2");
    for (int i = 0; i < n; ++i) out.push_back(lo + (hi - lo) * i / (n - 1));
    return out;
  }
  std::istringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) throw std::invalid_argument("empty element in axis list");
    out.push_back(number(item));
  }
  if (out.empty()) throw std::invalid_argument("empty axis");
  return out;
}

BiasTuple gm_over_id_bias(const DeviceParams& params, double target, const Supplies& supplies,
                          double temperature) {
  validate(params);
  const double ceiling = 1.0 / (params.n_slope * thermal_voltage(temperature));
  if (!(target > 0) || target >= ceiling) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "gm_over_id_bias: target %.6g S/A outside (0, ceiling %.6g S/A) for n_slope "
                  "%.4g",
                  target, ceiling, params.n_slope);
    throw std::domain_error(buf);
  }
  const double vds = 0.5 * (supplies.vdd - supplies.vss);
  auto ratio = [&](double vgs) {
    const BiasTuple b = make_bias(params, vgs, vds, 0.0, temperature);
    return derivatives(params, b, 1, temperature).gm1 / b.ids;
  };
  double lo = params.vt0 - 2.0;  // near the weak-inversion ceiling
  double hi = params.vt0 + 4.0;
  while (ratio(hi) > target) hi += 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    (ratio(mid) > target ? lo : hi) = mid;
  }
  const double vgs = 0.5 * (lo + hi);
  const BiasTuple b = make_bias(params, vgs, vds, 0.0, temperature);
  const double got = derivatives(params, b, 1, temperature).gm1 / b.ids;
  if (std::abs(got - target) > 1e-3 * target)
    throw std::domain_error("gm_over_id_bias: bisection failed the 0.1% self-check");
  return b;
}

int run(const RunConfig& cfg) {
  std::string csv;
  int exit_code = 0;
  try {
    if (cfg.command == "op") cmd_op(cfg, csv);
    else if (cfg.command == "sweep") cmd_sweep(cfg, csv);
    else if (cfg.command == "gain") cmd_gain(cfg, csv);
    else if (cfg.command == "noise") cmd_noise(cfg, csv);
    else if (cfg.command == "dist") cmd_dist(cfg, csv);
    else if (cfg.command == "cmrr") cmd_cmrr(cfg, csv);
    else if (cfg.command == "mc") cmd_mc(cfg, csv, exit_code);
    else throw UsageError("unknown command '" + cfg.command + "'");
    write_output(cfg.out_path, csv);
    return exit_code;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << (cfg.netlist_path.empty() ? "netlist" : cfg.netlist_path) << ": " << e.what()
              << "\n";
    return 2;
  } catch (const std::exception& e) {
    csv += std::string("# ERROR: ") + e.what() + kCrlf;
    try {
      write_output(cfg.out_path, csv);
    } catch (const std::exception&) {
    }
    std::cerr << "analysis error: " << e.what() << "\n";
    return 1;
  }
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"inverter-based amplifier analysis with back-gate feedback"};
  app.fallthrough(true);
  app.require_subcommand(1);

  std::string tmpl, netlist, l_axis, gmid_axis, out;
  int n = -1;
  std::uint64_t seed = 0;
  double temp = kRoomTemperature, chi = 0, avt = 0;
  app.add_option("--template", tmpl, "ccs | ccs_ol | scmfb | dcmfb (comma list where allowed)");
  app.add_option("--netlist", netlist, "netlist file path");
  app.add_option("--L", l_axis, "lengths in um: comma list or start:stop:count");
  app.add_option("--gmid", gmid_axis, "gm/ID targets in S/A");
  app.add_option("--n", n, "points (sweep) or samples (mc)");
  app.add_option("--seed", seed, "RNG seed (fallback: BGAMP_SEED)");
  app.add_option("--temp", temp, "temperature in kelvin");
  app.add_option("--out", out, "output CSV path (default stdout)");
  app.add_option("--chi", chi, "override chi_mag on the default cards");
  app.add_option("--avt", avt, "mismatch coefficient A_vt in V*um");

  for (const char* name : {"op", "sweep", "gain", "noise", "dist", "cmrr", "mc"})
    app.add_subcommand(name, "");

  std::vector<const char*> args(argv, argv + argc);
  try {
    app.parse(argc, const_cast<char**>(args.data()));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  RunConfig cfg;
  cfg.command = app.get_subcommands().front()->get_name();
  cfg.netlist_path = netlist;
  cfg.n = n;
  cfg.temperature = temp;
  cfg.out_path = out;
  if (app.count("--chi")) cfg.chi_override = chi;
  if (app.count("--avt")) cfg.a_vt = avt;

  try {
    if (!tmpl.empty()) {
      std::istringstream ss(tmpl);
      std::string item;
      while (std::getline(ss, item, ',')) cfg.templates.push_back(item);
    }
    if (!l_axis.empty()) cfg.lengths_um = parse_axis(l_axis);
    if (!gmid_axis.empty()) cfg.gm_over_id = parse_axis(gmid_axis);
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  if (app.count("--seed")) {
    cfg.seed = seed;
  } else if (const char* env = std::getenv("BGAMP_SEED")) {
    char* end = nullptr;
    cfg.seed = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') {
      std::cerr << "usage error: BGAMP_SEED is not an unsigned integer\n";
      return 2;
    }
  }

  if (!(cfg.temperature > 0)) {
    std::cerr << "usage error: --temp must be positive\n";
    return 2;
  }
  return run(cfg);
}

}  // namespace bgamp
