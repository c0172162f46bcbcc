#include "bgamp/dcsolve.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace bgamp {

namespace {

struct Layout {
  int nn = 0;  // non-ground node count
  int ns = 0;
  int rows() const { return nn + ns; }
  int node_row(int node) const { return node - 1; }  // node 0 is ground
};

Layout layout_of(const Circuit& c) {
  Layout l;
  l.nn = static_cast<int>(c.nodes.size()) - 1;
  l.ns = static_cast<int>(c.sources.size());
  return l;
}

double node_volt(const Eigen::VectorXd& x, const Layout& l, int node) {
  return node == 0 ? 0.0 : x[l.node_row(node)];
}

// KCL residual rows for nodes, then one v+ - v- = E row per source.
void assemble(const Circuit& c, const Layout& l, const Eigen::VectorXd& x, double temp,
              double source_scale, Eigen::VectorXd* f, Eigen::MatrixXd* jac) {
  if (f) f->setZero(l.rows());
  if (jac) jac->setZero(l.rows(), l.rows());

  for (const auto& d : c.devices) {
    const double vd = node_volt(x, l, d.drain);
    const double vg = node_volt(x, l, d.gate);
    const double vs = node_volt(x, l, d.source);
    const double vb = node_volt(x, l, d.backgate);
    const double vgs = vg - vs, vds = vd - vs, vbs = vb - vs;

    if (f) {
      const double i = drain_current(d.params, vgs, vds, vbs, temp);
      if (d.drain != 0) (*f)[l.node_row(d.drain)] += i;
      if (d.source != 0) (*f)[l.node_row(d.source)] -= i;
    }
    if (jac) {
      const DerivativeSet ds = derivatives(d.params, BiasTuple{vgs, vds, vbs, 0.0}, 1, temp);
      const double dg = ds.gm1, dd = ds.gds1, db = ds.gmb1, dsrc = -(ds.gm1 + ds.gds1 + ds.gmb1);
      auto stamp_row = [&](int row, double sign) {
        if (d.gate != 0) (*jac)(row, l.node_row(d.gate)) += sign * dg;
        if (d.drain != 0) (*jac)(row, l.node_row(d.drain)) += sign * dd;
        if (d.backgate != 0) (*jac)(row, l.node_row(d.backgate)) += sign * db;
        if (d.source != 0) (*jac)(row, l.node_row(d.source)) += sign * dsrc;
      };
      if (d.drain != 0) stamp_row(l.node_row(d.drain), 1.0);
      if (d.source != 0) stamp_row(l.node_row(d.source), -1.0);
    }
  }

  for (int j = 0; j < l.ns; ++j) {
    const auto& s = c.sources[j];
    const int row = l.nn + j;
    if (f) {
      (*f)[row] = node_volt(x, l, s.npos) - node_volt(x, l, s.nneg) - source_scale * s.volts;
      if (s.npos != 0) (*f)[l.node_row(s.npos)] += x[row];
      if (s.nneg != 0) (*f)[l.node_row(s.nneg)] -= x[row];
    }
    if (jac) {
      if (s.npos != 0) {
        (*jac)(row, l.node_row(s.npos)) += 1.0;
        (*jac)(l.node_row(s.npos), row) += 1.0;
      }
      if (s.nneg != 0) {
        (*jac)(row, l.node_row(s.nneg)) -= 1.0;
        (*jac)(l.node_row(s.nneg), row) -= 1.0;
      }
    }
  }
}

double worst_node_residual(const Eigen::VectorXd& f, const Layout& l, int* which = nullptr) {
  double worst = 0.0;
  for (int k = 0; k < l.nn; ++k) {
    if (std::abs(f[k]) > worst) {
      worst = std::abs(f[k]);
      if (which) *which = k + 1;
    }
  }
  return worst;
}

// Full-accuracy Newton at a fixed source scale. Returns false when it fails
// to converge (caller escalates to source stepping).
bool newton(const Circuit& c, const Layout& l, double temp, double source_scale,
            Eigen::VectorXd& x, int max_iter, int* iters_used) {
  const double step_cap = 0.1;
  double vlo = 0.0, vhi = 0.0;
  for (const auto& s : c.sources) {
    vlo = std::min(vlo, s.volts);
    vhi = std::max(vhi, s.volts);
  }
  vlo -= 0.5;
  vhi += 0.5;

  Eigen::VectorXd f(l.rows());
  Eigen::MatrixXd jac(l.rows(), l.rows());
  int polish = 0;
  for (int it = 0; it < max_iter; ++it) {
    if (iters_used) ++*iters_used;
    assemble(c, l, x, temp, source_scale, &f, &jac);
    Eigen::VectorXd dx = jac.partialPivLu().solve(-f);
    if (!dx.allFinite()) return false;

    double max_dv = 0.0;
    for (int k = 0; k < l.nn; ++k) max_dv = std::max(max_dv, std::abs(dx[k]));
    const double factor = max_dv > step_cap ? step_cap / max_dv : 1.0;
    x += factor * dx;
    for (int k = 0; k < l.nn; ++k) x[k] = std::clamp(x[k], vlo, vhi);

    if (factor == 1.0 && max_dv < 1e-13 && worst_node_residual(f, l) < 1e-12) {
      if (++polish >= 2) return true;  // two clean extra steps for downstream fits
    } else {
      polish = 0;
    }
  }
  return false;
}

void check_clm_supply(const Circuit& c) {
  double vmax = 0.0;
  for (const auto& s : c.sources) vmax = std::max(vmax, std::abs(s.volts));
  for (const auto& d : c.devices) {
    if (d.params.lambda0 / d.params.length * vmax >= 1.0)
      throw std::invalid_argument("solve_op: lambda0/L * vdd >= 1 for device " + d.name +
                                  " (output conductance would change sign in range)");
  }
}

bool params_equal(const DeviceParams& a, const DeviceParams& b) {
  return a.polarity == b.polarity && a.vt0 == b.vt0 && a.kprime == b.kprime &&
         a.n_slope == b.n_slope && a.lambda0 == b.lambda0 && a.chi_mag == b.chi_mag &&
         a.gamma_noise == b.gamma_noise && a.k_flicker == b.k_flicker &&
         a.cox_area == b.cox_area && a.width == b.width && a.length == b.length;
}

}  // namespace

OperatingPoint solve_op(const Circuit& c, const SolveOptions& opt) {
  if (c.sources.empty()) throw std::invalid_argument("solve_op: circuit has no sources");
  if (c.nodes.empty() || c.nodes[0] != "0")
    throw std::invalid_argument("solve_op: circuit has no ground node");
  check_clm_supply(c);

  const Layout l = layout_of(c);
  double vmid = 0.0;
  for (const auto& s : c.sources) vmid = std::max(vmid, std::abs(s.volts));
  vmid *= 0.5;

  Eigen::VectorXd x(l.rows());
  for (int k = 0; k < l.nn; ++k) x[k] = vmid;
  for (int j = 0; j < l.ns; ++j) x[l.nn + j] = 0.0;
  if (opt.initial_guess) {
    for (const auto& [name, v] : *opt.initial_guess) {
      int node = c.node_index(name);
      if (node > 0) x[l.node_row(node)] = v;
    }
  }

  int iters = 0;
  bool ok = newton(c, l, opt.temperature, 1.0, x, 200, &iters);
  if (!ok) {
    // Source stepping: ramp every EMF up from 5%, warm-starting each stage.
    for (int k = 0; k < l.nn; ++k) x[k] = 0.0;
    for (int j = 0; j < l.ns; ++j) x[l.nn + j] = 0.0;
    ok = true;
    for (int step = 1; step <= 20; ++step) {
      const double scale = 0.05 + 0.95 * (step - 1) / 19.0;
      if (!newton(c, l, opt.temperature, scale, x, 200, &iters)) {
        ok = false;
        break;
      }
    }
  }

  Eigen::VectorXd f(l.rows());
  assemble(c, l, x, opt.temperature, 1.0, &f, nullptr);
  int worst_node = 0;
  const double res = worst_node_residual(f, l, &worst_node);
  if (!ok || res > 1e-12) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", res);
    throw SolveError("solve_op: no convergence; worst residual " + std::string(buf) +
                     " A at node '" + c.nodes[worst_node] + "'");
  }

  OperatingPoint op;
  op.converged = true;
  op.iterations = iters;
  op.residual = res;
  for (size_t i = 0; i < c.nodes.size(); ++i)
    op.node_voltages[c.nodes[i]] = i == 0 ? 0.0 : x[static_cast<int>(i) - 1];
  for (const auto& d : c.devices) {
    const double vd = node_volt(x, l, d.drain);
    const double vg = node_volt(x, l, d.gate);
    const double vs = node_volt(x, l, d.source);
    const double vb = node_volt(x, l, d.backgate);
    op.device_biases[d.name] =
        make_bias(d.params, vg - vs, vd - vs, vb - vs, opt.temperature);
  }
  return op;
}

OperatingPoint solve_op(const Topology& t, const SolveOptions& opt) {
  return solve_op(build_circuit(t), opt);
}

OperatingPoint solve_op(const Netlist& nl, const SolveOptions& opt) {
  return solve_op(build_circuit(nl), opt);
}

TransferCurve sweep_dc(const Circuit& c, const std::string& input_node,
                       std::pair<double, double> range, int points,
                       const std::string& output_node, const SolveOptions& opt) {
  if (points < 2) throw std::invalid_argument("sweep_dc: points must be >= 2");
  if (!(range.second > range.first))
    throw std::invalid_argument("sweep_dc: degenerate range (needs range.second > range.first)");
  const int in_node = c.node_index(input_node);
  const int out_node = c.node_index(output_node);
  if (out_node < 0) throw std::invalid_argument("sweep_dc: unknown output node " + output_node);
  int src = -1;
  for (size_t j = 0; j < c.sources.size(); ++j) {
    if (c.sources[j].npos == in_node && c.sources[j].nneg == 0) src = static_cast<int>(j);
  }
  if (in_node < 0 || src < 0)
    throw std::invalid_argument("sweep_dc: no ground-referenced source drives node " + input_node);

  Circuit work = c;
  TransferCurve tc;
  SolveOptions point_opt = opt;
  for (int i = 0; i < points; ++i) {
    const double v = range.first + (range.second - range.first) * i / (points - 1);
    work.sources[src].volts = v;
    OperatingPoint op;
    try {
      op = solve_op(work, point_opt);
    } catch (const SolveError& e) {
      throw SolveError("sweep_dc: at input " + std::to_string(v) + " V: " + e.what());
    }
    tc.input.push_back(v);
    tc.output.push_back(op.node_voltages.at(output_node));
    point_opt.initial_guess = op.node_voltages;  // continuation
  }

  // Longest strictly monotone run in the overall direction.
  const double dir = tc.output.back() >= tc.output.front() ? 1.0 : -1.0;
  int best_l = 0, best_r = 0, run_l = 0;
  for (int i = 1; i < points; ++i) {
    if (dir * (tc.output[i] - tc.output[i - 1]) > 0) {
      if (i - run_l > best_r - best_l) {
        best_l = run_l;
        best_r = i;
      }
    } else {
      run_l = i;
    }
  }
  tc.monotone_span = {best_l, best_r};
  return tc;
}

BiasMatchResult bias_match(const Topology& ol, const Topology& bg, double temperature) {
  if (ol.kind != TopologyKind::CCS_OL || bg.kind != TopologyKind::CCS_BG)
    throw std::invalid_argument("bias_match: expects (CCS_OL, CCS_BG)");
  if (ol.devices.size() != bg.devices.size())
    throw std::invalid_argument("bias_match: device counts differ");
  for (size_t i = 0; i < ol.devices.size(); ++i) {
    if (!params_equal(ol.devices[i].params, bg.devices[i].params))
      throw std::invalid_argument("bias_match: topologies must share device cards");
  }

  SolveOptions opt;
  opt.temperature = temperature;
  BiasMatchResult r;
  r.bg_op = solve_op(bg, opt);
  r.matched_ol = ol;

  for (size_t i = 0; i < bg.devices.size(); ++i) {
    const auto& dev = bg.devices[i];
    const double vbs_bg = r.bg_op.node_voltages.at(dev.backgate) -
                          r.bg_op.node_voltages.at(dev.source);
    // Open-loop back gates sit on the source rail here, so vbs_ol = 0 and the
    // threshold shift that reproduces the back-gate operating point is exact.
    const double sgn = dev.params.polarity == Polarity::N ? -1.0 : 1.0;
    const double offset = sgn * dev.params.chi_mag * vbs_bg;
    r.vt0_offset[dev.name] = offset;
    r.matched_ol.devices[i].params.vt0 += offset;
  }

  SolveOptions warm = opt;
  warm.initial_guess = r.bg_op.node_voltages;
  r.ol_op = solve_op(r.matched_ol, warm);

  for (const auto& [name, bias_bg] : r.bg_op.device_biases) {
    const auto& bias_ol = r.ol_op.device_biases.at(name);
    const double dv = std::max(std::abs(bias_ol.vgs - bias_bg.vgs),
                               std::abs(bias_ol.vds - bias_bg.vds));
    const double di = std::abs(bias_ol.ids - bias_bg.ids) / std::max(1e-30, std::abs(bias_bg.ids));
    if (dv > 1e-9 || di > 1e-12)
      throw SolveError("bias_match: no offset within the 100 mV window reproduces the "
                       "operating point of device " + name);
  }
  return r;
}

LinearSystem linearize(const Circuit& c, const OperatingPoint& op, double temperature) {
  const Layout l = layout_of(c);
  Eigen::VectorXd x(l.rows());
  for (int k = 0; k < l.nn; ++k) x[k] = op.node_voltages.at(c.nodes[k + 1]);
  for (int j = 0; j < l.ns; ++j) x[l.nn + j] = 0.0;  // branch currents do not enter the Jacobian

  LinearSystem sys;
  sys.jacobian.resize(l.rows(), l.rows());
  assemble(c, l, x, temperature, 1.0, nullptr, &sys.jacobian);
  for (int k = 0; k < l.nn; ++k) {
    sys.unknowns.push_back(c.nodes[k + 1]);
    sys.node_row[c.nodes[k + 1]] = k;
  }
  for (int j = 0; j < l.ns; ++j) {
    sys.unknowns.push_back("i(" + c.sources[j].name + ")");
    sys.source_row[c.sources[j].name] = l.nn + j;
  }
  return sys;
}

}  // namespace bgamp
