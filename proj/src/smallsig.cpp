#include "bgamp/smallsig.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace bgamp {

SmallSignalReport make_report(double a_v_dm, double a_v_cm, double gm_total, double gmb_total,
                              double ro_parallel) {
  SmallSignalReport r;
  r.a_v_dm = a_v_dm;
  r.a_v_cm = a_v_cm;
  r.cmrr_db = 20.0 * std::log10(std::abs(a_v_dm / a_v_cm));
  r.gm_total = gm_total;
  r.gmb_total = gmb_total;
  r.ro_parallel = ro_parallel;
  r.loop_quantity = gmb_total * ro_parallel;
  return r;
}

double gain_ccs_ol(const DerivativeSet& n, const DerivativeSet& p) {
  const double gds = n.gds1 + p.gds1;
  if (gds == 0) return -std::numeric_limits<double>::infinity();
  return -(n.gm1 + p.gm1) / gds;
}

BgGain gain_ccs_bg(const DerivativeSet& n, const DerivativeSet& p) {
  const double gm = n.gm1 + p.gm1;
  const double gmb = n.gmb1 + p.gmb1;
  const double gds = n.gds1 + p.gds1;
  BgGain g;
  g.asymptote = gmb > 0 ? -gm / gmb : -std::numeric_limits<double>::infinity();
  g.exact = (gds + gmb) > 0 ? -gm / (gds + gmb) : -std::numeric_limits<double>::infinity();
  g.gap_rel = std::isinf(g.exact) ? 0.0 : std::abs(g.exact - g.asymptote) / std::abs(g.exact);
  return g;
}

namespace {

int require_node(const Circuit& c, const std::string& name, const char* what) {
  const int i = c.node_index(name);
  if (i < 0) throw std::invalid_argument(std::string("small-signal: unknown ") + what + " node '" +
                                         name + "'");
  return i;
}

}  // namespace

double nodal_transfer(const Circuit& c, const OperatingPoint& op,
                      const std::map<std::string, double>& node_drive,
                      const std::map<std::string, double>& output_weight,
                      const std::vector<Shunt>& shunts, double temperature) {
  LinearSystem sys = linearize(c, op, temperature);
  const int n = static_cast<int>(sys.unknowns.size());

  for (const auto& sh : shunts) {
    const int a = require_node(c, sh.a, "shunt");
    const int b = require_node(c, sh.b, "shunt");
    if (a > 0) sys.jacobian(a - 1, a - 1) += sh.g;
    if (b > 0) sys.jacobian(b - 1, b - 1) += sh.g;
    if (a > 0 && b > 0) {
      sys.jacobian(a - 1, b - 1) -= sh.g;
      sys.jacobian(b - 1, a - 1) -= sh.g;
    }
  }

  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (const auto& [node, amp] : node_drive) {
    const int idx = require_node(c, node, "drive");
    int row = -1;
    for (size_t j = 0; j < c.sources.size(); ++j) {
      if (c.sources[j].npos == idx && c.sources[j].nneg == 0)
        row = sys.source_row.at(c.sources[j].name);
    }
    if (row < 0)
      throw std::invalid_argument("small-signal: no ground-referenced source drives node '" +
                                  node + "'");
    rhs[row] += amp;
  }

  Eigen::FullPivLU<Eigen::MatrixXd> lu(sys.jacobian);
  if (!lu.isInvertible()) {
    Eigen::MatrixXd kernel = lu.kernel();
    int worst = 0;
    kernel.col(0).cwiseAbs().maxCoeff(&worst);
    throw SolveError("small-signal: singular system; floating unknown '" + sys.unknowns[worst] +
                     "'");
  }
  const Eigen::VectorXd x = lu.solve(rhs);

  double out = 0.0;
  for (const auto& [node, w] : output_weight) {
    const int idx = require_node(c, node, "output");
    out += w * (idx == 0 ? 0.0 : x[idx - 1]);
  }
  return out;
}

double nodal_oracle(const Circuit& c, const OperatingPoint& op, const std::string& input_node,
                    const std::string& output_node, double temperature) {
  return nodal_transfer(c, op, {{input_node, 1.0}}, {{output_node, 1.0}}, {}, temperature);
}

double diff_dm_oracle(const Circuit& c, const OperatingPoint& op, double temperature) {
  return nodal_transfer(c, op, {{"inp", 0.5}, {"inn", -0.5}}, {{"outn", 1.0}, {"outp", -1.0}}, {},
                        temperature);
}

double diff_cm_oracle(const Circuit& c, const OperatingPoint& op, double temperature) {
  return nodal_transfer(c, op, {{"inp", 1.0}, {"inn", 1.0}}, {{"outn", 0.5}, {"outp", 0.5}}, {},
                        temperature);
}

NoiseReport noise_input_referred(const std::vector<std::pair<DerivativeSet, DeviceParams>>& devs,
                                 const std::vector<double>& freqs, bool differential,
                                 double temperature) {
  double gm_total = 0, thermal_num = 0, flicker_num = 0;
  for (const auto& [d, p] : devs) {
    gm_total += d.gm1;
    thermal_num += p.gamma_noise * d.gm1;
    const double wl_m2 = p.width * p.length * 1e-12;
    if (p.k_flicker > 0) flicker_num += d.gm1 * d.gm1 * p.k_flicker / (wl_m2 * p.cox_area);
  }
  if (!(gm_total > 0))
    throw std::domain_error("noise_input_referred: zero total transconductance");

  const double mult = differential ? 2.0 : 1.0;
  const double inv_gm2 = 1.0 / (gm_total * gm_total);
  const double thermal = 4.0 * kBoltzmann * temperature * thermal_num * inv_gm2;

  NoiseReport r;
  r.temperature = temperature;
  r.thermal_floor = mult * thermal;
  for (double f : freqs) {
    if (!(f > 0)) throw std::invalid_argument("noise_input_referred: frequencies must be > 0");
    r.psd.push_back({f, mult * (thermal + flicker_num * inv_gm2 / f)});
  }
  return r;
}

namespace {

double pair_sum_gm(const std::map<std::string, DerivativeSet>& d, const char* a, const char* b) {
  return d.at(a).gm1 + d.at(b).gm1;
}

double pair_sum_gds(const std::map<std::string, DerivativeSet>& d, const char* a, const char* b) {
  return d.at(a).gds1 + d.at(b).gds1;
}

}  // namespace

double cm_gain(TopologyKind kind, const std::map<std::string, DerivativeSet>& dsets) {
  if (kind == TopologyKind::DIFF_SCMFB)
    return -pair_sum_gm(dsets, "m3", "m4") / pair_sum_gm(dsets, "m5", "m6");
  if (kind == TopologyKind::DIFF_DCMFB) {
    const double gm = pair_sum_gm(dsets, "m5", "m6") + pair_sum_gm(dsets, "m7", "m8");
    const double ro_par = 1.0 / (pair_sum_gds(dsets, "m5", "m6") + pair_sum_gds(dsets, "m7", "m8"));
    return -1.0 / (gm * ro_par);
  }
  throw std::domain_error("cm_gain: differential kind required");
}

double cmrr_ratio(const std::map<std::string, DerivativeSet>& dsets) {
  if (!dsets.count("m7") || !dsets.count("m8"))
    throw std::invalid_argument("cmrr_ratio: needs a DCMFB derivative map (m1..m8)");
  const double gm34 = pair_sum_gm(dsets, "m3", "m4");
  const double gm56 = pair_sum_gm(dsets, "m5", "m6");
  const double gm78 = pair_sum_gm(dsets, "m7", "m8");
  const double ro_par = 1.0 / (pair_sum_gds(dsets, "m5", "m6") + pair_sum_gds(dsets, "m7", "m8"));
  return (gm34 / gm56) * (gm56 + gm78) * ro_par;
}

}  // namespace bgamp
