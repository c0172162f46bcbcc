#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bgamp/circuits.hpp"
#include "bgamp/dcsolve.hpp"
#include "bgamp/device.hpp"

namespace bgamp {

struct SmallSignalReport {
  double a_v_dm = 0;        // V/V
  double a_v_cm = 0;        // V/V
  double cmrr_db = 0;       // 20*log10|a_v_dm/a_v_cm|
  double gm_total = 0;      // S
  double gmb_total = 0;     // S
  double ro_parallel = 0;   // ohms
  double loop_quantity = 0; // gmb_total * ro_parallel
};

SmallSignalReport make_report(double a_v_dm, double a_v_cm, double gm_total, double gmb_total,
                              double ro_parallel);

struct NoisePoint {
  double freq_hz;
  double psd_v2_per_hz;
};

struct NoiseReport {
  std::vector<NoisePoint> psd;
  double thermal_floor = 0;
  double temperature = kRoomTemperature;
};

// -(gm_n1 + gm_p1) * (ro_n || ro_p). Both gds zero returns -infinity.
double gain_ccs_ol(const DerivativeSet& n, const DerivativeSet& p);

struct BgGain {
  double exact;      // -(sum gm)*(ro||)/(1 + (sum gmb)*(ro||))
  double asymptote;  // -(sum gm)/(sum gmb)
  double gap_rel;    // |exact - asymptote| / |exact|
};

BgGain gain_ccs_bg(const DerivativeSet& n, const DerivativeSet& p);

struct Shunt {
  std::string a, b;  // node names, "0" allowed
  double g;          // siemens
};

// Reference linear solve: stamps gm1/gds1/gmb1 of every device at the
// operating point plus any extra shunts, drives the named nodes' sources with
// the given small-signal EMFs, and returns sum(weight * node response).
// Throws SolveError naming the floating node if the system is singular.
double nodal_transfer(const Circuit& c, const OperatingPoint& op,
                      const std::map<std::string, double>& node_drive,
                      const std::map<std::string, double>& output_weight,
                      const std::vector<Shunt>& shunts = {},
                      double temperature = kRoomTemperature);

double nodal_oracle(const Circuit& c, const OperatingPoint& op, const std::string& input_node,
                    const std::string& output_node, double temperature = kRoomTemperature);

// Differential drive inp=+1/2, inn=-1/2, response outn - outp.
double diff_dm_oracle(const Circuit& c, const OperatingPoint& op,
                      double temperature = kRoomTemperature);

// Common drive +1 on both inputs, response (outn + outp)/2.
double diff_cm_oracle(const Circuit& c, const OperatingPoint& op,
                      double temperature = kRoomTemperature);

// Input-referred PSD: 4kT*sum(gamma_i*gm_i)/(sum gm)^2 plus
// sum(gm_i^2*K_i/((W_i*L_i)*Cox_i*f))/(sum gm)^2, W*L in m^2.
// The differential flag doubles the PSD.
NoiseReport noise_input_referred(const std::vector<std::pair<DerivativeSet, DeviceParams>>& devs,
                                 const std::vector<double>& freqs, bool differential,
                                 double temperature = kRoomTemperature);

// Common-mode gain approximations: SCMFB -gm(3,4)/gm(5,6);
// DCMFB -1/((gm(5,6)+gm(7,8))*(ro(5,6)||ro(7,8))). Pair sums are used, which
// leaves both forms unchanged for matched pairs. Non-differential kind throws.
double cm_gain(TopologyKind kind, const std::map<std::string, DerivativeSet>& dsets);

// CMRR improvement factor (gm34/gm56)*(gm56+gm78)*(ro56||ro78) from a DCMFB
// derivative map (needs m1..m8).
double cmrr_ratio(const std::map<std::string, DerivativeSet>& dsets);

}  // namespace bgamp
