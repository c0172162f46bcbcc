#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bgamp/device.hpp"

namespace bgamp {

enum class TopologyKind { CCS_OL, CCS_BG, DIFF_SCMFB, DIFF_DCMFB };

std::string to_string(TopologyKind k);

struct Supplies {
  double vdd = 1.8;
  double vss = 0.0;
  double cmfb_ref = 0.9;  // intended output common-mode level
};

struct DeviceBinding {
  std::string name;
  DeviceParams params;
  std::string drain, gate, source, backgate;
};

struct Topology {
  TopologyKind kind = TopologyKind::CCS_OL;
  std::vector<DeviceBinding> devices;
  Supplies supplies;
  std::vector<std::string> input_nodes;  // "in" or {"inp", "inn"}
  double input_bias = 0.9;               // DC level applied to all inputs
};

// Wires one of the four amplifier templates. CCS kinds ignore the CMFB cards;
// DIFF_SCMFB needs cmfb_n; DIFF_DCMFB needs both. Throws std::invalid_argument
// on polarity mismatch or missing CMFB cards.
Topology build_topology(TopologyKind kind, const DeviceParams& n, const DeviceParams& p,
                        const std::optional<DeviceParams>& cmfb_n,
                        const std::optional<DeviceParams>& cmfb_p, const Supplies& supplies);

struct NetDevice {
  std::string name, drain, gate, source, backgate, model;
  double width = 0, length = 0;  // um
  int line = 0;
};

struct NetSource {
  std::string name, npos, nneg;
  double dc_volts = 0;
  int line = 0;
};

struct Netlist {
  std::vector<NetDevice> devices;
  std::map<std::string, DeviceParams> models;
  std::vector<NetSource> sources;
  std::vector<std::string> directives;
  std::vector<std::string> warnings;  // dangling nodes and the like
};

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int col, const std::string& expected);
  int line() const { return line_; }
  int col() const { return col_; }
  const std::string& expected() const { return expected_; }

 private:
  int line_, col_;
  std::string expected_;
};

// Line-oriented SPICE-like netlist, case-insensitive, '*' comment lines.
//   M<name> <d> <g> <s> <bg> <model> W=<val> L=<val>      (geometry in meters)
//   V<name> <n+> <n-> DC <val>
//   .model <name> (nfet|pfet) vt0= kprime= n= lambda0= chi= gamma= kf= cox=
//   .end
// Engineering suffixes f p n u m k meg g. Node "0" is ground. Classic
// 4-terminal M cards get a targeted diagnostic. Throws ParseError.
Netlist parse_netlist(const std::string& text);

// Inverse of parse_netlist up to formatting; round-trips structurally.
std::string emit_netlist(const Netlist& nl);

Netlist topology_to_netlist(const Topology& t);

// Flat device-bound graph shared by the solver and the small-signal engine.
struct CircuitDevice {
  std::string name;
  DeviceParams params;
  int drain = 0, gate = 0, source = 0, backgate = 0;  // node indices
};

struct CircuitSource {
  std::string name;
  int npos = 0, nneg = 0;
  double volts = 0;
};

struct Circuit {
  std::vector<std::string> nodes;  // nodes[0] is ground "0"
  std::vector<CircuitDevice> devices;
  std::vector<CircuitSource> sources;

  int node_index(const std::string& name) const;  // -1 when absent
};

Circuit build_circuit(const Topology& t);
Circuit build_circuit(const Netlist& nl);

struct DefaultCards {
  DeviceParams n, p, cmfb_n, cmfb_p;
  Supplies supplies;
};

// Mirrored complementary input pair (kprime*W equal, same vt0) so the
// symmetric operating point sits at vdd/2; CMFB devices sized as current
// sources with head/foot room at the tails.
DefaultCards default_cards();

}  // namespace bgamp
