#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bgamp/circuits.hpp"
#include "bgamp/device.hpp"

namespace bgamp {

struct OperatingPoint {
  std::map<std::string, double> node_voltages;
  std::map<std::string, BiasTuple> device_biases;
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;  // worst per-node KCL current, A
};

struct SolveOptions {
  std::optional<std::map<std::string, double>> initial_guess;  // per node
  double temperature = kRoomTemperature;
};

class SolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Damped Newton (0.1 V max node step) with a source-stepping fallback.
// Deterministic; KCL residual below 1e-12 A on success.
// Throws SolveError naming the worst-residual node on non-convergence.
OperatingPoint solve_op(const Circuit& c, const SolveOptions& opt = {});
OperatingPoint solve_op(const Topology& t, const SolveOptions& opt = {});
OperatingPoint solve_op(const Netlist& nl, const SolveOptions& opt = {});

struct TransferCurve {
  std::vector<double> input;   // strictly increasing
  std::vector<double> output;
  std::pair<int, int> monotone_span;  // longest [first, last] strictly monotone run
};

// DC sweep with continuation (each point warm-starts from the previous).
// The swept node must be driven by a ground-referenced source.
TransferCurve sweep_dc(const Circuit& c, const std::string& input_node,
                       std::pair<double, double> range, int points,
                       const std::string& output_node = "out",
                       const SolveOptions& opt = {});

struct BiasMatchResult {
  std::map<std::string, double> vt0_offset;  // per device: vt0_matched = vt0 + offset
  Topology matched_ol;                       // open-loop topology with shifted cards
  OperatingPoint ol_op, bg_op;
};

// Shifts the open-loop thresholds so every device sees the same
// (vgs, vds, ids) it has in the back-gate circuit. Exact for the
// threshold-shift model; verified to 1e-9 V / 1e-12 relative ids.
BiasMatchResult bias_match(const Topology& ol, const Topology& bg,
                           double temperature = kRoomTemperature);

// MNA linearization of the circuit at an operating point. Unknown ordering:
// non-ground nodes (circuit order) then one branch current per source.
struct LinearSystem {
  Eigen::MatrixXd jacobian;
  std::vector<std::string> unknowns;
  std::map<std::string, int> node_row;    // node name -> row/col
  std::map<std::string, int> source_row;  // source name -> branch row
};

LinearSystem linearize(const Circuit& c, const OperatingPoint& op,
                       double temperature = kRoomTemperature);

}  // namespace bgamp
