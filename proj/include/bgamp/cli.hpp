#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bgamp/circuits.hpp"
#include "bgamp/device.hpp"

namespace bgamp {

struct RunConfig {
  std::string command;                 // op sweep gain noise dist cmrr mc
  std::vector<std::string> templates;  // from --template (comma list)
  std::string netlist_path;            // from --netlist
  std::vector<double> lengths_um;      // empty -> per-command default
  std::vector<double> gm_over_id;      // optional bias targets, S/A
  int n = -1;                          // sweep points / MC samples; -1 -> default
  std::uint64_t seed = 0;
  double temperature = kRoomTemperature;
  std::string out_path;                // empty -> stdout
  std::optional<double> chi_override;  // applied to every default card
  std::optional<double> a_vt;          // mismatch coefficient, V*um
};

// Executes one analysis command. Exit code 0 on success, 1 on analysis error
// (any partial CSV gains a trailing "# ERROR:" marker line), 2 on usage or
// netlist parse error.
int run(const RunConfig& cfg);

// CLI11 front end; also resolves the BGAMP_SEED fallback.
int run_cli(int argc, const char* const* argv);

// VGS bisection at vds = vdd/2, vbs = 0 until gm1/ids is within 0.1% of the
// target. Throws std::domain_error outside (0, 1/(n_slope*U_T)), naming the
// ceiling.
BiasTuple gm_over_id_bias(const DeviceParams& params, double target, const Supplies& supplies,
                          double temperature = kRoomTemperature);

// "0.15,0.4,1" (list) or "0.15:1.0:8" (linspace). Throws std::invalid_argument.
std::vector<double> parse_axis(const std::string& text);

}  // namespace bgamp
