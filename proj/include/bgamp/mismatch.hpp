#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bgamp/circuits.hpp"
#include "bgamp/device.hpp"

namespace bgamp {

struct MismatchSpec {
  double a_vt = 1e-3;             // V*um; per-device sigma_vt = a_vt / sqrt(W*L)
  double sigma_kprime_rel = 0.01; // relative sigma on kprime
  int samples = 100;
  std::uint64_t seed = 0;
};

// Counter-based deterministic stream: the draw for (seed, sample, device,
// param) never depends on evaluation order.
double mismatch_normal(std::uint64_t seed, std::uint64_t sample, std::uint64_t device,
                       std::uint64_t param);

// Perturbed copies of the card list for one sample index.
std::vector<DeviceParams> perturb(const std::vector<DeviceParams>& nominal,
                                  const MismatchSpec& spec, std::uint64_t sample);

// All spec.samples perturbations, sample index ascending.
std::vector<std::vector<DeviceParams>> sample(const std::vector<DeviceParams>& nominal,
                                              const MismatchSpec& spec);

struct CmrrStats {
  struct Row {
    std::string topology;
    double length_um = 0;
    double mean_db = 0;
    double std_db = 0;
    int samples = 0;
    int failed = 0;  // non-converged, excluded from the statistics
    std::uint64_t seed = 0;
  };
  std::vector<Row> rows;
  bool valid = true;  // false when any row fails > 5% of its samples
};

// Per-sample: perturb every device, re-solve, take CMRR from the nodal
// small-signal oracle (differential and common drives), aggregate in dB.
CmrrStats cmrr_monte_carlo(TopologyKind kind, const std::vector<double>& lengths_um,
                           const MismatchSpec& spec, const DeviceParams& n, const DeviceParams& p,
                           const DeviceParams& cmfb_n, const DeviceParams& cmfb_p,
                           const Supplies& supplies, double temperature = kRoomTemperature);

}  // namespace bgamp
