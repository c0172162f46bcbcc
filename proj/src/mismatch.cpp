#include "bgamp/mismatch.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "bgamp/dcsolve.hpp"
#include "bgamp/smallsig.hpp"

namespace bgamp {

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t counter_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix(mix(mix(mix(seed) + a) + b) + c);
}

double uniform01(std::uint64_t bits) {
  // (0, 1]: Box-Muller needs log of a nonzero value.
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1p-53;
}

}  // namespace

double mismatch_normal(std::uint64_t seed, std::uint64_t sample, std::uint64_t device,
                       std::uint64_t param) {
  const double u1 = uniform01(counter_key(seed, sample, device, 2 * param));
  const double u2 = uniform01(counter_key(seed, sample, device, 2 * param + 1));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<DeviceParams> perturb(const std::vector<DeviceParams>& nominal,
                                  const MismatchSpec& spec, std::uint64_t sample) {
  std::vector<DeviceParams> out = nominal;
  for (size_t d = 0; d < out.size(); ++d) {
    auto& p = out[d];
    const double sigma_vt = spec.a_vt / std::sqrt(p.width * p.length);
    p.vt0 += sigma_vt * mismatch_normal(spec.seed, sample, d, 0);
    p.kprime *= 1.0 + spec.sigma_kprime_rel * mismatch_normal(spec.seed, sample, d, 1);
  }
  return out;
}

std::vector<std::vector<DeviceParams>> sample(const std::vector<DeviceParams>& nominal,
                                              const MismatchSpec& spec) {
  if (spec.samples < 1) throw std::invalid_argument("sample: samples must be >= 1");
  if (spec.a_vt < 0 || spec.sigma_kprime_rel < 0)
    throw std::invalid_argument("sample: sigmas must be >= 0");
  std::vector<std::vector<DeviceParams>> out;
  out.reserve(spec.samples);
  for (int i = 0; i < spec.samples; ++i) out.push_back(perturb(nominal, spec, i));
  return out;
}

CmrrStats cmrr_monte_carlo(TopologyKind kind, const std::vector<double>& lengths_um,
                           const MismatchSpec& spec, const DeviceParams& n, const DeviceParams& p,
                           const DeviceParams& cmfb_n, const DeviceParams& cmfb_p,
                           const Supplies& supplies, double temperature) {
  if (kind != TopologyKind::DIFF_SCMFB && kind != TopologyKind::DIFF_DCMFB)
    throw std::invalid_argument("cmrr_monte_carlo: differential kind required");
  if (spec.samples < 1) throw std::invalid_argument("cmrr_monte_carlo: samples must be >= 1");

  CmrrStats stats;
  SolveOptions opt;
  opt.temperature = temperature;

  for (double length : lengths_um) {
    DeviceParams ln = n, lp = p, lcn = cmfb_n, lcp = cmfb_p;
    ln.length = lp.length = lcn.length = lcp.length = length;
    const Topology nominal = build_topology(kind, ln, lp, lcn, lcp, supplies);
    const OperatingPoint nominal_op = solve_op(nominal, opt);

    std::vector<DeviceParams> cards;
    for (const auto& d : nominal.devices) cards.push_back(d.params);

    // Kahan-compensated accumulation in dB.
    double sum = 0, sum_c = 0, sumsq = 0, sumsq_c = 0;
    int used = 0, failed = 0;
    for (int i = 0; i < spec.samples; ++i) {
      std::vector<DeviceParams> drawn = perturb(cards, spec, i);
      Topology t = nominal;
      bool card_ok = true;
      for (size_t d = 0; d < t.devices.size(); ++d) {
        if (!(drawn[d].kprime > 0)) card_ok = false;
        t.devices[d].params = drawn[d];
      }
      double cmrr_db = 0;
      bool ok = card_ok;
      if (ok) {
        try {
          const Circuit c = build_circuit(t);
          SolveOptions warm = opt;
          warm.initial_guess = nominal_op.node_voltages;
          const OperatingPoint op = solve_op(c, warm);
          const double a_dm = diff_dm_oracle(c, op, temperature);
          const double a_cm = diff_cm_oracle(c, op, temperature);
          cmrr_db = 20.0 * std::log10(std::abs(a_dm / a_cm));
        } catch (const std::exception&) {
          ok = false;
        }
      }
      if (!ok) {
        ++failed;
        continue;
      }
      ++used;
      double y = cmrr_db - sum_c;
      double tt = sum + y;
      sum_c = (tt - sum) - y;
      sum = tt;
      y = cmrr_db * cmrr_db - sumsq_c;
      tt = sumsq + y;
      sumsq_c = (tt - sumsq) - y;
      sumsq = tt;
    }

    CmrrStats::Row row;
    row.topology = to_string(kind);
    row.length_um = length;
    row.samples = used;
    row.failed = failed;
    row.seed = spec.seed;
    if (used > 0) {
      row.mean_db = sum / used;
      const double var = std::max(0.0, sumsq / used - row.mean_db * row.mean_db);
      row.std_db = std::sqrt(used > 1 ? var * used / (used - 1) : 0.0);
    }
    if (failed > spec.samples / 20) stats.valid = false;
    stats.rows.push_back(row);
  }
  return stats;
}

}  // namespace bgamp
