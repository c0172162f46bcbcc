#include "bgamp/device.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace bgamp {

void validate(const DeviceParams& p) {
  auto bad = [](const std::string& what) { throw std::invalid_argument("DeviceParams: " + what); };
  if (!(p.vt0 == p.vt0)) bad("vt0 must be finite");
  if (!(p.kprime > 0)) bad("kprime must be > 0");
  if (!(p.n_slope >= 1.0)) bad("n_slope must be >= 1");
  if (!(p.lambda0 >= 0)) bad("lambda0 must be >= 0");
  if (!(p.chi_mag >= 0 && p.chi_mag < 1)) bad("chi_mag must be in [0, 1)");
  if (!(p.gamma_noise >= 0)) bad("gamma_noise must be >= 0");
  if (!(p.k_flicker >= 0)) bad("k_flicker must be >= 0");
  if (!(p.cox_area > 0)) bad("cox_area must be > 0");
  if (!(p.width > 0)) bad("width must be > 0");
  if (!(p.length > 0)) bad("length must be > 0");
}

namespace {

struct Core {
  double F, F1, F2, F3;  // softplus of u/2 and derivatives w.r.t. u
};

// F = ln(1 + exp(u/2)), evaluated without overflow on either tail.
Core inversion_charge(double u) {
  double F, sig;
  if (u > 0) {
    const double e = std::exp(-0.5 * u);
    F = 0.5 * u + std::log1p(e);
    sig = 1.0 / (1.0 + e);
  } else {
    const double e = std::exp(0.5 * u);
    F = std::log1p(e);
    sig = e / (1.0 + e);
  }
  Core c;
  c.F = F;
  c.F1 = 0.5 * sig;
  c.F2 = 0.25 * sig * (1.0 - sig);
  c.F3 = 0.125 * sig * (1.0 - sig) * (1.0 - 2.0 * sig);
  return c;
}

struct NCore {
  double i;                      // drain current
  double gm[4], gds[4], gmb[4];  // index by order, [0] unused
  double x11, x21, x12, y11, y21, y12;
};

// N-polarity evaluation; callers handle the P sign fold.
NCore eval_n(const DeviceParams& p, double vgs, double vds, double vbs, double temp_k) {
  const double ut = thermal_voltage(temp_k);
  const double s = 1.0 / (p.n_slope * ut);
  const double vt_eff = p.vt0 - p.chi_mag * vbs;
  const double u = (vgs - vt_eff) * s;
  const Core c = inversion_charge(u);

  const double G0 = c.F * c.F;
  const double G1 = 2.0 * c.F * c.F1;
  const double G2 = 2.0 * (c.F1 * c.F1 + c.F * c.F2);
  const double G3 = 2.0 * (3.0 * c.F1 * c.F2 + c.F * c.F3);

  const double lam = p.lambda0 / p.length;
  const double a = kClmQuadShape;
  const double k3 = p.lambda0 * kClmCubicShape;
  const double v = vds;
  const double C = 1.0 + lam * (v + a * v * v) + k3 * v * v * v;
  const double C1 = lam * (1.0 + 2.0 * a * v) + 3.0 * k3 * v * v;
  const double C2 = 2.0 * a * lam + 6.0 * k3 * v;
  const double C3 = 6.0 * k3;

  const double i0 = 2.0 * p.n_slope * p.kprime * (p.width / p.length) * ut * ut;
  const double chi = p.chi_mag;

  NCore r;
  r.i = i0 * G0 * C;
  r.gm[1] = i0 * s * G1 * C;
  r.gm[2] = i0 * s * s * G2 * C / 2.0;
  r.gm[3] = i0 * s * s * s * G3 * C / 6.0;
  r.gds[1] = i0 * G0 * C1;
  r.gds[2] = i0 * G0 * C2 / 2.0;
  r.gds[3] = i0 * G0 * C3 / 6.0;
  r.gmb[1] = chi * r.gm[1];
  r.gmb[2] = chi * chi * r.gm[2];
  r.gmb[3] = chi * chi * chi * r.gm[3];
  r.x11 = i0 * s * G1 * C1;
  r.x21 = i0 * s * s * G2 * C1 / 2.0;
  r.x12 = i0 * s * G1 * C2 / 2.0;
  r.y11 = chi * r.x11;
  r.y21 = chi * chi * r.x21;
  r.y12 = chi * r.x12;
  return r;
}

void require_finite(double vgs, double vds, double vbs) {
  if (!std::isfinite(vgs) || !std::isfinite(vds) || !std::isfinite(vbs))
    throw std::domain_error("drain_current: non-finite terminal voltage");
}

}  // namespace

double drain_current(const DeviceParams& p, double vgs, double vds, double vbs, double temp_k) {
  require_finite(vgs, vds, vbs);
  if (p.polarity == Polarity::P) return -eval_n(p, -vgs, -vds, -vbs, temp_k).i;
  return eval_n(p, vgs, vds, vbs, temp_k).i;
}

BiasTuple make_bias(const DeviceParams& p, double vgs, double vds, double vbs, double temp_k) {
  return BiasTuple{vgs, vds, vbs, drain_current(p, vgs, vds, vbs, temp_k)};
}

DerivativeSet derivatives(const DeviceParams& p, const BiasTuple& bias, int order, double temp_k) {
  if (order < 1 || order > 3) throw std::domain_error("derivatives: order must be 1..3");
  require_finite(bias.vgs, bias.vds, bias.vbs);

  const bool pfet = p.polarity == Polarity::P;
  const double sgn = pfet ? -1.0 : 1.0;
  const NCore r = eval_n(p, sgn * bias.vgs, sgn * bias.vds, sgn * bias.vbs, temp_k);

  // Terminal Taylor coefficient of total order k picks up (-1)^(k+1) for P.
  const double f2 = pfet ? -1.0 : 1.0;  // even total order
  DerivativeSet d;
  d.gm1 = r.gm[1];
  d.gds1 = r.gds[1];
  d.gmb1 = r.gmb[1];
  if (order >= 2) {
    d.gm2 = f2 * r.gm[2];
    d.gds2 = f2 * r.gds[2];
    d.gmb2 = f2 * r.gmb[2];
    d.x11 = f2 * r.x11;
    d.y11 = f2 * r.y11;
  }
  if (order >= 3) {
    d.gm3 = r.gm[3];
    d.gds3 = r.gds[3];
    d.gmb3 = r.gmb[3];
    d.x21 = r.x21;
    d.x12 = r.x12;
    d.y21 = r.y21;
    d.y12 = r.y12;
  }
  return d;
}

double ro(const DerivativeSet& d) {
  if (d.gds1 < 0) throw std::domain_error("ro: gds1 < 0");
  if (d.gds1 == 0) return std::numeric_limits<double>::infinity();
  return 1.0 / d.gds1;
}

}  // namespace bgamp
