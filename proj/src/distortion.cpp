#include "bgamp/distortion.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

namespace bgamp {

CombinedConductances combine(const DeviceParams& n_params, const DerivativeSet& n,
                             const DeviceParams& p_params, const DerivativeSet& p) {
  if (n_params.polarity != Polarity::N || p_params.polarity != Polarity::P)
    throw std::invalid_argument("combine: expects one N set then one P set");
  CombinedConductances g;
  g.Gm1 = n.gm1 + p.gm1;
  g.Gm2 = n.gm2 + p.gm2;
  g.Gm3 = n.gm3 + p.gm3;
  g.Gds1 = n.gds1 + p.gds1;
  g.Gds2 = n.gds2 + p.gds2;
  g.Gds3 = n.gds3 + p.gds3;
  g.Gmb1 = n.gmb1 + p.gmb1;
  g.Gmb2 = n.gmb2 + p.gmb2;
  g.Gmb3 = n.gmb3 + p.gmb3;
  g.X11 = n.x11 + p.x11;
  g.X21 = n.x21 + p.x21;
  g.X12 = n.x12 + p.x12;
  g.Y11 = n.y11 + p.y11;
  g.Y21 = n.y21 + p.y21;
  g.Y12 = n.y12 + p.y12;
  return g;
}

namespace {

// Shared matching shape: denominators d1..d3 play the output-conductance role,
// x* the mixed terms (zero for EXCLUDED).
PowerSeries match(double gm1, double gm2, double gm3, double d1, double d2, double d3, double x11,
                  double x21, double x12) {
  PowerSeries s;
  s.a1 = -gm1 / d1;
  s.a2 = -(gm2 + d2 * s.a1 * s.a1 + x11 * s.a1) / d1;
  s.a3 = -(gm3 + d3 * s.a1 * s.a1 * s.a1 + 2.0 * d2 * s.a1 * s.a2 + x11 * s.a2 + x21 * s.a1 +
           x12 * s.a1 * s.a1) /
         d1;
  return s;
}

}  // namespace

PowerSeries series_open_loop(const CombinedConductances& g, CrossTerms cross) {
  if (g.Gds1 == 0) throw std::domain_error("series_open_loop: Gds1 = 0 (infinite-gain limit)");
  PowerSeries s =
      cross == CrossTerms::EXCLUDED
          ? match(g.Gm1, g.Gm2, g.Gm3, g.Gds1, g.Gds2, g.Gds3, 0, 0, 0)
          : match(g.Gm1, g.Gm2, g.Gm3, g.Gds1, g.Gds2, g.Gds3, g.X11, g.X21, g.X12);
  s.mode = SeriesMode::OPEN_LOOP;
  s.cross_terms = cross;
  return s;
}

PowerSeries series_backgate(const CombinedConductances& g, CrossTerms cross) {
  const double d1 = g.Gmb1 + g.Gds1;
  if (!(d1 > 0)) throw std::domain_error("series_backgate: Gmb1 + Gds1 must be > 0");
  PowerSeries s;
  if (cross == CrossTerms::EXCLUDED) {
    s = match(g.Gm1, g.Gm2, g.Gm3, d1, g.Gmb2 + g.Gds2, g.Gmb3 + g.Gds3, 0, 0, 0);
  } else {
    // Folding v_bs = v_ds into the Taylor expansion hats every output-side
    // coefficient; chi is recovered from the combined first-order ratio and is
    // exact when the two devices share chi_mag.
    const double chi = g.Gm1 > 0 ? g.Gmb1 / g.Gm1 : 0.0;
    const double d2 = g.Gds2 + g.Gmb2 + g.Y11;
    const double d3 = g.Gds3 + g.Gmb3 + g.Y21 + g.Y12;
    const double x11 = g.X11 + 2.0 * chi * g.Gm2;
    const double x21 = g.X21 + 3.0 * chi * g.Gm3;
    const double x12 = g.X12 + 2.0 * chi * g.X21 + 3.0 * chi * chi * g.Gm3;
    s = match(g.Gm1, g.Gm2, g.Gm3, d1, d2, d3, x11, x21, x12);
  }
  s.mode = SeriesMode::BACK_GATE;
  s.cross_terms = cross;
  return s;
}

namespace {

struct FitCoeffs {
  double a1, a2, a3;
};

FitCoeffs fit_window(const std::vector<double>& x, const std::vector<double>& y, double center,
                     double amplitude, int order) {
  const int n = static_cast<int>(x.size());
  Eigen::MatrixXd v(n, order + 1);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) {
    const double t = (x[i] - center) / amplitude;
    double p = 1.0;
    for (int k = 0; k <= order; ++k) {
      v(i, k) = p;
      p *= t;
    }
    rhs[i] = y[i];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(v);
  if (qr.rank() < order + 1) throw std::runtime_error("fit_series: ill-conditioned fit");
  Eigen::VectorXd c = qr.solve(rhs);
  return {c[1] / amplitude, c[2] / (amplitude * amplitude),
          c[3] / (amplitude * amplitude * amplitude)};
}

}  // namespace

PowerSeries fit_series(const TransferCurve& curve, double center, double amplitude, int order) {
  if (order < 3 || order > 5) throw std::domain_error("fit_series: order must be 3..5");
  if (!(amplitude > 0)) throw std::invalid_argument("fit_series: amplitude must be > 0");

  std::vector<double> x, y;
  for (size_t i = 0; i < curve.input.size(); ++i) {
    if (curve.input[i] >= center - amplitude - 1e-15 &&
        curve.input[i] <= center + amplitude + 1e-15) {
      x.push_back(curve.input[i]);
      y.push_back(curve.output[i]);
    }
  }
  if (x.size() < 50)
    throw std::invalid_argument("fit_series: insufficient span (needs >= 50 points in window)");
  if (x.front() > center - 0.5 * amplitude || x.back() < center + 0.5 * amplitude)
    throw std::invalid_argument("fit_series: curve does not cover the fit window");

  const FitCoeffs lo = fit_window(x, y, center, amplitude, 3);
  const FitCoeffs hi = fit_window(x, y, center, amplitude, order > 3 ? order : 5);
  if (std::abs(lo.a1 - hi.a1) > 1e-4 * std::abs(hi.a1))
    throw std::runtime_error(
        "fit_series: amplitude self-check failed (order-3 and order-5 a1 disagree; "
        "shrink the amplitude)");

  const FitCoeffs use = order == 3 ? lo : fit_window(x, y, center, amplitude, order);
  PowerSeries s;
  s.a1 = use.a1;
  s.a2 = use.a2;
  s.a3 = use.a3;
  s.cross_terms = CrossTerms::INCLUDED;
  return s;
}

double ip3(const PowerSeries& s) {
  if (s.a3 == 0) return std::numeric_limits<double>::infinity();
  return std::sqrt(4.0 / 3.0 * std::abs(s.a1 / s.a3));
}

double ip3_enhancement(const CombinedConductances& g) {
  if (g.Gds1 == 0) return std::numeric_limits<double>::infinity();
  const double bracket = 1.0 + g.Gmb1 / g.Gds1;
  return bracket * bracket;
}

EnhancementReport ip3_enhancement_report(const CombinedConductances& g) {
  EnhancementReport r;
  r.predicted = ip3_enhancement(g);
  r.measured = ip3(series_backgate(g)) / ip3(series_open_loop(g));
  r.measured_over_pred = r.measured / r.predicted;
  return r;
}

}  // namespace bgamp
