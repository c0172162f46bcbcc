#pragma once

#include "bgamp/dcsolve.hpp"
#include "bgamp/device.hpp"

namespace bgamp {

enum class SeriesMode { OPEN_LOOP, BACK_GATE };
enum class CrossTerms { EXCLUDED, INCLUDED };

// v_out = a1*v + a2*v^2 + a3*v^3 about the operating point.
struct PowerSeries {
  double a1 = 0, a2 = 0, a3 = 0;
  SeriesMode mode = SeriesMode::OPEN_LOOP;
  CrossTerms cross_terms = CrossTerms::EXCLUDED;
};

// N+P sums of the derivative entries, plus the mixed-term sums that the
// INCLUDED matching needs.
struct CombinedConductances {
  double Gm1 = 0, Gm2 = 0, Gm3 = 0;
  double Gds1 = 0, Gds2 = 0, Gds3 = 0;
  double Gmb1 = 0, Gmb2 = 0, Gmb3 = 0;
  double X11 = 0, X21 = 0, X12 = 0;
  double Y11 = 0, Y21 = 0, Y12 = 0;
};

// Elementwise sums; throws std::invalid_argument unless given one N and one P card.
CombinedConductances combine(const DeviceParams& n_params, const DerivativeSet& n,
                             const DeviceParams& p_params, const DerivativeSet& p);

// Coefficient matching for the open-loop stage. EXCLUDED drops the mixed
// gate/drain derivatives; INCLUDED keeps them and matches the transfer curve
// to fit accuracy. Throws std::domain_error at Gds1 = 0 (infinite-gain limit).
PowerSeries series_open_loop(const CombinedConductances& g,
                             CrossTerms cross = CrossTerms::EXCLUDED);

// Same matching with the output conductance replaced by Gmb + Gds (back gates
// ride the output). INCLUDED additionally folds the feedback-path mixed terms,
// using chi = Gmb1/Gm1, exact when both devices share chi_mag.
// Throws std::domain_error when Gmb1 + Gds1 = 0.
PowerSeries series_backgate(const CombinedConductances& g,
                            CrossTerms cross = CrossTerms::EXCLUDED);

// Least-squares polynomial fit of the transfer curve about `center`; the
// independent oracle for the analytic matchings. Requires >= 50 curve points
// inside [center-amplitude, center+amplitude] and refuses (std::runtime_error)
// when order-3 and order-5 fits disagree on a1 by more than 1e-4 relative.
// Result carries cross_terms = INCLUDED (a fit sees everything).
PowerSeries fit_series(const TransferCurve& curve, double center, double amplitude,
                       int order = 5);

// sqrt(4/3 * |a1/a3|), input-referred volts. a3 = 0 returns +infinity.
double ip3(const PowerSeries& s);

// Squared-bracket prediction (1 + Gmb1/Gds1)^2.
double ip3_enhancement(const CombinedConductances& g);

struct EnhancementReport {
  double predicted = 0;          // (1 + Gmb1*ro_par)^2
  double measured = 0;           // ip3(series_backgate) / ip3(series_open_loop)
  double measured_over_pred = 0;
};

// Both circuits share the conductance set when operating points are matched,
// so one combined set yields the full comparison.
EnhancementReport ip3_enhancement_report(const CombinedConductances& g);

}  // namespace bgamp
