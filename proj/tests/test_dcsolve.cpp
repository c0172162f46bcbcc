#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "bgamp/dcsolve.hpp"
#include "bgamp/smallsig.hpp"
#include "testutil.hpp"

using namespace bgamp;

namespace {

Topology ccs(TopologyKind kind, double length = 1.0, double chi = 0.2) {
  DefaultCards cards = default_cards();
  cards.n.length = cards.p.length = length;
  cards.n.chi_mag = cards.p.chi_mag = chi;
  return build_topology(kind, cards.n, cards.p, {}, {}, cards.supplies);
}

Topology diff_pair(TopologyKind kind, double length = 1.0) {
  DefaultCards cards = default_cards();
  cards.n.length = cards.p.length = length;
  cards.cmfb_n.length = cards.cmfb_p.length = length;
  return build_topology(kind, cards.n, cards.p, cards.cmfb_n, cards.cmfb_p, cards.supplies);
}

double bisect_vgs_for_ids(const DeviceParams& p, double target, double vds) {
  double lo = p.vt0 - 1.0, hi = p.vt0 + 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (drain_current(p, mid, vds, 0.0) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("mirrored complementary stages settle at mid-rail") {
  for (TopologyKind kind : {TopologyKind::CCS_OL, TopologyKind::CCS_BG}) {
    for (double length : {0.15, 0.4, 1.0}) {
      const OperatingPoint op = solve_op(ccs(kind, length));
      REQUIRE(op.converged);
      CHECK(op.node_voltages.at("out") == doctest::Approx(0.9).epsilon(1e-9));
      CHECK(op.residual < 1e-12);
    }
  }
}

TEST_CASE("device currents cancel at internal nodes") {
  const OperatingPoint op = solve_op(ccs(TopologyKind::CCS_BG));
  const double in = op.device_biases.at("m1").ids + op.device_biases.at("m2").ids;
  CHECK(std::abs(in) < 1e-12);
  CHECK(op.device_biases.at("m1").ids > 0.0);
  CHECK(op.device_biases.at("m2").ids < 0.0);

  const OperatingPoint ds = solve_op(diff_pair(TopologyKind::DIFF_SCMFB));
  const double tail = ds.device_biases.at("m1").ids + ds.device_biases.at("m2").ids -
                      ds.device_biases.at("m5").ids - ds.device_biases.at("m6").ids;
  CHECK(std::abs(tail) < 1e-12);
}

TEST_CASE("repeat solves are bit-identical") {
  const OperatingPoint a = solve_op(diff_pair(TopologyKind::DIFF_DCMFB));
  const OperatingPoint b = solve_op(diff_pair(TopologyKind::DIFF_DCMFB));
  for (const auto& [node, v] : a.node_voltages) CHECK(v == b.node_voltages.at(node));
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("solution is a fixed point under re-solving from perturbed guesses") {
  const Circuit c = build_circuit(ccs(TopologyKind::CCS_BG));
  const OperatingPoint base = solve_op(c);
  SolveOptions opt;
  auto guess = base.node_voltages;
  guess["out"] += 0.05;
  guess["in"] -= 0.02;
  opt.initial_guess = guess;
  const OperatingPoint again = solve_op(c, opt);
  for (const auto& [node, v] : base.node_voltages)
    CHECK(v == doctest::Approx(again.node_voltages.at(node)).epsilon(1e-9).scale(1.0));

  auto far = base.node_voltages;
  far["out"] = 1.7;
  opt.initial_guess = far;
  const OperatingPoint third = solve_op(c, opt);
  CHECK(base.node_voltages.at("out") ==
        doctest::Approx(third.node_voltages.at("out")).epsilon(1e-9).scale(1.0));
}

TEST_CASE("transfer-curve slope reproduces the small-signal gain") {
  for (TopologyKind kind : {TopologyKind::CCS_OL, TopologyKind::CCS_BG}) {
    const Circuit c = build_circuit(ccs(kind));
    const OperatingPoint op = solve_op(c);
    const double gain = nodal_oracle(c, op, "in", "out");
    const double h = kind == TopologyKind::CCS_OL ? 1e-5 : 1e-4;
    const TransferCurve tc = sweep_dc(c, "in", {0.9 - h, 0.9 + h}, 3);
    const double slope = (tc.output[2] - tc.output[0]) / (2 * h);
    CHECK(slope == doctest::Approx(gain).epsilon(1e-3));
  }
}

TEST_CASE("back-gate feedback flattens the transfer curve") {
  // The model covers saturation only, so both stages are swept over the window
  // where the high-gain open-loop output stays between the rails.
  const Circuit ol = build_circuit(ccs(TopologyKind::CCS_OL));
  const Circuit bg = build_circuit(ccs(TopologyKind::CCS_BG));
  auto max_slope = [](const TransferCurve& tc) {
    double worst = 0.0;
    for (size_t i = 1; i < tc.input.size(); ++i)
      worst = std::max(worst,
                       std::abs((tc.output[i] - tc.output[i - 1]) /
                                (tc.input[i] - tc.input[i - 1])));
    return worst;
  };
  const TransferCurve tol = sweep_dc(ol, "in", {0.9 - 7e-4, 0.9 + 7e-4}, 61);
  const TransferCurve tbg = sweep_dc(bg, "in", {0.9 - 7e-4, 0.9 + 7e-4}, 61);
  CHECK(max_slope(tbg) < 0.2 * max_slope(tol));
  CHECK(tbg.output.front() > tbg.output.back());  // inverting

  // Feedback widens the usable input range; the curve stays monotone across it.
  const TransferCurve wide = sweep_dc(bg, "in", {0.65, 1.15}, 101);
  const int span = wide.monotone_span.second - wide.monotone_span.first;
  CHECK(span == 100);

  // Outside the solvable window the failing input value is reported.
  CHECK_THROWS_WITH_AS(sweep_dc(ol, "in", {0.0, 1.8}, 101), doctest::Contains("at input"),
                       SolveError);
}

TEST_CASE("sweep argument validation") {
  const Circuit c = build_circuit(ccs(TopologyKind::CCS_BG));
  CHECK_THROWS_AS(sweep_dc(c, "in", {0.9, 0.9}, 11), std::invalid_argument);
  CHECK_THROWS_AS(sweep_dc(c, "in", {0.0, 1.8}, 1), std::invalid_argument);
  CHECK_THROWS_AS(sweep_dc(c, "out", {0.0, 1.8}, 11), std::invalid_argument);
  CHECK_THROWS_AS(sweep_dc(c, "in", {0.0, 1.8}, 11, "nope"), std::invalid_argument);
}

TEST_CASE("differential stages hold their designed common-mode points") {
  const OperatingPoint s = solve_op(diff_pair(TopologyKind::DIFF_SCMFB));
  REQUIRE(s.converged);
  CHECK(std::abs(s.node_voltages.at("outn") - s.node_voltages.at("outp")) < 1e-9);
  CHECK(s.node_voltages.at("outn") == doctest::Approx(1.011).epsilon(0.05));
  CHECK(s.node_voltages.at("tail") == doctest::Approx(0.037).epsilon(0.5));

  const OperatingPoint d = solve_op(diff_pair(TopologyKind::DIFF_DCMFB));
  REQUIRE(d.converged);
  CHECK(std::abs(d.node_voltages.at("outn") - d.node_voltages.at("outp")) < 1e-9);
  CHECK(d.node_voltages.at("outn") == doctest::Approx(0.9).epsilon(1e-9));
  CHECK(d.node_voltages.at("tailn") + d.node_voltages.at("tailp") ==
        doctest::Approx(1.8).epsilon(1e-9));
  CHECK(d.node_voltages.at("tailn") == doctest::Approx(0.188).epsilon(0.1));
}

TEST_CASE("threshold offsets reproduce the back-gate operating point open loop") {
  DefaultCards cards = default_cards();
  const Topology ol =
      build_topology(TopologyKind::CCS_OL, cards.n, cards.p, {}, {}, cards.supplies);
  const Topology bg =
      build_topology(TopologyKind::CCS_BG, cards.n, cards.p, {}, {}, cards.supplies);
  const BiasMatchResult r = bias_match(ol, bg);

  const double out = r.bg_op.node_voltages.at("out");
  CHECK(r.vt0_offset.at("m1") ==
        doctest::Approx(-cards.n.chi_mag * out).epsilon(1e-9));
  CHECK(r.vt0_offset.at("m2") ==
        doctest::Approx(cards.p.chi_mag * (out - cards.supplies.vdd)).epsilon(1e-9));

  for (const std::string name : {"m1", "m2"}) {
    const BiasTuple& a = r.ol_op.device_biases.at(name);
    const BiasTuple& b = r.bg_op.device_biases.at(name);
    CHECK(std::abs(a.vgs - b.vgs) < 1e-9);
    CHECK(std::abs(a.vds - b.vds) < 1e-9);
    CHECK(a.ids == doctest::Approx(b.ids).epsilon(1e-12));
    CHECK(r.ol_op.device_biases.at(name).vbs == 0.0);
  }
}

TEST_CASE("bias matching is the identity without back-gate coupling") {
  const Topology ol = ccs(TopologyKind::CCS_OL, 1.0, 0.0);
  const Topology bg = ccs(TopologyKind::CCS_BG, 1.0, 0.0);
  const BiasMatchResult r = bias_match(ol, bg);
  CHECK(r.vt0_offset.at("m1") == 0.0);
  CHECK(r.vt0_offset.at("m2") == 0.0);
}

TEST_CASE("bias matching rejects mismatched inputs") {
  const Topology ol = ccs(TopologyKind::CCS_OL);
  const Topology bg = ccs(TopologyKind::CCS_BG);
  CHECK_THROWS_AS(bias_match(bg, bg), std::invalid_argument);
  Topology other = ccs(TopologyKind::CCS_OL);
  other.devices[0].params.width *= 2.0;
  CHECK_THROWS_AS(bias_match(other, bg), std::invalid_argument);
}

TEST_CASE("transconductance rides the square root of width at fixed current") {
  const DeviceParams n = default_cards().n;
  DeviceParams wide = n;
  wide.width *= 2.0;
  const double target = 50e-6;
  const double v1 = bisect_vgs_for_ids(n, target, 0.9);
  const double v2 = bisect_vgs_for_ids(wide, target, 0.9);
  const double g1 = derivatives(n, make_bias(n, v1, 0.9, 0.0), 1).gm1;
  const double g2 = derivatives(wide, make_bias(wide, v2, 0.9, 0.0), 1).gm1;
  const double exponent = std::log2(g2 / g1);
  CHECK(exponent == doctest::Approx(0.5).epsilon(0.04));
}

TEST_CASE("doubling both device widths doubles every current and moves no voltage") {
  DefaultCards cards = default_cards();
  const OperatingPoint a = solve_op(
      build_topology(TopologyKind::CCS_BG, cards.n, cards.p, {}, {}, cards.supplies));
  cards.n.width *= 2.0;
  cards.p.width *= 2.0;
  const OperatingPoint b = solve_op(
      build_topology(TopologyKind::CCS_BG, cards.n, cards.p, {}, {}, cards.supplies));
  CHECK(a.node_voltages.at("out") ==
        doctest::Approx(b.node_voltages.at("out")).epsilon(1e-9).scale(1.0));
  CHECK(b.device_biases.at("m1").ids ==
        doctest::Approx(2.0 * a.device_biases.at("m1").ids).epsilon(1e-12));
}

TEST_CASE("short channels that flip the output conductance are rejected up front") {
  DefaultCards cards = default_cards();
  cards.n.length = cards.p.length = 0.005;
  const Topology t =
      build_topology(TopologyKind::CCS_BG, cards.n, cards.p, {}, {}, cards.supplies);
  CHECK_THROWS_WITH_AS(solve_op(t), doctest::Contains("output conductance"),
                       std::invalid_argument);
}

TEST_CASE("an unsatisfiable node is reported by name") {
  const Netlist nl = parse_netlist(
      ".model m nfet vt0=0.8 kprime=400u\n"
      "m1 x in 0 0 m w=1u l=1u\n"
      "vin in 0 dc 0.9\n");
  CHECK_THROWS_WITH_AS(solve_op(nl), doctest::Contains("'x'"), SolveError);
}

TEST_CASE("linearization exposes the stamped system") {
  const Circuit c = build_circuit(ccs(TopologyKind::CCS_BG));
  const OperatingPoint op = solve_op(c);
  const LinearSystem sys = linearize(c, op);
  const int nn = static_cast<int>(c.nodes.size()) - 1;
  const int rows = nn + static_cast<int>(c.sources.size());
  REQUIRE(sys.jacobian.rows() == rows);
  REQUIRE(sys.jacobian.cols() == rows);
  REQUIRE(static_cast<int>(sys.unknowns.size()) == rows);
  CHECK(sys.unknowns.back().substr(0, 2) == "i(");

  // The input node carries no device current; its KCL row is pure branch coupling.
  const int in_row = sys.node_row.at("in");
  const int vin_row = sys.source_row.at("vin");
  CHECK(sys.jacobian(in_row, vin_row) == 1.0);
  CHECK(sys.jacobian(vin_row, in_row) == 1.0);
  for (int j = 0; j < nn; ++j) CHECK(sys.jacobian(in_row, j) == 0.0);

  // Output-row gate entry carries the combined transconductance.
  const int out_row = sys.node_row.at("out");
  const auto d1 = derivatives(c.devices[0].params, op.device_biases.at("m1"), 1);
  const auto d2 = derivatives(c.devices[1].params, op.device_biases.at("m2"), 1);
  CHECK(sys.jacobian(out_row, in_row) == doctest::Approx(d1.gm1 + d2.gm1).epsilon(1e-12));
}
