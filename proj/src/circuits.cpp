#include "bgamp/circuits.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <sstream>

namespace bgamp {

std::string to_string(TopologyKind k) {
  switch (k) {
    case TopologyKind::CCS_OL: return "ccs_ol";
    case TopologyKind::CCS_BG: return "ccs_bg";
    case TopologyKind::DIFF_SCMFB: return "scmfb";
    case TopologyKind::DIFF_DCMFB: return "dcmfb";
  }
  return "?";
}

namespace {

void check_polarity(const DeviceParams& p, Polarity want, const std::string& slot) {
  validate(p);
  if (p.polarity != want)
    throw std::invalid_argument("build_topology: polarity mismatch in " + slot + " slot");
}

DeviceBinding bind(std::string name, const DeviceParams& p, std::string d, std::string g,
                   std::string s, std::string bg) {
  return DeviceBinding{std::move(name), p, std::move(d), std::move(g), std::move(s), std::move(bg)};
}

}  // namespace

Topology build_topology(TopologyKind kind, const DeviceParams& n, const DeviceParams& p,
                        const std::optional<DeviceParams>& cmfb_n,
                        const std::optional<DeviceParams>& cmfb_p, const Supplies& supplies) {
  if (supplies.vss != 0.0)
    throw std::invalid_argument("build_topology: only vss = 0 is supported");
  if (!(supplies.vdd > supplies.vss))
    throw std::invalid_argument("build_topology: vdd must exceed vss");
  check_polarity(n, Polarity::N, "n");
  check_polarity(p, Polarity::P, "p");

  Topology t;
  t.kind = kind;
  t.supplies = supplies;
  t.input_bias = supplies.cmfb_ref;

  switch (kind) {
    case TopologyKind::CCS_OL:
      t.devices = {bind("m1", n, "out", "in", "0", "0"),
                   bind("m2", p, "out", "in", "vdd", "vdd")};
      t.input_nodes = {"in"};
      break;
    case TopologyKind::CCS_BG:
      t.devices = {bind("m1", n, "out", "in", "0", "out"),
                   bind("m2", p, "out", "in", "vdd", "out")};
      t.input_nodes = {"in"};
      break;
    case TopologyKind::DIFF_SCMFB: {
      if (!cmfb_n) throw std::invalid_argument("build_topology: DIFF_SCMFB needs a CMFB N card");
      check_polarity(*cmfb_n, Polarity::N, "cmfb_n");
      t.devices = {bind("m1", n, "outn", "inp", "tail", "outn"),
                   bind("m2", n, "outp", "inn", "tail", "outp"),
                   bind("m3", p, "outn", "inp", "vdd", "outn"),
                   bind("m4", p, "outp", "inn", "vdd", "outp"),
                   bind("m5", *cmfb_n, "tail", "outn", "0", "0"),
                   bind("m6", *cmfb_n, "tail", "outp", "0", "0")};
      t.input_nodes = {"inp", "inn"};
      break;
    }
    case TopologyKind::DIFF_DCMFB: {
      if (!cmfb_n || !cmfb_p)
        throw std::invalid_argument("build_topology: DIFF_DCMFB needs both CMFB cards");
      check_polarity(*cmfb_n, Polarity::N, "cmfb_n");
      check_polarity(*cmfb_p, Polarity::P, "cmfb_p");
      t.devices = {bind("m1", n, "outn", "inp", "tailn", "outn"),
                   bind("m2", n, "outp", "inn", "tailn", "outp"),
                   bind("m3", p, "outn", "inp", "tailp", "outn"),
                   bind("m4", p, "outp", "inn", "tailp", "outp"),
                   bind("m5", *cmfb_n, "tailn", "outn", "0", "0"),
                   bind("m6", *cmfb_n, "tailn", "outp", "0", "0"),
                   bind("m7", *cmfb_p, "tailp", "outn", "vdd", "vdd"),
                   bind("m8", *cmfb_p, "tailp", "outp", "vdd", "vdd")};
      t.input_nodes = {"inp", "inn"};
      break;
    }
  }
  return t;
}

ParseError::ParseError(int line, int col, const std::string& expected)
    : std::runtime_error("line " + std::to_string(line) + ", col " + std::to_string(col) +
                         ": expected " + expected),
      line_(line),
      col_(col),
      expected_(expected) {}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

struct Tok {
  std::string text;
  int col;  // 1-based
};

std::vector<Tok> lex(const std::string& line) {
  std::vector<Tok> out;
  size_t i = 0;
  while (i < line.size()) {
    if (std::isspace(static_cast<unsigned char>(line[i]))) {
      ++i;
      continue;
    }
    size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    out.push_back({line.substr(i, j - i), static_cast<int>(i + 1)});
    i = j;
  }
  return out;
}

double suffix_scale(const std::string& suf, int line, int col) {
  if (suf.empty()) return 1.0;
  if (suf == "f") return 1e-15;
  if (suf == "p") return 1e-12;
  if (suf == "n") return 1e-9;
  if (suf == "u") return 1e-6;
  if (suf == "m") return 1e-3;
  if (suf == "k") return 1e3;
  if (suf == "meg") return 1e6;
  if (suf == "g") return 1e9;
  throw ParseError(line, col, "engineering suffix (f p n u m k meg g)");
}

double parse_value(const std::string& text, int line, int col) {
  const char* s = text.c_str();
  char* end = nullptr;
  double v = std::strtod(s, &end);
  if (end == s) throw ParseError(line, col, "a number");
  return v * suffix_scale(lower(end), line, col + static_cast<int>(end - s));
}

struct KeyVal {
  std::string key, val;
  int col, val_col;
};

bool split_kv(const Tok& t, KeyVal& kv, int line) {
  auto eq = t.text.find('=');
  if (eq == std::string::npos) return false;
  kv.key = lower(t.text.substr(0, eq));
  kv.val = t.text.substr(eq + 1);
  kv.col = t.col;
  kv.val_col = t.col + static_cast<int>(eq) + 1;
  if (kv.key.empty()) throw ParseError(line, t.col, "a key before '='");
  if (kv.val.empty()) throw ParseError(line, kv.val_col, "a value after '='");
  return true;
}

int eol_col(const std::string& line) { return static_cast<int>(line.size()) + 1; }

}  // namespace

Netlist parse_netlist(const std::string& text) {
  Netlist nl;
  std::vector<int> model_ref_cols;
  bool ended = false;

  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::vector<Tok> toks = lex(raw);
    if (toks.empty()) continue;
    if (toks[0].text[0] == '*') continue;
    if (ended) throw ParseError(lineno, toks[0].col, "end of file after .end");

    const std::string head = lower(toks[0].text);

    if (head[0] == 'm' && head != ".model") {
      NetDevice d;
      d.name = head;
      d.line = lineno;
      std::vector<Tok> pos;
      std::vector<KeyVal> kvs;
      for (size_t i = 1; i < toks.size(); ++i) {
        KeyVal kv;
        if (split_kv(toks[i], kv, lineno)) kvs.push_back(kv);
        else pos.push_back(toks[i]);
      }
      static const char* slot[] = {"drain node", "gate node", "source node", "backgate node",
                                   "model name"};
      if (pos.size() == 4) {
        throw ParseError(lineno, pos[3].col,
                         "backgate node then model name (M cards are 5-terminal: "
                         "<d> <g> <s> <bg> <model>; classic 4-terminal cards are not accepted)");
      }
      if (pos.size() < 5) {
        int col = kvs.empty() ? eol_col(raw) : kvs[0].col;
        throw ParseError(lineno, col, slot[pos.size()]);
      }
      if (pos.size() > 5) throw ParseError(lineno, pos[5].col, "W= or L= assignment");
      d.drain = lower(pos[0].text);
      d.gate = lower(pos[1].text);
      d.source = lower(pos[2].text);
      d.backgate = lower(pos[3].text);
      d.model = lower(pos[4].text);
      bool have_w = false, have_l = false;
      for (const auto& kv : kvs) {
        double v = parse_value(kv.val, lineno, kv.val_col);
        if (kv.key == "w") {
          if (have_w) throw ParseError(lineno, kv.col, "a single W= assignment");
          if (!(v > 0)) throw ParseError(lineno, kv.val_col, "a positive width");
          d.width = v * 1e6;  // meters in, um held
          have_w = true;
        } else if (kv.key == "l") {
          if (have_l) throw ParseError(lineno, kv.col, "a single L= assignment");
          if (!(v > 0)) throw ParseError(lineno, kv.val_col, "a positive length");
          d.length = v * 1e6;
          have_l = true;
        } else {
          throw ParseError(lineno, kv.col, "W= or L=");
        }
      }
      if (!have_w) throw ParseError(lineno, eol_col(raw), "W=<meters>");
      if (!have_l) throw ParseError(lineno, eol_col(raw), "L=<meters>");
      nl.devices.push_back(d);
      model_ref_cols.push_back(pos[4].col);
    } else if (head[0] == 'v') {
      if (toks.size() < 2) throw ParseError(lineno, eol_col(raw), "positive node");
      if (toks.size() < 3) throw ParseError(lineno, eol_col(raw), "negative node");
      if (toks.size() < 4) throw ParseError(lineno, eol_col(raw), "DC");
      if (lower(toks[3].text) != "dc") throw ParseError(lineno, toks[3].col, "DC");
      if (toks.size() < 5) throw ParseError(lineno, eol_col(raw), "a voltage value");
      if (toks.size() > 5) throw ParseError(lineno, toks[5].col, "end of line");
      NetSource s;
      s.name = head;
      s.npos = lower(toks[1].text);
      s.nneg = lower(toks[2].text);
      s.dc_volts = parse_value(toks[4].text, lineno, toks[4].col);
      s.line = lineno;
      nl.sources.push_back(s);
    } else if (head == ".model") {
      if (toks.size() < 2) throw ParseError(lineno, eol_col(raw), "model name");
      std::string name = lower(toks[1].text);
      if (nl.models.count(name))
        throw ParseError(lineno, toks[1].col, "a unique model name (duplicate definition)");
      if (toks.size() < 3) throw ParseError(lineno, eol_col(raw), "nfet or pfet");
      std::string type = lower(toks[2].text);
      if (type != "nfet" && type != "pfet") throw ParseError(lineno, toks[2].col, "nfet or pfet");
      DeviceParams p;
      p.polarity = type == "nfet" ? Polarity::N : Polarity::P;
      p.n_slope = 1.0;
      p.lambda0 = 0.0;
      p.chi_mag = 0.0;
      p.gamma_noise = 1.0;
      p.k_flicker = 0.0;
      p.cox_area = 6e-3;
      bool have_vt0 = false, have_kp = false;
      for (size_t i = 3; i < toks.size(); ++i) {
        KeyVal kv;
        if (!split_kv(toks[i], kv, lineno))
          throw ParseError(lineno, toks[i].col, "key=value (vt0 kprime n lambda0 chi gamma kf cox)");
        double v = parse_value(kv.val, lineno, kv.val_col);
        if (kv.key == "vt0") { p.vt0 = v; have_vt0 = true; }
        else if (kv.key == "kprime") { p.kprime = v; have_kp = true; }
        else if (kv.key == "n") p.n_slope = v;
        else if (kv.key == "lambda0") p.lambda0 = v;
        else if (kv.key == "chi") p.chi_mag = v;
        else if (kv.key == "gamma") p.gamma_noise = v;
        else if (kv.key == "kf") p.k_flicker = v;
        else if (kv.key == "cox") p.cox_area = v;
        else throw ParseError(lineno, kv.col, "one of vt0 kprime n lambda0 chi gamma kf cox");
      }
      if (!have_vt0) throw ParseError(lineno, eol_col(raw), "vt0= (required)");
      if (!have_kp) throw ParseError(lineno, eol_col(raw), "kprime= (required)");
      p.width = 1.0;  // placeholder; geometry comes from the M card
      p.length = 1.0;
      try {
        validate(p);
      } catch (const std::invalid_argument& e) {
        throw ParseError(lineno, toks[0].col, std::string("a valid model card (") + e.what() + ")");
      }
      nl.models.emplace(name, p);
    } else if (head == ".end") {
      if (toks.size() > 1) throw ParseError(lineno, toks[1].col, "end of line after .end");
      nl.directives.push_back(".end");
      ended = true;
    } else {
      throw ParseError(lineno, toks[0].col, "an M card, V card, .model, or .end");
    }
  }

  for (size_t i = 0; i < nl.devices.size(); ++i) {
    if (!nl.models.count(nl.devices[i].model))
      throw ParseError(nl.devices[i].line, model_ref_cols[i],
                       "a defined model (undefined model '" + nl.devices[i].model + "')");
  }

  std::map<std::string, int> refs;
  for (const auto& d : nl.devices) {
    ++refs[d.drain];
    ++refs[d.gate];
    ++refs[d.source];
    ++refs[d.backgate];
  }
  for (const auto& s : nl.sources) {
    ++refs[s.npos];
    ++refs[s.nneg];
  }
  for (const auto& [node, count] : refs) {
    if (node != "0" && count == 1)
      nl.warnings.push_back("node '" + node + "' is referenced only once (dangling)");
  }
  return nl;
}

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string emit_netlist(const Netlist& nl) {
  std::ostringstream out;
  for (const auto& [name, p] : nl.models) {
    out << ".model " << name << ' ' << (p.polarity == Polarity::N ? "nfet" : "pfet")
        << " vt0=" << num(p.vt0) << " kprime=" << num(p.kprime) << " n=" << num(p.n_slope)
        << " lambda0=" << num(p.lambda0) << " chi=" << num(p.chi_mag)
        << " gamma=" << num(p.gamma_noise) << " kf=" << num(p.k_flicker)
        << " cox=" << num(p.cox_area) << '\n';
  }
  for (const auto& d : nl.devices) {
    out << d.name << ' ' << d.drain << ' ' << d.gate << ' ' << d.source << ' ' << d.backgate << ' '
        << d.model << " w=" << num(d.width * 1e-6) << " l=" << num(d.length * 1e-6) << '\n';
  }
  for (const auto& s : nl.sources) {
    out << s.name << ' ' << s.npos << ' ' << s.nneg << " dc " << num(s.dc_volts) << '\n';
  }
  out << ".end\n";
  return out.str();
}

Netlist topology_to_netlist(const Topology& t) {
  Netlist nl;
  for (const auto& d : t.devices) {
    std::string model = "mdl_" + d.name;
    nl.models.emplace(model, d.params);
    NetDevice nd;
    nd.name = d.name;
    nd.drain = d.drain;
    nd.gate = d.gate;
    nd.source = d.source;
    nd.backgate = d.backgate;
    nd.model = model;
    nd.width = d.params.width;
    nd.length = d.params.length;
    nl.devices.push_back(nd);
  }
  nl.sources.push_back({"vdd", "vdd", "0", t.supplies.vdd, 0});
  if (t.input_nodes.size() == 1) {
    nl.sources.push_back({"vin", t.input_nodes[0], "0", t.input_bias, 0});
  } else {
    nl.sources.push_back({"vip", t.input_nodes[0], "0", t.input_bias, 0});
    nl.sources.push_back({"vinn", t.input_nodes[1], "0", t.input_bias, 0});
  }
  return nl;
}

int Circuit::node_index(const std::string& name) const {
  for (size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i] == name) return static_cast<int>(i);
  return -1;
}

namespace {

int intern(Circuit& c, const std::string& name) {
  int i = c.node_index(name);
  if (i >= 0) return i;
  c.nodes.push_back(name);
  return static_cast<int>(c.nodes.size() - 1);
}

}  // namespace

Circuit build_circuit(const Topology& t) {
  return build_circuit(topology_to_netlist(t));
}

Circuit build_circuit(const Netlist& nl) {
  Circuit c;
  c.nodes.push_back("0");
  for (const auto& d : nl.devices) {
    auto it = nl.models.find(d.model);
    if (it == nl.models.end())
      throw std::invalid_argument("build_circuit: undefined model '" + d.model + "'");
    CircuitDevice cd;
    cd.name = d.name;
    cd.params = it->second;
    cd.params.width = d.width;
    cd.params.length = d.length;
    validate(cd.params);
    cd.drain = intern(c, d.drain);
    cd.gate = intern(c, d.gate);
    cd.source = intern(c, d.source);
    cd.backgate = intern(c, d.backgate);
    c.devices.push_back(cd);
  }
  for (const auto& s : nl.sources) {
    CircuitSource cs;
    cs.name = s.name;
    cs.npos = intern(c, s.npos);
    cs.nneg = intern(c, s.nneg);
    cs.volts = s.dc_volts;
    c.sources.push_back(cs);
  }
  return c;
}

DefaultCards default_cards() {
  DefaultCards d;
  d.n = DeviceParams{Polarity::N, 0.80, 400e-6, 1.25, 0.012, 0.2, 1.0, 1e-24, 6e-3, 4.0, 1.0};
  d.p = DeviceParams{Polarity::P, 0.80, 200e-6, 1.25, 0.012, 0.2, 1.0, 1e-24, 6e-3, 8.0, 1.0};
  d.cmfb_n = DeviceParams{Polarity::N, 0.95, 400e-6, 1.25, 0.012, 0.2, 1.0, 1e-24, 6e-3, 40.0, 1.0};
  d.cmfb_p = DeviceParams{Polarity::P, 0.95, 200e-6, 1.25, 0.012, 0.2, 1.0, 1e-24, 6e-3, 80.0, 1.0};
  d.supplies = Supplies{1.8, 0.0, 0.9};
  return d;
}

}  // namespace bgamp
