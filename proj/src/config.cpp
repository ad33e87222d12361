#include <cmath>
#include <set>

#include <json.hpp>

#include "sensedelay/error.hpp"
#include "sensedelay/experiment.hpp"

namespace sensedelay {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw Error(ErrorCode::Config, path + ": " + msg);
}

// Reads members of one JSON object, remembering which were consumed so that
// leftovers can be reported as unknown fields.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "(root)" : path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* get(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() || it->is_null() ? nullptr : &*it;
  }
  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  double number(const std::string& key, double def) {
    const json* v = get(key);
    if (!v) return def;
    if (!v->is_number()) fail(at(key), "expected a number");
    const double d = v->get<double>();
    if (!std::isfinite(d)) fail(at(key), "expected a finite number");
    return d;
  }
  std::int64_t integer(const std::string& key, std::int64_t def, std::int64_t min) {
    const json* v = get(key);
    if (!v) return def;
    if (!v->is_number_integer()) fail(at(key), "expected an integer >= " + std::to_string(min));
    const auto i = v->get<std::int64_t>();
    if (i < min) fail(at(key), "expected an integer >= " + std::to_string(min));
    return i;
  }
  std::uint64_t uinteger(const std::string& key, std::uint64_t def) {
    const json* v = get(key);
    if (!v) return def;
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0))
      fail(at(key), "expected a non-negative integer");
    return v->get<std::uint64_t>();
  }
  bool boolean(const std::string& key, bool def) {
    const json* v = get(key);
    if (!v) return def;
    if (!v->is_boolean()) fail(at(key), "expected true or false");
    return v->get<bool>();
  }
  std::string string(const std::string& key, const std::string& def) {
    const json* v = get(key);
    if (!v) return def;
    if (!v->is_string()) fail(at(key), "expected a string");
    return v->get<std::string>();
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail(at(it.key()), "unknown field");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class F>
auto guarded(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Config) throw;
    fail(path, e.what());
  }
}

BackoffPolicy parse_backoff(const json& j, const std::string& path) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "cb") return BackoffPolicy::constant(0);
    fail(path, "expected an object, or \"cb\"");
  }
  Reader r(j, path);
  const std::string kind = r.string("kind", "cb");
  const auto cutoff = static_cast<int>(r.integer("cutoff", 0, 0));
  BackoffPolicy b;
  if (kind == "cb") {
    b = guarded(r.at("cutoff"), [&] { return BackoffPolicy::constant(cutoff); });
  } else if (kind == "beb") {
    b = guarded(r.at("cutoff"), [&] { return BackoffPolicy::binary_exponential(cutoff); });
  } else if (kind == "table") {
    const json* t = r.get("table");
    if (!t || !t->is_array()) fail(r.at("table"), "expected an array of Q(0..K)");
    std::vector<double> v;
    for (const auto& x : *t) {
      if (!x.is_number()) fail(r.at("table"), "expected numbers");
      v.push_back(x.get<double>());
    }
    b = guarded(r.at("table"), [&] { return BackoffPolicy::custom(v); });
  } else {
    fail(r.at("kind"), "expected \"cb\", \"beb\" or \"table\"");
  }
  r.finish();
  return b;
}

json backoff_json(const BackoffPolicy& b) {
  json j;
  j["kind"] = to_string(b.kind());
  if (b.kind() == BackoffKind::CustomTable) j["table"] = b.table();
  else j["cutoff"] = b.cutoff();
  return j;
}

Scenario scenario_from(const json& j, const std::string& path) {
  Reader r(j, path);
  Scenario s;
  s.n = static_cast<int>(r.integer("n", s.n, 1));
  const std::string fam = r.string("family", "aloha");
  if (fam == "aloha") s.scheme.family = Family::Aloha;
  else if (fam == "csma") s.scheme.family = Family::Csma;
  else fail(r.at("family"), "expected \"aloha\" or \"csma\"");
  const std::string con = r.string("connection", "free");
  if (con == "free") s.scheme.connection = Connection::Free;
  else if (con == "based") s.scheme.connection = Connection::Based;
  else fail(r.at("connection"), "expected \"free\" or \"based\"");
  s.scheme.payload_ms = r.number("payload_ms", s.scheme.payload_ms);
  s.scheme.overhead_success_ms = r.number("overhead_success_ms", s.scheme.overhead_success_ms);
  s.scheme.overhead_fail_ms = r.number("overhead_fail_ms", s.scheme.overhead_fail_ms);
  s.scheme.slot_ms = r.number("slot_ms", 0.0);
  if (s.scheme.family == Family::Aloha) s.scheme.slot_ms = 0.0;
  if (const json* b = r.get("backoff")) s.backoff = parse_backoff(*b, r.at("backoff"));
  s.q0 = r.number("q0", s.q0);
  s.encoding_rate = r.number("encoding_rate", s.encoding_rate);

  int rates = 0;
  for (const char* k : {"bit_rate_per_node", "aggregate_bit_rate", "aggregate_packet_rate"})
    rates += r.has(k);
  if (rates > 1)
    fail(path, "give only one of bit_rate_per_node, aggregate_bit_rate, aggregate_packet_rate");
  const double per_node = r.number("bit_rate_per_node", 0.0);
  const double agg_bit = r.number("aggregate_bit_rate", -1.0);
  const double agg_pkt = r.number("aggregate_packet_rate", -1.0);
  r.finish();

  s.scheme = guarded(path, [&] { return derive_slot(s.scheme); });
  s.bit_rate_per_node = per_node;
  if (agg_bit >= 0.0) s = s.with_aggregate_bit_rate(agg_bit);
  if (agg_pkt >= 0.0) s = guarded(r.at("aggregate_packet_rate"), [&] {
      return s.with_aggregate_packet_rate(agg_pkt);
    });
  guarded(path, [&] { return validate(s); });
  return s;
}

json scenario_json(const Scenario& s) {
  json j;
  j["n"] = s.n;
  j["family"] = to_string(s.scheme.family);
  j["connection"] = to_string(s.scheme.connection);
  j["payload_ms"] = s.scheme.payload_ms;
  j["overhead_success_ms"] = s.scheme.overhead_success_ms;
  j["overhead_fail_ms"] = s.scheme.overhead_fail_ms;
  if (s.scheme.family == Family::Csma) j["slot_ms"] = s.scheme.slot_ms;
  j["backoff"] = backoff_json(s.backoff);
  j["q0"] = s.q0;
  j["encoding_rate"] = s.encoding_rate;
  j["bit_rate_per_node"] = s.bit_rate_per_node;
  return j;
}

Grid parse_grid(const json& j, const std::string& path) {
  Grid g;
  if (j.is_array()) {
    for (const auto& x : j) {
      if (!x.is_number()) fail(path, "expected numbers");
      g.values.push_back(x.get<double>());
    }
  } else {
    Reader r(j, path);
    if (const json* v = r.get("values")) {
      g = parse_grid(*v, r.at("values"));
    } else {
      g.from = r.number("from", 0.0);
      g.to = r.number("to", 0.0);
      g.points = static_cast<int>(r.integer("points", 0, 1));
      const std::string sp = r.string("spacing", "log");
      if (sp != "log" && sp != "linear") fail(r.at("spacing"), "expected \"log\" or \"linear\"");
      g.log = sp == "log";
      if (!(g.from <= g.to)) fail(path, "grid bounds must be ordered (from <= to)");
      if (g.log && g.from <= 0.0) fail(r.at("from"), "log spacing needs from > 0");
    }
    r.finish();
  }
  if (g.explicit_values() && !std::is_sorted(g.values.begin(), g.values.end()))
    fail(path, "grid values must be in increasing order");
  return g;
}

json grid_json(const Grid& g) {
  if (g.explicit_values()) return json{{"values", g.values}};
  return json{{"from", g.from}, {"to", g.to}, {"points", g.points},
              {"spacing", g.log ? "log" : "linear"}};
}

}  // namespace

const char* to_string(Command c) {
  switch (c) {
    case Command::Analyze: return "analyze";
    case Command::Simulate: return "simulate";
    case Command::SweepQ0: return "sweep-q0";
    case Command::SweepRate: return "sweep-rate";
    case Command::SensingBound: return "sensing-bound";
    case Command::RaSdt: return "ra-sdt";
    case Command::Validate: return "validate";
  }
  return "?";
}

Command command_from_string(const std::string& name) {
  for (auto c : {Command::Analyze, Command::Simulate, Command::SweepQ0, Command::SweepRate,
                 Command::SensingBound, Command::RaSdt, Command::Validate})
    if (name == to_string(c)) return c;
  throw Error(ErrorCode::Config, "command: unknown command '" + name + "'");
}

std::vector<double> Grid::resolve() const {
  if (explicit_values()) return values;
  std::vector<double> v(points);
  for (int i = 0; i < points; ++i) {
    const double f = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
    v[i] = log ? from * std::pow(to / from, f) : from + (to - from) * f;
  }
  return v;
}

Scenario parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Config, std::string("invalid JSON: ") + e.what());
  }
  return scenario_from(j, "scenario");
}

ExperimentSpec parse_experiment(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Config, std::string("invalid JSON: ") + e.what());
  }
  Reader root(j, "");
  ExperimentSpec e;
  if (root.has("command")) e.command = command_from_string(root.string("command", ""));
  root.get("manifest");  // written by the tool, ignored on load
  root.string("description", "");
  if (const json* s = root.get("scenario")) e.scenario = scenario_from(*s, "scenario");
  else e.scenario = scenario_from(json::object(), "scenario");

  if (const json* s = root.get("solver")) {
    Reader r(*s, "solver");
    e.solver.form = r.boolean("exact_finite_n", false) ? FixedPointForm::ExactFiniteN
                                                       : FixedPointForm::LargeN;
    e.solver.epsilon = r.number("epsilon", e.solver.epsilon);
    if (!(e.solver.epsilon > 0.0)) fail("solver.epsilon", "expected a positive number");
    e.solver.verify_monotone = r.boolean("verify_monotone", e.solver.verify_monotone);
    e.solver.monotone_grid = static_cast<int>(r.integer("monotone_grid", e.solver.monotone_grid, 1));
    r.finish();
  }
  if (const json* s = root.get("simulation")) {
    Reader r(*s, "simulation");
    e.with_simulation = r.boolean("enabled", e.with_simulation);
    e.sim.slots = r.uinteger("slots", e.sim.slots);
    e.sim.warmup = r.uinteger("warmup", e.sim.warmup);
    e.sim.seed = r.uinteger("seed", e.sim.seed);
    e.sim.initial_backlog = r.uinteger("initial_backlog", e.sim.initial_backlog);
    r.finish();
    if (e.sim.slots <= e.sim.warmup) fail("simulation.slots", "must exceed simulation.warmup");
  }
  if (const json* s = root.get("sweep")) {
    Reader r(*s, "sweep");
    if (const json* g = r.get("q0")) e.q0_grid = parse_grid(*g, "sweep.q0");
    e.q0_points = static_cast<int>(r.integer("q0_points", e.q0_points, 1));
    if (const json* g = r.get("rate")) e.rate_grid = parse_grid(*g, "sweep.rate");
    const std::string axis = r.string("rate_axis", "aggregate_packet");
    if (axis == "aggregate_packet") e.rate_axis = RateAxis::AggregatePacket;
    else if (axis == "aggregate_bit") e.rate_axis = RateAxis::AggregateBit;
    else fail("sweep.rate_axis", "expected \"aggregate_packet\" or \"aggregate_bit\"");
    r.finish();
  }
  if (const json* s = root.get("sensing")) {
    Reader r(*s, "sensing");
    e.sensing.floor_ms = r.number("floor_ms", e.sensing.floor_ms);
    e.sensing.ceiling_ms = r.number("ceiling_ms", e.sensing.ceiling_ms);
    e.sensing.tol_ms = r.number("tol_ms", e.sensing.tol_ms);
    e.sensing.prescan = static_cast<int>(r.integer("prescan", e.sensing.prescan, 2));
    r.finish();
    if (!(e.sensing.floor_ms > 0.0)) fail("sensing.floor_ms", "expected a positive number");
    if (!(e.sensing.tol_ms > 0.0)) fail("sensing.tol_ms", "expected a positive number");
  }
  if (const json* s = root.get("ra_sdt")) {
    Reader r(*s, "ra_sdt");
    if (const json* v = r.get("variants")) {
      if (!v->is_array()) fail("ra_sdt.variants", "expected an array of variant names");
      for (const auto& x : *v) {
        if (!x.is_string()) fail("ra_sdt.variants", "expected variant names");
        e.variants.push_back(guarded("ra_sdt.variants", [&] {
          return ra_sdt_variant_from_string(x.get<std::string>());
        }));
      }
    }
    if (const json* v = r.get("backoffs")) {
      if (!v->is_array()) fail("ra_sdt.backoffs", "expected an array of backoff objects");
      for (std::size_t i = 0; i < v->size(); ++i)
        e.backoffs.push_back(parse_backoff((*v)[i], "ra_sdt.backoffs[" + std::to_string(i) + "]"));
    }
    r.finish();
  }
  root.finish();
  return e;
}

std::string scenario_to_json(const Scenario& s, int indent) { return scenario_json(s).dump(indent); }

namespace {

json experiment_json(const ExperimentSpec& e) {
  json j;
  j["command"] = to_string(e.command);
  j["scenario"] = scenario_json(e.scenario);
  j["solver"] = {{"exact_finite_n", e.solver.form == FixedPointForm::ExactFiniteN},
                 {"epsilon", e.solver.epsilon},
                 {"verify_monotone", e.solver.verify_monotone},
                 {"monotone_grid", e.solver.monotone_grid}};
  j["simulation"] = {{"enabled", e.with_simulation},
                     {"slots", e.sim.slots},
                     {"warmup", e.sim.warmup},
                     {"seed", e.sim.seed},
                     {"initial_backlog", e.sim.initial_backlog}};
  json sweep{{"q0_points", e.q0_points},
             {"rate_axis", e.rate_axis == RateAxis::AggregatePacket ? "aggregate_packet"
                                                                     : "aggregate_bit"}};
  if (e.q0_grid.is_set()) sweep["q0"] = grid_json(e.q0_grid);
  if (e.rate_grid.is_set()) sweep["rate"] = grid_json(e.rate_grid);
  j["sweep"] = sweep;
  j["sensing"] = {{"floor_ms", e.sensing.floor_ms},
                  {"ceiling_ms", e.sensing.ceiling_ms},
                  {"tol_ms", e.sensing.tol_ms},
                  {"prescan", e.sensing.prescan}};
  json ra;
  ra["variants"] = json::array();
  for (auto v : e.variants) ra["variants"].push_back(to_string(v));
  ra["backoffs"] = json::array();
  for (const auto& b : e.backoffs) ra["backoffs"].push_back(backoff_json(b));
  j["ra_sdt"] = ra;
  return j;
}

}  // namespace

std::string to_json(const ExperimentSpec& spec, int indent) {
  return experiment_json(spec).dump(indent);
}

std::string manifest_json(const ExperimentSpec& spec, const std::string& output_path,
                          const std::string& format) {
  json j = experiment_json(spec);
  j["manifest"] = {{"tool", "sensedelay"},
                   {"version", tool_version()},
                   {"output", output_path},
                   {"format", format}};
  return j.dump(2);
}

}  // namespace sensedelay
