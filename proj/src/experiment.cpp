#include "sensedelay/experiment.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "sensedelay/error.hpp"

#ifndef SENSEDELAY_VERSION
#define SENSEDELAY_VERSION "0.0.0"
#endif

namespace sensedelay {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Columns are named on first use; every row must add them in the same order.
class Row {
 public:
  Row& add(const std::string& name, Cell v) {
    names.push_back(name);
    cells.push_back(std::move(v));
    return *this;
  }
  Row& num(const std::string& name, double v) { return add(name, v); }
  Row& maybe(const std::string& name, bool present, double v) {
    return add(name, present ? Cell{v} : Cell{std::monostate{}});
  }
  std::vector<std::string> names;
  std::vector<Cell> cells;
};

// Evaluates fn(i) for i in [0, count) on up to `jobs` threads and returns the
// rows in index order. The first exception wins and is rethrown.
template <class F>
std::vector<Row> parallel_rows(std::size_t count, int jobs, F&& fn) {
  std::vector<Row> rows(count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex m;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < count;) {
      try {
        rows[i] = fn(i);
      } catch (...) {
        std::lock_guard lk(m);
        if (!err) err = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(count)));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
  return rows;
}

Table to_table(std::vector<Row> rows) {
  Table t;
  if (rows.empty()) return t;
  t.columns = rows.front().names;
  for (auto& r : rows) {
    if (r.names != t.columns) throw Error(ErrorCode::InvalidArgument, "inconsistent row layout");
    t.rows.push_back(std::move(r.cells));
  }
  return t;
}

std::string backoff_label(const BackoffPolicy& b) {
  if (b.kind() == BackoffKind::CustomTable) return "table";
  return std::string(to_string(b.kind())) + (b.cutoff() > 0 ? "-k" + std::to_string(b.cutoff()) : "");
}

void scenario_columns(Row& r, const Scenario& s) {
  r.add("n", std::int64_t{s.n})
      .add("family", std::string(to_string(s.scheme.family)))
      .add("connection", std::string(to_string(s.scheme.connection)))
      .add("backoff", backoff_label(s.backoff))
      .num("q0", s.q0)
      .num("lambda_hat", s.aggregate_packet_rate())
      .num("lambda_tilde", s.aggregate_bit_rate())
      .num("slot_ms", derive_slot(s.scheme).slot_ms);
}

struct Optimum {
  bool ok = false;
  OptimalQ0 o;
};

Optimum try_optimal(const Scenario& s, const SolverOptions& opt) {
  Optimum r;
  try {
    r.o = optimal_q0(s, opt);
    r.ok = true;
  } catch (const SaturatedError&) {
  }
  return r;
}

Row analyze_row(const Scenario& s, const SolverOptions& opt) {
  const DelayResult d = mean_queueing_delay(s, opt.form);
  const SteadyState& st = d.steady;
  const Optimum best = try_optimal(s, opt);
  Row r;
  scenario_columns(r, s);
  r.num("tau_t", st.holding.tau_t)
      .num("tau_f", st.holding.tau_f)
      .num("lambda_hat_max", max_throughput(s.scheme))
      .maybe("region_lower", !st.region.empty, st.region.q0_lower)
      .maybe("region_upper", !st.region.empty, st.region.q0_upper)
      .add("regime", std::string(to_string(st.regime)))
      .num("p", st.p)
      .num("alpha", st.alpha)
      .num("alpha_tilde", st.alpha_tilde)
      .num("mu", st.mu)
      .num("rho", st.rho)
      .num("omega", st.omega)
      .num("T_bar_slots", d.t_slots)
      .num("T_bar_ms", d.t_ms)
      .add("finite", d.finite)
      .maybe("q0_star", best.ok, best.o.q0_star)
      .num("T_min_slots", best.ok ? best.o.delay.t_slots : kInf)
      .num("T_min_ms", best.ok ? best.o.delay.t_ms : kInf);
  return r;
}

void sim_columns(Row& r, const SimReport& m) {
  r.num("mean_queue_len", m.mean_queue_len)
      .num("delay_little_slots", m.delay_little_slots)
      .num("delay_sojourn_slots", m.delay_sojourn_slots)
      .num("throughput_pkts_per_slot", m.throughput_pkts_per_slot)
      .num("p_hat", m.p_hat)
      .num("alpha_hat", m.alpha_hat)
      .add("saturated_flag", m.saturated_flag)
      .num("p_hat_stderr", m.p_hat_stderr)
      .add("arrivals", static_cast<std::int64_t>(m.arrivals))
      .add("departures", static_cast<std::int64_t>(m.departures))
      .add("final_queue_total", static_cast<std::int64_t>(m.final_queue_total))
      .add("requests", static_cast<std::int64_t>(m.requests))
      .add("successes", static_cast<std::int64_t>(m.successes))
      .add("slots", static_cast<std::int64_t>(m.slots))
      .add("warmup", static_cast<std::int64_t>(m.warmup))
      .add("seed", static_cast<std::int64_t>(m.seed));
}

SimConfig seeded(const SimConfig& c, std::size_t i) {
  SimConfig out = c;
  out.seed = c.seed + i;
  return out;
}

std::vector<double> default_q0_grid(const ExperimentSpec& e) {
  const Scenario& s = e.scenario;
  const UnsaturatedRegion reg =
      unsaturated_region(s.scheme.family, holding_times(s.scheme), s.n,
                         s.aggregate_packet_rate(), s.backoff, e.solver.form);
  if (reg.empty)
    throw Error(ErrorCode::Saturated,
                "the unsaturated region is empty at this rate; give sweep.q0 explicitly");
  std::vector<double> v(e.q0_points);
  for (int i = 0; i < e.q0_points; ++i)
    v[i] = reg.q0_lower * std::pow(reg.q0_upper / reg.q0_lower, (i + 0.5) / e.q0_points);
  return v;
}

Table sweep_q0(const ExperimentSpec& e, int jobs) {
  const std::vector<double> grid = e.q0_grid.is_set() ? e.q0_grid.resolve() : default_q0_grid(e);
  for (double q : grid)
    if (!(q > 0.0 && q <= 1.0)) throw Error(ErrorCode::Config, "sweep.q0: values must lie in (0,1]");
  return to_table(parallel_rows(grid.size(), jobs, [&](std::size_t i) {
    const Scenario s = e.scenario.with_q0(grid[i]);
    const DelayResult d = mean_queueing_delay(s, e.solver.form);
    Row r;
    r.num("q0", grid[i])
        .num("T_bar_analytical", d.t_slots)
        .maybe("T_bar_sim", e.with_simulation, 0.0)
        .maybe("region_lower", !d.steady.region.empty, d.steady.region.q0_lower)
        .maybe("region_upper", !d.steady.region.empty, d.steady.region.q0_upper)
        .add("finite", d.finite)
        .add("regime", std::string(to_string(d.steady.regime)))
        .num("T_bar_ms", d.t_ms)
        .num("p_analytical", d.steady.p);
    if (e.with_simulation) {
      const SimReport m = simulate(s, seeded(e.sim, i));
      r.cells[2] = m.delay_little_slots;
      sim_columns(r, m);
    }
    return r;
  }));
}

std::vector<double> default_rate_grid(const Scenario& s, RateAxis axis) {
  const double top = axis == RateAxis::AggregatePacket
                         ? max_throughput(s.scheme)
                         : max_bit_throughput(derive_slot(s.scheme), s.encoding_rate);
  Grid g;
  g.from = 1e-3 * top;
  g.to = (1.0 - 1e-3) * top;
  g.points = 20;
  return g.resolve();
}

Scenario at_rate(const Scenario& s, RateAxis axis, double v) {
  return axis == RateAxis::AggregatePacket ? s.with_aggregate_packet_rate(v)
                                           : s.with_aggregate_bit_rate(v);
}

Table sweep_rate(const ExperimentSpec& e, int jobs) {
  const auto grid = e.rate_grid.is_set() ? e.rate_grid.resolve()
                                         : default_rate_grid(e.scenario, e.rate_axis);
  return to_table(parallel_rows(grid.size(), jobs, [&](std::size_t i) {
    const Scenario s = at_rate(e.scenario, e.rate_axis, grid[i]);
    const Optimum best = try_optimal(s, e.solver);
    Row r;
    r.num("lambda_hat", s.aggregate_packet_rate())
        .num("lambda_tilde", s.aggregate_bit_rate())
        .num("lambda_hat_max", max_throughput(s.scheme))
        .maybe("region_lower", best.ok, best.o.region.q0_lower)
        .maybe("region_upper", best.ok, best.o.region.q0_upper)
        .maybe("q0_star", best.ok, best.o.q0_star)
        .num("T_min_slots", best.ok ? best.o.delay.t_slots : kInf)
        .num("T_min_ms", best.ok ? best.o.delay.t_ms : kInf)
        .num("T_relaxed_ms", best.ok ? best.o.delay_relaxed.t_ms : kInf)
        .add("finite", best.ok && best.o.delay.finite)
        .add("monotone", best.ok ? best.o.monotone : false);
    if (e.with_simulation) {
      const bool run = best.ok && best.o.delay.finite;
      SimReport m;
      if (run) m = simulate(s.with_q0(best.o.q0_star), seeded(e.sim, i));
      r.maybe("T_sim_slots", run, m.delay_little_slots)
          .maybe("T_sim_ms", run, m.delay_little_slots * m.slot_ms)
          .maybe("p_hat", run, m.p_hat)
          .add("saturated_flag", run ? Cell{m.saturated_flag} : Cell{std::monostate{}});
    }
    return r;
  }));
}

Table sensing_bound_table(const ExperimentSpec& e, int jobs) {
  const Scenario& base = e.scenario;
  const auto grid = e.rate_grid.is_set() ? e.rate_grid.resolve() : lambda_tilde_grid(base, 40);
  SensingSearchConfig cfg = e.sensing;
  cfg.solver = e.solver;
  Table t = to_table(parallel_rows(grid.size(), jobs, [&](std::size_t i) {
    Row r;
    r.num("lambda_tilde", grid[i]);
    try {
      const SensingBoundResult b = delay_optimal_bound(base, grid[i], cfg);
      r.num("sigma_star_delay_ms", b.sigma_star_delay_ms)
          .num("sigma_star_throughput_ms", b.sigma_star_throughput_ms)
          .num("t_min_aloha_ms", b.t_min_aloha_ms)
          .num("t_min_csma_ms", b.t_min_csma_ms)
          .add("finite", true)
          .add("non_monotone", b.non_monotone)
          .add("clipped_at_ceiling", b.clipped_at_ceiling)
          .add("below_floor", b.below_floor);
    } catch (const SaturatedError& err) {
      if (err.code() != ErrorCode::AlohaSaturated) throw;
      r.add("sigma_star_delay_ms", std::monostate{})
          .num("sigma_star_throughput_ms", throughput_optimal_bound(base.scheme))
          .num("t_min_aloha_ms", kInf)
          .add("t_min_csma_ms", std::monostate{})
          .add("finite", false)
          .add("non_monotone", false)
          .add("clipped_at_ceiling", false)
          .add("below_floor", false);
    }
    return r;
  }));
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (std::get<bool>(t.rows[i][6]))
      t.notes.push_back("non-monotone CSMA delay in sigma at lambda_tilde " + format_double(grid[i]));
  }
  return t;
}

Table ra_sdt_table(const ExperimentSpec& e, int jobs) {
  std::vector<RaSdtVariant> variants = e.variants;
  if (variants.empty())
    variants = {RaSdtVariant::SensingFree2Step, RaSdtVariant::SensingFree4Step,
                RaSdtVariant::SensingBased2Step, RaSdtVariant::SensingBased4Step};
  std::vector<BackoffPolicy> backoffs = e.backoffs;
  if (backoffs.empty()) backoffs.push_back(e.scenario.backoff);

  std::vector<double> grid;
  if (e.rate_grid.is_set()) {
    grid = e.rate_grid.resolve();
  } else {
    // Up to just below the smaller sensing-free capacity.
    double top = kInf;
    for (auto v : {RaSdtVariant::SensingFree2Step, RaSdtVariant::SensingFree4Step})
      top = std::min(top, max_bit_throughput(ra_sdt_scheme(v), e.scenario.encoding_rate));
    Grid g;
    g.from = 1e-4;
    g.to = 0.99 * top;
    g.points = 6;
    grid = g.resolve();
  }

  struct Point {
    BackoffPolicy b;
    double lt;
    RaSdtVariant v;
  };
  std::vector<Point> pts;
  for (const auto& b : backoffs)
    for (double lt : grid)
      for (auto v : variants) pts.push_back({b, lt, v});

  return to_table(parallel_rows(pts.size(), jobs, [&](std::size_t i) {
    const Point& p = pts[i];
    Scenario s = e.scenario;
    s.backoff = p.b;
    s.scheme = ra_sdt_scheme(p.v);
    s = s.with_aggregate_bit_rate(p.lt);
    const Optimum best = try_optimal(s, e.solver);
    Row r;
    r.add("backoff", backoff_label(p.b))
        .num("lambda_tilde", p.lt)
        .add("variant", std::string(to_string(p.v)))
        .num("lambda_hat", s.aggregate_packet_rate())
        .maybe("q0_star", best.ok, best.o.q0_star)
        .num("T_min_ms", best.ok ? best.o.delay.t_ms : kInf)
        .add("finite", best.ok && best.o.delay.finite);
    if (e.with_simulation) {
      const bool run = best.ok && best.o.delay.finite;
      SimReport m;
      if (run) m = simulate_ra_sdt(p.v, s.with_q0(best.o.q0_star), seeded(e.sim, i));
      r.maybe("T_sim_ms", run, m.delay_little_slots * m.slot_ms)
          .maybe("p_hat", run, m.p_hat)
          .add("saturated_flag", run ? Cell{m.saturated_flag} : Cell{std::monostate{}});
    }
    return r;
  }));
}

}  // namespace

std::string tool_version() { return SENSEDELAY_VERSION; }

std::string Table::to_csv() const {
  std::string out;
  for (std::size_t c = 0; c < columns.size(); ++c) out += (c ? "," : "") + csv_escape(columns[c]);
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) out += format_double(v);
            else if constexpr (std::is_same_v<T, std::int64_t>) out += std::to_string(v);
            else if constexpr (std::is_same_v<T, bool>) out += v ? "true" : "false";
            else if constexpr (std::is_same_v<T, std::string>) out += csv_escape(v);
          },
          row[c]);
    }
    out += '\n';
  }
  return out;
}

std::string Table::to_json(int indent) const {
  using nlohmann::json;
  json arr = json::array();
  for (const auto& row : rows) {
    json o = json::object();
    for (std::size_t c = 0; c < row.size(); ++c) {
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
              // JSON has no infinities; the row's finite column carries that.
              o[columns[c]] = std::isfinite(v) ? json(v) : json(nullptr);
            } else if constexpr (std::is_same_v<T, std::monostate>) {
              o[columns[c]] = nullptr;
            } else {
              o[columns[c]] = v;
            }
          },
          row[c]);
    }
    arr.push_back(std::move(o));
  }
  json j{{"columns", columns}, {"rows", arr}};
  if (!notes.empty()) j["notes"] = notes;
  if (failures) j["failures"] = failures;
  return j.dump(indent);
}

Table run_experiment(const ExperimentSpec& e, int jobs) {
  switch (e.command) {
    case Command::Analyze: {
      std::vector<Row> rows{analyze_row(e.scenario, e.solver)};
      return to_table(std::move(rows));
    }
    case Command::Simulate: {
      Row r = analyze_row(e.scenario, e.solver);
      sim_columns(r, simulate(e.scenario, e.sim));
      std::vector<Row> rows{std::move(r)};
      return to_table(std::move(rows));
    }
    case Command::SweepQ0: return sweep_q0(e, jobs);
    case Command::SweepRate: return sweep_rate(e, jobs);
    case Command::SensingBound: return sensing_bound_table(e, jobs);
    case Command::RaSdt: return ra_sdt_table(e, jobs);
    case Command::Validate: return run_validation(jobs);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown command");
}

}  // namespace sensedelay
