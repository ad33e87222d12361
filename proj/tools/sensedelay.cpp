#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "sensedelay/sensedelay.h"

#ifndef SENSEDELAY_PRESET_DIR
#define SENSEDELAY_PRESET_DIR ""
#endif

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kChecksFailed = 1, kUsage = 2, kRuntime = 3 };

struct Options {
  std::string config;
  std::string preset;
  std::string out;
  std::string format = "csv";
  std::uint64_t seed = 0;
  std::uint64_t slots = 0;
  std::uint64_t warmup = 0;
  bool exact_finite_n = false;
  int jobs = 0;
};

struct Failure {
  int code;
  std::string message;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Failure{kUsage, "cannot read " + p.string()};
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Failure{kRuntime, "cannot write " + p.string()};
  out << text;
  if (!out) throw Failure{kRuntime, "write failed: " + p.string()};
}

std::vector<fs::path> preset_dirs() {
  std::vector<fs::path> dirs;
  if (const char* env = std::getenv("SENSEDELAY_PRESET_DIR"); env && *env) dirs.emplace_back(env);
  if (*SENSEDELAY_PRESET_DIR) dirs.emplace_back(SENSEDELAY_PRESET_DIR);
  dirs.emplace_back("presets");
  return dirs;
}

fs::path find_preset(const std::string& name) {
  const std::string file = name.ends_with(".json") ? name : name + ".json";
  for (const fs::path& d : preset_dirs())
    if (fs::is_regular_file(d / file)) return d / file;
  std::string msg = "unknown preset '" + name + "'; searched:";
  for (const fs::path& d : preset_dirs()) msg += " " + d.string();
  throw Failure{kUsage, msg};
}

std::vector<std::string> list_presets() {
  std::vector<std::string> names;
  for (const fs::path& d : preset_dirs()) {
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(d, ec))
      if (entry.path().extension() == ".json") {
        const std::string n = entry.path().stem().string();
        if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
      }
  }
  std::sort(names.begin(), names.end());
  return names;
}

void check(sd_status s, const std::string& context) {
  if (s == SD_OK) return;
  const int code = s == SD_ERR_CONFIG || s == SD_ERR_INVALID_ARGUMENT ? kUsage : kRuntime;
  throw Failure{code, context + ": " + sd_last_error()};
}

std::string take(char* s) {
  std::string out = s ? s : "";
  sd_string_free(s);
  return out;
}

fs::path output_path(const Options& o, const std::string& command, CLI::App* app) {
  if (!app->get_option("--out")->empty()) return o.out;
  const char* dir = std::getenv("SENSEDELAY_OUTPUT_DIR");
  if (!dir || !*dir) return {};
  std::string stem = command;
  if (!o.preset.empty()) stem = fs::path(o.preset).stem().string() + "-" + command;
  else if (!o.config.empty()) stem = fs::path(o.config).stem().string() + "-" + command;
  return fs::path(dir) / (stem + "." + o.format);
}

int run(const Options& o, const std::string& command, CLI::App* app) {
  std::string text = "{}";
  if (!o.config.empty()) text = read_file(o.config);
  else if (!o.preset.empty()) text = read_file(find_preset(o.preset));

  sd_experiment* raw = nullptr;
  check(sd_experiment_from_json(text.c_str(), &raw), "config");
  std::unique_ptr<sd_experiment, void (*)(sd_experiment*)> e(raw, sd_experiment_free);

  if (command != "run") check(sd_experiment_set_command(e.get(), command.c_str()), "command");
  if (!app->get_option("--seed")->empty()) check(sd_experiment_set_seed(e.get(), o.seed), "--seed");
  const bool has_slots = !app->get_option("--slots")->empty();
  const bool has_warmup = !app->get_option("--warmup")->empty();
  if (has_slots && has_warmup) {
    if (o.slots <= o.warmup) throw Failure{kUsage, "--slots: must exceed --warmup"};
    check(sd_experiment_set_warmup(e.get(), 0), "--warmup");
  }
  if (has_slots) check(sd_experiment_set_slots(e.get(), o.slots), "--slots");
  if (has_warmup) check(sd_experiment_set_warmup(e.get(), o.warmup), "--warmup");
  if (o.exact_finite_n) check(sd_experiment_set_exact_finite_n(e.get(), 1), "--exact-finite-n");

  int jobs = o.jobs;
  if (jobs <= 0) jobs = std::max(1u, std::thread::hardware_concurrency());

  sd_result* rr = nullptr;
  check(sd_experiment_run(e.get(), jobs, &rr), command);
  std::unique_ptr<sd_result, void (*)(sd_result*)> r(rr, sd_result_free);

  const std::string body = o.format == "json" ? sd_result_json(r.get()) : sd_result_csv(r.get());
  const fs::path out = output_path(o, command, app);
  if (out.empty()) {
    std::cout << body;
    if (o.format == "json") std::cout << '\n';
  } else {
    write_file(out, body);
    char* m = nullptr;
    check(sd_experiment_manifest(e.get(), out.string().c_str(), o.format.c_str(), &m), "manifest");
    write_file(out.string() + ".manifest.json", take(m) + "\n");
    std::cerr << "wrote " << out.string() << " (" << sd_result_rows(r.get()) << " rows)\n";
  }
  for (std::size_t i = 0; i < sd_result_note_count(r.get()); ++i)
    std::cerr << "note: " << sd_result_note(r.get(), i) << '\n';
  return sd_result_failures(r.get()) > 0 ? kChecksFailed : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Queueing delay analysis and simulation for sensing-free and sensing-based random access"};
  app.set_version_flag("--version", std::string(sd_version()));
  app.require_subcommand(1);

  Options o;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"analyze", "steady state, mean delay and optimal q0 for one scenario"},
      {"simulate", "analysis plus one simulation run"},
      {"sweep-q0", "delay versus q0 (analytical, and simulated when enabled)"},
      {"sweep-rate", "delay versus input rate at the optimal q0"},
      {"sensing-bound", "throughput- and delay-optimal sensing bounds versus bit rate"},
      {"ra-sdt", "RA-SDT variants: minimum delay versus bit rate"},
      {"validate", "oracle-equivalence checks; exit 1 on any failure"},
      {"run", "run the command named in the config (e.g. a manifest)"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    auto* cfg = sub->add_option("--config", o.config, "experiment config (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--preset", o.preset, "named config from the presets directory")->excludes(cfg);
    sub->add_option("--out", o.out, "output file; a manifest is written to <out>.manifest.json");
    sub->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--seed", o.seed, "simulation seed");
    sub->add_option("--slots", o.slots, "simulated slots including warmup");
    sub->add_option("--warmup", o.warmup, "warmup slots");
    sub->add_flag("--exact-finite-n", o.exact_finite_n, "use the finite-n fixed-point equations");
    sub->add_option("--jobs", o.jobs, "worker threads (default: hardware concurrency)")
        ->check(CLI::NonNegativeNumber);
  }
  app.add_subcommand("presets", "list available presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  if (sub->get_name() == "presets") {
    for (const std::string& n : list_presets()) std::cout << n << '\n';
    return kOk;
  }
  try {
    return run(o, sub->get_name(), sub);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << '\n';
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
}
