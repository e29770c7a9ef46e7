// guardad: command-line front end.
//
//   guardad run     --template ApproachingCyclist --count 40 --policy faulty:blind=0.7,comply=0.9 --out out/
//   guardad eval    --traces out/traces
//   guardad explain --trace out/traces/<id>.jsonl --step 7
//   guardad gen     --template RedLightIntersection --count 5 --out scenarios/
//   guardad sweep   --template SuddenPedestrianCrossing --n-range 1..6 --k-range 2
//   guardad check   --rules rules/default.gsl
//
// Exit status: 0 success, 1 configuration error, 2 runtime error. Errors are
// reported as a single "error: <code>: <message>" line on stderr.

#include <glob.h>

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include "guardad/catalog.hpp"
#include "guardad/error.hpp"
#include "guardad/guard.hpp"
#include "guardad/sim.hpp"

namespace fs = std::filesystem;
using namespace guardad;

namespace {

struct ConfigPhaseError : Error {
  explicit ConfigPhaseError(const Error& e) : Error(e.code(), e.what()) {}
};

struct SuiteOptions {
  std::string rules;
  std::vector<std::string> templates;
  std::vector<std::string> scenario_paths;
  std::size_t count = 40;
  std::string policy = "oracle";
  std::string mode = "full";
  std::size_t n = 4;
  std::size_t k = 2;
  double theta = 1.0;
  int max_retries = 1;
  std::string fallback = "Stop";
  std::uint64_t seed = 0;
  std::string out = "out";
  double dropout = 0.0;
  std::int64_t crossing_gap = 2;
  bool flicker = false;
  unsigned jobs = 1;
  std::string label;
  std::int64_t reaction = kReactionSteps;
  std::int64_t lookback = kAbruptLookback;
};

void add_suite_options(CLI::App* cmd, SuiteOptions& o) {
  cmd->add_option("--rules", o.rules, "Rule catalog file (default: built-in catalog)");
  cmd->add_option("--template", o.templates, "Scenario template(s) to generate");
  cmd->add_option("--scenarios", o.scenario_paths, "Scenario files or glob patterns");
  cmd->add_option("--count", o.count, "Scenarios per template");
  cmd->add_option("--policy", o.policy, "Policy spec, e.g. oracle or faulty:blind=0.7,comply=0.9");
  cmd->add_option("--mode", o.mode, "full|predicate-static|predicate-targets|forced-fallback|constrained-select|off");
  cmd->add_option("--n", o.n, "Temporal window order");
  cmd->add_option("--k", o.k, "Observation history length (k+1 frames)");
  cmd->add_option("--theta", o.theta, "Inclusion threshold");
  cmd->add_option("--max-retries", o.max_retries, "Prompted re-queries per violating step");
  cmd->add_option("--fallback", o.fallback, "Action used by forced-fallback");
  cmd->add_option("--seed", o.seed, "Scenario seed (GUARDAD_SEED overrides)");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--dropout", o.dropout, "Perception dropout per entity and step");
  cmd->add_option("--crossing-gap", o.crossing_gap, "SuddenPedestrianCrossing onset-to-collision steps");
  cmd->add_flag("--flicker", o.flicker, "SuddenPedestrianCrossing with intermittent occlusion");
  cmd->add_option("--jobs", o.jobs, "Worker threads (0 = all cores)");
  cmd->add_option("--label", o.label, "Label for the metrics row");
  cmd->add_option("--reaction", o.reaction, "Reaction window in steps");
  cmd->add_option("--lookback", o.lookback, "Abrupt-change lookback in steps");
}

std::uint64_t effective_seed(std::uint64_t seed) {
  const char* env = std::getenv("GUARDAD_SEED");
  if (!env || !*env) return seed;
  std::uint64_t v = 0;
  const std::string_view s(env);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw ConfigError("GUARDAD_SEED must be a non-negative integer");
  return v;
}

RuleCatalog load_rules(const std::string& path) {
  if (path.empty()) return default_catalog();
  if (!fs::exists(path)) throw ConfigError("rule catalog '" + path + "' does not exist");
  return load_catalog(path);
}

std::vector<std::string> expand_globs(const std::vector<std::string>& patterns) {
  std::vector<std::string> out;
  for (const auto& p : patterns) {
    glob_t g{};
    const int rc = ::glob(p.c_str(), 0, nullptr, &g);
    if (rc == 0) {
      for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    }
    ::globfree(&g);
    if (rc == GLOB_NOMATCH) throw ConfigError("no scenario files match '" + p + "'");
    if (rc != 0 && rc != GLOB_NOMATCH) throw ConfigError("cannot expand '" + p + "'");
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct Suite {
  RuleCatalog catalog;
  std::vector<Scenario> scenarios;
  PolicySpec policy;
  GuardConfig config;
  EpisodeOptions episode;
  std::string label;
};

Suite prepare_suite(const SuiteOptions& o) {
  Suite s;
  s.catalog = load_rules(o.rules);
  s.policy = PolicySpec::parse(o.policy);
  auto mode = enum_from<GuardMode>(o.mode);
  if (!mode) throw ConfigError("unknown guard mode '" + o.mode + "'");
  auto fallback = enum_from<Action>(o.fallback);
  if (!fallback) throw ConfigError("unknown fallback action '" + o.fallback + "'");
  s.config.n = o.n;
  s.config.k = o.k;
  s.config.theta = o.theta;
  s.config.max_retries = o.max_retries;
  s.config.mode = *mode;
  s.config.fallback_action = *fallback;
  s.config.validate();
  if (o.reaction < 1 || o.lookback < 0) throw ConfigError("reaction must be >= 1 and lookback >= 0");
  s.episode = {o.reaction, o.lookback};

  ScenarioParams params;
  params.crossing_gap = o.crossing_gap;
  params.perception_dropout = o.dropout;
  params.occlusion_flicker = o.flicker;
  const std::uint64_t seed = effective_seed(o.seed);
  std::string label;
  std::vector<std::string> templates = o.templates;
  if (templates.empty() && o.scenario_paths.empty()) {
    // no selection: the whole five-template suite
    for (auto t : all_of<ScenarioTemplate>()) templates.emplace_back(name_of(t));
  }
  for (const auto& name : templates) {
    auto generated = generate_scenarios(parse_template(name), o.count, seed, params);
    s.scenarios.insert(s.scenarios.end(), generated.begin(), generated.end());
    label += (label.empty() ? "" : "+") + name;
  }
  if (o.templates.empty() && o.scenario_paths.empty()) label = "suite";
  for (const auto& path : expand_globs(o.scenario_paths)) s.scenarios.push_back(load_scenario(path));
  if (!o.scenario_paths.empty()) label += label.empty() ? "files" : "+files";
  s.label = o.label.empty() ? label : o.label;
  return s;
}

std::vector<std::size_t> parse_range(const std::string& text, const char* what) {
  auto number = [&](std::string_view s) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
      throw ConfigError(std::string(what) + " expects N, A..B or a comma list, got '" + text + "'");
    }
    return v;
  };
  std::vector<std::size_t> out;
  if (auto dots = text.find(".."); dots != std::string::npos) {
    const std::size_t a = number(std::string_view(text).substr(0, dots));
    const std::size_t b = number(std::string_view(text).substr(dots + 2));
    for (std::size_t v = a; v <= b; ++v) out.push_back(v);
  } else {
    std::string_view rest(text);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      out.push_back(number(rest.substr(0, comma)));
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
  }
  if (out.empty()) throw ConfigError(std::string(what) + " is empty");
  return out;
}

MetricsRow metrics_row(const Suite& s, const std::vector<EpisodeResult>& results) {
  std::vector<EpisodeOutcome> outcomes;
  for (const auto& r : results) outcomes.push_back(r.outcome);
  return {s.label, s.config.mode, s.config.n, s.config.k, compute_metrics(outcomes)};
}

template <class Setup, class Body>
int guarded(Setup&& setup, Body&& body) {
  try {
    auto prepared = [&] {
      try {
        return setup();
      } catch (const Error& e) {
        throw ConfigPhaseError(e);
      } catch (const fs::filesystem_error& e) {
        throw ConfigPhaseError(ConfigError(e.what()));
      }
    }();
    body(prepared);
    return 0;
  } catch (const ConfigPhaseError& e) {
    std::cerr << "error: " << e.code() << ": " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.code() << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: runtime_error: " << e.what() << "\n";
    return 2;
  }
}

int cmd_run(const SuiteOptions& o) {
  return guarded([&] { return prepare_suite(o); },
                 [&](const Suite& s) {
                   const auto results = run_suite(s.scenarios, s.policy, s.config, s.catalog, o.jobs, s.episode);
                   const fs::path out(o.out);
                   const std::string policy = s.policy.to_string();
                   for (const auto& r : results) {
                     write_file_atomic(out / "traces" / (r.trace.scenario_id + ".jsonl"), trace_jsonl(r, s.config, policy));
                   }
                   const std::string table = metrics_tsv_header() + metrics_tsv_row(metrics_row(s, results));
                   write_file_atomic(out / "metrics.tsv", table);
                   std::cout << table;
                 });
}

int cmd_sweep(const SuiteOptions& o, const std::string& n_range, const std::string& k_range) {
  struct Prepared {
    Suite suite;
    std::vector<std::size_t> ns, ks;
  };
  return guarded(
      [&] {
        Prepared p{prepare_suite(o), parse_range(n_range, "--n-range"), parse_range(k_range, "--k-range")};
        for (std::size_t n : p.ns) {
          if (n < 1) throw ConfigError("window order n must be >= 1");
        }
        return p;
      },
      [&](Prepared& p) {
        std::string table = metrics_tsv_header();
        for (std::size_t n : p.ns) {
          for (std::size_t k : p.ks) {
            Suite s = p.suite;
            s.config.n = n;
            s.config.k = k;
            const auto results = run_suite(s.scenarios, s.policy, s.config, s.catalog, o.jobs, s.episode);
            table += metrics_tsv_row(metrics_row(s, results));
          }
        }
        write_file_atomic(fs::path(o.out) / "sweep.tsv", table);
        std::cout << table;
      });
}

int cmd_eval(const std::vector<std::string>& inputs, const std::string& out, const std::string& label) {
  return guarded(
      [&] {
        std::vector<std::string> files;
        for (const auto& in : inputs) {
          if (fs::is_directory(in)) {
            for (const auto& entry : fs::directory_iterator(in)) {
              if (entry.path().extension() == ".jsonl") files.push_back(entry.path().string());
            }
          } else if (fs::exists(in)) {
            files.push_back(in);
          } else {
            throw ConfigError("trace input '" + in + "' does not exist");
          }
        }
        std::sort(files.begin(), files.end());
        if (files.empty()) throw EmptyInput("no trace files found");
        return files;
      },
      [&](const std::vector<std::string>& files) {
        std::vector<EpisodeOutcome> outcomes;
        MetricsRow row;
        row.label = label;
        for (std::size_t i = 0; i < files.size(); ++i) {
          LoadedTrace t = load_trace(files[i]);
          if (i == 0) {
            row.mode = t.mode;
            row.n = t.n;
            row.k = t.k;
          }
          outcomes.push_back(std::move(t.outcome));
        }
        row.report = compute_metrics(outcomes);
        const std::string table = metrics_tsv_header() + metrics_tsv_row(row);
        if (!out.empty()) write_file_atomic(out, table);
        std::cout << table;
      });
}

int cmd_explain(const std::string& path, std::size_t step) {
  return guarded(
      [&] {
        LoadedTrace t = load_trace(path);
        if (step >= t.trace.steps.size()) {
          throw StepOutOfRange("step " + std::to_string(step) + " is beyond the trace (" +
                               std::to_string(t.trace.steps.size()) + " steps)");
        }
        return t.trace.steps[step];
      },
      [&](const StepRecord& r) { std::cout << explain(r); });
}

int cmd_gen(const SuiteOptions& o) {
  return guarded(
      [&] {
        if (o.templates.empty()) throw ConfigError("give at least one --template");
        ScenarioParams params;
        params.crossing_gap = o.crossing_gap;
        params.perception_dropout = o.dropout;
        params.occlusion_flicker = o.flicker;
        std::vector<Scenario> all;
        for (const auto& name : o.templates) {
          auto generated = generate_scenarios(parse_template(name), o.count, effective_seed(o.seed), params);
          all.insert(all.end(), generated.begin(), generated.end());
        }
        return all;
      },
      [&](const std::vector<Scenario>& all) {
        for (const Scenario& s : all) {
          const fs::path file = fs::path(o.out) / (s.id + ".json");
          write_file_atomic(file, to_json(s).dump(1) + "\n");
          std::cout << file.string() << "\n";
        }
      });
}

int cmd_check(const std::string& rules, bool print_default) {
  return guarded(
      [&] {
        if (print_default) return default_catalog();
        if (rules.empty()) throw ConfigError("give --rules or --print-default");
        return load_rules(rules);
      },
      [&](const RuleCatalog& c) {
        if (print_default) {
          std::cout << default_catalog_text();
          return;
        }
        std::cout << "ok: " << c.predicates().size() << " predicates, " << c.constraints().size() << " constraints, "
                  << c.horn_rules().size() << " horn rules, " << c.temporal_rules().size() << " temporal rules\n";
      });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Runtime safeguard for driving decision policies"};
  app.require_subcommand(1);

  SuiteOptions run_opts;
  auto* run = app.add_subcommand("run", "Run guarded episodes and write traces and metrics");
  add_suite_options(run, run_opts);

  SuiteOptions sweep_opts;
  std::string n_range = "4", k_range = "2";
  auto* sweep = app.add_subcommand("sweep", "Metrics table over (n, k) configurations");
  add_suite_options(sweep, sweep_opts);
  sweep->add_option("--n-range", n_range, "Window orders: N, A..B or a comma list");
  sweep->add_option("--k-range", k_range, "History lengths: N, A..B or a comma list");

  std::vector<std::string> eval_inputs;
  std::string eval_out, eval_label = "traces";
  auto* eval = app.add_subcommand("eval", "Recompute metrics from trace files");
  eval->add_option("--traces", eval_inputs, "Trace files or directories")->required();
  eval->add_option("--out", eval_out, "Write the metrics table here too");
  eval->add_option("--label", eval_label, "Label for the metrics row");

  std::string trace_path;
  std::size_t step = 0;
  auto* expl = app.add_subcommand("explain", "Render one step of a trace");
  expl->add_option("--trace", trace_path, "Trace file")->required();
  expl->add_option("--step", step, "Step index within the trace")->required();

  SuiteOptions gen_opts;
  gen_opts.out = "scenarios";
  gen_opts.count = 1;
  auto* gen = app.add_subcommand("gen", "Write generated scenarios as JSON files");
  gen->add_option("--template", gen_opts.templates, "Scenario template(s)")->required();
  gen->add_option("--count", gen_opts.count, "Scenarios per template");
  gen->add_option("--seed", gen_opts.seed, "Seed (GUARDAD_SEED overrides)");
  gen->add_option("--out", gen_opts.out, "Output directory");
  gen->add_option("--dropout", gen_opts.dropout, "Perception dropout per entity and step");
  gen->add_option("--crossing-gap", gen_opts.crossing_gap, "SuddenPedestrianCrossing onset-to-collision steps");
  gen->add_flag("--flicker", gen_opts.flicker, "SuddenPedestrianCrossing with intermittent occlusion");

  std::string check_rules;
  bool print_default = false;
  auto* check = app.add_subcommand("check", "Validate a rule catalog");
  check->add_option("--rules", check_rules, "Rule catalog file");
  check->add_flag("--print-default", print_default, "Print the built-in catalog");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage_error: " << e.what() << "\n";
    return 1;
  }

  if (*run) return cmd_run(run_opts);
  if (*sweep) return cmd_sweep(sweep_opts, n_range, k_range);
  if (*eval) return cmd_eval(eval_inputs, eval_out, eval_label);
  if (*expl) return cmd_explain(trace_path, step);
  if (*gen) return cmd_gen(gen_opts);
  if (*check) return cmd_check(check_rules, print_default);
  return 1;
}
