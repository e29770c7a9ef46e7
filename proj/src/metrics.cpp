#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "guardad/error.hpp"
#include "guardad/sim.hpp"

namespace guardad {

MetricsReport compute_metrics(const std::vector<EpisodeOutcome>& outcomes) {
  if (outcomes.empty()) throw EmptyInput("no episode outcomes to aggregate");
  MetricsReport m;
  m.episodes = outcomes.size();
  double task_sum = 0.0;
  for (const EpisodeOutcome& o : outcomes) {
    if (o.accident) {
      ++m.accidents;
      if (o.failure_type) ++m.failure_counts[static_cast<std::size_t>(*o.failure_type)];
    }
    m.steps += o.steps;
    m.interventions += o.interventions;
    m.false_interventions += o.false_interventions;
    task_sum += o.steps == 0 ? 0.0 : static_cast<double>(o.task_matches) / static_cast<double>(o.steps);
  }
  m.accident_rate = static_cast<double>(m.accidents) / static_cast<double>(m.episodes);
  if (m.steps > 0) {
    m.intervention_rate = static_cast<double>(m.interventions) / static_cast<double>(m.steps);
    m.false_intervention_rate = static_cast<double>(m.false_interventions) / static_cast<double>(m.steps);
  }
  m.task_score = task_sum / static_cast<double>(m.episodes);
  return m;
}

std::string metrics_tsv_header() {
  return "label\tmode\tn\tk\tepisodes\taccidents\taccident_rate\tintervention_rate\tfalse_intervention_rate\t"
         "task_score\tEDE\tRV\tRP\tOT\n";
}

std::string metrics_tsv_row(const MetricsRow& row) {
  const MetricsReport& m = row.report;
  char buf[512];
  std::snprintf(buf, sizeof buf, "%s\t%s\t%zu\t%zu\t%zu\t%zu\t%.6f\t%.6f\t%.6f\t%.6f\t%zu\t%zu\t%zu\t%zu\n",
                row.label.c_str(), std::string(name_of(row.mode)).c_str(), row.n, row.k, m.episodes, m.accidents,
                m.accident_rate, m.intervention_rate, m.false_intervention_rate, m.task_score, m.failure_counts[0],
                m.failure_counts[1], m.failure_counts[2], m.failure_counts[3]);
  return buf;
}

json to_json(const EpisodeOutcome& o) {
  json j;
  j["accident"] = o.accident;
  j["accident_step"] = o.accident_step ? json(*o.accident_step) : json(nullptr);
  j["steps"] = o.steps;
  j["interventions"] = o.interventions;
  j["false_interventions"] = o.false_interventions;
  j["task_matches"] = o.task_matches;
  j["failure_type"] = o.failure_type ? json(std::string(name_of(*o.failure_type))) : json(nullptr);
  j["hazard_accidents"] = o.hazard_accidents;
  j["hazard_covered"] = o.hazard_covered;
  return j;
}

EpisodeOutcome outcome_from_json(const json& j) {
  try {
    EpisodeOutcome o;
    o.accident = j.at("accident").get<bool>();
    if (!j.at("accident_step").is_null()) o.accident_step = j.at("accident_step").get<std::int64_t>();
    o.steps = j.at("steps").get<std::size_t>();
    o.interventions = j.at("interventions").get<std::size_t>();
    o.false_interventions = j.at("false_interventions").get<std::size_t>();
    o.task_matches = j.at("task_matches").get<std::size_t>();
    if (!j.at("failure_type").is_null()) {
      auto f = enum_from<FailureType>(j.at("failure_type").get<std::string>());
      if (!f) throw SchemaError("unknown failure type in outcome");
      o.failure_type = *f;
    }
    o.hazard_accidents = j.value("hazard_accidents", std::vector<bool>{});
    o.hazard_covered = j.value("hazard_covered", std::vector<bool>{});
    if (o.accident != o.failure_type.has_value()) throw SchemaError("outcome failure_type must be present iff accident");
    return o;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed outcome: ") + e.what());
  }
}

std::string trace_jsonl(const EpisodeResult& result, const GuardConfig& config, const std::string& policy) {
  std::string out;
  for (const StepRecord& r : result.trace.steps) {
    out += to_json(r).dump();
    out += '\n';
  }
  json summary;
  summary["scenario"] = result.trace.scenario_id;
  summary["policy"] = policy;
  summary["mode"] = std::string(name_of(config.mode));
  summary["n"] = config.n;
  summary["k"] = config.k;
  summary["theta"] = config.theta;
  summary["max_retries"] = config.max_retries;
  if (result.trace.abort_reason) {
    summary["abort_reason"] = *result.trace.abort_reason;
    summary["abort_step"] = *result.trace.abort_step;
  }
  summary["outcome"] = to_json(result.outcome);
  out += summary.dump();
  out += '\n';
  return out;
}

LoadedTrace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace '" + path.string() + "'");
  LoadedTrace lt;
  bool have_summary = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      throw SchemaError(path.string() + ":" + std::to_string(lineno) + ": not a JSON object");
    }
    if (j.contains("outcome")) {
      lt.trace.scenario_id = j.value("scenario", std::string{});
      auto mode = enum_from<GuardMode>(j.value("mode", std::string{"full"}));
      if (!mode) throw SchemaError(path.string() + ": unknown guard mode in summary");
      lt.mode = *mode;
      lt.n = j.value("n", std::size_t{0});
      lt.k = j.value("k", std::size_t{0});
      if (j.contains("abort_reason")) {
        lt.trace.abort_reason = j.at("abort_reason").get<std::string>();
        lt.trace.abort_step = j.value("abort_step", std::int64_t{0});
      }
      lt.outcome = outcome_from_json(j.at("outcome"));
      have_summary = true;
    } else {
      lt.trace.steps.push_back(step_record_from_json(j));
    }
  }
  if (!have_summary) throw SchemaError("trace '" + path.string() + "' has no outcome line");
  return lt;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ostringstream suffix;
  suffix << ".tmp." << ::getpid() << "." << std::this_thread::get_id();
  std::filesystem::path tmp = path;
  tmp += suffix.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out.flush()) throw ConfigError("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace guardad
