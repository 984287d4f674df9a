#pragma once

#include <json.hpp>

#include <map>
#include <string>
#include <vector>

#include "fleetsim/scenario.hpp"

namespace fleetsim::harness {

struct MetricsRow {
  double t_ms = 0;
  std::string agent;
  std::string metric;
  double value = 0;
};

struct E1Row {
  int n = 0;
  double cpu_units = 0;      // model units per frame (percent of one core)
  double bandwidth_bps = 0;  // bridged ingress over the steady window
};

struct E2Row {
  int n_agents = 0;
  double discovery_time_ms = 0;
  double traffic_bytes = 0;
};

struct E3Summary {
  double glass_to_glass_mean_ms = 0;
  double glass_to_glass_stddev_ms = 0;
  double sub_to_first_frame_mean_ms = 0;
  double sub_to_first_frame_stddev_ms = 0;
  int samples = 0;
};

struct ExperimentResult {
  std::string experiment;
  std::vector<Mode> modes;
  std::map<Mode, std::vector<E1Row>> e1;
  std::map<Mode, std::vector<E2Row>> e2;
  std::map<Mode, E3Summary> e3;
  std::vector<MetricsRow> metrics;  // sorted by (t_ms, agent, metric)
};

ExperimentResult run_e1_subscriber_scaling(const Scenario& scenario);
ExperimentResult run_e2_discovery(const Scenario& scenario);
ExperimentResult run_e3_latency(const Scenario& scenario);
ExperimentResult run_experiment(std::string_view name,
                                const Scenario& scenario);

// Shortest round-trip decimal text; keeps CSV output stable across runs.
std::string format_number(double value);

std::string to_csv(const ExperimentResult& result);
nlohmann::json summary_json(const ExperimentResult& result);

// Deterministic per-configuration sub-seed.
uint64_t derive_seed(uint64_t base, std::string_view tag);

}  // namespace fleetsim::harness
