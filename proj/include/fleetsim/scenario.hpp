#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fleetsim/bus.hpp"
#include "fleetsim/codec.hpp"
#include "fleetsim/decode_proxy.hpp"
#include "fleetsim/lifecycle.hpp"

namespace fleetsim::harness {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Mode { Baseline, SfgRos };

std::string_view to_string(Mode mode);
Mode mode_from_string(std::string_view text);

struct AgentSpec {
  std::string name;
  router::DomainId domain = 0;  // nonzero local domain in SfgRos mode
  int nodes = 20;               // 10 publisher + 10 subscriber demo nodes
  int streams = 1;
};

// Latency stage split for the E3 reproduction. The stages sum (with half a
// capture interval) to the baseline glass-to-glass total; matching and load
// are back-solved against the subscription-to-first-frame means.
struct E3Calibration {
  sim::TimeUs capture_interval_us = 33'300;
  sim::TimeUs encode_us = 20'000;
  sim::TimeUs link_us = 60'000;
  sim::TimeUs decode_us = 15'000;
  sim::TimeUs render_us = 6'650;
  sim::TimeUs relay_us = 2'600;
  sim::TimeUs matching_delay_us = 553'000;
  sim::TimeUs load_delay_us = 525'000;
  int samples = 120;
};

struct Scenario {
  std::optional<Mode> mode;  // absent: run and report both modes
  std::vector<AgentSpec> agents;
  bus::LinkModel link;
  codec::CostModel cost;
  codec::MockVideoConfig video;
  lifecycle::LifecycleConfig lifecycle;
  bus::DiscoveryParams discovery;
  proxy::ProxyConfig proxy;
  std::vector<std::string> router_rules;  // empty: stock Table-1 rules
  uint64_t seed = 1;
  sim::TimeUs duration_us = 0;  // 0: experiment default
  int max_subscribers = 10;
  std::vector<int> fleet_sizes = {2, 3, 4, 5, 6};
  E3Calibration e3;
  // Window in which an agent's nodes come up after the start signal.
  sim::TimeUs node_start_min_us = 600'000;
  sim::TimeUs node_start_max_us = 1'000'000;
};

// Built-in defaults reproduce the desk-scale experiment configuration.
Scenario default_scenario();

// YAML scenario file; any omitted key keeps its default. Times are given in
// milliseconds in the file.
Scenario load_scenario_file(const std::string& path);
Scenario scenario_from_yaml(const std::string& text);

router::RouterConfig router_for(const Scenario& scenario,
                                const AgentSpec& agent);

}  // namespace fleetsim::harness
