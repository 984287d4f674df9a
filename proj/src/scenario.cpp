#include "fleetsim/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <sstream>

namespace fleetsim::harness {

std::string_view to_string(Mode mode) {
  return mode == Mode::Baseline ? "baseline" : "sfg_ros";
}

Mode mode_from_string(std::string_view text) {
  if (text == "baseline") return Mode::Baseline;
  if (text == "sfg_ros" || text == "sfg") return Mode::SfgRos;
  throw ConfigError("unknown mode '" + std::string(text) + "'");
}

Scenario default_scenario() { return Scenario{}; }

namespace {

sim::TimeUs ms_field(const YAML::Node& node, const char* key,
                     sim::TimeUs fallback) {
  if (!node || !node[key]) return fallback;
  return sim::ms_to_us(node[key].as<double>());
}

template <typename T>
T field(const YAML::Node& node, const char* key, T fallback) {
  if (!node || !node[key]) return fallback;
  return node[key].as<T>();
}

}  // namespace

Scenario scenario_from_yaml(const std::string& text) {
  Scenario s;
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("invalid scenario text: ") + e.what());
  }
  if (root.IsNull()) return s;
  if (!root.IsMap()) throw ConfigError("scenario must be a mapping");

  try {
    if (root["mode"]) s.mode = mode_from_string(root["mode"].as<std::string>());
    s.seed = field<uint64_t>(root, "seed", s.seed);
    s.duration_us = ms_field(root, "duration_ms", s.duration_us);
    s.max_subscribers = field<int>(root, "max_subscribers", s.max_subscribers);
    if (root["fleet_sizes"]) {
      s.fleet_sizes = root["fleet_sizes"].as<std::vector<int>>();
    }
    if (root["router_rules"]) {
      s.router_rules = root["router_rules"].as<std::vector<std::string>>();
    }
    if (root["agents"]) {
      for (const YAML::Node& an : root["agents"]) {
        AgentSpec spec;
        spec.name = field<std::string>(an, "name", "");
        spec.domain = field<uint32_t>(an, "domain", 0);
        spec.nodes = field<int>(an, "nodes", spec.nodes);
        spec.streams = field<int>(an, "streams", spec.streams);
        if (spec.name.empty()) throw ConfigError("agent needs a name");
        s.agents.push_back(std::move(spec));
      }
    }

    YAML::Node link = root["link"];
    s.link.base_latency_ms =
        field<double>(link, "base_latency_ms", s.link.base_latency_ms);
    s.link.ipc_latency_ms =
        field<double>(link, "ipc_latency_ms", s.link.ipc_latency_ms);
    s.link.matching_delay_ms =
        field<double>(link, "matching_delay_ms", s.link.matching_delay_ms);
    s.link.per_message_overhead_bytes = field<int64_t>(
        link, "per_message_overhead_bytes", s.link.per_message_overhead_bytes);
    s.link.loss_probability =
        field<double>(link, "loss_probability", s.link.loss_probability);

    YAML::Node cost = root["cost"];
    s.cost.c_net = field<double>(cost, "c_net", s.cost.c_net);
    s.cost.c_dec = field<double>(cost, "c_dec", s.cost.c_dec);
    s.cost.c_ipc = field<double>(cost, "c_ipc", s.cost.c_ipc);
    codec::validate(s.cost);

    YAML::Node video = root["video"];
    s.video.width = field<uint32_t>(video, "width", s.video.width);
    s.video.height = field<uint32_t>(video, "height", s.video.height);
    s.video.framerate = field<double>(video, "framerate", s.video.framerate);
    s.video.bitrate_bps =
        field<int64_t>(video, "bitrate_bps", s.video.bitrate_bps);
    s.video.gop = field<uint32_t>(video, "gop", s.video.gop);
    codec::validate(s.video);

    YAML::Node lc = root["lifecycle"];
    s.lifecycle.startup_duration_us =
        ms_field(lc, "startup_duration_ms", s.lifecycle.startup_duration_us);
    s.lifecycle.startup_interval_us =
        ms_field(lc, "startup_interval_ms", s.lifecycle.startup_interval_us);
    s.lifecycle.steady_interval_us =
        ms_field(lc, "steady_interval_ms", s.lifecycle.steady_interval_us);
    s.lifecycle.liveness_timeout_us =
        ms_field(lc, "liveness_timeout_ms", s.lifecycle.liveness_timeout_us);
    s.lifecycle.query_timeout_us =
        ms_field(lc, "query_timeout_ms", s.lifecycle.query_timeout_us);
    s.lifecycle.backoff_base_us =
        ms_field(lc, "backoff_base_ms", s.lifecycle.backoff_base_us);
    s.lifecycle.max_retries =
        field<int>(lc, "max_retries", s.lifecycle.max_retries);

    YAML::Node disc = root["discovery"];
    s.discovery.announce_size_bytes = field<int64_t>(
        disc, "announce_size_bytes", s.discovery.announce_size_bytes);
    s.discovery.initial_retransmissions =
        field<int>(disc, "initial_retransmissions",
                   s.discovery.initial_retransmissions);
    s.discovery.resend_period_us =
        ms_field(disc, "resend_period_ms", s.discovery.resend_period_us);
    s.discovery.resend_jitter_frac = field<double>(
        disc, "resend_jitter_frac", s.discovery.resend_jitter_frac);
    s.discovery.channel_bytes_per_sec = field<double>(
        disc, "channel_bytes_per_sec", s.discovery.channel_bytes_per_sec);
    s.discovery.contention_alpha =
        field<double>(disc, "contention_alpha", s.discovery.contention_alpha);
    s.discovery.start_stagger_max_us = ms_field(
        disc, "start_stagger_max_ms", s.discovery.start_stagger_max_us);
    s.discovery.loss_probability = field<double>(
        disc, "loss_probability", s.discovery.loss_probability);

    YAML::Node px = root["proxy"];
    s.proxy.load_delay_us = ms_field(px, "load_delay_ms", s.proxy.load_delay_us);
    s.proxy.decode_latency_us =
        ms_field(px, "decode_latency_ms", s.proxy.decode_latency_us);

    YAML::Node e3 = root["e3"];
    s.e3.capture_interval_us =
        ms_field(e3, "capture_interval_ms", s.e3.capture_interval_us);
    s.e3.encode_us = ms_field(e3, "encode_ms", s.e3.encode_us);
    s.e3.link_us = ms_field(e3, "link_ms", s.e3.link_us);
    s.e3.decode_us = ms_field(e3, "decode_ms", s.e3.decode_us);
    s.e3.render_us = ms_field(e3, "render_ms", s.e3.render_us);
    s.e3.relay_us = ms_field(e3, "relay_ms", s.e3.relay_us);
    s.e3.matching_delay_us =
        ms_field(e3, "matching_delay_ms", s.e3.matching_delay_us);
    s.e3.load_delay_us = ms_field(e3, "load_delay_ms", s.e3.load_delay_us);
    s.e3.samples = field<int>(e3, "samples", s.e3.samples);

    if (root["node_start_window_ms"]) {
      auto window = root["node_start_window_ms"].as<std::vector<double>>();
      if (window.size() != 2 || window[0] > window[1]) {
        throw ConfigError("node_start_window_ms must be [min, max]");
      }
      s.node_start_min_us = sim::ms_to_us(window[0]);
      s.node_start_max_us = sim::ms_to_us(window[1]);
    }
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("invalid scenario value: ") + e.what());
  }
  return s;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return scenario_from_yaml(buffer.str());
}

router::RouterConfig router_for(const Scenario& scenario,
                                const AgentSpec& agent) {
  router::RouterConfig config;
  config.local_domain = agent.domain;
  config.agent = agent.name;
  if (!scenario.router_rules.empty()) {
    config.rules.clear();
    for (const auto& pattern : scenario.router_rules) {
      config.rules.push_back(router::make_rule(pattern));
    }
  }
  return config;
}

}  // namespace fleetsim::harness
