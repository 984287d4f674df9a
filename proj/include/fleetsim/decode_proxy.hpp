#pragma once

#include <map>
#include <optional>
#include <string>

#include "fleetsim/bus.hpp"
#include "fleetsim/codec.hpp"
#include "fleetsim/lifecycle.hpp"

namespace fleetsim::proxy {

// Per-frame CPU charges, in cost-model units.
struct CostCharges {
  double net = 0;
  double dec = 0;
  double ipc = 0;

  double total() const { return net + dec + ipc; }
};

struct CostLedger {
  std::map<uint64_t, CostCharges> per_frame;
  CostCharges total;

  void add_net(uint64_t frame, double v) {
    per_frame[frame].net += v;
    total.net += v;
  }
  void add_dec(uint64_t frame, double v) {
    per_frame[frame].dec += v;
    total.dec += v;
  }
  void add_ipc(uint64_t frame, double v) {
    per_frame[frame].ipc += v;
    total.ipc += v;
  }
};

struct ProxyConfig {
  sim::TimeUs load_delay_us = 525'000;
  sim::TimeUs decode_latency_us = 15'000;  // arrival -> decoded republish
};

enum class ComponentState { Unloaded, Loading, Loaded };

// Demand-driven decode/relay proxy: one component per (agent, stream), loaded
// when the first local subscriber for the decoded or info topic appears and
// unloaded when the last one leaves. Decodes each frame once and fans out
// over IPC.
class DecodeProxy {
 public:
  DecodeProxy(bus::Bus& bus, bus::ParticipantId self, codec::CostModel cost,
              ProxyConfig config = {});

  void on_discovery_event(const lifecycle::DiscoveryEvent& event);
  void on_graph_event(const bus::GraphEvent& event);

  struct ComponentView {
    ComponentState state = ComponentState::Unloaded;
    int refcount = 0;
  };
  // Key is the stream's decoded-topic DDS name.
  std::optional<ComponentView> component(const std::string& decoded_dds) const;
  size_t loaded_count() const;
  size_t loaded_with_zero_refcount() const;

  const CostLedger& costs() const { return costs_; }
  uint64_t frames_decoded() const { return frames_decoded_; }
  uint64_t frames_dropped() const { return frames_dropped_; }
  uint64_t ignored_graph_events() const { return ignored_graph_events_; }

 private:
  struct Component {
    std::string agent;
    lifecycle::StreamDescriptor desc;
    std::string compressed_dds;
    std::string decoded_dds;
    std::string info_dds;         // local relay output
    std::string info_source_dds;  // global side of the info topic
    ComponentState state = ComponentState::Unloaded;
    int refcount = 0;
    uint64_t load_generation = 0;
    bool seen_keyframe = false;
    bus::EndpointId compressed_sub = 0;
    bus::EndpointId decoded_pub = 0;
    bus::EndpointId info_sub = 0;
    bus::EndpointId info_pub = 0;
  };

  struct KnownAgent {
    lifecycle::AgentMetadata metadata;
    bool active = false;
  };

  void register_metadata(const lifecycle::AgentMetadata& metadata);
  void unload_agent_components(const std::string& agent);
  void start_load(Component& comp);
  void finish_load(Component& comp);
  void unload(Component& comp);
  void on_blob(const std::string& key, const bus::Envelope& env);
  void on_info(const std::string& key, const bus::Envelope& env);

  bus::Bus& bus_;
  bus::ParticipantId self_;
  router::DomainId self_domain_;
  codec::CostModel cost_;
  ProxyConfig config_;
  std::map<std::string, KnownAgent> known_agents_;
  std::map<std::string, Component> components_;  // keyed by decoded DDS name
  // Demand topics (decoded + info DDS names) -> component key.
  std::map<std::string, std::string> demand_index_;
  CostLedger costs_;
  uint64_t frames_decoded_ = 0;
  uint64_t frames_dropped_ = 0;
  uint64_t ignored_graph_events_ = 0;
};

}  // namespace fleetsim::proxy
