#pragma once

#include <any>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "fleetsim/event_loop.hpp"
#include "fleetsim/router.hpp"

namespace fleetsim::bus {

using router::DomainId;
using sim::TimeUs;

using ParticipantId = uint32_t;
using EndpointId = uint64_t;

enum class QoS { BestEffort, Reliable };
enum class EndpointKind { Publisher, Subscriber };

// Reliable readers only match reliable writers; best-effort readers take both.
inline bool qos_compatible(QoS pub, QoS sub) {
  return sub == QoS::BestEffort || pub == QoS::Reliable;
}

struct LinkModel {
  double base_latency_ms = 5.0;     // cross-agent delivery
  double ipc_latency_ms = 0.5;      // same-agent delivery
  double matching_delay_ms = 553.0; // subscription -> delivery eligibility
  int64_t per_message_overhead_bytes = 64;
  double loss_probability = 0.0;    // best-effort, cross-agent only
};

struct Participant {
  ParticipantId id = 0;
  std::string agent;
  DomainId domain = 0;
};

struct Envelope {
  std::string name;
  ParticipantId origin = 0;
  EndpointId origin_endpoint = 0;
  int64_t payload_bytes = 0;
  TimeUs publish_time = 0;
  uint64_t seq = 0;
  std::any content;
};

struct AgentTraffic {
  int64_t ingress_bytes = 0;  // network bytes received from other agents
  int64_t egress_bytes = 0;   // network bytes sent toward other agents
  int64_t ipc_bytes = 0;      // same-agent payload bytes
};

// Byte conservation holds at quiescence: sum(ingress) = sum(egress) - lost.
struct TrafficCounter {
  std::map<std::string, AgentTraffic> per_agent;
  std::map<std::string, int64_t> per_topic_bytes;
  int64_t lost_bytes = 0;

  int64_t total_ingress() const;
  int64_t total_egress() const;
  int64_t ingress_of(const std::string& agent) const;
};

struct GraphEvent {
  enum class Kind { SubscriptionCreated, SubscriptionRemoved };
  Kind kind = Kind::SubscriptionCreated;
  std::string name;
  DomainId domain = 0;
};

using DeliverFn = std::function<void(const Envelope&)>;
// Content filter evaluated writer-side: a rejected sample is neither sent nor
// counted (service replies use this for directed request-reply semantics).
using FilterFn = std::function<bool(const Envelope&)>;
using GraphListener = std::function<void(const GraphEvent&)>;
// Fired when a subscription's matching delay elapses and it becomes eligible.
using MatchListener = std::function<void(const std::string& name,
                                         EndpointId subscriber)>;

// Deterministic domained pub/sub transport. Everything runs on the single
// simulation loop; no internal locking.
class Bus {
 public:
  Bus(sim::SimLoop& loop, LinkModel link, sim::Rng& rng)
      : loop_(loop), link_(link), rng_(rng) {}

  ParticipantId add_participant(std::string agent, DomainId domain);
  void add_router(router::RouterConfig config);

  EndpointId add_publisher(ParticipantId participant, std::string dds_name,
                           QoS qos);
  EndpointId add_subscriber(ParticipantId participant, std::string dds_name,
                            QoS qos, DeliverFn deliver,
                            FilterFn filter = nullptr);
  void remove_endpoint(EndpointId id);
  bool endpoint_live(EndpointId id) const;

  // Delivers to every matched, eligible subscriber reachable from the origin
  // domain. Returns the number of deliveries scheduled (after loss).
  size_t publish(EndpointId publisher, int64_t payload_bytes,
                 std::any content = {});

  void add_graph_listener(GraphListener listener);
  void add_match_listener(MatchListener listener);

  // Domains a message with this name reaches from `origin`, including the
  // origin itself. Bridging composes per-router Di <-> D0 hops.
  std::set<DomainId> reachable_domains(const std::string& dds_name,
                                       DomainId origin) const;

  const Participant& participant(ParticipantId id) const;
  const TrafficCounter& traffic() const { return traffic_; }
  sim::SimLoop& loop() { return loop_; }
  const LinkModel& link() const { return link_; }

 private:
  struct Endpoint {
    EndpointId id = 0;
    ParticipantId participant = 0;
    EndpointKind kind = EndpointKind::Publisher;
    std::string name;
    QoS qos = QoS::BestEffort;
    TimeUs eligible_at = 0;  // subscribers only
    DeliverFn deliver;
    FilterFn filter;
  };

  const Endpoint& endpoint(EndpointId id) const;
  void emit_graph_event(GraphEvent event);

  sim::SimLoop& loop_;
  LinkModel link_;
  sim::Rng& rng_;
  std::vector<router::RouterConfig> routers_;
  std::map<ParticipantId, Participant> participants_;
  std::map<EndpointId, Endpoint> endpoints_;
  std::map<std::string, std::set<EndpointId>> subscribers_by_name_;
  std::vector<GraphListener> graph_listeners_;
  std::vector<MatchListener> match_listeners_;
  TrafficCounter traffic_;
  ParticipantId next_participant_ = 1;
  EndpointId next_endpoint_ = 1;
  uint64_t next_envelope_seq_ = 1;
};

// --- Baseline multicast discovery model -----------------------------------
//
// All participants share one domain and announce every endpoint to every
// other participant over a serialized multicast channel. A participant is
// complete once it has received an announcement for every remote endpoint;
// it keeps resending its own set periodically until then.

struct DiscoveryParams {
  int64_t announce_size_bytes = 300;
  int initial_retransmissions = 3;
  TimeUs resend_period_us = 1'000'000;
  double resend_jitter_frac = 0.10;
  double channel_bytes_per_sec = 60'000.0;
  // Per-transmission slowdown 1 + alpha * (incomplete participants - 1):
  // media contention grows with the number of storming participants.
  double contention_alpha = 0.15;
  TimeUs start_stagger_max_us = 50'000;
  double loss_probability = 0.0;
};

struct DiscoveryAgentResult {
  TimeUs completion_us = 0;
  int64_t ingress_bytes = 0;
};

struct DiscoveryRunResult {
  std::vector<DiscoveryAgentResult> agents;
  TimeUs fleet_completion_us = 0;
  TimeUs quiescence_us = 0;
  int64_t total_ingress_bytes = 0;
};

// Runs the provided loop to quiescence. Ingress is tallied over the whole
// run, so with zero loss each agent counts remote_endpoints x size x R.
DiscoveryRunResult run_baseline_discovery(sim::SimLoop& loop, sim::Rng& rng,
                                          int n_agents, int nodes_per_agent,
                                          const DiscoveryParams& params);

}  // namespace fleetsim::bus
