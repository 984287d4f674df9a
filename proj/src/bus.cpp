#include "fleetsim/bus.hpp"

#include <algorithm>
#include <deque>

namespace fleetsim::bus {

int64_t TrafficCounter::total_ingress() const {
  int64_t sum = 0;
  for (const auto& [agent, t] : per_agent) sum += t.ingress_bytes;
  return sum;
}

int64_t TrafficCounter::total_egress() const {
  int64_t sum = 0;
  for (const auto& [agent, t] : per_agent) sum += t.egress_bytes;
  return sum;
}

int64_t TrafficCounter::ingress_of(const std::string& agent) const {
  auto it = per_agent.find(agent);
  return it == per_agent.end() ? 0 : it->second.ingress_bytes;
}

ParticipantId Bus::add_participant(std::string agent, DomainId domain) {
  ParticipantId id = next_participant_++;
  participants_[id] = Participant{id, std::move(agent), domain};
  return id;
}

void Bus::add_router(router::RouterConfig config) {
  if (config.local_domain == router::kGlobalDomain) {
    throw sim::SimError("router local domain must be nonzero");
  }
  routers_.push_back(std::move(config));
}

EndpointId Bus::add_publisher(ParticipantId participant, std::string dds_name,
                              QoS qos) {
  participants_.at(participant);
  EndpointId id = next_endpoint_++;
  Endpoint ep;
  ep.id = id;
  ep.participant = participant;
  ep.kind = EndpointKind::Publisher;
  ep.name = std::move(dds_name);
  ep.qos = qos;
  endpoints_[id] = std::move(ep);
  return id;
}

EndpointId Bus::add_subscriber(ParticipantId participant, std::string dds_name,
                               QoS qos, DeliverFn deliver, FilterFn filter) {
  const Participant& p = participants_.at(participant);
  EndpointId id = next_endpoint_++;
  Endpoint ep;
  ep.id = id;
  ep.participant = participant;
  ep.kind = EndpointKind::Subscriber;
  ep.name = dds_name;
  ep.qos = qos;
  TimeUs matching = sim::ms_to_us(link_.matching_delay_ms);
  ep.eligible_at = loop_.now() + matching;
  ep.deliver = std::move(deliver);
  ep.filter = std::move(filter);
  endpoints_[id] = std::move(ep);
  subscribers_by_name_[dds_name].insert(id);

  loop_.schedule(matching, [this, id, dds_name] {
    if (!endpoint_live(id)) return;
    for (const auto& listener : match_listeners_) listener(dds_name, id);
  });

  emit_graph_event(GraphEvent{GraphEvent::Kind::SubscriptionCreated, dds_name,
                              p.domain});
  return id;
}

void Bus::remove_endpoint(EndpointId id) {
  auto it = endpoints_.find(id);
  if (it == endpoints_.end()) return;
  Endpoint ep = std::move(it->second);
  endpoints_.erase(it);
  if (ep.kind == EndpointKind::Subscriber) {
    subscribers_by_name_[ep.name].erase(id);
    emit_graph_event(GraphEvent{GraphEvent::Kind::SubscriptionRemoved, ep.name,
                                participants_.at(ep.participant).domain});
  }
}

bool Bus::endpoint_live(EndpointId id) const {
  return endpoints_.count(id) > 0;
}

const Bus::Endpoint& Bus::endpoint(EndpointId id) const {
  return endpoints_.at(id);
}

const Participant& Bus::participant(ParticipantId id) const {
  return participants_.at(id);
}

void Bus::add_graph_listener(GraphListener listener) {
  graph_listeners_.push_back(std::move(listener));
}

void Bus::add_match_listener(MatchListener listener) {
  match_listeners_.push_back(std::move(listener));
}

void Bus::emit_graph_event(GraphEvent event) {
  for (const auto& listener : graph_listeners_) listener(event);
}

std::set<DomainId> Bus::reachable_domains(const std::string& dds_name,
                                          DomainId origin) const {
  std::set<DomainId> reach = {origin};
  bool on_global = origin == router::kGlobalDomain;
  if (!on_global) {
    // The origin domain's own router must lift the message onto the bridge.
    for (const auto& r : routers_) {
      if (r.local_domain == origin && router::any_rule_matches(r, dds_name)) {
        reach.insert(router::kGlobalDomain);
        on_global = true;
        break;
      }
    }
  }
  if (on_global) {
    for (const auto& r : routers_) {
      if (router::any_rule_matches(r, dds_name)) reach.insert(r.local_domain);
    }
  }
  return reach;
}

size_t Bus::publish(EndpointId publisher, int64_t payload_bytes,
                    std::any content) {
  const Endpoint& pub = endpoint(publisher);
  if (pub.kind != EndpointKind::Publisher) {
    throw sim::SimError("publish called on a non-publisher endpoint");
  }
  if (payload_bytes < 0) throw sim::SimError("negative payload");
  const Participant& origin = participants_.at(pub.participant);

  auto env = std::make_shared<Envelope>();
  env->name = pub.name;
  env->origin = pub.participant;
  env->origin_endpoint = publisher;
  env->payload_bytes = payload_bytes;
  env->publish_time = loop_.now();
  env->seq = next_envelope_seq_++;
  env->content = std::move(content);

  std::set<DomainId> reach = reachable_domains(pub.name, origin.domain);

  auto subs_it = subscribers_by_name_.find(pub.name);
  if (subs_it == subscribers_by_name_.end()) return 0;
  // Copy: delivery callbacks scheduled below may mutate the endpoint table.
  std::vector<EndpointId> subs(subs_it->second.begin(), subs_it->second.end());

  size_t delivered = 0;
  for (EndpointId sid : subs) {
    const Endpoint& sub = endpoints_.at(sid);
    const Participant& dst = participants_.at(sub.participant);
    if (!reach.count(dst.domain)) continue;
    if (!qos_compatible(pub.qos, sub.qos)) continue;
    if (sub.eligible_at > env->publish_time) continue;
    if (sub.filter && !sub.filter(*env)) continue;

    if (dst.agent != origin.agent) {
      int64_t bytes = payload_bytes + link_.per_message_overhead_bytes;
      traffic_.per_agent[origin.agent].egress_bytes += bytes;
      traffic_.per_topic_bytes[pub.name] += bytes;
      if (sub.qos == QoS::BestEffort &&
          rng_.bernoulli(link_.loss_probability)) {
        traffic_.lost_bytes += bytes;
        continue;
      }
      std::string dst_agent = dst.agent;
      loop_.schedule(sim::ms_to_us(link_.base_latency_ms),
                     [this, env, sid, bytes, dst_agent] {
                       traffic_.per_agent[dst_agent].ingress_bytes += bytes;
                       auto it = endpoints_.find(sid);
                       if (it != endpoints_.end() && it->second.deliver) {
                         it->second.deliver(*env);
                       }
                     });
    } else {
      traffic_.per_agent[dst.agent].ipc_bytes += payload_bytes;
      loop_.schedule(sim::ms_to_us(link_.ipc_latency_ms), [this, env, sid] {
        auto it = endpoints_.find(sid);
        if (it != endpoints_.end() && it->second.deliver) {
          it->second.deliver(*env);
        }
      });
    }
    ++delivered;
  }
  return delivered;
}

// --- Baseline multicast discovery model -----------------------------------

namespace {

struct DiscoveryState {
  sim::SimLoop* loop = nullptr;
  sim::Rng* rng = nullptr;
  int n = 0;
  int nodes = 0;
  DiscoveryParams params;
  // received[i][j][e]: agent i has seen endpoint e of agent j.
  std::vector<std::vector<std::vector<bool>>> received;
  std::vector<int> remaining;
  std::vector<bool> complete;
  std::vector<DiscoveryAgentResult> results;
  std::deque<std::pair<int, int>> channel;  // (from agent, endpoint index)
  bool channel_busy = false;
  TimeUs quiescence = 0;

  int incomplete_count() const {
    int c = 0;
    for (bool b : complete) {
      if (!b) ++c;
    }
    return c;
  }
};

void service_channel(const std::shared_ptr<DiscoveryState>& st);

void enqueue_announcement(const std::shared_ptr<DiscoveryState>& st, int from,
                          int endpoint) {
  st->channel.emplace_back(from, endpoint);
  if (!st->channel_busy) {
    st->channel_busy = true;
    service_channel(st);
  }
}

void service_channel(const std::shared_ptr<DiscoveryState>& st) {
  if (st->channel.empty()) {
    st->channel_busy = false;
    st->quiescence = st->loop->now();
    return;
  }
  auto [from, endpoint] = st->channel.front();
  st->channel.pop_front();

  int active = st->incomplete_count();
  double slowdown =
      1.0 + st->params.contention_alpha * std::max(0, active - 1);
  double seconds = static_cast<double>(st->params.announce_size_bytes) /
                   st->params.channel_bytes_per_sec * slowdown;
  TimeUs tx_time = static_cast<TimeUs>(seconds * 1e6 + 0.5);

  st->loop->schedule(tx_time, [st, from, endpoint] {
    for (int i = 0; i < st->n; ++i) {
      if (i == from) continue;
      if (st->rng->bernoulli(st->params.loss_probability)) continue;
      st->results[i].ingress_bytes += st->params.announce_size_bytes;
      if (!st->received[i][from][endpoint]) {
        st->received[i][from][endpoint] = true;
        if (--st->remaining[i] == 0 && !st->complete[i]) {
          st->complete[i] = true;
          st->results[i].completion_us = st->loop->now();
        }
      }
    }
    service_channel(st);
  });
}

void arm_resend_timer(const std::shared_ptr<DiscoveryState>& st, int agent) {
  TimeUs period = static_cast<TimeUs>(
      st->rng->jittered(static_cast<double>(st->params.resend_period_us),
                        st->params.resend_jitter_frac) +
      0.5);
  st->loop->schedule(period, [st, agent] {
    if (st->complete[agent]) return;
    for (int e = 0; e < st->nodes; ++e) enqueue_announcement(st, agent, e);
    arm_resend_timer(st, agent);
  });
}

}  // namespace

DiscoveryRunResult run_baseline_discovery(sim::SimLoop& loop, sim::Rng& rng,
                                          int n_agents, int nodes_per_agent,
                                          const DiscoveryParams& params) {
  if (n_agents < 1 || nodes_per_agent < 0) {
    throw sim::SimError("invalid discovery fleet size");
  }
  auto st = std::make_shared<DiscoveryState>();
  st->loop = &loop;
  st->rng = &rng;
  st->n = n_agents;
  st->nodes = nodes_per_agent;
  st->params = params;
  st->received.assign(
      n_agents, std::vector<std::vector<bool>>(
                    n_agents, std::vector<bool>(nodes_per_agent, false)));
  st->remaining.assign(n_agents, (n_agents - 1) * nodes_per_agent);
  st->complete.assign(n_agents, false);
  st->results.assign(n_agents, DiscoveryAgentResult{});

  for (int i = 0; i < n_agents; ++i) {
    if (st->remaining[i] == 0) {
      st->complete[i] = true;
      st->results[i].completion_us = loop.now();
    }
  }

  for (int i = 0; i < n_agents; ++i) {
    TimeUs stagger = params.start_stagger_max_us > 0
                         ? rng.uniform_int(0, params.start_stagger_max_us)
                         : 0;
    loop.schedule(stagger, [st, i] {
      for (int r = 0; r < st->params.initial_retransmissions; ++r) {
        for (int e = 0; e < st->nodes; ++e) enqueue_announcement(st, i, e);
      }
      arm_resend_timer(st, i);
    });
  }

  loop.run();

  DiscoveryRunResult result;
  result.agents = st->results;
  for (const auto& a : st->results) {
    result.fleet_completion_us =
        std::max(result.fleet_completion_us, a.completion_us);
    result.total_ingress_bytes += a.ingress_bytes;
  }
  result.quiescence_us = std::max(st->quiescence, loop.now());
  return result;
}

}  // namespace fleetsim::bus
