#include "fleetsim/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <memory>
#include <sstream>

#include "fleetsim/decode_proxy.hpp"
#include "fleetsim/fqn.hpp"

namespace fleetsim::harness {

using bus::Bus;
using bus::Envelope;
using bus::ParticipantId;
using sim::TimeUs;

uint64_t derive_seed(uint64_t base, std::string_view tag) {
  uint64_t h = 14695981039346656037ull;  // FNV-1a
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  uint64_t x = base ^ h;
  x += 0x9E3779B97F4A7C15ull;  // splitmix64 finalizer
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::string format_number(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

namespace {

constexpr TimeUs kE1WarmupUs = 2'000'000;
constexpr TimeUs kE1WindowUs = 10'000'000;
constexpr TimeUs kServiceProcessingUs = 5'000;

std::vector<Mode> modes_to_run(const Scenario& scenario) {
  if (scenario.mode) return {*scenario.mode};
  return {Mode::Baseline, Mode::SfgRos};
}

std::string pad2(int n) {
  std::string s = std::to_string(n);
  return s.size() < 2 ? "0" + s : s;
}

// --- Stream naming ---------------------------------------------------------

struct StreamTopics {
  std::string compressed_fqn;
  std::string decoded_fqn;
  std::string info_fqn;
  std::string compressed_dds;
  std::string decoded_dds;
};

StreamTopics stream_topics(const std::string& producer_agent) {
  using namespace fqn;
  FqnBuilder compressed;
  compressed.scope(Scope::Global)
      .agent(producer_agent)
      .component("camera_front")
      .stream("color")
      .resource("image");
  FqnBuilder decoded;
  decoded.scope(Scope::Local)
      .agent(producer_agent)
      .component("camera_front")
      .stream("color")
      .resource("image");
  FqnBuilder info;
  info.scope(Scope::Local)
      .agent(producer_agent)
      .component("camera_front")
      .stream("color")
      .resource("camera_info");

  StreamTopics topics;
  topics.compressed_fqn = compressed.build();
  topics.decoded_fqn = decoded.build();
  topics.info_fqn = info.build();
  topics.compressed_dds = to_dds_name(topics.compressed_fqn, DdsKind::Topic);
  topics.decoded_dds = to_dds_name(topics.decoded_fqn, DdsKind::Topic);
  return topics;
}

lifecycle::AgentMetadata stream_metadata(const std::string& producer_agent,
                                         int streams) {
  lifecycle::AgentMetadata md;
  md.agent = producer_agent;
  if (streams > 0) {
    StreamTopics topics = stream_topics(producer_agent);
    lifecycle::StreamDescriptor desc;
    desc.component = "camera_front";
    desc.stream = "color";
    desc.codec = "mock_h264";
    desc.compressed_fqn = topics.compressed_fqn;
    desc.decoded_fqn = topics.decoded_fqn;
    desc.info_fqn = topics.info_fqn;
    md.streams.push_back(std::move(desc));
  }
  return md;
}

struct E1Agents {
  AgentSpec producer{"go2", 1, 20, 1};
  AgentSpec consumer{"station", 2, 20, 0};
};

E1Agents pick_agents(const Scenario& scenario) {
  E1Agents agents;
  if (!scenario.agents.empty()) agents.producer = scenario.agents[0];
  if (scenario.agents.size() > 1) agents.consumer = scenario.agents[1];
  if (agents.producer.domain == 0) agents.producer.domain = 1;
  if (agents.consumer.domain == 0 ||
      agents.consumer.domain == agents.producer.domain) {
    agents.consumer.domain = agents.producer.domain + 1;
  }
  return agents;
}

// --- Mock video producer ---------------------------------------------------

// Publishes one CBR frame per capture interval; a newly matched subscriber on
// the stream forces the next frame to be a keyframe (encoder IDR-on-join).
class MockStreamProducer {
 public:
  MockStreamProducer(Bus& bus, ParticipantId participant,
                     std::string compressed_dds, codec::MockVideoConfig video,
                     TimeUs interval_us, TimeUs encode_delay_us)
      : bus_(bus),
        video_(video),
        interval_us_(interval_us),
        encode_delay_us_(encode_delay_us),
        frame_bytes_(codec::mock_video_frame_size(video)),
        compressed_dds_(std::move(compressed_dds)) {
    publisher_ = bus_.add_publisher(participant, compressed_dds_,
                                    bus::QoS::BestEffort);
    bus_.add_match_listener([this](const std::string& name, bus::EndpointId) {
      if (name == compressed_dds_) force_keyframe_ = true;
    });
  }

  std::function<void(uint64_t, TimeUs)> on_capture;

  void start() { schedule_capture(); }

  TimeUs publish_time_of(uint64_t frame) const {
    auto it = publish_times_.find(frame);
    return it == publish_times_.end() ? -1 : it->second;
  }

  int64_t frame_bytes() const { return frame_bytes_; }

 private:
  void schedule_capture() {
    bus_.loop().schedule(next_capture_us_ - bus_.loop().now(), [this] {
      uint64_t frame = next_frame_++;
      TimeUs capture_time = bus_.loop().now();
      if (on_capture) on_capture(frame, capture_time);
      bus_.loop().schedule(encode_delay_us_, [this, frame] {
        bool forced = force_keyframe_;
        force_keyframe_ = false;
        codec::CompressedBlob blob = codec::mock_video_blob(video_, frame,
                                                            forced);
        publish_times_[frame] = bus_.loop().now();
        bus_.publish(publisher_, frame_bytes_, blob);
      });
      next_capture_us_ += interval_us_;
      schedule_capture();
    });
  }

  Bus& bus_;
  codec::MockVideoConfig video_;
  TimeUs interval_us_;
  TimeUs encode_delay_us_;
  int64_t frame_bytes_;
  std::string compressed_dds_;
  bus::EndpointId publisher_ = 0;
  bool force_keyframe_ = false;
  uint64_t next_frame_ = 0;
  TimeUs next_capture_us_ = 0;
  std::map<uint64_t, TimeUs> publish_times_;
};

// --- E1: subscriber scaling ------------------------------------------------

E1Row run_e1_config(const Scenario& scenario, Mode mode, int n) {
  sim::SimLoop loop;
  sim::Rng rng(derive_seed(scenario.seed,
                           std::string("e1/") + std::string(to_string(mode)) +
                               "/n" + std::to_string(n)));
  Bus bus_obj(loop, scenario.link, rng);

  E1Agents agents = pick_agents(scenario);
  bool sfg = mode == Mode::SfgRos;
  ParticipantId producer = bus_obj.add_participant(
      agents.producer.name, sfg ? agents.producer.domain : 0);
  ParticipantId consumer = bus_obj.add_participant(
      agents.consumer.name, sfg ? agents.consumer.domain : 0);
  if (sfg) {
    bus_obj.add_router(router_for(scenario, agents.producer));
    bus_obj.add_router(router_for(scenario, agents.consumer));
  }

  StreamTopics topics = stream_topics(agents.producer.name);
  TimeUs interval_us =
      static_cast<TimeUs>(std::llround(1e6 / scenario.video.framerate));
  MockStreamProducer stream(bus_obj, producer, topics.compressed_dds,
                            scenario.video, interval_us, 0);

  proxy::CostLedger baseline_costs;
  std::unique_ptr<proxy::DecodeProxy> dp;
  std::vector<bool> seen_keyframe(static_cast<size_t>(n), false);

  if (sfg) {
    dp = std::make_unique<proxy::DecodeProxy>(bus_obj, consumer, scenario.cost,
                                              scenario.proxy);
    bus_obj.add_graph_listener(
        [&dp](const bus::GraphEvent& e) { dp->on_graph_event(e); });
    lifecycle::DiscoveryEvent discovered{
        lifecycle::DiscoveryEvent::Kind::Discovered, agents.producer.name,
        stream_metadata(agents.producer.name, 1)};
    dp->on_discovery_event(discovered);
    for (int i = 0; i < n; ++i) {
      bus_obj.add_subscriber(consumer, topics.decoded_dds, bus::QoS::BestEffort,
                             [](const Envelope&) {});
    }
  } else {
    for (int i = 0; i < n; ++i) {
      bus_obj.add_subscriber(
          consumer, topics.compressed_dds, bus::QoS::BestEffort,
          [&baseline_costs, &seen_keyframe, &scenario, i](const Envelope& env) {
            const auto* blob =
                std::any_cast<codec::CompressedBlob>(&env.content);
            if (!blob) return;
            baseline_costs.add_net(blob->frame_index, scenario.cost.c_net);
            if (!seen_keyframe[static_cast<size_t>(i)] && !blob->keyframe) {
              return;  // cannot decode until the first keyframe
            }
            seen_keyframe[static_cast<size_t>(i)] = true;
            baseline_costs.add_dec(blob->frame_index, scenario.cost.c_dec);
          });
    }
  }

  TimeUs window_us = kE1WindowUs;
  if (scenario.duration_us > kE1WarmupUs + 1'000'000) {
    window_us = scenario.duration_us - kE1WarmupUs;
  }

  int64_t ingress_start = 0, ingress_end = 0;
  proxy::CostCharges charges_start, charges_end;
  size_t frames_start = 0, frames_end = 0;
  auto snapshot = [&](int64_t& ingress, proxy::CostCharges& charges,
                      size_t& frames) {
    ingress = bus_obj.traffic().ingress_of(agents.consumer.name);
    const proxy::CostLedger& ledger = sfg ? dp->costs() : baseline_costs;
    charges = ledger.total;
    frames = ledger.per_frame.size();
  };
  loop.schedule(kE1WarmupUs,
                [&] { snapshot(ingress_start, charges_start, frames_start); });
  loop.schedule(kE1WarmupUs + window_us,
                [&] { snapshot(ingress_end, charges_end, frames_end); });

  stream.start();
  loop.run_until(kE1WarmupUs + window_us);

  E1Row row;
  row.n = n;
  size_t frames = frames_end - frames_start;
  if (frames == 0) throw ConfigError("no frames observed in the E1 window");
  double total_charges = (charges_end.total()) - (charges_start.total());
  row.cpu_units = total_charges / static_cast<double>(frames);
  double window_s = static_cast<double>(window_us) / 1e6;
  row.bandwidth_bps =
      static_cast<double>(ingress_end - ingress_start) * 8.0 / window_s;
  return row;
}

// --- E2: lifecycle nodes over the bus --------------------------------------

struct MetadataRequest {
  uint64_t query_id = 0;
  std::string requester;
};

struct MetadataReply {
  uint64_t query_id = 0;
  std::string requester;
  lifecycle::AgentMetadata metadata;
  uint32_t incarnation = 0;
};

std::string heartbeat_dds() {
  return fqn::to_dds_name("/global/agent_heartbeat", fqn::DdsKind::Topic);
}

std::string metadata_request_dds(const std::string& agent) {
  return fqn::to_dds_name("/global/" + agent + "/get_metadata",
                          fqn::DdsKind::ServiceRequest);
}

std::string metadata_reply_dds(const std::string& agent) {
  return fqn::to_dds_name("/global/" + agent + "/get_metadata",
                          fqn::DdsKind::ServiceReply);
}

std::string discovery_event_dds(const std::string& agent) {
  return fqn::to_dds_name("/local/" + agent + "/agent_discovery_event",
                          fqn::DdsKind::Topic);
}

// Heartbeat broadcaster plus metadata service endpoint for one agent.
class StatusProvider {
 public:
  StatusProvider(Bus& bus, ParticipantId participant, std::string agent,
                 lifecycle::LifecycleConfig config,
                 lifecycle::AgentMetadata metadata, uint32_t incarnation)
      : bus_(bus),
        participant_(participant),
        agent_(std::move(agent)),
        config_(config),
        metadata_(std::move(metadata)),
        incarnation_(incarnation) {}

  void start() {
    start_time_ = bus_.loop().now();
    heartbeat_pub_ = bus_.add_publisher(participant_, heartbeat_dds(),
                                        bus::QoS::BestEffort);
    reply_pub_ = bus_.add_publisher(participant_, metadata_reply_dds(agent_),
                                    bus::QoS::Reliable);
    request_sub_ = bus_.add_subscriber(
        participant_, metadata_request_dds(agent_), bus::QoS::Reliable,
        [this](const Envelope& env) { on_request(env); });
    publish_heartbeat();
  }

 private:
  void publish_heartbeat() {
    lifecycle::AgentHeartbeat hb{agent_, bus_.loop().now(), incarnation_};
    bus_.publish(heartbeat_pub_, lifecycle::kHeartbeatBytes, hb);
    TimeUs uptime = bus_.loop().now() - start_time_;
    TimeUs interval = lifecycle::heartbeat_interval(
        lifecycle::phase_for_uptime(uptime, config_), config_);
    bus_.loop().schedule(interval, [this] { publish_heartbeat(); });
  }

  void on_request(const Envelope& env) {
    const auto* request = std::any_cast<MetadataRequest>(&env.content);
    if (!request) return;
    MetadataReply reply{request->query_id, request->requester, metadata_,
                        incarnation_};
    bus_.loop().schedule(kServiceProcessingUs, [this, reply] {
      bus_.publish(reply_pub_, lifecycle::metadata_response_bytes(metadata_),
                   reply);
    });
  }

  Bus& bus_;
  ParticipantId participant_;
  std::string agent_;
  lifecycle::LifecycleConfig config_;
  lifecycle::AgentMetadata metadata_;
  uint32_t incarnation_ = 0;
  TimeUs start_time_ = 0;
  bus::EndpointId heartbeat_pub_ = 0;
  bus::EndpointId reply_pub_ = 0;
  bus::EndpointId request_sub_ = 0;
};

// Tracks remote agents through the lifecycle DFA and emits discovery events
// on the local topic.
class Discoverer {
 public:
  Discoverer(Bus& bus, ParticipantId participant, std::string agent,
             lifecycle::LifecycleConfig config, int expected_peers,
             std::function<void(TimeUs)> on_complete)
      : bus_(bus),
        participant_(participant),
        agent_(std::move(agent)),
        config_(config),
        expected_peers_(expected_peers),
        on_complete_(std::move(on_complete)) {}

  void start() {
    event_pub_ = bus_.add_publisher(participant_, discovery_event_dds(agent_),
                                    bus::QoS::BestEffort);
    heartbeat_sub_ = bus_.add_subscriber(
        participant_, heartbeat_dds(), bus::QoS::BestEffort,
        [this](const Envelope& env) { on_heartbeat(env); });
    schedule_liveness();
  }

  const std::map<std::string, lifecycle::AgentRecord>& records() const {
    return records_;
  }

 private:
  struct Client {
    bus::EndpointId request_pub = 0;
    bus::EndpointId reply_sub = 0;
    TimeUs ready_at = 0;  // request writer matched to the service
  };

  void on_heartbeat(const Envelope& env) {
    const auto* hb = std::any_cast<lifecycle::AgentHeartbeat>(&env.content);
    if (!hb || hb->agent == agent_) return;
    lifecycle::AgentRecord record = take_record(hb->agent);
    lifecycle::Transition t =
        lifecycle::on_heartbeat(std::move(record), *hb, bus_.loop().now(),
                                next_query_id_);
    apply(hb->agent, std::move(t));
  }

  lifecycle::AgentRecord take_record(const std::string& agent) {
    auto it = records_.find(agent);
    if (it != records_.end()) return it->second;
    lifecycle::AgentRecord record;
    record.agent = agent;
    return record;
  }

  void apply(const std::string& agent, lifecycle::Transition t) {
    records_[agent] = t.record;
    for (const lifecycle::Action& action : t.actions) {
      if (const auto* q = std::get_if<lifecycle::SendMetadataQuery>(&action)) {
        next_query_id_ = std::max(next_query_id_, q->query_id + 1);
        send_query(agent, *q);
      } else if (const auto* e =
                     std::get_if<lifecycle::EmitDiscoveryEvent>(&action)) {
        emit_event(e->event);
      }
    }
  }

  void send_query(const std::string& provider,
                  const lifecycle::SendMetadataQuery& query) {
    Client& client = ensure_client(provider);
    TimeUs now = bus_.loop().now();
    TimeUs delay = std::max(query.send_after_us,
                            std::max<TimeUs>(0, client.ready_at - now));
    uint64_t id = query.query_id;
    bus_.loop().schedule(delay, [this, provider, id] {
      auto rit = records_.find(provider);
      if (rit == records_.end() || !rit->second.inflight_query ||
          *rit->second.inflight_query != id) {
        return;  // superseded before it hit the wire
      }
      Client& c = clients_.at(provider);
      bus_.publish(c.request_pub, lifecycle::kMetadataQueryBytes,
                   MetadataRequest{id, agent_});
    });
    bus_.loop().schedule(delay + config_.query_timeout_us,
                         [this, provider, id] { on_timeout(provider, id); });
  }

  void on_timeout(const std::string& provider, uint64_t id) {
    auto it = records_.find(provider);
    if (it == records_.end()) return;
    const lifecycle::AgentRecord& record = it->second;
    if (record.state != lifecycle::AgentState::MetadataPending ||
        !record.inflight_query || *record.inflight_query != id) {
      return;  // answered or superseded
    }
    lifecycle::Transition t = lifecycle::on_metadata_timeout(
        record, bus_.loop().now(), next_query_id_, config_);
    apply(provider, std::move(t));
  }

  Client& ensure_client(const std::string& provider) {
    auto it = clients_.find(provider);
    if (it != clients_.end()) return it->second;
    Client client;
    client.request_pub = bus_.add_publisher(
        participant_, metadata_request_dds(provider), bus::QoS::Reliable);
    std::string self = agent_;
    auto* records = &records_;
    std::string provider_copy = provider;
    client.reply_sub = bus_.add_subscriber(
        participant_, metadata_reply_dds(provider), bus::QoS::Reliable,
        [this, provider_copy](const Envelope& env) {
          on_reply(provider_copy, env);
        },
        [self, records, provider_copy](const Envelope& env) {
          const auto* reply = std::any_cast<MetadataReply>(&env.content);
          if (!reply || reply->requester != self) return false;
          auto rit = records->find(provider_copy);
          return rit != records->end() && rit->second.inflight_query &&
                 *rit->second.inflight_query == reply->query_id;
        });
    client.ready_at =
        bus_.loop().now() + sim::ms_to_us(bus_.link().matching_delay_ms);
    return clients_.emplace(provider, client).first->second;
  }

  void on_reply(const std::string& provider, const Envelope& env) {
    const auto* reply = std::any_cast<MetadataReply>(&env.content);
    if (!reply) return;
    auto it = records_.find(provider);
    if (it == records_.end()) return;
    lifecycle::Transition t = lifecycle::on_metadata_response(
        it->second, reply->metadata, reply->incarnation, reply->query_id,
        bus_.loop().now());
    apply(provider, std::move(t));
  }

  void emit_event(const lifecycle::DiscoveryEvent& event) {
    bus_.publish(event_pub_, 64, event);
    if (event.kind != lifecycle::DiscoveryEvent::Kind::Lost) {
      int active = 0;
      for (const auto& [agent, record] : records_) {
        if (record.state == lifecycle::AgentState::Active) ++active;
      }
      if (!complete_ && active >= expected_peers_) {
        complete_ = true;
        if (on_complete_) on_complete_(bus_.loop().now());
      }
    }
  }

  void schedule_liveness() {
    bus_.loop().schedule(1'000'000, [this] {
      for (auto& [agent, record] : records_) {
        lifecycle::Transition t =
            lifecycle::liveness_check(record, bus_.loop().now(), config_);
        if (!t.actions.empty()) {
          apply(agent, std::move(t));
        } else {
          record = t.record;
        }
      }
      schedule_liveness();
    });
  }

  Bus& bus_;
  ParticipantId participant_;
  std::string agent_;
  lifecycle::LifecycleConfig config_;
  int expected_peers_ = 0;
  std::function<void(TimeUs)> on_complete_;
  std::map<std::string, lifecycle::AgentRecord> records_;
  std::map<std::string, Client> clients_;
  uint64_t next_query_id_ = 1;
  bool complete_ = false;
  bus::EndpointId event_pub_ = 0;
  bus::EndpointId heartbeat_sub_ = 0;
};

struct E2SfgOutcome {
  E2Row row;
  std::vector<std::pair<std::string, TimeUs>> completions;
};

E2SfgOutcome run_e2_sfg(const Scenario& scenario, int n) {
  sim::SimLoop loop;
  sim::Rng rng(derive_seed(scenario.seed, "e2/sfg_ros/n" + std::to_string(n)));
  Bus bus_obj(loop, scenario.link, rng);

  std::vector<std::string> names;
  for (int i = 1; i <= n; ++i) names.push_back("agent_" + std::to_string(i));

  std::vector<std::unique_ptr<StatusProvider>> providers;
  std::vector<std::unique_ptr<Discoverer>> discoverers;
  std::vector<TimeUs> completions(static_cast<size_t>(n), -1);
  bus::TrafficCounter window_traffic;
  int completed = 0;

  for (int i = 0; i < n; ++i) {
    AgentSpec spec;
    spec.name = names[static_cast<size_t>(i)];
    spec.domain = static_cast<router::DomainId>(i + 1);
    ParticipantId pid = bus_obj.add_participant(spec.name, spec.domain);
    bus_obj.add_router(router_for(scenario, spec));

    providers.push_back(std::make_unique<StatusProvider>(
        bus_obj, pid, spec.name, scenario.lifecycle,
        stream_metadata(spec.name, 0), 0));
    discoverers.push_back(std::make_unique<Discoverer>(
        bus_obj, pid, spec.name, scenario.lifecycle, n - 1,
        [&, i](TimeUs when) {
          completions[static_cast<size_t>(i)] = when;
          ++completed;
          window_traffic = bus_obj.traffic();  // window ends at last event
        }));

    TimeUs start = rng.uniform_int(scenario.node_start_min_us,
                                   scenario.node_start_max_us);
    StatusProvider* provider = providers.back().get();
    Discoverer* discoverer = discoverers.back().get();
    loop.schedule(start, [provider, discoverer] {
      discoverer->start();
      provider->start();
    });
  }

  TimeUs horizon = std::max<TimeUs>(scenario.duration_us, 8'000'000);
  loop.run_until(horizon);

  if (completed < n) {
    throw ConfigError("SFG discovery incomplete at horizon for n=" +
                      std::to_string(n));
  }

  E2SfgOutcome outcome;
  outcome.row.n_agents = n;
  TimeUs fleet = 0;
  for (int i = 0; i < n; ++i) {
    fleet = std::max(fleet, completions[static_cast<size_t>(i)]);
    outcome.completions.emplace_back(names[static_cast<size_t>(i)],
                                     completions[static_cast<size_t>(i)]);
  }
  outcome.row.discovery_time_ms = sim::us_to_ms(fleet);
  outcome.row.traffic_bytes =
      static_cast<double>(window_traffic.total_ingress());
  return outcome;
}

// --- E3: latency -----------------------------------------------------------

bus::LinkModel e3_link(const Scenario& scenario) {
  bus::LinkModel link = scenario.link;
  link.base_latency_ms = sim::us_to_ms(scenario.e3.link_us);
  link.ipc_latency_ms = sim::us_to_ms(scenario.e3.relay_us);
  link.matching_delay_ms = sim::us_to_ms(scenario.e3.matching_delay_us);
  link.loss_probability = 0.0;
  return link;
}

proxy::ProxyConfig e3_proxy(const Scenario& scenario) {
  proxy::ProxyConfig config;
  config.load_delay_us = scenario.e3.load_delay_us;
  config.decode_latency_us = scenario.e3.decode_us;
  return config;
}

struct E3Setup {
  sim::SimLoop loop;
  std::unique_ptr<sim::Rng> rng;
  std::unique_ptr<Bus> bus;
  std::unique_ptr<MockStreamProducer> stream;
  std::unique_ptr<proxy::DecodeProxy> dp;
  ParticipantId producer = 0;
  ParticipantId consumer = 0;
  E1Agents agents;
  StreamTopics topics;
};

void build_e3_setup(E3Setup& setup, const Scenario& scenario, Mode mode,
                    std::string_view tag) {
  setup.rng = std::make_unique<sim::Rng>(derive_seed(
      scenario.seed, std::string("e3/") + std::string(to_string(mode)) + "/" +
                         std::string(tag)));
  setup.bus = std::make_unique<Bus>(setup.loop, e3_link(scenario), *setup.rng);
  setup.agents = pick_agents(scenario);
  bool sfg = mode == Mode::SfgRos;
  setup.producer = setup.bus->add_participant(
      setup.agents.producer.name, sfg ? setup.agents.producer.domain : 0);
  setup.consumer = setup.bus->add_participant(
      setup.agents.consumer.name, sfg ? setup.agents.consumer.domain : 0);
  if (sfg) {
    setup.bus->add_router(router_for(scenario, setup.agents.producer));
    setup.bus->add_router(router_for(scenario, setup.agents.consumer));
  }
  setup.topics = stream_topics(setup.agents.producer.name);
  setup.stream = std::make_unique<MockStreamProducer>(
      *setup.bus, setup.producer, setup.topics.compressed_dds, scenario.video,
      scenario.e3.capture_interval_us, scenario.e3.encode_us);
  if (sfg) {
    setup.dp = std::make_unique<proxy::DecodeProxy>(
        *setup.bus, setup.consumer, scenario.cost, e3_proxy(scenario));
    proxy::DecodeProxy* dp = setup.dp.get();
    setup.bus->add_graph_listener(
        [dp](const bus::GraphEvent& e) { dp->on_graph_event(e); });
    dp->on_discovery_event(lifecycle::DiscoveryEvent{
        lifecycle::DiscoveryEvent::Kind::Discovered, setup.agents.producer.name,
        stream_metadata(setup.agents.producer.name, 1)});
  }
}

std::vector<double> run_e3_glass_to_glass(const Scenario& scenario, Mode mode,
                                          std::vector<MetricsRow>& metrics) {
  E3Setup setup;
  build_e3_setup(setup, scenario, mode, "g2g");
  bool sfg = mode == Mode::SfgRos;
  const E3Calibration& cal = scenario.e3;
  int samples = cal.samples;

  // Deterministic stratified LED phases over the capture interval: LED j
  // fires (2j+1)/(2K) of an interval before its capture.
  TimeUs first_capture =
      ((2'000'000 + cal.capture_interval_us - 1) / cal.capture_interval_us) *
      cal.capture_interval_us;
  std::map<uint64_t, std::vector<int>> leds_by_frame;
  std::vector<double> led_time_us(static_cast<size_t>(samples), 0.0);
  for (int j = 0; j < samples; ++j) {
    uint64_t frame =
        static_cast<uint64_t>(first_capture / cal.capture_interval_us) +
        static_cast<uint64_t>(3 * j);
    double capture_time =
        static_cast<double>(frame) * static_cast<double>(cal.capture_interval_us);
    double wait = (2.0 * j + 1.0) *
                  static_cast<double>(cal.capture_interval_us) /
                  (2.0 * samples);
    led_time_us[static_cast<size_t>(j)] = capture_time - wait;
    leds_by_frame[frame].push_back(j);
  }

  std::vector<double> g2g_ms(static_cast<size_t>(samples), -1.0);
  auto record_render = [&](uint64_t frame, TimeUs render_time) {
    auto it = leds_by_frame.find(frame);
    if (it == leds_by_frame.end()) return;
    for (int j : it->second) {
      double value =
          (static_cast<double>(render_time) - led_time_us[static_cast<size_t>(j)]) /
          1000.0;
      if (g2g_ms[static_cast<size_t>(j)] < 0) {
        g2g_ms[static_cast<size_t>(j)] = value;
        metrics.push_back(MetricsRow{sim::us_to_ms(render_time),
                                     setup.agents.consumer.name,
                                     std::string(to_string(mode)) +
                                         ".glass_to_glass_ms.sample_" +
                                         pad2(j),
                                     value});
      }
    }
  };

  bool seen_key = false;
  if (sfg) {
    setup.bus->add_subscriber(
        setup.consumer, setup.topics.decoded_dds, bus::QoS::BestEffort,
        [&](const Envelope& env) {
          const auto* blob = std::any_cast<codec::CompressedBlob>(&env.content);
          if (!blob) return;
          uint64_t frame = blob->frame_index;
          setup.loop.schedule(cal.render_us, [&record_render, frame, &setup] {
            record_render(frame, setup.loop.now());
          });
        });
  } else {
    setup.bus->add_subscriber(
        setup.consumer, setup.topics.compressed_dds, bus::QoS::BestEffort,
        [&](const Envelope& env) {
          const auto* blob = std::any_cast<codec::CompressedBlob>(&env.content);
          if (!blob) return;
          if (!seen_key && !blob->keyframe) return;
          seen_key = true;
          uint64_t frame = blob->frame_index;
          setup.loop.schedule(cal.decode_us + cal.render_us,
                              [&record_render, frame, &setup] {
                                record_render(frame, setup.loop.now());
                              });
        });
  }

  setup.stream->start();
  TimeUs horizon = first_capture +
                   static_cast<TimeUs>(3 * samples + 2) *
                       cal.capture_interval_us +
                   1'000'000;
  setup.loop.run_until(horizon);

  for (double v : g2g_ms) {
    if (v < 0) throw ConfigError("missed glass-to-glass sample");
  }
  return g2g_ms;
}

double run_e3_s2ff_sample(const Scenario& scenario, Mode mode, int j,
                          std::vector<MetricsRow>& metrics) {
  E3Setup setup;
  build_e3_setup(setup, scenario, mode, "s2ff/" + std::to_string(j));
  bool sfg = mode == Mode::SfgRos;
  const E3Calibration& cal = scenario.e3;

  TimeUs phase = static_cast<TimeUs>(
      std::llround((2.0 * j + 1.0) *
                   static_cast<double>(cal.capture_interval_us) /
                   (2.0 * cal.samples)));
  TimeUs t_sub = 2'000'000 + phase;

  double s2ff_ms = -1.0;
  bool seen_key = false;
  auto record = [&](TimeUs publish_time) {
    if (s2ff_ms >= 0) return;
    s2ff_ms = static_cast<double>(publish_time - t_sub) / 1000.0;
  };

  setup.loop.schedule(t_sub, [&] {
    if (sfg) {
      setup.bus->add_subscriber(
          setup.consumer, setup.topics.decoded_dds, bus::QoS::BestEffort,
          [&](const Envelope& env) {
            const auto* blob =
                std::any_cast<codec::CompressedBlob>(&env.content);
            if (!blob) return;
            record(setup.stream->publish_time_of(blob->frame_index));
          });
    } else {
      setup.bus->add_subscriber(
          setup.consumer, setup.topics.compressed_dds, bus::QoS::BestEffort,
          [&](const Envelope& env) {
            const auto* blob =
                std::any_cast<codec::CompressedBlob>(&env.content);
            if (!blob) return;
            if (!seen_key && !blob->keyframe) return;
            seen_key = true;
            record(env.publish_time);
          });
    }
  });

  setup.stream->start();
  setup.loop.run_until(t_sub + 5'000'000);
  if (s2ff_ms < 0) {
    throw ConfigError("missed subscription-to-first-frame sample");
  }
  metrics.push_back(MetricsRow{
      sim::us_to_ms(t_sub), setup.agents.consumer.name,
      std::string(to_string(mode)) + ".sub_to_first_frame_ms.sample_" + pad2(j),
      s2ff_ms});
  return s2ff_ms;
}

double mean_of(const std::vector<double>& values) {
  double sum = 0;
  for (double v : values) sum += v;
  return values.empty() ? 0.0 : sum / static_cast<double>(values.size());
}

double stddev_of(const std::vector<double>& values, double mean) {
  if (values.empty()) return 0.0;
  double acc = 0;
  for (double v : values) acc += (v - mean) * (v - mean);
  return std::sqrt(acc / static_cast<double>(values.size()));
}

void sort_metrics(std::vector<MetricsRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(),
                   [](const MetricsRow& a, const MetricsRow& b) {
                     if (a.t_ms != b.t_ms) return a.t_ms < b.t_ms;
                     if (a.agent != b.agent) return a.agent < b.agent;
                     return a.metric < b.metric;
                   });
}

}  // namespace

ExperimentResult run_e1_subscriber_scaling(const Scenario& scenario) {
  ExperimentResult result;
  result.experiment = "e1";
  result.modes = modes_to_run(scenario);
  E1Agents agents = pick_agents(scenario);
  TimeUs window_us = kE1WindowUs;
  if (scenario.duration_us > kE1WarmupUs + 1'000'000) {
    window_us = scenario.duration_us - kE1WarmupUs;
  }
  double t_end = sim::us_to_ms(kE1WarmupUs + window_us);
  for (Mode mode : result.modes) {
    std::vector<E1Row> rows;
    for (int n = 1; n <= scenario.max_subscribers; ++n) {
      E1Row row = run_e1_config(scenario, mode, n);
      result.metrics.push_back(
          MetricsRow{t_end, agents.consumer.name,
                     std::string(to_string(mode)) + ".cpu_units.n" + pad2(n),
                     row.cpu_units});
      result.metrics.push_back(MetricsRow{
          t_end, agents.consumer.name,
          std::string(to_string(mode)) + ".bandwidth_bps.n" + pad2(n),
          row.bandwidth_bps});
      rows.push_back(row);
    }
    result.e1[mode] = std::move(rows);
  }
  sort_metrics(result.metrics);
  return result;
}

ExperimentResult run_e2_discovery(const Scenario& scenario) {
  ExperimentResult result;
  result.experiment = "e2";
  result.modes = modes_to_run(scenario);
  int nodes = scenario.agents.empty() ? 20 : scenario.agents.front().nodes;

  for (Mode mode : result.modes) {
    std::vector<E2Row> rows;
    for (int n : scenario.fleet_sizes) {
      if (n < 1) throw ConfigError("fleet size must be >= 1");
      if (mode == Mode::Baseline) {
        sim::SimLoop loop;
        sim::Rng rng(derive_seed(scenario.seed,
                                 "e2/baseline/n" + std::to_string(n)));
        bus::DiscoveryRunResult run = bus::run_baseline_discovery(
            loop, rng, n, nodes, scenario.discovery);
        E2Row row;
        row.n_agents = n;
        row.discovery_time_ms = sim::us_to_ms(run.fleet_completion_us);
        row.traffic_bytes = static_cast<double>(run.total_ingress_bytes);
        for (int i = 0; i < n; ++i) {
          const auto& agent = run.agents[static_cast<size_t>(i)];
          std::string name = "agent_" + std::to_string(i + 1);
          result.metrics.push_back(MetricsRow{
              sim::us_to_ms(agent.completion_us), name,
              "baseline.discovery_time_ms.n" + pad2(n),
              sim::us_to_ms(agent.completion_us)});
          result.metrics.push_back(MetricsRow{
              sim::us_to_ms(run.quiescence_us), name,
              "baseline.ingress_bytes.n" + pad2(n),
              static_cast<double>(agent.ingress_bytes)});
        }
        rows.push_back(row);
      } else {
        E2SfgOutcome outcome = run_e2_sfg(scenario, n);
        for (const auto& [name, when] : outcome.completions) {
          result.metrics.push_back(
              MetricsRow{sim::us_to_ms(when), name,
                         "sfg_ros.discovery_time_ms.n" + pad2(n),
                         sim::us_to_ms(when)});
        }
        rows.push_back(outcome.row);
      }
    }
    result.e2[mode] = std::move(rows);
    for (const E2Row& row : result.e2[mode]) {
      result.metrics.push_back(
          MetricsRow{row.discovery_time_ms, "fleet",
                     std::string(to_string(mode)) + ".discovery_time_ms.n" +
                         pad2(row.n_agents),
                     row.discovery_time_ms});
      result.metrics.push_back(
          MetricsRow{row.discovery_time_ms, "fleet",
                     std::string(to_string(mode)) + ".traffic_bytes.n" +
                         pad2(row.n_agents),
                     row.traffic_bytes});
    }
  }
  sort_metrics(result.metrics);
  return result;
}

ExperimentResult run_e3_latency(const Scenario& scenario) {
  ExperimentResult result;
  result.experiment = "e3";
  result.modes = modes_to_run(scenario);
  E1Agents agents = pick_agents(scenario);

  for (Mode mode : result.modes) {
    std::vector<double> g2g =
        run_e3_glass_to_glass(scenario, mode, result.metrics);
    std::vector<double> s2ff;
    for (int j = 0; j < scenario.e3.samples; ++j) {
      s2ff.push_back(run_e3_s2ff_sample(scenario, mode, j, result.metrics));
    }
    E3Summary summary;
    summary.samples = scenario.e3.samples;
    summary.glass_to_glass_mean_ms = mean_of(g2g);
    summary.glass_to_glass_stddev_ms =
        stddev_of(g2g, summary.glass_to_glass_mean_ms);
    summary.sub_to_first_frame_mean_ms = mean_of(s2ff);
    summary.sub_to_first_frame_stddev_ms =
        stddev_of(s2ff, summary.sub_to_first_frame_mean_ms);
    result.e3[mode] = summary;

    std::string prefix(to_string(mode));
    double t_end = sim::us_to_ms(20'000'000);
    result.metrics.push_back(MetricsRow{t_end, agents.consumer.name,
                                        prefix + ".glass_to_glass_mean_ms",
                                        summary.glass_to_glass_mean_ms});
    result.metrics.push_back(
        MetricsRow{t_end, agents.consumer.name,
                   prefix + ".sub_to_first_frame_mean_ms",
                   summary.sub_to_first_frame_mean_ms});
  }
  sort_metrics(result.metrics);
  return result;
}

ExperimentResult run_experiment(std::string_view name,
                                const Scenario& scenario) {
  if (name == "e1") return run_e1_subscriber_scaling(scenario);
  if (name == "e2") return run_e2_discovery(scenario);
  if (name == "e3") return run_e3_latency(scenario);
  throw ConfigError("unknown experiment '" + std::string(name) + "'");
}

std::string to_csv(const ExperimentResult& result) {
  std::string out = "t_ms,agent,metric,value\n";
  for (const MetricsRow& row : result.metrics) {
    out += format_number(row.t_ms);
    out += ',';
    out += row.agent;
    out += ',';
    out += row.metric;
    out += ',';
    out += format_number(row.value);
    out += '\n';
  }
  return out;
}

nlohmann::json summary_json(const ExperimentResult& result) {
  nlohmann::json out = nlohmann::json::array();
  for (Mode mode : result.modes) {
    nlohmann::json entry;
    entry["experiment"] = result.experiment;
    entry["mode"] = std::string(to_string(mode));
    nlohmann::json rows = nlohmann::json::array();
    if (result.experiment == "e1") {
      for (const E1Row& row : result.e1.at(mode)) {
        rows.push_back({{"n", row.n},
                        {"cpu_units", row.cpu_units},
                        {"bandwidth_bps", row.bandwidth_bps}});
      }
    } else if (result.experiment == "e2") {
      for (const E2Row& row : result.e2.at(mode)) {
        rows.push_back({{"n_agents", row.n_agents},
                        {"discovery_time_ms", row.discovery_time_ms},
                        {"traffic_bytes", row.traffic_bytes}});
      }
    } else if (result.experiment == "e3") {
      const E3Summary& s = result.e3.at(mode);
      rows.push_back(
          {{"glass_to_glass_ms", s.glass_to_glass_mean_ms},
           {"glass_to_glass_stddev_ms", s.glass_to_glass_stddev_ms},
           {"sub_to_first_frame_ms", s.sub_to_first_frame_mean_ms},
           {"sub_to_first_frame_stddev_ms", s.sub_to_first_frame_stddev_ms},
           {"samples", s.samples}});
    }
    entry["rows"] = std::move(rows);
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace fleetsim::harness
