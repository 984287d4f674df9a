#include "fleetsim/decode_proxy.hpp"

#include "fleetsim/fqn.hpp"

namespace fleetsim::proxy {

namespace {

// The producer publishes CameraInfo on the global-scope twin of the local
// info topic; the relay bridges it back down.
std::string global_info_fqn(const std::string& local_info_fqn) {
  fqn::FqnTuple tuple = fqn::parse_fqn(local_info_fqn);
  tuple.scope = fqn::Scope::Global;
  return fqn::build_fqn(tuple);
}

}  // namespace

DecodeProxy::DecodeProxy(bus::Bus& bus, bus::ParticipantId self,
                         codec::CostModel cost, ProxyConfig config)
    : bus_(bus),
      self_(self),
      self_domain_(bus.participant(self).domain),
      cost_(cost),
      config_(config) {
  codec::validate(cost_);
}

void DecodeProxy::on_discovery_event(const lifecycle::DiscoveryEvent& event) {
  using Kind = lifecycle::DiscoveryEvent::Kind;
  switch (event.kind) {
    case Kind::Discovered:
    case Kind::Rediscovered:
      if (event.metadata) register_metadata(*event.metadata);
      break;
    case Kind::Lost: {
      auto it = known_agents_.find(event.agent);
      if (it != known_agents_.end()) it->second.active = false;
      unload_agent_components(event.agent);
      break;
    }
  }
}

void DecodeProxy::register_metadata(const lifecycle::AgentMetadata& metadata) {
  KnownAgent& ka = known_agents_[metadata.agent];
  ka.metadata = metadata;
  ka.active = true;

  // Drop components for streams the agent no longer advertises.
  for (auto it = components_.begin(); it != components_.end();) {
    Component& comp = it->second;
    if (comp.agent != metadata.agent) {
      ++it;
      continue;
    }
    bool still_advertised = false;
    for (const auto& s : metadata.streams) {
      if (fqn::to_dds_name(s.decoded_fqn, fqn::DdsKind::Topic) == it->first) {
        still_advertised = true;
        break;
      }
    }
    if (!still_advertised) {
      unload(comp);
      demand_index_.erase(comp.decoded_dds);
      demand_index_.erase(comp.info_dds);
      it = components_.erase(it);
    } else {
      ++it;
    }
  }

  for (const auto& s : metadata.streams) {
    std::string decoded_dds = fqn::to_dds_name(s.decoded_fqn,
                                               fqn::DdsKind::Topic);
    Component& comp = components_[decoded_dds];
    comp.agent = metadata.agent;
    comp.desc = s;
    comp.decoded_dds = decoded_dds;
    comp.compressed_dds = fqn::to_dds_name(s.compressed_fqn,
                                           fqn::DdsKind::Topic);
    comp.info_dds = fqn::to_dds_name(s.info_fqn, fqn::DdsKind::Topic);
    comp.info_source_dds =
        fqn::to_dds_name(global_info_fqn(s.info_fqn), fqn::DdsKind::Topic);
    demand_index_[comp.decoded_dds] = decoded_dds;
    demand_index_[comp.info_dds] = decoded_dds;
    // Instantiation is deferred; only pending local demand loads now.
    if (comp.refcount > 0 && comp.state == ComponentState::Unloaded) {
      start_load(comp);
    }
  }
}

void DecodeProxy::unload_agent_components(const std::string& agent) {
  for (auto& [key, comp] : components_) {
    if (comp.agent == agent) unload(comp);
  }
}

void DecodeProxy::on_graph_event(const bus::GraphEvent& event) {
  if (event.domain != self_domain_) return;
  auto idx = demand_index_.find(event.name);
  if (idx == demand_index_.end()) {
    ++ignored_graph_events_;
    return;
  }
  Component& comp = components_.at(idx->second);

  if (event.kind == bus::GraphEvent::Kind::SubscriptionCreated) {
    ++comp.refcount;
    bool active = known_agents_.count(comp.agent) &&
                  known_agents_.at(comp.agent).active;
    if (comp.refcount == 1 && active &&
        comp.state == ComponentState::Unloaded) {
      start_load(comp);
    }
  } else {
    if (comp.refcount > 0) --comp.refcount;
    if (comp.refcount == 0) unload(comp);
  }
}

void DecodeProxy::start_load(Component& comp) {
  comp.state = ComponentState::Loading;
  uint64_t generation = ++comp.load_generation;
  std::string key = comp.decoded_dds;
  bus_.loop().schedule(config_.load_delay_us, [this, key, generation] {
    auto it = components_.find(key);
    if (it == components_.end()) return;
    Component& c = it->second;
    if (c.load_generation != generation ||
        c.state != ComponentState::Loading) {
      return;  // cancelled or superseded while loading
    }
    finish_load(c);
  });
}

void DecodeProxy::finish_load(Component& comp) {
  std::string key = comp.decoded_dds;
  comp.compressed_sub = bus_.add_subscriber(
      self_, comp.compressed_dds, bus::QoS::BestEffort,
      [this, key](const bus::Envelope& env) { on_blob(key, env); });
  comp.decoded_pub =
      bus_.add_publisher(self_, comp.decoded_dds, bus::QoS::BestEffort);
  comp.info_sub = bus_.add_subscriber(
      self_, comp.info_source_dds, bus::QoS::BestEffort,
      [this, key](const bus::Envelope& env) { on_info(key, env); });
  comp.info_pub =
      bus_.add_publisher(self_, comp.info_dds, bus::QoS::BestEffort);
  comp.seen_keyframe = false;
  comp.state = ComponentState::Loaded;
}

void DecodeProxy::unload(Component& comp) {
  if (comp.state == ComponentState::Loading) {
    ++comp.load_generation;  // invalidates the pending completion
  }
  if (comp.state == ComponentState::Loaded) {
    bus_.remove_endpoint(comp.compressed_sub);
    bus_.remove_endpoint(comp.decoded_pub);
    bus_.remove_endpoint(comp.info_sub);
    bus_.remove_endpoint(comp.info_pub);
    comp.compressed_sub = comp.decoded_pub = comp.info_sub = comp.info_pub = 0;
  }
  comp.state = ComponentState::Unloaded;
  comp.seen_keyframe = false;
}

void DecodeProxy::on_blob(const std::string& key, const bus::Envelope& env) {
  auto it = components_.find(key);
  if (it == components_.end()) return;
  Component& comp = it->second;
  if (comp.state != ComponentState::Loaded) return;  // torn down in flight

  const auto* blob = std::any_cast<codec::CompressedBlob>(&env.content);
  uint64_t frame = blob ? blob->frame_index : env.seq;
  costs_.add_net(frame, cost_.c_net);

  int64_t decoded_payload = 0;
  std::any decoded_content;
  if (blob && blob->codec == codec::CodecId::MockH264) {
    // Decode can only start at a GOP boundary.
    if (!comp.seen_keyframe && !blob->keyframe) {
      ++frames_dropped_;
      return;
    }
    comp.seen_keyframe = true;
    decoded_payload = static_cast<int64_t>(blob->width) * blob->height * 3;
    decoded_content = *blob;
  } else if (blob && blob->codec == codec::CodecId::RvlStyle) {
    try {
      codec::DepthFrame depth = codec::rvl_decompress(*blob);
      decoded_payload = static_cast<int64_t>(depth.values.size()) * 2;
      decoded_content = std::move(depth);
    } catch (const codec::CorruptStream&) {
      ++frames_dropped_;  // best-effort stream: drop, no retransmit
      return;
    }
  } else {
    decoded_payload = env.payload_bytes;
    decoded_content = env.content;
  }

  costs_.add_dec(frame, cost_.c_dec);
  ++frames_decoded_;

  uint64_t generation = comp.load_generation;
  auto republish = [this, key, frame, generation,
                    decoded_payload, content = std::move(decoded_content)] {
    auto cit = components_.find(key);
    if (cit == components_.end()) return;
    Component& c = cit->second;
    if (c.state != ComponentState::Loaded || c.load_generation != generation) {
      return;  // unloaded while the frame was in the decoder
    }
    size_t fanout = bus_.publish(c.decoded_pub, decoded_payload, content);
    costs_.add_ipc(frame, cost_.c_ipc * static_cast<double>(fanout));
  };
  if (config_.decode_latency_us > 0) {
    bus_.loop().schedule(config_.decode_latency_us, std::move(republish));
  } else {
    republish();
  }
}

void DecodeProxy::on_info(const std::string& key, const bus::Envelope& env) {
  auto it = components_.find(key);
  if (it == components_.end()) return;
  Component& comp = it->second;
  if (comp.state != ComponentState::Loaded) return;
  bus_.publish(comp.info_pub, env.payload_bytes, env.content);
}

std::optional<DecodeProxy::ComponentView> DecodeProxy::component(
    const std::string& decoded_dds) const {
  auto it = components_.find(decoded_dds);
  if (it == components_.end()) return std::nullopt;
  return ComponentView{it->second.state, it->second.refcount};
}

size_t DecodeProxy::loaded_count() const {
  size_t n = 0;
  for (const auto& [key, comp] : components_) {
    if (comp.state == ComponentState::Loaded) ++n;
  }
  return n;
}

size_t DecodeProxy::loaded_with_zero_refcount() const {
  size_t n = 0;
  for (const auto& [key, comp] : components_) {
    if (comp.state != ComponentState::Unloaded && comp.refcount == 0) ++n;
  }
  return n;
}

}  // namespace fleetsim::proxy
