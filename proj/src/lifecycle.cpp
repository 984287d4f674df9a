#include "fleetsim/lifecycle.hpp"

namespace fleetsim::lifecycle {

std::string_view to_string(AgentState state) {
  switch (state) {
    case AgentState::Unknown:
      return "unknown";
    case AgentState::MetadataPending:
      return "metadata_pending";
    case AgentState::Active:
      return "active";
    case AgentState::Lost:
      return "lost";
  }
  return "?";
}

std::string_view to_string(DiscoveryEvent::Kind kind) {
  switch (kind) {
    case DiscoveryEvent::Kind::Discovered:
      return "discovered";
    case DiscoveryEvent::Kind::Rediscovered:
      return "rediscovered";
    case DiscoveryEvent::Kind::Lost:
      return "lost";
  }
  return "?";
}

TimeUs heartbeat_interval(Phase phase, const LifecycleConfig& config) {
  return phase == Phase::Startup ? config.startup_interval_us
                                 : config.steady_interval_us;
}

Phase phase_for_uptime(TimeUs uptime_us, const LifecycleConfig& config) {
  return uptime_us < config.startup_duration_us ? Phase::Startup
                                                : Phase::Steady;
}

namespace {

Transition begin_query(AgentRecord record, TimeUs now, uint64_t query_id,
                       TimeUs send_after_us = 0) {
  record.state = AgentState::MetadataPending;
  record.last_heartbeat = now;
  record.inflight_query = query_id;
  Transition t;
  t.record = std::move(record);
  t.actions.push_back(SendMetadataQuery{query_id, send_after_us});
  return t;
}

}  // namespace

Transition on_heartbeat(AgentRecord record, const AgentHeartbeat& hb,
                        TimeUs now, uint64_t next_query_id) {
  switch (record.state) {
    case AgentState::Unknown:
      return begin_query(std::move(record), now, next_query_id);

    case AgentState::MetadataPending: {
      // A query is already in flight; never issue a second one.
      record.last_heartbeat = now;
      return Transition{std::move(record), {}, false};
    }

    case AgentState::Active: {
      record.last_heartbeat = now;
      if (record.cached_incarnation &&
          *record.cached_incarnation != hb.incarnation) {
        // Restart faster than the liveness timeout: cached metadata is stale.
        record.cached_metadata.reset();
        record.cached_incarnation.reset();
        return begin_query(std::move(record), now, next_query_id);
      }
      return Transition{std::move(record), {}, false};
    }

    case AgentState::Lost: {
      if (record.cached_incarnation &&
          *record.cached_incarnation == hb.incarnation &&
          record.cached_metadata) {
        record.state = AgentState::Active;
        record.last_heartbeat = now;
        Transition t;
        DiscoveryEvent event{DiscoveryEvent::Kind::Rediscovered, record.agent,
                             record.cached_metadata};
        t.record = std::move(record);
        t.actions.push_back(EmitDiscoveryEvent{std::move(event)});
        return t;
      }
      record.cached_metadata.reset();
      record.cached_incarnation.reset();
      return begin_query(std::move(record), now, next_query_id);
    }
  }
  return Transition{std::move(record), {}, false};
}

Transition on_metadata_response(AgentRecord record, const AgentMetadata& md,
                                uint32_t incarnation, uint64_t query_id,
                                TimeUs now) {
  if (record.state != AgentState::MetadataPending ||
      !record.inflight_query || *record.inflight_query != query_id) {
    return Transition{std::move(record), {}, true};
  }
  record.state = AgentState::Active;
  record.last_heartbeat = now;
  record.cached_metadata = md;
  record.cached_incarnation = incarnation;
  record.inflight_query.reset();
  record.retry_count = 0;
  Transition t;
  DiscoveryEvent event{DiscoveryEvent::Kind::Discovered, record.agent, md};
  t.record = std::move(record);
  t.actions.push_back(EmitDiscoveryEvent{std::move(event)});
  return t;
}

Transition on_metadata_timeout(AgentRecord record, TimeUs now,
                               uint64_t next_query_id,
                               const LifecycleConfig& config) {
  (void)now;
  if (record.state != AgentState::MetadataPending) {
    return Transition{std::move(record), {}, false};
  }
  if (record.retry_count < config.max_retries) {
    TimeUs backoff = config.backoff_base_us
                     << std::min(record.retry_count, 30);
    record.inflight_query = next_query_id;
    ++record.retry_count;
    Transition t;
    t.record = std::move(record);
    t.actions.push_back(SendMetadataQuery{next_query_id, backoff});
    return t;
  }
  record.state = AgentState::Unknown;
  record.inflight_query.reset();
  record.retry_count = 0;
  return Transition{std::move(record), {}, false};
}

Transition liveness_check(AgentRecord record, TimeUs now,
                          const LifecycleConfig& config) {
  if (record.state == AgentState::Active &&
      now - record.last_heartbeat > config.liveness_timeout_us) {
    record.state = AgentState::Lost;
    Transition t;
    DiscoveryEvent event{DiscoveryEvent::Kind::Lost, record.agent,
                         std::nullopt};
    t.record = std::move(record);
    t.actions.push_back(EmitDiscoveryEvent{std::move(event)});
    return t;
  }
  return Transition{std::move(record), {}, false};
}

}  // namespace fleetsim::lifecycle
