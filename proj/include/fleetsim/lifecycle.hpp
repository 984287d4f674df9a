#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fleetsim/event_loop.hpp"

namespace fleetsim::lifecycle {

using sim::TimeUs;

struct AgentHeartbeat {
  std::string agent;
  TimeUs sent_at = 0;
  uint32_t incarnation = 0;
};

// One compressed stream advertised by an agent: which component/stream it
// comes from and the three topics that carry it.
struct StreamDescriptor {
  std::string component;
  std::string stream;
  std::string codec;
  std::string compressed_fqn;  // Global scope, bridged
  std::string decoded_fqn;     // Local scope on the consuming device
  std::string info_fqn;        // Local scope, relayed alongside

  friend bool operator==(const StreamDescriptor&,
                         const StreamDescriptor&) = default;
};

struct AgentMetadata {
  std::string agent;
  std::vector<StreamDescriptor> streams;

  friend bool operator==(const AgentMetadata&,
                         const AgentMetadata&) = default;
};

// Wire sizes for traffic accounting (length-prefixed field list; only the
// sizes matter to the simulator).
inline constexpr int64_t kHeartbeatBytes = 64;
inline constexpr int64_t kMetadataQueryBytes = 64;
inline int64_t metadata_response_bytes(const AgentMetadata& md) {
  return 256 + 64 * static_cast<int64_t>(md.streams.size());
}

enum class AgentState { Unknown, MetadataPending, Active, Lost };

std::string_view to_string(AgentState state);

struct AgentRecord {
  std::string agent;
  AgentState state = AgentState::Unknown;
  TimeUs last_heartbeat = 0;
  std::optional<AgentMetadata> cached_metadata;
  std::optional<uint32_t> cached_incarnation;
  std::optional<uint64_t> inflight_query;
  int retry_count = 0;
};

struct DiscoveryEvent {
  enum class Kind { Discovered, Rediscovered, Lost };
  Kind kind = Kind::Discovered;
  std::string agent;
  std::optional<AgentMetadata> metadata;  // present except for Lost
};

std::string_view to_string(DiscoveryEvent::Kind kind);

// Side effects requested by a transition. send_after_us delays the wire send
// (retry backoff, 2^retry x 500 ms); the query id is reserved immediately so
// at most one query is ever in flight per record.
struct SendMetadataQuery {
  uint64_t query_id = 0;
  TimeUs send_after_us = 0;
};

struct EmitDiscoveryEvent {
  DiscoveryEvent event;
};

using Action = std::variant<SendMetadataQuery, EmitDiscoveryEvent>;

struct Transition {
  AgentRecord record;
  std::vector<Action> actions;
  bool stale = false;  // set when a response was ignored
};

struct LifecycleConfig {
  TimeUs startup_duration_us = 10'000'000;
  TimeUs startup_interval_us = 1'000'000;
  TimeUs steady_interval_us = 5'000'000;
  TimeUs liveness_timeout_us = 15'000'000;  // 3 x steady interval
  TimeUs query_timeout_us = 1'000'000;
  TimeUs backoff_base_us = 500'000;
  int max_retries = 3;
};

enum class Phase { Startup, Steady };

TimeUs heartbeat_interval(Phase phase, const LifecycleConfig& config = {});
Phase phase_for_uptime(TimeUs uptime_us, const LifecycleConfig& config = {});

// DFA transitions. All of these are pure: record in, record + actions out.
// `next_query_id` is consumed only when the returned actions contain a
// SendMetadataQuery.

Transition on_heartbeat(AgentRecord record, const AgentHeartbeat& hb,
                        TimeUs now, uint64_t next_query_id);

Transition on_metadata_response(AgentRecord record, const AgentMetadata& md,
                                uint32_t incarnation, uint64_t query_id,
                                TimeUs now);

Transition on_metadata_timeout(AgentRecord record, TimeUs now,
                               uint64_t next_query_id,
                               const LifecycleConfig& config = {});

Transition liveness_check(AgentRecord record, TimeUs now,
                          const LifecycleConfig& config = {});

}  // namespace fleetsim::lifecycle
