#pragma once

#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fleetsim/fqn.hpp"

namespace fleetsim::router {

struct UnknownOrigin : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// DDS domain id. 0 is the global bridge domain; agents get nonzero ids.
using DomainId = uint32_t;
inline constexpr DomainId kGlobalDomain = 0;

// Exact DDS-name pattern, or a prefix pattern with one trailing `*` that must
// follow a `/`.
struct ForwardingRule {
  std::string pattern;

  bool matches(std::string_view dds_name) const;

  friend bool operator==(const ForwardingRule&,
                         const ForwardingRule&) = default;
};

ForwardingRule make_rule(std::string_view pattern);  // validates the pattern

// The five stock rules bridged between every agent domain and the global one.
std::vector<ForwardingRule> default_rules();

struct RouterConfig {
  DomainId local_domain = 1;  // must be nonzero
  std::vector<ForwardingRule> rules = default_rules();
  std::string agent;
  std::set<std::string> tf_topics = {"rt/tf", "rt/tf_static"};
};

bool any_rule_matches(const RouterConfig& config, std::string_view dds_name);

// Routing policy: a message whose name satisfies a forwarding rule is bridged
// bidirectionally between the agent domain and the global domain; everything
// else stays where it was published.
std::set<DomainId> route(const RouterConfig& config, DomainId origin_domain,
                         std::string_view dds_name);

enum class TfDirection { Outbound, Inbound };

struct TfFrameIds {
  std::string parent;
  std::string child;

  friend bool operator==(const TfFrameIds&, const TfFrameIds&) = default;
};

struct TfMessage {
  std::vector<TfFrameIds> transforms;

  friend bool operator==(const TfMessage&, const TfMessage&) = default;
};

// Outbound (local -> global): prefix every frame id that carries no `/` with
// `<agent>/`. Inbound is a no-op; global frames arrive already namespaced.
// Idempotent under Outbound.
TfMessage rewrite_tf_frames(TfMessage message, std::string_view agent,
                            TfDirection direction);

}  // namespace fleetsim::router
