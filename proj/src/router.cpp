#include "fleetsim/router.hpp"

namespace fleetsim::router {

bool ForwardingRule::matches(std::string_view dds_name) const {
  if (!pattern.empty() && pattern.back() == '*') {
    std::string_view prefix(pattern);
    prefix.remove_suffix(1);
    return dds_name.substr(0, prefix.size()) == prefix;
  }
  return dds_name == pattern;
}

ForwardingRule make_rule(std::string_view pattern) {
  if (pattern.empty()) {
    throw std::invalid_argument("empty forwarding rule");
  }
  auto star = pattern.find('*');
  if (star != std::string_view::npos) {
    if (star != pattern.size() - 1 || star == 0 || pattern[star - 1] != '/') {
      throw std::invalid_argument(
          "wildcard must be a final character following '/': '" +
          std::string(pattern) + "'");
    }
  }
  return ForwardingRule{std::string(pattern)};
}

std::vector<ForwardingRule> default_rules() {
  return {
      make_rule("rt/tf"),        make_rule("rt/tf_static"),
      make_rule("rt/global/*"),  make_rule("rq/global/*"),
      make_rule("rr/global/*"),
  };
}

bool any_rule_matches(const RouterConfig& config, std::string_view dds_name) {
  for (const auto& rule : config.rules) {
    if (rule.matches(dds_name)) return true;
  }
  return false;
}

std::set<DomainId> route(const RouterConfig& config, DomainId origin_domain,
                         std::string_view dds_name) {
  if (origin_domain != config.local_domain &&
      origin_domain != kGlobalDomain) {
    throw UnknownOrigin("origin domain " + std::to_string(origin_domain) +
                        " is not bridged by this router");
  }
  if (any_rule_matches(config, dds_name)) {
    return {config.local_domain, kGlobalDomain};
  }
  return {origin_domain};
}

TfMessage rewrite_tf_frames(TfMessage message, std::string_view agent,
                            TfDirection direction) {
  if (direction == TfDirection::Inbound) return message;
  auto prefix_frame = [&](std::string& frame) {
    if (frame.find('/') == std::string::npos) {
      frame = std::string(agent) + "/" + frame;
    }
  };
  for (auto& t : message.transforms) {
    prefix_frame(t.parent);
    prefix_frame(t.child);
  }
  return message;
}

}  // namespace fleetsim::router
