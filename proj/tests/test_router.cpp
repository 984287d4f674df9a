#include <doctest.h>

#include "fleetsim/router.hpp"
#include "support/generators.hpp"

using namespace fleetsim::router;
using fleetsim::sim::Rng;

TEST_CASE("default forwarding rules") {
  auto rules = default_rules();
  REQUIRE(rules.size() == 5);
  auto has = [&rules](const std::string& pattern) {
    for (const auto& r : rules) {
      if (r.pattern == pattern) return true;
    }
    return false;
  };
  CHECK(has("rt/tf"));
  CHECK(has("rt/tf_static"));
  CHECK(has("rt/global/*"));
  CHECK(has("rq/global/*"));
  CHECK(has("rr/global/*"));
  CHECK_FALSE(has("rt/local/*"));
}

TEST_CASE("rule matching") {
  CHECK(make_rule("rt/global/*").matches("rt/global/pose"));
  CHECK_FALSE(make_rule("rt/tf").matches("rt/tf_static"));
  CHECK_FALSE(make_rule("rq/global/*").matches("rq/local/go2/get_metadata"));
  CHECK(make_rule("rt/tf").matches("rt/tf"));
  CHECK(make_rule("rt/global/*").matches("rt/global/"));

  CHECK_THROWS_AS(make_rule("rt/glo*bal"), std::invalid_argument);
  CHECK_THROWS_AS(make_rule("*"), std::invalid_argument);
  CHECK_THROWS_AS(make_rule(""), std::invalid_argument);
}

TEST_CASE("routing policy") {
  RouterConfig config;
  config.local_domain = 7;
  config.agent = "go2";

  CHECK(route(config, 7, "rt/global/agent_heartbeat") ==
        std::set<DomainId>{7, 0});
  CHECK(route(config, 7, "rt/local/go2/odom") == std::set<DomainId>{7});
  CHECK(route(config, 0, "rt/tf") == std::set<DomainId>{7, 0});
  CHECK_THROWS_AS(route(config, 3, "rt/tf"), UnknownOrigin);
}

TEST_CASE("route agrees with brute-force rule membership") {
  RouterConfig config;
  config.local_domain = 7;
  Rng rng(99);
  for (int i = 0; i < 2000; ++i) {
    std::string name = gen::random_dds_name(rng);
    bool member = false;
    for (const auto& rule : config.rules) {
      if (rule.matches(name)) member = true;
    }
    auto domains = route(config, 7, name);
    CHECK(domains.size() == (member ? 2u : 1u));
    // Never two nonzero domains.
    int nonzero = 0;
    for (DomainId d : domains) {
      if (d != 0) ++nonzero;
    }
    CHECK(nonzero <= 1);
  }
}

TEST_CASE("tf frame rewriting") {
  TfMessage msg;
  msg.transforms.push_back({"base", "map"});
  msg.transforms.push_back({"go2/base", "odom"});

  TfMessage out = rewrite_tf_frames(msg, "go2", TfDirection::Outbound);
  CHECK(out.transforms[0].parent == "go2/base");
  CHECK(out.transforms[0].child == "go2/map");
  CHECK(out.transforms[1].parent == "go2/base");  // already prefixed
  CHECK(out.transforms[1].child == "go2/odom");

  // Idempotent under Outbound.
  TfMessage twice = rewrite_tf_frames(out, "go2", TfDirection::Outbound);
  CHECK(twice == out);

  // Inbound is a no-op.
  TfMessage inbound = rewrite_tf_frames(msg, "go2", TfDirection::Inbound);
  CHECK(inbound == msg);
}
