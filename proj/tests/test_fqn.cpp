#include <doctest.h>

#include "fleetsim/fqn.hpp"
#include "support/generators.hpp"

using namespace fleetsim::fqn;
using fleetsim::sim::Rng;

TEST_CASE("paper topic names build exactly") {
  FqnBuilder heartbeat;
  heartbeat.scope(Scope::Global).resource("agent_heartbeat");
  CHECK(heartbeat.build() == "/global/agent_heartbeat");

  FqnBuilder metadata;
  metadata.scope(Scope::Global).agent("go2").resource("get_metadata");
  CHECK(metadata.build() == "/global/go2/get_metadata");
  CHECK(metadata.tuple().kind == ResourceKind::Service);

  FqnBuilder event;
  event.scope(Scope::Local).agent("go2").resource("agent_discovery_event");
  CHECK(event.build() == "/local/go2/agent_discovery_event");
}

TEST_CASE("parse resolves positionally") {
  FqnTuple t = parse_fqn("/local/go2/camera_front/depth/image");
  CHECK(t.scope == Scope::Local);
  REQUIRE(t.agent.has_value());
  CHECK(t.agent->render() == "go2");
  REQUIRE(t.component.has_value());
  CHECK(t.component->render() == "camera_front");
  CHECK(t.component->base() == "camera");
  CHECK(t.component->suffix() == "front");
  CHECK_FALSE(t.component->is_custom());
  REQUIRE(t.stream.has_value());
  CHECK(t.stream->render() == "depth");
  CHECK(t.resource.render() == "image");
  CHECK(t.kind == ResourceKind::Topic);

  FqnTuple hb = parse_fqn("/global/agent_heartbeat");
  CHECK_FALSE(hb.agent.has_value());
  CHECK_FALSE(hb.component.has_value());
  CHECK_FALSE(hb.stream.has_value());
  CHECK(hb.resource.render() == "agent_heartbeat");
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(parse_fqn("/global//x"), ParseError);
  CHECK_THROWS_AS(parse_fqn("global/x"), ParseError);
  CHECK_THROWS_AS(parse_fqn("/cosmic/x"), ParseError);
  CHECK_THROWS_AS(parse_fqn("/global"), ParseError);
  CHECK_THROWS_AS(parse_fqn("/global/a/b/c/d/e"), ParseError);
  CHECK_THROWS_AS(parse_fqn("/global/UpperCase"), ParseError);
  CHECK_THROWS_AS(parse_fqn("/global/x/"), ParseError);
}

TEST_CASE("path constraints") {
  FqnTuple heartbeat = parse_fqn("/global/agent_heartbeat");
  CHECK_NOTHROW(check_path_constraints(heartbeat));

  FqnTuple service = parse_fqn("/global/go2/get_metadata");
  CHECK(service.kind == ResourceKind::Service);
  CHECK_NOTHROW(check_path_constraints(service));

  // A service resource is not allowed after a stream segment.
  FqnTuple after_stream;
  after_stream.scope = Scope::Local;
  after_stream.agent = SegmentValue::parse(SegmentClass::Agent, "go2");
  after_stream.component =
      SegmentValue::parse(SegmentClass::Component, "camera_front");
  after_stream.stream = SegmentValue::parse(SegmentClass::Stream, "depth");
  after_stream.resource =
      SegmentValue::parse(SegmentClass::Resource, "set_exposure");
  after_stream.kind = ResourceKind::Service;
  CHECK_THROWS_AS(check_path_constraints(after_stream), ConstraintViolation);

  // The segment chain must be intact.
  FqnTuple broken;
  broken.scope = Scope::Local;
  broken.component = SegmentValue::parse(SegmentClass::Component, "lidar");
  broken.resource = SegmentValue::parse(SegmentClass::Resource, "pointcloud2");
  CHECK_THROWS_AS(check_path_constraints(broken), ConstraintViolation);

  CHECK(path_mask(PathTerminal::AfterStream) ==
        static_cast<unsigned>(ResourceKind::Topic));
  CHECK(path_mask(PathTerminal::AfterScope) ==
        (static_cast<unsigned>(ResourceKind::Topic) |
         static_cast<unsigned>(ResourceKind::Service)));
}

TEST_CASE("dds name mapping") {
  CHECK(to_dds_name("/global/pose", DdsKind::Topic) == "rt/global/pose");
  CHECK(to_dds_name("/global/go2/get_metadata", DdsKind::ServiceRequest) ==
        "rq/global/go2/get_metadata");
  CHECK(to_dds_name("/global/go2/get_metadata", DdsKind::ServiceReply) ==
        "rr/global/go2/get_metadata");
  CHECK(to_dds_name("/tf", DdsKind::Topic) == "rt/tf");
  CHECK_THROWS_AS(to_dds_name("tf", DdsKind::Topic), ParseError);
}

TEST_CASE("agent name resolution") {
  CHECK(resolve_agent_name(std::nullopt, "Go2-Edge").render() == "go2_edge");
  CHECK(resolve_agent_name(std::string("station_1"), "whatever").render() ==
        "station_1");
  CHECK_THROWS_AS(resolve_agent_name(std::nullopt, "123"), SanitizationEmpty);
  CHECK(resolve_agent_name(std::nullopt, "__Lab--PC__7").render() ==
        "lab_pc_7");
  // Unusable override falls back to the hostname.
  CHECK(resolve_agent_name(std::string("42"), "Go2-Edge").render() ==
        "go2_edge");
  CHECK(sanitize_name("A--B") == "a_b");
}

TEST_CASE("segment canonicalization") {
  SegmentValue camera = SegmentValue::custom(SegmentClass::Component, "camera");
  CHECK_FALSE(camera.is_custom());
  CHECK(camera.base() == "camera");

  SegmentValue front =
      SegmentValue::custom(SegmentClass::Component, "camera", "front");
  CHECK(front.base() == "camera");
  CHECK(front.suffix() == "front");
  CHECK(front.render() == "camera_front");

  // Exact catalog words win over word + suffix splits.
  SegmentValue info = SegmentValue::parse(SegmentClass::Stream, "camera_info");
  CHECK_FALSE(info.is_custom());
  CHECK(info.base() == "camera_info");
  CHECK(info.suffix().empty());

  SegmentValue custom = SegmentValue::parse(SegmentClass::Stream, "thermal");
  CHECK(custom.is_custom());

  CHECK_THROWS_AS(SegmentValue::custom(SegmentClass::Agent, "9lives"),
                  LexicalError);
  CHECK_THROWS_AS(SegmentValue::catalog(SegmentClass::Component, "thermal"),
                  LexicalError);
}

TEST_CASE("round-trip property and canonical text") {
  Rng rng(20260811);
  for (int i = 0; i < 2000; ++i) {
    FqnTuple tuple = gen::random_tuple(rng);
    std::string text = build_fqn(tuple);
    CHECK(text.find("//") == std::string::npos);
    CHECK(text.back() != '/');
    for (char c : text) CHECK_FALSE((c >= 'A' && c <= 'Z'));
    FqnTuple back = parse_fqn(text);
    REQUIRE(back == tuple);
    CHECK(build_fqn(back) == text);
  }
}

TEST_CASE("dds mapping is injective per kind") {
  Rng rng(7);
  for (int i = 0; i < 500; ++i) {
    FqnTuple a = gen::random_tuple(rng);
    FqnTuple b = gen::random_tuple(rng);
    std::string ta = build_fqn(a), tb = build_fqn(b);
    if (ta == tb) continue;
    CHECK(to_dds_name(ta, DdsKind::Topic) != to_dds_name(tb, DdsKind::Topic));
    // The mapping only strips the leading slash; it is invertible.
    std::string dds = to_dds_name(ta, DdsKind::Topic);
    CHECK("/" + dds.substr(3) == ta);
  }
}
