#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fleetsim::fqn {

// Naming errors. Parsing wraps everything in ParseError; building throws the
// specific kind.
struct LexicalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConstraintViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SanitizationEmpty : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Scope { Local, Global };

// Bit values so path constraints can be expressed as masks.
enum class ResourceKind : unsigned { Topic = 1u, Service = 2u, Action = 4u };

enum class SegmentClass { Agent, Component, Stream, Resource };

enum class PathTerminal { AfterScope, AfterAgent, AfterComponent, AfterStream };

enum class DdsKind { Topic, ServiceRequest, ServiceReply };

std::string_view scope_word(Scope scope);
std::string_view to_string(ResourceKind kind);
std::string_view to_string(PathTerminal terminal);

// Lexical rule for a rendered segment: [a-z][a-z0-9_]*
bool valid_segment_text(std::string_view text);

// One tuple segment: a catalog word or custom text, plus an optional suffix.
// Values are canonical after construction: custom text that spells a catalog
// word (or word_suffix) is folded onto the catalog member, and a suffix given
// with custom text is folded into the text. Canonical form is what makes
// parse(render(v)) == v hold.
class SegmentValue {
 public:
  static SegmentValue catalog(SegmentClass cls, std::string_view word,
                              std::string_view suffix = {});
  static SegmentValue custom(SegmentClass cls, std::string_view text,
                             std::string_view suffix = {});
  // Canonical factory from rendered text, used by the parser.
  static SegmentValue parse(SegmentClass cls, std::string_view rendered);

  SegmentClass segment_class() const { return class_; }
  const std::string& base() const { return base_; }
  const std::string& suffix() const { return suffix_; }
  bool is_custom() const { return custom_; }
  std::string render() const;

  friend bool operator==(const SegmentValue&, const SegmentValue&) = default;

 private:
  SegmentValue() = default;

  SegmentClass class_ = SegmentClass::Agent;
  std::string base_;
  std::string suffix_;
  bool custom_ = false;
};

const std::vector<std::string_view>& catalog_words(SegmentClass cls);

// Catalog resources carry an intrinsic kind (get_metadata is a service, the
// rest are topics); custom resources default to Topic. The rendered text does
// not encode the kind, so the parser relies on this.
ResourceKind default_resource_kind(const SegmentValue& resource);

// The ordered naming tuple. scope and resource are mandatory; the optional
// middle segments form a chain: stream needs component, component needs agent.
struct FqnTuple {
  Scope scope = Scope::Local;
  std::optional<SegmentValue> agent;
  std::optional<SegmentValue> component;
  std::optional<SegmentValue> stream;
  SegmentValue resource = SegmentValue::custom(SegmentClass::Resource, "unset");
  ResourceKind kind = ResourceKind::Topic;

  friend bool operator==(const FqnTuple&, const FqnTuple&) = default;
};

PathTerminal terminal_of(const FqnTuple& tuple);
unsigned path_mask(PathTerminal terminal);

// Throws ConstraintViolation when the resource kind is not permitted after the
// tuple's last path segment, or when the segment chain is broken.
void check_path_constraints(const FqnTuple& tuple);

// Canonical text `/<scope>/<agent?>/<component?>/<stream?>/<resource>`.
std::string build_fqn(const FqnTuple& tuple);

// Inverse of build_fqn; middle segments are resolved positionally.
FqnTuple parse_fqn(std::string_view text);

// Hostname sanitizer: lowercase, non-[a-z0-9] -> '_', collapse '_' runs,
// strip leading digits and underscores.
std::string sanitize_name(std::string_view raw);

// Agent segment from an env override (SFG_AGENT_NAME) or the sanitized
// hostname. Throws SanitizationEmpty when nothing survives sanitization.
SegmentValue resolve_agent_name(const std::optional<std::string>& env_value,
                                std::string_view hostname);

// ROS <-> DDS name mapping: rt/ topics, rq/ service requests, rr/ replies.
std::string to_dds_name(std::string_view fqn_text, DdsKind kind);

// Fluent construction mirroring how call sites assemble names.
class FqnBuilder {
 public:
  FqnBuilder& scope(Scope s) {
    tuple_.scope = s;
    return *this;
  }
  FqnBuilder& agent(SegmentValue v) {
    tuple_.agent = std::move(v);
    return *this;
  }
  FqnBuilder& agent(std::string_view text) {
    return agent(SegmentValue::parse(SegmentClass::Agent, text));
  }
  FqnBuilder& component(SegmentValue v) {
    tuple_.component = std::move(v);
    return *this;
  }
  FqnBuilder& component(std::string_view text) {
    return component(SegmentValue::parse(SegmentClass::Component, text));
  }
  FqnBuilder& stream(SegmentValue v) {
    tuple_.stream = std::move(v);
    return *this;
  }
  FqnBuilder& stream(std::string_view text) {
    return stream(SegmentValue::parse(SegmentClass::Stream, text));
  }
  FqnBuilder& resource(SegmentValue v) {
    tuple_.resource = std::move(v);
    tuple_.kind = default_resource_kind(tuple_.resource);
    return *this;
  }
  FqnBuilder& resource(std::string_view text) {
    return resource(SegmentValue::parse(SegmentClass::Resource, text));
  }
  FqnBuilder& kind(ResourceKind k) {
    tuple_.kind = k;
    return *this;
  }

  const FqnTuple& tuple() const { return tuple_; }
  std::string build() const { return build_fqn(tuple_); }

 private:
  FqnTuple tuple_;
};

}  // namespace fleetsim::fqn
