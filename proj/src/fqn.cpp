#include "fleetsim/fqn.hpp"

#include <algorithm>
#include <cctype>

namespace fleetsim::fqn {

namespace {

const std::vector<std::string_view> kAgentCatalog = {};
const std::vector<std::string_view> kComponentCatalog = {
    "lidar", "camera", "locomotion_controller"};
const std::vector<std::string_view> kStreamCatalog = {"color", "depth",
                                                      "camera_info",
                                                      "pointcloud"};
const std::vector<std::string_view> kResourceCatalog = {
    "image",        "agent_heartbeat", "agent_discovery_event",
    "get_metadata", "tf",              "tf_static"};

bool valid_suffix_text(std::string_view text) {
  if (text.empty()) return false;
  return std::all_of(text.begin(), text.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

// Longest catalog word that is the whole text or a `word_rest` prefix of it.
// Returns the split point into (word, rest); rest is empty for exact matches.
std::optional<std::pair<std::string_view, std::string_view>> catalog_split(
    SegmentClass cls, std::string_view text) {
  std::string_view best_word;
  for (std::string_view word : catalog_words(cls)) {
    if (word.size() < best_word.size()) continue;
    if (text == word) {
      best_word = word;
    } else if (text.size() > word.size() + 1 && text.starts_with(word) &&
               text[word.size()] == '_') {
      best_word = word;
    }
  }
  if (best_word.empty()) return std::nullopt;
  std::string_view rest = text.size() > best_word.size()
                              ? text.substr(best_word.size() + 1)
                              : std::string_view{};
  return std::make_pair(best_word, rest);
}

}  // namespace

std::string_view scope_word(Scope scope) {
  return scope == Scope::Local ? "local" : "global";
}

std::string_view to_string(ResourceKind kind) {
  switch (kind) {
    case ResourceKind::Topic:
      return "topic";
    case ResourceKind::Service:
      return "service";
    case ResourceKind::Action:
      return "action";
  }
  return "?";
}

std::string_view to_string(PathTerminal terminal) {
  switch (terminal) {
    case PathTerminal::AfterScope:
      return "after_scope";
    case PathTerminal::AfterAgent:
      return "after_agent";
    case PathTerminal::AfterComponent:
      return "after_component";
    case PathTerminal::AfterStream:
      return "after_stream";
  }
  return "?";
}

bool valid_segment_text(std::string_view text) {
  if (text.empty()) return false;
  if (text.front() < 'a' || text.front() > 'z') return false;
  return valid_suffix_text(text);
}

const std::vector<std::string_view>& catalog_words(SegmentClass cls) {
  switch (cls) {
    case SegmentClass::Agent:
      return kAgentCatalog;
    case SegmentClass::Component:
      return kComponentCatalog;
    case SegmentClass::Stream:
      return kStreamCatalog;
    case SegmentClass::Resource:
      return kResourceCatalog;
  }
  return kAgentCatalog;
}

SegmentValue SegmentValue::parse(SegmentClass cls, std::string_view rendered) {
  if (!valid_segment_text(rendered)) {
    throw LexicalError("invalid segment text: '" + std::string(rendered) +
                       "'");
  }
  SegmentValue v;
  v.class_ = cls;
  if (auto split = catalog_split(cls, rendered)) {
    v.base_ = split->first;
    v.suffix_ = split->second;
    v.custom_ = false;
  } else {
    v.base_ = rendered;
    v.custom_ = true;
  }
  return v;
}

SegmentValue SegmentValue::catalog(SegmentClass cls, std::string_view word,
                                   std::string_view suffix) {
  const auto& words = catalog_words(cls);
  if (std::find(words.begin(), words.end(), word) == words.end()) {
    throw LexicalError("'" + std::string(word) +
                       "' is not a catalog word for this segment class");
  }
  if (!suffix.empty() && !valid_suffix_text(suffix)) {
    throw LexicalError("invalid suffix: '" + std::string(suffix) + "'");
  }
  std::string rendered(word);
  if (!suffix.empty()) {
    rendered += '_';
    rendered += suffix;
  }
  return parse(cls, rendered);
}

SegmentValue SegmentValue::custom(SegmentClass cls, std::string_view text,
                                  std::string_view suffix) {
  if (!valid_segment_text(text)) {
    throw LexicalError("invalid custom segment text: '" + std::string(text) +
                       "'");
  }
  if (!suffix.empty() && !valid_suffix_text(suffix)) {
    throw LexicalError("invalid suffix: '" + std::string(suffix) + "'");
  }
  std::string rendered(text);
  if (!suffix.empty()) {
    rendered += '_';
    rendered += suffix;
  }
  return parse(cls, rendered);
}

std::string SegmentValue::render() const {
  if (suffix_.empty()) return base_;
  return base_ + "_" + suffix_;
}

ResourceKind default_resource_kind(const SegmentValue& resource) {
  if (!resource.is_custom() && resource.base() == "get_metadata") {
    return ResourceKind::Service;
  }
  return ResourceKind::Topic;
}

PathTerminal terminal_of(const FqnTuple& tuple) {
  if (tuple.stream) return PathTerminal::AfterStream;
  if (tuple.component) return PathTerminal::AfterComponent;
  if (tuple.agent) return PathTerminal::AfterAgent;
  return PathTerminal::AfterScope;
}

unsigned path_mask(PathTerminal terminal) {
  constexpr unsigned kTopic = static_cast<unsigned>(ResourceKind::Topic);
  constexpr unsigned kService = static_cast<unsigned>(ResourceKind::Service);
  constexpr unsigned kAction = static_cast<unsigned>(ResourceKind::Action);
  switch (terminal) {
    case PathTerminal::AfterScope:
      return kTopic | kService;
    case PathTerminal::AfterAgent:
    case PathTerminal::AfterComponent:
      return kTopic | kService | kAction;
    case PathTerminal::AfterStream:
      return kTopic;
  }
  return 0;
}

void check_path_constraints(const FqnTuple& tuple) {
  if (tuple.stream && !tuple.component) {
    throw ConstraintViolation("a stream segment requires a component segment");
  }
  if (tuple.component && !tuple.agent) {
    throw ConstraintViolation("a component segment requires an agent segment");
  }
  PathTerminal terminal = terminal_of(tuple);
  unsigned mask = path_mask(terminal);
  if ((mask & static_cast<unsigned>(tuple.kind)) == 0) {
    throw ConstraintViolation(
        std::string("resource kind '") + std::string(to_string(tuple.kind)) +
        "' not permitted " + std::string(to_string(terminal)) + " (mask " +
        std::to_string(mask) + ")");
  }
}

std::string build_fqn(const FqnTuple& tuple) {
  check_path_constraints(tuple);
  std::string out;
  out += '/';
  out += scope_word(tuple.scope);
  for (const auto* seg : {&tuple.agent, &tuple.component, &tuple.stream}) {
    if (seg->has_value()) {
      out += '/';
      out += (*seg)->render();
    }
  }
  out += '/';
  out += tuple.resource.render();
  return out;
}

FqnTuple parse_fqn(std::string_view text) {
  if (text.empty() || text.front() != '/') {
    throw ParseError("name must start with '/'");
  }
  std::vector<std::string_view> parts;
  std::string_view rest = text.substr(1);
  while (true) {
    auto slash = rest.find('/');
    if (slash == std::string_view::npos) {
      parts.push_back(rest);
      break;
    }
    parts.push_back(rest.substr(0, slash));
    rest = rest.substr(slash + 1);
  }
  for (auto part : parts) {
    if (part.empty()) throw ParseError("empty segment in '" + std::string(text) + "'");
  }
  if (parts.size() < 2) {
    throw ParseError("too few segments in '" + std::string(text) + "'");
  }
  if (parts.size() > 5) {
    throw ParseError("too many segments in '" + std::string(text) + "'");
  }

  FqnTuple tuple;
  if (parts[0] == "local") {
    tuple.scope = Scope::Local;
  } else if (parts[0] == "global") {
    tuple.scope = Scope::Global;
  } else {
    throw ParseError("unknown scope word '" + std::string(parts[0]) + "'");
  }

  try {
    const size_t middles = parts.size() - 2;
    if (middles >= 1) {
      tuple.agent = SegmentValue::parse(SegmentClass::Agent, parts[1]);
    }
    if (middles >= 2) {
      tuple.component = SegmentValue::parse(SegmentClass::Component, parts[2]);
    }
    if (middles >= 3) {
      tuple.stream = SegmentValue::parse(SegmentClass::Stream, parts[3]);
    }
    tuple.resource = SegmentValue::parse(SegmentClass::Resource, parts.back());
    tuple.kind = default_resource_kind(tuple.resource);
    check_path_constraints(tuple);
  } catch (const LexicalError& e) {
    throw ParseError(e.what());
  } catch (const ConstraintViolation& e) {
    throw ParseError(e.what());
  }
  return tuple;
}

std::string sanitize_name(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool last_underscore = false;
  for (char c : raw) {
    char lower = static_cast<char>(
        std::tolower(static_cast<unsigned char>(c)));
    char mapped =
        ((lower >= 'a' && lower <= 'z') || (lower >= '0' && lower <= '9'))
            ? lower
            : '_';
    if (mapped == '_' && last_underscore) continue;
    out += mapped;
    last_underscore = mapped == '_';
  }
  size_t start = 0;
  while (start < out.size() &&
         ((out[start] >= '0' && out[start] <= '9') || out[start] == '_')) {
    ++start;
  }
  return out.substr(start);
}

SegmentValue resolve_agent_name(const std::optional<std::string>& env_value,
                                std::string_view hostname) {
  if (env_value) {
    std::string candidate = sanitize_name(*env_value);
    if (valid_segment_text(candidate)) {
      return SegmentValue::parse(SegmentClass::Agent, candidate);
    }
  }
  std::string candidate = sanitize_name(hostname);
  if (candidate.empty()) {
    throw SanitizationEmpty("nothing survives sanitization of '" +
                            std::string(hostname) + "'");
  }
  return SegmentValue::parse(SegmentClass::Agent, candidate);
}

std::string to_dds_name(std::string_view fqn_text, DdsKind kind) {
  if (fqn_text.empty() || fqn_text.front() != '/') {
    throw ParseError("fqn text must start with '/'");
  }
  std::string_view prefix;
  switch (kind) {
    case DdsKind::Topic:
      prefix = "rt/";
      break;
    case DdsKind::ServiceRequest:
      prefix = "rq/";
      break;
    case DdsKind::ServiceReply:
      prefix = "rr/";
      break;
  }
  return std::string(prefix) + std::string(fqn_text.substr(1));
}

}  // namespace fleetsim::fqn
