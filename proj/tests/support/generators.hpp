#pragma once

// Randomized inputs shared by the unit and acceptance suites.

#include <string>
#include <vector>

#include "fleetsim/codec.hpp"
#include "fleetsim/event_loop.hpp"
#include "fleetsim/fqn.hpp"
#include "fleetsim/transforms.hpp"

namespace gen {

using fleetsim::sim::Rng;

inline std::string random_word(Rng& rng, int max_len = 8) {
  int len = static_cast<int>(rng.uniform_int(1, max_len));
  std::string word;
  word += static_cast<char>('a' + rng.uniform_int(0, 25));
  for (int i = 1; i < len; ++i) {
    int pick = static_cast<int>(rng.uniform_int(0, 36));
    if (pick < 26) {
      word += static_cast<char>('a' + pick);
    } else if (pick < 36) {
      word += static_cast<char>('0' + (pick - 26));
    } else {
      word += '_';
    }
  }
  return word;
}

inline fleetsim::fqn::SegmentValue random_segment(
    Rng& rng, fleetsim::fqn::SegmentClass cls) {
  using namespace fleetsim::fqn;
  const auto& words = catalog_words(cls);
  std::string text;
  if (!words.empty() && rng.bernoulli(0.6)) {
    text = std::string(words[static_cast<size_t>(
        rng.uniform_int(0, static_cast<int64_t>(words.size()) - 1))]);
    if (rng.bernoulli(0.4)) text += "_" + random_word(rng, 4);
  } else {
    text = random_word(rng);
  }
  return SegmentValue::parse(cls, text);
}

// Canonical random tuple: segment chain respects agent -> component -> stream
// and the resource kind is the parser-inferred one, so parse(build(t)) == t
// is a meaningful identity.
inline fleetsim::fqn::FqnTuple random_tuple(Rng& rng) {
  using namespace fleetsim::fqn;
  for (int attempt = 0; attempt < 64; ++attempt) {
    FqnTuple tuple;
    tuple.scope = rng.bernoulli(0.5) ? Scope::Local : Scope::Global;
    int depth = static_cast<int>(rng.uniform_int(0, 3));
    if (depth >= 1) tuple.agent = random_segment(rng, SegmentClass::Agent);
    if (depth >= 2) {
      tuple.component = random_segment(rng, SegmentClass::Component);
    }
    if (depth >= 3) tuple.stream = random_segment(rng, SegmentClass::Stream);
    tuple.resource = random_segment(rng, SegmentClass::Resource);
    tuple.kind = default_resource_kind(tuple.resource);
    try {
      check_path_constraints(tuple);
      return tuple;
    } catch (const ConstraintViolation&) {
      continue;  // e.g. a service resource under a stream
    }
  }
  throw std::runtime_error("tuple generation failed");
}

// DDS-name corpus spanning forwarded and local-only shapes.
inline std::string random_dds_name(Rng& rng) {
  static const std::vector<std::string> prefixes = {"rt/", "rq/", "rr/"};
  static const std::vector<std::string> bodies = {
      "tf",        "tf_static",  "tf_extra", "global",
      "global/",   "local/",     "",         "globalx/",
  };
  std::string name =
      prefixes[static_cast<size_t>(rng.uniform_int(0, 2))];
  const std::string& body =
      bodies[static_cast<size_t>(rng.uniform_int(
          0, static_cast<int64_t>(bodies.size()) - 1))];
  name += body;
  if (!body.empty() && body.back() == '/') {
    name += random_word(rng, 6);
    if (rng.bernoulli(0.5)) name += "/" + random_word(rng, 6);
  } else if (body.empty()) {
    name += random_word(rng, 6);
  }
  return name;
}

inline fleetsim::codec::DepthFrame random_depth_frame(Rng& rng, uint32_t width,
                                                      uint32_t height,
                                                      double zero_fraction) {
  fleetsim::codec::DepthFrame frame;
  frame.width = width;
  frame.height = height;
  frame.values.resize(frame.pixel_count());
  for (auto& v : frame.values) {
    if (rng.bernoulli(zero_fraction)) {
      v = 0;
    } else {
      v = static_cast<uint16_t>(rng.uniform_int(1, 65535));
    }
  }
  return frame;
}

// Depth-camera-like content: smooth ramps with invalid patches, which is what
// gives the zero-run/delta scheme something to compress.
inline fleetsim::codec::DepthFrame plausible_depth_frame(Rng& rng,
                                                         uint32_t width,
                                                         uint32_t height) {
  fleetsim::codec::DepthFrame frame;
  frame.width = width;
  frame.height = height;
  frame.values.resize(frame.pixel_count());
  uint16_t base = static_cast<uint16_t>(rng.uniform_int(500, 4000));
  size_t i = 0;
  while (i < frame.values.size()) {
    if (rng.bernoulli(0.1)) {  // invalid patch
      size_t run = static_cast<size_t>(rng.uniform_int(1, 64));
      for (size_t k = 0; k < run && i < frame.values.size(); ++k) {
        frame.values[i++] = 0;
      }
    } else {
      size_t run = static_cast<size_t>(rng.uniform_int(1, 128));
      for (size_t k = 0; k < run && i < frame.values.size(); ++k) {
        base = static_cast<uint16_t>(
            std::max<int64_t>(1, base + rng.uniform_int(-6, 6)));
        frame.values[i++] = base;
      }
    }
  }
  return frame;
}

inline fleetsim::tf::Quat random_quat(Rng& rng) {
  fleetsim::tf::Quat q{rng.uniform01() * 2 - 1, rng.uniform01() * 2 - 1,
                       rng.uniform01() * 2 - 1, rng.uniform01() * 2 - 1};
  if (q.norm() < 1e-3) q = fleetsim::tf::Quat::identity();
  return q.normalized();
}

inline fleetsim::tf::Vec3 random_vec3(Rng& rng, double span = 10.0) {
  return {(rng.uniform01() * 2 - 1) * span, (rng.uniform01() * 2 - 1) * span,
          (rng.uniform01() * 2 - 1) * span};
}

}  // namespace gen
