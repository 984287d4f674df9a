#include "fleetsim/codec.hpp"

#include <cmath>
#include <cstring>

namespace fleetsim::codec {

namespace {

// Nibble-oriented varint writer: 3 payload bits + continuation bit (0x8) per
// nibble, low nibble of each byte filled first.
class NibbleWriter {
 public:
  explicit NibbleWriter(std::vector<uint8_t>& out) : out_(out) {}

  void put_varint(uint32_t value) {
    do {
      uint8_t nibble = value & 0x7u;
      value >>= 3;
      if (value) nibble |= 0x8u;
      put_nibble(nibble);
    } while (value);
  }

  void flush() {
    if (half_) {
      out_.push_back(pending_);
      half_ = false;
      pending_ = 0;
    }
  }

 private:
  void put_nibble(uint8_t nibble) {
    if (!half_) {
      pending_ = nibble;
      half_ = true;
    } else {
      out_.push_back(static_cast<uint8_t>(pending_ | (nibble << 4)));
      half_ = false;
    }
  }

  std::vector<uint8_t>& out_;
  uint8_t pending_ = 0;
  bool half_ = false;
};

class NibbleReader {
 public:
  explicit NibbleReader(const std::vector<uint8_t>& in) : in_(in) {}

  uint32_t get_varint() {
    uint32_t value = 0;
    int shift = 0;
    while (true) {
      uint8_t nibble = get_nibble();
      if (shift > 30) throw CorruptStream("varint too long");
      value |= static_cast<uint32_t>(nibble & 0x7u) << shift;
      if (!(nibble & 0x8u)) return value;
      shift += 3;
    }
  }

 private:
  uint8_t get_nibble() {
    size_t byte = nibble_index_ >> 1;
    if (byte >= in_.size()) throw CorruptStream("truncated varint");
    uint8_t raw = in_[byte];
    uint8_t nibble = (nibble_index_ & 1) ? (raw >> 4) : (raw & 0xFu);
    ++nibble_index_;
    return nibble;
  }

  const std::vector<uint8_t>& in_;
  size_t nibble_index_ = 0;
};

inline uint32_t zigzag_encode(int32_t delta) {
  return (static_cast<uint32_t>(delta) << 1) ^
         static_cast<uint32_t>(delta >> 31);
}

inline int32_t zigzag_decode(uint32_t value) {
  return static_cast<int32_t>(value >> 1) ^ -static_cast<int32_t>(value & 1);
}

#if defined(__x86_64__)
bool cpu_has_avx2() {
  static const bool has = __builtin_cpu_supports("avx2") != 0;
  return has;
}
#endif

using RunFn = size_t (*)(const uint16_t*, size_t);

struct ScanFns {
  RunFn zero_run;
  RunFn nonzero_run;
};

ScanFns scan_fns(ScanKernel kernel) {
  switch (resolve_scan_kernel(kernel)) {
#if defined(__x86_64__)
    case ScanKernel::Avx2:
      return {detail::zero_run_avx2, detail::nonzero_run_avx2};
#endif
    default:
      return {detail::zero_run_scalar, detail::nonzero_run_scalar};
  }
}

}  // namespace

size_t detail::zero_run_scalar(const uint16_t* p, size_t n) {
  size_t i = 0;
  while (i < n && p[i] == 0) ++i;
  return i;
}

size_t detail::nonzero_run_scalar(const uint16_t* p, size_t n) {
  size_t i = 0;
  while (i < n && p[i] != 0) ++i;
  return i;
}

bool scan_kernel_available(ScanKernel kernel) {
  switch (kernel) {
    case ScanKernel::Auto:
    case ScanKernel::Scalar:
      return true;
    case ScanKernel::Avx2:
#if defined(__x86_64__)
      return cpu_has_avx2();
#else
      return false;
#endif
  }
  return false;
}

ScanKernel resolve_scan_kernel(ScanKernel kernel) {
  if (kernel == ScanKernel::Auto) {
    return scan_kernel_available(ScanKernel::Avx2) ? ScanKernel::Avx2
                                                   : ScanKernel::Scalar;
  }
  if (!scan_kernel_available(kernel)) {
    throw std::runtime_error("requested scan kernel is not available");
  }
  return kernel;
}

size_t rvl_max_compressed_size(const DepthFrame& frame) {
  return 2 + 4 * frame.pixel_count();
}

CompressedBlob rvl_compress(const DepthFrame& frame, ScanKernel kernel) {
  if (frame.values.size() != frame.pixel_count()) {
    throw std::invalid_argument("frame sample count does not match size");
  }
  ScanFns fns = scan_fns(kernel);

  CompressedBlob blob;
  blob.codec = CodecId::RvlStyle;
  blob.width = frame.width;
  blob.height = frame.height;
  blob.bytes.reserve(frame.pixel_count() / 4 + 8);

  NibbleWriter writer(blob.bytes);
  const uint16_t* p = frame.values.data();
  size_t remaining = frame.values.size();
  uint16_t previous = 0;
  while (remaining > 0) {
    size_t zeros = fns.zero_run(p, remaining);
    p += zeros;
    remaining -= zeros;
    writer.put_varint(static_cast<uint32_t>(zeros));

    size_t nonzeros = fns.nonzero_run(p, remaining);
    writer.put_varint(static_cast<uint32_t>(nonzeros));
    for (size_t i = 0; i < nonzeros; ++i) {
      uint16_t current = p[i];
      int32_t delta = static_cast<int32_t>(current) -
                      static_cast<int32_t>(previous);
      writer.put_varint(zigzag_encode(delta));
      previous = current;
    }
    p += nonzeros;
    remaining -= nonzeros;
  }
  writer.flush();
  return blob;
}

DepthFrame rvl_decompress(const CompressedBlob& blob) {
  if (blob.codec != CodecId::RvlStyle) {
    throw CorruptStream("blob is not an RVL-style stream");
  }
  DepthFrame frame;
  frame.width = blob.width;
  frame.height = blob.height;
  frame.values.assign(frame.pixel_count(), 0);

  NibbleReader reader(blob.bytes);
  size_t out = 0;
  const size_t total = frame.values.size();
  uint16_t previous = 0;
  while (out < total) {
    uint32_t zeros = reader.get_varint();
    if (zeros > total - out) throw CorruptStream("zero run overflows frame");
    out += zeros;

    uint32_t nonzeros = reader.get_varint();
    if (nonzeros > total - out) {
      throw CorruptStream("nonzero run overflows frame");
    }
    for (uint32_t i = 0; i < nonzeros; ++i) {
      int32_t delta = zigzag_decode(reader.get_varint());
      uint16_t current =
          static_cast<uint16_t>(static_cast<int32_t>(previous) + delta);
      frame.values[out++] = current;
      previous = current;
    }
  }
  return frame;
}

void validate(const MockVideoConfig& config) {
  if (config.width == 0 || config.height == 0 || config.framerate <= 0 ||
      config.bitrate_bps <= 0 || config.gop == 0) {
    throw std::invalid_argument("mock video config fields must be positive");
  }
}

int64_t mock_video_frame_size(const MockVideoConfig& config) {
  validate(config);
  return std::llround(static_cast<double>(config.bitrate_bps) / 8.0 /
                      config.framerate);
}

CompressedBlob mock_video_blob(const MockVideoConfig& config,
                               uint64_t frame_index, bool force_keyframe) {
  CompressedBlob blob;
  blob.codec = CodecId::MockH264;
  blob.frame_index = frame_index;
  blob.keyframe = force_keyframe || is_gop_keyframe(frame_index, config.gop);
  blob.width = config.width;
  blob.height = config.height;
  blob.bytes.resize(1);  // payload content is irrelevant; size is accounted
  return blob;
}

void validate(const CostModel& model) {
  if (model.c_net < 0 || model.c_dec < 0 || model.c_ipc < 0) {
    throw std::invalid_argument("cost terms must be non-negative");
  }
  if (!(model.c_ipc < model.c_dec)) {
    throw std::invalid_argument("cost model requires c_ipc < c_dec");
  }
}

double cost_base(const CostModel& model, int n_subscribers) {
  if (n_subscribers < 0) throw std::invalid_argument("negative subscribers");
  return n_subscribers * (model.c_net + model.c_dec);
}

double cost_proposed(const CostModel& model, int n_subscribers) {
  if (n_subscribers < 0) throw std::invalid_argument("negative subscribers");
  return model.c_net + model.c_dec + n_subscribers * model.c_ipc;
}

std::vector<uint8_t> frame_to_bytes(const DepthFrame& frame) {
  std::vector<uint8_t> out;
  out.reserve(8 + frame.values.size() * 2);
  auto put_u32 = [&out](uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xFFu);
  };
  put_u32(frame.width);
  put_u32(frame.height);
  for (uint16_t v : frame.values) {
    out.push_back(v & 0xFFu);
    out.push_back(v >> 8);
  }
  return out;
}

DepthFrame frame_from_bytes(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 8) throw CorruptStream("frame dump too short");
  auto get_u32 = [&bytes](size_t at) {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes[at + i]) << (8 * i);
    return v;
  };
  DepthFrame frame;
  frame.width = get_u32(0);
  frame.height = get_u32(4);
  size_t total = frame.pixel_count();
  if (bytes.size() != 8 + total * 2) {
    throw CorruptStream("frame dump size does not match header");
  }
  frame.values.resize(total);
  for (size_t i = 0; i < total; ++i) {
    frame.values[i] = static_cast<uint16_t>(bytes[8 + 2 * i] |
                                            (bytes[9 + 2 * i] << 8));
  }
  return frame;
}

}  // namespace fleetsim::codec
