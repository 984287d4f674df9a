#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fleetsim::codec {

struct CorruptStream : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Row-major 16-bit depth samples in millimeters; 0 marks an invalid pixel.
struct DepthFrame {
  uint32_t width = 0;
  uint32_t height = 0;
  std::vector<uint16_t> values;

  size_t pixel_count() const {
    return static_cast<size_t>(width) * height;
  }

  friend bool operator==(const DepthFrame&, const DepthFrame&) = default;
};

enum class CodecId { RvlStyle, MockH264 };

struct CompressedBlob {
  CodecId codec = CodecId::RvlStyle;
  std::vector<uint8_t> bytes;
  uint64_t frame_index = 0;
  bool keyframe = true;
  uint32_t width = 0;
  uint32_t height = 0;
};

// Run-scan kernel selection. Auto resolves once per process to the widest
// available variant; Scalar and Avx2 force a specific one (for the
// equivalence tests and benchmarking).
enum class ScanKernel { Auto, Scalar, Avx2 };

bool scan_kernel_available(ScanKernel kernel);
ScanKernel resolve_scan_kernel(ScanKernel kernel);

// Lossless depth compression: alternating (zero-run, nonzero-run) lengths,
// nonzero values as zigzag deltas from the previous nonzero value, everything
// written as base-8 varints (3 payload bits + continuation bit per nibble,
// low nibble of each byte first, zero-padded to a whole byte).
CompressedBlob rvl_compress(const DepthFrame& frame,
                            ScanKernel kernel = ScanKernel::Auto);

// Exact inverse. Throws CorruptStream on a truncated varint or a run that
// overflows width x height.
DepthFrame rvl_decompress(const CompressedBlob& blob);

// Varint worst case: a blob never exceeds 2 + 4 bytes per pixel.
size_t rvl_max_compressed_size(const DepthFrame& frame);

// Table-2-style constant-bitrate mock video stream. Carries sizes, keyframe
// cadence, and decode cost only; there is deliberately no API that feeds a
// DepthFrame into it (lossy codecs corrupt radiometric depth).
struct MockVideoConfig {
  uint32_t width = 640;
  uint32_t height = 360;
  double framerate = 30.0;
  int64_t bitrate_bps = 4'000'000;  // CBR
  uint32_t gop = 30;
};

void validate(const MockVideoConfig& config);

// CBR: bitrate / 8 / framerate, rounded to the nearest byte.
int64_t mock_video_frame_size(const MockVideoConfig& config);

inline bool is_gop_keyframe(uint64_t frame_index, uint32_t gop) {
  return gop != 0 && frame_index % gop == 0;
}

CompressedBlob mock_video_blob(const MockVideoConfig& config,
                               uint64_t frame_index,
                               bool force_keyframe = false);

// Per-frame CPU cost model, in percent of one logical core. Only the sum
// c_net + c_dec and c_ipc are externally constrained; the split is
// calibration.
struct CostModel {
  double c_net = 0.5;
  double c_dec = 6.0;
  double c_ipc = 1.8;
};

void validate(const CostModel& model);  // requires c_ipc < c_dec

// Per-subscriber decode: every subscriber pays network + decode.
double cost_base(const CostModel& model, int n_subscribers);

// Shared decode: one network + decode charge, then IPC per subscriber.
double cost_proposed(const CostModel& model, int n_subscribers);

// Frame dump format used by tests and the `codec roundtrip` CLI:
// width, height as 4-byte little-endian, then samples as 2-byte little-endian.
std::vector<uint8_t> frame_to_bytes(const DepthFrame& frame);
DepthFrame frame_from_bytes(const std::vector<uint8_t>& bytes);

namespace detail {

// Length of the run of zero (or nonzero) pixels starting at p, capped at n.
size_t zero_run_scalar(const uint16_t* p, size_t n);
size_t nonzero_run_scalar(const uint16_t* p, size_t n);
#if defined(__x86_64__)
size_t zero_run_avx2(const uint16_t* p, size_t n);
size_t nonzero_run_avx2(const uint16_t* p, size_t n);
#endif

}  // namespace detail

}  // namespace fleetsim::codec
