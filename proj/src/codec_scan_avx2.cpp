// AVX2 variant of the run-boundary scan. Compiled with -mavx2; callers go
// through resolve_scan_kernel so this only executes on capable CPUs.
#include "fleetsim/codec.hpp"

#if defined(__x86_64__)

#include <immintrin.h>

#include <bit>

namespace fleetsim::codec::detail {

namespace {

// Byte mask of the 16-lane compare against zero; two mask bits per pixel.
inline uint32_t eq_zero_mask(const uint16_t* p) {
  __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(p));
  __m256i eq = _mm256_cmpeq_epi16(v, _mm256_setzero_si256());
  return static_cast<uint32_t>(_mm256_movemask_epi8(eq));
}

}  // namespace

size_t zero_run_avx2(const uint16_t* p, size_t n) {
  size_t i = 0;
  while (i + 16 <= n) {
    uint32_t mask = eq_zero_mask(p + i);
    if (mask != 0xFFFFFFFFu) {
      return i + std::countr_one(mask) / 2;
    }
    i += 16;
  }
  while (i < n && p[i] == 0) ++i;
  return i;
}

size_t nonzero_run_avx2(const uint16_t* p, size_t n) {
  size_t i = 0;
  while (i + 16 <= n) {
    uint32_t mask = eq_zero_mask(p + i);
    if (mask != 0) {
      return i + std::countr_zero(mask) / 2;
    }
    i += 16;
  }
  while (i < n && p[i] != 0) ++i;
  return i;
}

}  // namespace fleetsim::codec::detail

#endif  // __x86_64__
