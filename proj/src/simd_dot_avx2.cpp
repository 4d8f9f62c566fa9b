// SPDX-License-Identifier: Apache-2.0
// Compiled with -mavx2 only; callers must check isa_supported(Isa::Avx2).
#include "gridprompt/simd_dot.hpp"

#if defined(GRIDPROMPT_HAVE_AVX2)

#include <immintrin.h>

namespace gridprompt::kernels {

void dot_batch_avx2(const float* query, const float* rows, std::size_t m,
                    std::size_t d, float* out) {
  for (std::size_t i = 0; i < m; ++i) {
    const float* row = rows + i * d;
    __m256 acc = _mm256_setzero_ps();
    std::size_t k = 0;
    for (; k + 8 <= d; k += 8) {
      const __m256 q = _mm256_loadu_ps(query + k);
      const __m256 r = _mm256_loadu_ps(row + k);
      // mul then add, not fma: keeps per-lane rounding identical to the
      // scalar reference.
      acc = _mm256_add_ps(acc, _mm256_mul_ps(q, r));
    }
    alignas(32) float p[8];
    _mm256_store_ps(p, acc);
    float sum = ((p[0] + p[1]) + (p[2] + p[3])) + ((p[4] + p[5]) + (p[6] + p[7]));
    for (; k < d; ++k) {
      sum += query[k] * row[k];
    }
    out[i] = sum;
  }
}

}  // namespace gridprompt::kernels

#endif  // GRIDPROMPT_HAVE_AVX2
