// SPDX-License-Identifier: Apache-2.0
#include "gridprompt/simd_dot.hpp"

#if defined(GRIDPROMPT_HAVE_NEON)

#include <arm_neon.h>

namespace gridprompt::kernels {

void dot_batch_neon(const float* query, const float* rows, std::size_t m,
                    std::size_t d, float* out) {
  for (std::size_t i = 0; i < m; ++i) {
    const float* row = rows + i * d;
    // Two 4-lane accumulators form the same eight lane-striped partial sums
    // as the scalar reference and the AVX2 variant.
    float32x4_t acc0 = vdupq_n_f32(0.0f);
    float32x4_t acc1 = vdupq_n_f32(0.0f);
    std::size_t k = 0;
    for (; k + 8 <= d; k += 8) {
      acc0 = vaddq_f32(acc0, vmulq_f32(vld1q_f32(query + k), vld1q_f32(row + k)));
      acc1 = vaddq_f32(acc1, vmulq_f32(vld1q_f32(query + k + 4), vld1q_f32(row + k + 4)));
    }
    float p[8];
    vst1q_f32(p, acc0);
    vst1q_f32(p + 4, acc1);
    float sum = ((p[0] + p[1]) + (p[2] + p[3])) + ((p[4] + p[5]) + (p[6] + p[7]));
    for (; k < d; ++k) {
      sum += query[k] * row[k];
    }
    out[i] = sum;
  }
}

}  // namespace gridprompt::kernels

#endif  // GRIDPROMPT_HAVE_NEON
