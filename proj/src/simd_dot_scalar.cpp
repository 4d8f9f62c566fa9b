// SPDX-License-Identifier: Apache-2.0
#include "gridprompt/simd_dot.hpp"

namespace gridprompt::kernels {

void dot_batch_scalar(const float* query, const float* rows, std::size_t m,
                      std::size_t d, float* out) {
  for (std::size_t i = 0; i < m; ++i) {
    const float* row = rows + i * d;
    float p[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    std::size_t k = 0;
    for (; k + 8 <= d; k += 8) {
      for (int j = 0; j < 8; ++j) {
        p[j] += query[k + j] * row[k + j];
      }
    }
    float sum = ((p[0] + p[1]) + (p[2] + p[3])) + ((p[4] + p[5]) + (p[6] + p[7]));
    for (; k < d; ++k) {
      sum += query[k] * row[k];
    }
    out[i] = sum;
  }
}

}  // namespace gridprompt::kernels
