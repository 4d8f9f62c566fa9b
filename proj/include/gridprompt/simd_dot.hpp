// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string_view>

namespace gridprompt::kernels {

// Batch inner product: out[i] = dot(query, rows + i*d) for i in [0, m).
//
// Every variant computes the identical sequence of IEEE operations: eight
// lane-striped partial sums (lane j accumulates elements j, j+8, j+16, ...),
// reduced with the fixed tree ((p0+p1)+(p2+p3)) + ((p4+p5)+(p6+p7)), then the
// d%8 tail elements added one by one. No fused multiply-add anywhere. This
// makes scalar, AVX2 and NEON outputs bitwise equal, so runtime dispatch can
// never change pipeline output.
using DotBatchFn = void (*)(const float* query, const float* rows, std::size_t m,
                            std::size_t d, float* out);

void dot_batch_scalar(const float* query, const float* rows, std::size_t m,
                      std::size_t d, float* out);
#if defined(GRIDPROMPT_HAVE_AVX2)
void dot_batch_avx2(const float* query, const float* rows, std::size_t m,
                    std::size_t d, float* out);
#endif
#if defined(GRIDPROMPT_HAVE_NEON)
void dot_batch_neon(const float* query, const float* rows, std::size_t m,
                    std::size_t d, float* out);
#endif

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa);
bool isa_supported(Isa isa);

/// Active variant: best supported ISA, overridable via the GRIDPROMPT_KERNEL
/// environment variable ("scalar", "avx2", "neon") or force_isa().
Isa active_isa();
DotBatchFn dot_batch();

/// Test hook; throws on an unsupported request.
void force_isa(Isa isa);
void reset_isa();

struct Argmax {
  std::size_t index = 0;
  float score = 0.0f;
};

/// Index of the row with the largest dot product against query; ties break
/// to the lowest index. m must be >= 1.
Argmax argmax_dot(const float* query, const float* rows, std::size_t m, std::size_t d);

}  // namespace gridprompt::kernels
