// SPDX-License-Identifier: Apache-2.0
#include <atomic>
#include <cstdlib>
#include <string>
#include <vector>

#include "gridprompt/errors.hpp"
#include "gridprompt/simd_dot.hpp"

namespace gridprompt::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(GRIDPROMPT_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Isa pick_default() {
  if (const char* env = std::getenv("GRIDPROMPT_KERNEL")) {
    const std::string_view want(env);
    for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
      if (want == isa_name(isa) && isa_supported(isa)) {
        return isa;
      }
    }
    // Unknown or unsupported request: fall through to auto selection.
  }
#if defined(GRIDPROMPT_HAVE_AVX2)
  if (cpu_has_avx2()) {
    return Isa::Avx2;
  }
#endif
#if defined(GRIDPROMPT_HAVE_NEON)
  return Isa::Neon;
#endif
  return Isa::Scalar;
}

std::atomic<int> g_forced{-1};

Isa current() {
  const int forced = g_forced.load(std::memory_order_relaxed);
  if (forced >= 0) {
    return static_cast<Isa>(forced);
  }
  static const Isa selected = pick_default();
  return selected;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
    case Isa::Neon:
      return "neon";
  }
  return "scalar";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
      return cpu_has_avx2();
    case Isa::Neon:
#if defined(GRIDPROMPT_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa active_isa() { return current(); }

DotBatchFn dot_batch() {
  switch (current()) {
#if defined(GRIDPROMPT_HAVE_AVX2)
    case Isa::Avx2:
      return &dot_batch_avx2;
#endif
#if defined(GRIDPROMPT_HAVE_NEON)
    case Isa::Neon:
      return &dot_batch_neon;
#endif
    default:
      return &dot_batch_scalar;
  }
}

void force_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw Error(ErrorKind::Config,
                "kernel variant not supported on this host: " + std::string(isa_name(isa)));
  }
  g_forced.store(static_cast<int>(isa), std::memory_order_relaxed);
}

void reset_isa() { g_forced.store(-1, std::memory_order_relaxed); }

Argmax argmax_dot(const float* query, const float* rows, std::size_t m, std::size_t d) {
  std::vector<float> scores(m);
  dot_batch()(query, rows, m, d, scores.data());
  Argmax best{0, scores[0]};
  for (std::size_t i = 1; i < m; ++i) {
    if (scores[i] > best.score) {  // strict: ties keep the lowest index
      best.index = i;
      best.score = scores[i];
    }
  }
  return best;
}

}  // namespace gridprompt::kernels
