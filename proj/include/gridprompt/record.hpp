// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gridprompt/geometry.hpp"

namespace gridprompt {

/// One detection: box plus category tag plus prediction confidence.
/// Confidence defaults to 1.0 for hand-annotated corpora without scores.
struct DetectedObject {
  Box box;
  std::string tag;
  double confidence = 1.0;

  friend bool operator==(const DetectedObject&, const DetectedObject&) = default;
};

/// One image worth of input: dimensions, caption(s), detections, and an
/// optional per-block embedding table (one D-dimensional vector per block,
/// row-major block order).
struct ImageRecord {
  std::string id;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::string> captions;
  std::vector<DetectedObject> detections;
  std::vector<std::vector<float>> block_embeddings;  // empty when absent
  bool has_block_embeddings = false;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

}  // namespace gridprompt
