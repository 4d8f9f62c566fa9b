// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gridprompt/embedding.hpp"
#include "gridprompt/geometry.hpp"
#include "gridprompt/record.hpp"

namespace gridprompt {

enum class TagSource { Detector, Embedding };

struct BlockTagEntry {
  std::string tag;
  double confidence = 1.0;
  TagSource source = TagSource::Detector;
  // Post-transform box for detector-path entries; lets the coordinate
  // template render real geometry. Absent on the embedding path.
  std::optional<Box> box;
};

/// Per-block tags plus the pool of objects whose post-augmentation centers
/// left the canvas. Keys are valid block indices for the grid that produced
/// the map; within a block, entries keep top-k order.
struct BlockTagMap {
  std::map<int, std::vector<BlockTagEntry>> entries;
  std::vector<BlockTagEntry> out_of_border;

  bool empty() const noexcept { return entries.empty() && out_of_border.empty(); }
};

/// The min(k, |detections|) highest-confidence objects, ordered by
/// (confidence desc, tag asc, input position asc). Deterministic for any
/// permutation of equal elements.
std::vector<DetectedObject> select_top_k(const std::vector<DetectedObject>& detections, int k);

/// Bins each object's (optionally transformed) box center via
/// BlockGrid::block_of_point. In-canvas objects land in entries; the rest in
/// out_of_border. Input order is preserved within each bucket.
BlockTagMap assign_to_blocks(const BlockGrid& grid, const std::vector<DetectedObject>& objects,
                             const std::optional<Affine2D>& transform);

struct EmbedTag {
  std::size_t index = 0;
  std::string phrase;
  float score = 0.0f;
};

/// Row of the table with the highest raw dot product against block_vector;
/// ties break to the lowest index. The dot is not normalized: callers who
/// want cosine similarity must pre-normalize rows and block vectors.
EmbedTag embed_tag(std::span<const float> block_vector, const EmbeddingMatrix& table);

/// One tag per block from the record's block embeddings (exactly grid_n^2 of
/// them). out_of_border stays empty on this path.
BlockTagMap tag_blocks_by_embedding(const ImageRecord& rec, const EmbeddingMatrix& table,
                                    int grid_n);

}  // namespace gridprompt
