// SPDX-License-Identifier: Apache-2.0
#include "gridprompt/tagging.hpp"

#include <algorithm>
#include <numeric>

#include "gridprompt/errors.hpp"
#include "gridprompt/simd_dot.hpp"

namespace gridprompt {

std::vector<DetectedObject> select_top_k(const std::vector<DetectedObject>& detections, int k) {
  if (k < 1) {
    throw Error(ErrorKind::Config, "top-k requires k >= 1");
  }
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&detections](std::size_t a, std::size_t b) {
    const DetectedObject& da = detections[a];
    const DetectedObject& db = detections[b];
    if (da.confidence != db.confidence) return da.confidence > db.confidence;
    if (da.tag != db.tag) return da.tag < db.tag;
    return a < b;
  });
  const std::size_t take = std::min(static_cast<std::size_t>(k), order.size());
  std::vector<DetectedObject> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    out.push_back(detections[order[i]]);
  }
  return out;
}

BlockTagMap assign_to_blocks(const BlockGrid& grid, const std::vector<DetectedObject>& objects,
                             const std::optional<Affine2D>& transform) {
  BlockTagMap map;
  for (const DetectedObject& obj : objects) {
    const Box placed = transform.has_value() ? apply_affine(*transform, obj.box) : obj.box;
    const auto [cx, cy] = center(placed);
    BlockTagEntry entry{obj.tag, obj.confidence, TagSource::Detector, placed};
    if (const std::optional<int> block = grid.block_of_point(cx, cy)) {
      map.entries[*block].push_back(std::move(entry));
    } else {
      map.out_of_border.push_back(std::move(entry));
    }
  }
  return map;
}

EmbedTag embed_tag(std::span<const float> block_vector, const EmbeddingMatrix& table) {
  if (block_vector.size() != table.dim) {
    throw Error(ErrorKind::DimensionMismatch,
                "block vector dimension " + std::to_string(block_vector.size()) +
                    " does not match table dimension " + std::to_string(table.dim));
  }
  if (table.rows() == 0) {
    throw Error(ErrorKind::DimensionMismatch, "embedding table has no rows");
  }
  const kernels::Argmax best =
      kernels::argmax_dot(block_vector.data(), table.values.data(), table.rows(), table.dim);
  return {best.index, table.phrases[best.index], best.score};
}

BlockTagMap tag_blocks_by_embedding(const ImageRecord& rec, const EmbeddingMatrix& table,
                                    int grid_n) {
  if (!rec.has_block_embeddings) {
    throw Error(ErrorKind::MissingEmbeddings,
                "record " + rec.id + " carries no block embeddings");
  }
  const std::size_t expect = static_cast<std::size_t>(grid_n) * static_cast<std::size_t>(grid_n);
  if (rec.block_embeddings.size() != expect) {
    throw Error(ErrorKind::DimensionMismatch,
                "record " + rec.id + " has " + std::to_string(rec.block_embeddings.size()) +
                    " block embeddings, grid wants " + std::to_string(expect));
  }
  BlockTagMap map;
  for (std::size_t b = 0; b < expect; ++b) {
    EmbedTag best = embed_tag(rec.block_embeddings[b], table);
    map.entries[static_cast<int>(b)].push_back(BlockTagEntry{
        std::move(best.phrase), static_cast<double>(best.score), TagSource::Embedding,
        std::nullopt});
  }
  return map;
}

}  // namespace gridprompt
