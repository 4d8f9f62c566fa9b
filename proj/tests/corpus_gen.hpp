// SPDX-License-Identifier: Apache-2.0
// Deterministic synthetic corpora shared by the unit and acceptance suites.
#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridprompt/ingest.hpp"
#include "gridprompt/record.hpp"
#include "gridprompt/rng.hpp"

namespace testgen {

inline const std::vector<std::string>& word_pool() {
  static const std::vector<std::string> words = {
      "dog",  "cat",   "tree",  "car",    "person", "sky",    "grass", "house",
      "bird", "boat",  "chair", "table",  "horse",  "bottle", "plant", "train",
      "bus",  "plate", "cup",   "bench",  "clock",  "lamp",   "shoe",  "ball",
  };
  return words;
}

inline double unit_real(gridprompt::SplitMix64& rng) {
  return static_cast<double>(rng.next() >> 11) * 0x1.0p-53;
}

inline gridprompt::ImageRecord make_record(gridprompt::SplitMix64& rng, std::uint64_t index,
                                           int max_detections, int max_captions = 1) {
  using gridprompt::DetectedObject;
  using gridprompt::ImageRecord;
  const auto& words = word_pool();

  ImageRecord rec;
  rec.id = "img-" + std::to_string(index);
  rec.width = 64 + static_cast<std::uint32_t>(rng.next() % 961);
  rec.height = 64 + static_cast<std::uint32_t>(rng.next() % 961);

  const int captions = 1 + static_cast<int>(rng.next() % static_cast<std::uint64_t>(max_captions));
  for (int c = 0; c < captions; ++c) {
    std::string caption;
    const int len = 3 + static_cast<int>(rng.next() % 6);
    for (int w = 0; w < len; ++w) {
      if (w != 0) caption.push_back(' ');
      caption += words[rng.next() % words.size()];
    }
    rec.captions.push_back(std::move(caption));
  }

  const int dets =
      max_detections == 0 ? 0 : static_cast<int>(rng.next() % (static_cast<std::uint64_t>(max_detections) + 1));
  for (int d = 0; d < dets; ++d) {
    DetectedObject det;
    det.box.w = 1.0 + unit_real(rng) * (rec.width / 2.0);
    det.box.h = 1.0 + unit_real(rng) * (rec.height / 2.0);
    det.box.x = unit_real(rng) * (rec.width - det.box.w);
    det.box.y = unit_real(rng) * (rec.height - det.box.h);
    det.tag = words[rng.next() % words.size()];
    det.confidence = unit_real(rng);
    rec.detections.push_back(std::move(det));
  }
  return rec;
}

inline void write_corpus(const std::string& path, std::uint64_t count, std::uint64_t seed,
                         int max_detections, int max_captions = 1) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot create " + path);
  }
  gridprompt::SplitMix64 rng(seed);
  std::string buffer;
  buffer.reserve(1 << 20);
  for (std::uint64_t i = 0; i < count; ++i) {
    const gridprompt::ImageRecord rec = make_record(rng, i, max_detections, max_captions);
    buffer += gridprompt::serialize_record(rec);
    buffer.push_back('\n');
    if (buffer.size() > (1 << 20) - (1 << 12)) {
      out << buffer;
      buffer.clear();
    }
  }
  out << buffer;
  if (!out) {
    throw std::runtime_error("write failure for " + path);
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path);
  }
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return data;
}

}  // namespace testgen
