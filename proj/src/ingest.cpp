// SPDX-License-Identifier: Apache-2.0
#include "gridprompt/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gridprompt/errors.hpp"
#include "gridprompt/prompt.hpp"
#include "json_util.hpp"

namespace gridprompt {

namespace {

using nlohmann::json;

// SAX consumer that builds the DOM and rejects duplicate object keys, which
// the default DOM parser would silently collapse.
class RecordSax : public nlohmann::json_sax<json> {
 public:
  json root;
  bool duplicate = false;
  std::string duplicate_path;
  bool failed = false;
  std::size_t error_pos = 0;
  std::string error_msg;

  bool null() override { return emplace(json(nullptr)); }
  bool boolean(bool v) override { return emplace(json(v)); }
  bool number_integer(number_integer_t v) override { return emplace(json(v)); }
  bool number_unsigned(number_unsigned_t v) override { return emplace(json(v)); }
  bool number_float(number_float_t v, const string_t&) override { return emplace(json(v)); }
  bool string(string_t& v) override { return emplace(json(std::move(v))); }
  bool binary(binary_t& v) override { return emplace(json(std::move(v))); }

  bool start_object(std::size_t) override {
    std::string name = next_name();
    json* node = attach(json::object());
    frames_.push_back(Frame{node, {}, {}, std::move(name)});
    return true;
  }

  bool key(string_t& v) override {
    Frame& f = frames_.back();
    if (std::find(f.keys.begin(), f.keys.end(), v) != f.keys.end()) {
      duplicate = true;
      duplicate_path = path_of(v);
      return false;
    }
    f.keys.push_back(v);
    f.pending = v;
    return true;
  }

  bool end_object() override {
    frames_.pop_back();
    return true;
  }

  bool start_array(std::size_t) override {
    std::string name = next_name();
    json* node = attach(json::array());
    frames_.push_back(Frame{node, {}, {}, std::move(name)});
    return true;
  }

  bool end_array() override {
    frames_.pop_back();
    return true;
  }

  bool parse_error(std::size_t position, const std::string&,
                   const nlohmann::detail::exception& ex) override {
    failed = true;
    error_pos = position;
    error_msg = ex.what();
    return false;
  }

 private:
  struct Frame {
    json* node;
    std::vector<std::string> keys;
    std::string pending;
    std::string name;
  };

  std::vector<Frame> frames_;

  bool emplace(json v) {
    attach(std::move(v));
    return true;
  }

  // Containers only keep growing while their frame is on top, so pointers
  // held by parent frames stay valid.
  json* attach(json v) {
    if (frames_.empty()) {
      root = std::move(v);
      return &root;
    }
    Frame& f = frames_.back();
    if (f.node->is_object()) {
      json& slot = (*f.node)[f.pending];
      slot = std::move(v);
      return &slot;
    }
    f.node->push_back(std::move(v));
    return &f.node->back();
  }

  std::string next_name() const {
    if (frames_.empty()) {
      return {};
    }
    const Frame& f = frames_.back();
    if (f.node->is_object()) {
      return f.pending;
    }
    return "[" + std::to_string(f.node->size()) + "]";
  }

  std::string path_of(const std::string& leaf) const {
    std::string path;
    for (const Frame& f : frames_) {
      if (f.name.empty()) {
        continue;
      }
      if (!path.empty() && f.name.front() != '[') {
        path.push_back('.');
      }
      path += f.name;
    }
    if (!path.empty()) {
      path.push_back('.');
    }
    path += leaf;
    return path;
  }
};

[[noreturn]] void fail(ErrorKind kind, const std::string& msg, std::uint64_t offset,
                       std::string path) {
  throw Error(kind, msg, offset, std::move(path));
}

const json* find(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const json& require(const json& obj, const char* key, std::uint64_t offset) {
  const json* v = find(obj, key);
  if (v == nullptr) {
    fail(ErrorKind::Schema, std::string("missing field \"") + key + "\"", offset, key);
  }
  return *v;
}

std::uint32_t positive_dimension(const json& v, const char* key, std::uint64_t offset) {
  if (v.is_number_unsigned()) {
    const std::uint64_t u = v.get<std::uint64_t>();
    if (u == 0) {
      fail(ErrorKind::Geometry, std::string(key) + " must be positive", offset, key);
    }
    if (u > std::numeric_limits<std::uint32_t>::max()) {
      fail(ErrorKind::Schema, std::string(key) + " out of range", offset, key);
    }
    return static_cast<std::uint32_t>(u);
  }
  if (v.is_number_integer()) {
    fail(ErrorKind::Geometry, std::string(key) + " must be positive", offset, key);
  }
  fail(ErrorKind::Schema, std::string(key) + " must be a positive integer", offset, key);
}

double number_at(const json& v, const std::string& path, std::uint64_t offset) {
  if (!v.is_number()) {
    fail(ErrorKind::Schema, "expected a number", offset, path);
  }
  const double d = v.get<double>();
  if (!std::isfinite(d)) {
    fail(ErrorKind::Schema, "number must be finite", offset, path);
  }
  return d;
}

bool tag_is_blank(std::string_view tag) {
  for (char c : tag) {
    if (c != ' ' && c != '\t' && c != '\r' && c != '\n' && c != '\v' && c != '\f') {
      return false;
    }
  }
  return true;
}

DetectedObject parse_detection(const json& v, std::size_t index, std::uint64_t offset) {
  const std::string base = "detections[" + std::to_string(index) + "]";
  if (!v.is_object()) {
    fail(ErrorKind::Schema, "detection must be an object", offset, base);
  }
  DetectedObject det;

  const json* box = find(v, "box");
  if (box == nullptr) {
    fail(ErrorKind::Schema, "missing field \"box\"", offset, base + ".box");
  }
  if (!box->is_array() || box->size() != 4) {
    fail(ErrorKind::Schema, "box must be an array of 4 numbers", offset, base + ".box");
  }
  det.box.x = number_at((*box)[0], base + ".box[0]", offset);
  det.box.y = number_at((*box)[1], base + ".box[1]", offset);
  det.box.w = number_at((*box)[2], base + ".box[2]", offset);
  det.box.h = number_at((*box)[3], base + ".box[3]", offset);
  if (det.box.w < 0.0 || det.box.h < 0.0) {
    fail(ErrorKind::Geometry, "box size must be non-negative", offset, base + ".box");
  }

  const json* tag = find(v, "tag");
  if (tag == nullptr) {
    fail(ErrorKind::Schema, "missing field \"tag\"", offset, base + ".tag");
  }
  if (!tag->is_string()) {
    fail(ErrorKind::Schema, "tag must be a string", offset, base + ".tag");
  }
  det.tag = tag->get<std::string>();
  if (det.tag.empty() || tag_is_blank(det.tag)) {
    fail(ErrorKind::Schema, "tag must be non-empty after trimming whitespace", offset,
         base + ".tag");
  }

  if (const json* conf = find(v, "confidence")) {
    det.confidence = number_at(*conf, base + ".confidence", offset);
    if (det.confidence < 0.0 || det.confidence > 1.0) {
      fail(ErrorKind::Schema, "confidence must lie in [0,1]", offset, base + ".confidence");
    }
  } else {
    det.confidence = 1.0;  // score-free annotations still flow through top-k
  }
  return det;
}

}  // namespace

ImageRecord parse_record(std::string_view line, std::uint64_t base_offset) {
  RecordSax sax;
  const bool ok = json::sax_parse(line.begin(), line.end(), &sax);
  if (sax.duplicate) {
    fail(ErrorKind::Schema, "duplicated field", base_offset, sax.duplicate_path);
  }
  if (sax.failed || !ok) {
    const bool bad_utf8 = sax.error_msg.find("UTF-8") != std::string::npos;
    throw Error(bad_utf8 ? ErrorKind::Encoding : ErrorKind::Schema,
                sax.error_msg.empty() ? "malformed record" : sax.error_msg,
                base_offset + sax.error_pos);
  }
  const json& j = sax.root;
  if (!j.is_object()) {
    fail(ErrorKind::Schema, "record must be a JSON object", base_offset, "");
  }

  ImageRecord rec;

  const json& id = require(j, "id", base_offset);
  if (!id.is_string()) {
    fail(ErrorKind::Schema, "id must be a string", base_offset, "id");
  }
  rec.id = id.get<std::string>();
  if (rec.id.empty()) {
    fail(ErrorKind::Schema, "id must be non-empty", base_offset, "id");
  }

  rec.width = positive_dimension(require(j, "width", base_offset), "width", base_offset);
  rec.height = positive_dimension(require(j, "height", base_offset), "height", base_offset);

  const json& captions = require(j, "captions", base_offset);
  if (!captions.is_array() || captions.empty()) {
    fail(ErrorKind::Schema, "captions must be a non-empty array", base_offset, "captions");
  }
  rec.captions.reserve(captions.size());
  for (std::size_t i = 0; i < captions.size(); ++i) {
    if (!captions[i].is_string()) {
      fail(ErrorKind::Schema, "caption must be a string", base_offset,
           "captions[" + std::to_string(i) + "]");
    }
    rec.captions.push_back(captions[i].get<std::string>());
  }

  const json& detections = require(j, "detections", base_offset);
  if (!detections.is_array()) {
    fail(ErrorKind::Schema, "detections must be an array", base_offset, "detections");
  }
  rec.detections.reserve(detections.size());
  for (std::size_t i = 0; i < detections.size(); ++i) {
    rec.detections.push_back(parse_detection(detections[i], i, base_offset));
  }

  if (const json* emb = find(j, "block_embeddings")) {
    if (!emb->is_array() || emb->empty()) {
      fail(ErrorKind::Schema, "block_embeddings must be a non-empty array", base_offset,
           "block_embeddings");
    }
    rec.has_block_embeddings = true;
    rec.block_embeddings.reserve(emb->size());
    std::size_t dim = 0;
    for (std::size_t i = 0; i < emb->size(); ++i) {
      const std::string path = "block_embeddings[" + std::to_string(i) + "]";
      const json& vec = (*emb)[i];
      if (!vec.is_array() || vec.empty()) {
        fail(ErrorKind::Schema, "block vector must be a non-empty array", base_offset, path);
      }
      if (i == 0) {
        dim = vec.size();
      } else if (vec.size() != dim) {
        fail(ErrorKind::Schema, "block vectors must share one dimension", base_offset, path);
      }
      std::vector<float> row;
      row.reserve(vec.size());
      for (std::size_t k = 0; k < vec.size(); ++k) {
        row.push_back(static_cast<float>(
            number_at(vec[k], path + "[" + std::to_string(k) + "]", base_offset)));
      }
      rec.block_embeddings.push_back(std::move(row));
    }
  }
  return rec;
}

std::string serialize_record(const ImageRecord& rec) {
  std::string out;
  out.reserve(96 + rec.captions.size() * 24 + rec.detections.size() * 64);
  out += "{\"id\":";
  jsonutil::append_escaped(out, rec.id);
  out += ",\"width\":";
  jsonutil::append_int(out, rec.width);
  out += ",\"height\":";
  jsonutil::append_int(out, rec.height);
  out += ",\"captions\":[";
  for (std::size_t i = 0; i < rec.captions.size(); ++i) {
    if (i != 0) out.push_back(',');
    jsonutil::append_escaped(out, rec.captions[i]);
  }
  out += "],\"detections\":[";
  for (std::size_t i = 0; i < rec.detections.size(); ++i) {
    const DetectedObject& det = rec.detections[i];
    if (i != 0) out.push_back(',');
    out += "{\"box\":[";
    jsonutil::append_double(out, det.box.x);
    out.push_back(',');
    jsonutil::append_double(out, det.box.y);
    out.push_back(',');
    jsonutil::append_double(out, det.box.w);
    out.push_back(',');
    jsonutil::append_double(out, det.box.h);
    out += "],\"tag\":";
    jsonutil::append_escaped(out, det.tag);
    out += ",\"confidence\":";
    jsonutil::append_double(out, det.confidence);
    out.push_back('}');
  }
  out.push_back(']');
  if (rec.has_block_embeddings) {
    out += ",\"block_embeddings\":[";
    for (std::size_t i = 0; i < rec.block_embeddings.size(); ++i) {
      if (i != 0) out.push_back(',');
      out.push_back('[');
      const std::vector<float>& row = rec.block_embeddings[i];
      for (std::size_t k = 0; k < row.size(); ++k) {
        if (k != 0) out.push_back(',');
        jsonutil::append_float(out, row[k]);
      }
      out.push_back(']');
    }
    out.push_back(']');
  }
  out.push_back('}');
  return out;
}

ValidationReport validate_record(const ImageRecord& rec, const ValidationContext& ctx) {
  ValidationReport report;
  const auto add = [&report](std::string rule, std::string path, std::string msg) {
    report.violations.push_back({std::move(rule), std::move(path), std::move(msg)});
  };

  const double w = static_cast<double>(rec.width);
  const double h = static_cast<double>(rec.height);
  for (std::size_t i = 0; i < rec.detections.size(); ++i) {
    const Box& b = rec.detections[i].box;
    if (b.x < 0.0 || b.y < 0.0 || b.x + b.w > w || b.y + b.h > h) {
      add("box_out_of_bounds", "detections[" + std::to_string(i) + "].box",
          "box extends outside the image plane");
    }
  }

  for (std::size_t i = 0; i < rec.captions.size(); ++i) {
    if (rec.captions[i].empty()) {
      add("empty_caption", "captions[" + std::to_string(i) + "]", "caption is empty");
    }
  }

  if (rec.has_block_embeddings) {
    const std::size_t expect =
        static_cast<std::size_t>(ctx.grid_n) * static_cast<std::size_t>(ctx.grid_n);
    if (rec.block_embeddings.size() != expect) {
      add("embedding_count_mismatch", "block_embeddings",
          "embedding count mismatch: got " + std::to_string(rec.block_embeddings.size()) +
              ", grid wants " + std::to_string(expect));
    }
    if (ctx.embedding_dim.has_value()) {
      for (std::size_t i = 0; i < rec.block_embeddings.size(); ++i) {
        if (rec.block_embeddings[i].size() != *ctx.embedding_dim) {
          add("embedding_dim_mismatch", "block_embeddings[" + std::to_string(i) + "]",
              "block vector dimension does not match the loaded table");
          break;
        }
      }
    }
  }

  if (ctx.template_ref.has_value() && !template_from_name(*ctx.template_ref).has_value()) {
    add("unknown_template", "", "unknown template reference: " + *ctx.template_ref);
  }
  return report;
}

}  // namespace gridprompt
