// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "corpus_gen.hpp"
#include "gridprompt/errors.hpp"
#include "gridprompt/ingest.hpp"
#include "gridprompt/pipeline.hpp"
#include "gridprompt/tagging.hpp"

using namespace gridprompt;

namespace {

std::filesystem::path temp_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "gridprompt-tests";
  std::filesystem::create_directories(dir);
  return dir;
}

ImageRecord simple_record() {
  ImageRecord rec;
  rec.id = "r1";
  rec.width = 224;
  rec.height = 224;
  rec.captions = {"a dog runs"};
  rec.detections.push_back({{100, 100, 24, 24}, "dog", 0.9});  // center (112,112) -> block 4
  return rec;
}

}  // namespace

TEST_CASE("config defaults match the documented choices") {
  const PipelineConfig config;
  CHECK(config.grid_n == 3);
  CHECK(config.top_k == 10);
  CHECK(config.vocab_size == 3000);
  CHECK(config.template_id == TemplateId::BlockHasO);
  CHECK(config.mode == TagMode::Detector);
  CHECK(config.partial_ok);
  CHECK(config.emit_x);
}

TEST_CASE("config validation") {
  PipelineConfig config;
  config.grid_n = 0;
  CHECK_THROWS_AS(validate_config(config), Error);
  config = PipelineConfig{};
  config.template_id = TemplateId::NounBlockHasO;
  config.grid_n = 4;
  CHECK_THROWS_AS(validate_config(config), Error);
  config = PipelineConfig{};
  config.mode = TagMode::Embedding;
  CHECK_THROWS_AS(validate_config(config), Error);  // no table path
  config = PipelineConfig{};
  config.template_id = TemplateId::CoordHasO;
  config.mode = TagMode::Embedding;
  config.embeddings_path = "x";
  CHECK_THROWS_AS(validate_config(config), Error);
}

TEST_CASE("augmentation spec parsing and resolution") {
  const AugmentationSpec spec = AugmentationSpec::parse("rotate:90+color+translate:1,2");
  REQUIRE(spec.steps.size() == 3);
  const Affine2D t = spec.resolve(100.0, 100.0);
  // rotate about (50,50) then shift: (0,0) -> (100,0) -> (101,2)
  const auto [x, y] = t.apply(0.0, 0.0);
  CHECK(x == doctest::Approx(101.0));
  CHECK(y == doctest::Approx(2.0));
  CHECK_THROWS_AS(AugmentationSpec::parse("warpdrive:9"), Error);
  CHECK_THROWS_AS(AugmentationSpec::parse("affine:1,2,3"), Error);

  const AugmentationSpec flip = AugmentationSpec::parse("hflip");
  const auto [fx, fy] = flip.resolve(224.0, 224.0).apply(10.0, 20.0);
  CHECK(fx == 214.0);
  CHECK(fy == 20.0);
}

TEST_CASE("process_record composes the expected sentence") {
  const PipelineConfig config;
  const PromptedSample s = process_record(simple_record(), config, nullptr);
  CHECK(s.id == "r1");
  CHECK(s.composed == "a dog runs The block 4 has a dog.");
  CHECK(s.caption == "a dog runs");
  CHECK(!s.slots.empty());
}

TEST_CASE("zero detections fall back to the bare caption") {
  PipelineConfig config;
  ImageRecord rec = simple_record();
  rec.detections.clear();
  const PromptedSample s = process_record(rec, config, nullptr);
  CHECK(s.composed == rec.captions[0]);
  CHECK(s.prompt.empty());

  config.partial_ok = false;
  try {
    process_record(rec, config, nullptr);
    FAIL("expected no-annotations error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoAnnotations);
  }
}

TEST_CASE("process_record equals a straight-line composition of the module operations") {
  SplitMix64 gen(1001);
  PipelineConfig config;
  config.global_seed = 77;
  for (int i = 0; i < 300; ++i) {
    const ImageRecord rec = testgen::make_record(gen, static_cast<std::uint64_t>(i), 8, 2);
    const auto got = process_record_samples(rec, config, nullptr);

    // reference: spell the steps out
    const auto top = select_top_k(rec.detections, config.top_k);
    const BlockGrid grid(config.grid_n, rec.width, rec.height);
    const BlockTagMap tags = assign_to_blocks(grid, top, std::nullopt);
    REQUIRE(got.size() == rec.captions.size());
    for (std::size_t ci = 0; ci < rec.captions.size(); ++ci) {
      RecordRng rng = RecordRng::for_record(config.global_seed, rec.id, ci);
      const PromptPolicy policy{config.template_id, config.grid_n, config.max_sentences,
                                config.emit_x};
      const PromptedSample want = compose(rec.captions[ci], build_prompts(tags, policy, rng));
      CHECK(got[ci].composed == want.composed);
      CHECK(got[ci].slots == want.slots);
    }
  }
}

TEST_CASE("embedding mode end to end") {
  EmbeddingMatrix table;
  table.phrases = {"sky", "dog"};
  table.dim = 2;
  table.values = {1.0f, 0.0f, 0.0f, 1.0f};

  ImageRecord rec = simple_record();
  rec.detections.clear();
  rec.has_block_embeddings = true;
  rec.block_embeddings.assign(9, {0.2f, 0.9f});

  PipelineConfig config;
  config.mode = TagMode::Embedding;
  const PromptedSample s = process_record(rec, config, &table);
  CHECK(s.prompt.find("The block 0 has a dog.") == 0);

  CHECK_THROWS_AS(process_record(rec, config, nullptr), Error);
}

TEST_CASE("run is deterministic, conserving, and stats-consistent") {
  const auto dir = temp_dir();
  const auto input = dir / "mini.jsonl";
  testgen::write_corpus(input.string(), 1500, 99, 4, 2);
  // append a malformed line and a validation failure
  {
    std::ofstream app(input, std::ios::app | std::ios::binary);
    app << "{\"id\":\"broken\"\n";
    app << R"({"id":"oob","width":50,"height":50,"captions":["x"],"detections":[{"box":[40,40,20,20],"tag":"dog"}]})"
        << "\n";
  }

  PipelineConfig config;
  config.input_path = input.string();
  config.output_path = (dir / "mini.out").string();
  config.rejects_path = (dir / "mini.rej").string();
  config.global_seed = 5;
  config.workers = 1;
  const DatasetStats one = run(config);

  PipelineConfig par = config;
  par.output_path = (dir / "mini.out8").string();
  par.rejects_path = (dir / "mini.rej8").string();
  par.workers = 8;
  const DatasetStats eight = run(par);

  CHECK(testgen::read_file(config.output_path) == testgen::read_file(par.output_path));
  CHECK(testgen::read_file(config.rejects_path) == testgen::read_file(par.rejects_path));
  CHECK(one == eight);

  CHECK(one.images + one.rejected == 1502);
  CHECK(one.rejected == 2);
  CHECK(one.prompted + one.unprompted == one.images);

  // every record lands in output or rejects exactly once
  std::set<std::string> seen;
  std::uint64_t output_images = 0;
  {
    std::ifstream out_in(config.output_path);
    std::string line;
    std::string prev;
    while (std::getline(out_in, line)) {
      const PromptedSample s = parse_sample(line);
      if (s.id != prev) {
        ++output_images;
        CHECK(seen.insert(s.id).second);
        prev = s.id;
      }
    }
  }
  std::uint64_t reject_lines = 0;
  {
    std::ifstream rej_in(config.rejects_path);
    std::string line;
    while (std::getline(rej_in, line)) ++reject_lines;
  }
  CHECK(output_images == one.images);
  CHECK(reject_lines == one.rejected);

  // stats recomputed from the output agree with the stats run() returned
  std::ifstream out_in(config.output_path);
  DatasetStats recount = compute_stats(out_in, config.grid_n);
  CHECK(recount.images == one.images);
  CHECK(recount.captions == one.captions);
  CHECK(recount.prompted == one.prompted);
  CHECK(recount.unprompted == one.unprompted);
  CHECK(recount.per_template == one.per_template);
}

TEST_CASE("run-side occupancy equals output-side occupancy for single-object blocks") {
  const auto dir = temp_dir();
  const auto input = dir / "occ.jsonl";
  {
    std::ofstream out(input, std::ios::binary | std::ios::trunc);
    // one record, one object per block: centers at block midpoints of a 3x3
    for (int b = 0; b < 9; ++b) {
      const double cx = (b % 3) * 100.0 + 50.0;
      const double cy = (b / 3) * 100.0 + 50.0;
      ImageRecord rec;
      rec.id = "rec" + std::to_string(b);
      rec.width = 300;
      rec.height = 300;
      rec.captions = {"scene"};
      rec.detections.push_back({{cx - 5, cy - 5, 10, 10}, "dog", 0.5});
      out << serialize_record(rec) << "\n";
    }
  }
  PipelineConfig config;
  config.input_path = input.string();
  config.output_path = (dir / "occ.out").string();
  config.workers = 2;
  const DatasetStats stats = run(config);
  CHECK(stats.block_occupancy == std::vector<std::uint64_t>(9, 1));

  std::ifstream out_in(config.output_path);
  const DatasetStats recount = compute_stats(out_in, config.grid_n);
  CHECK(recount.block_occupancy == stats.block_occupancy);
  CHECK(recount.records_with_boxes == stats.records_with_boxes);
}

TEST_CASE("empty input produces empty output and zero stats") {
  const auto dir = temp_dir();
  const auto input = dir / "empty.jsonl";
  std::ofstream(input).close();
  PipelineConfig config;
  config.input_path = input.string();
  config.output_path = (dir / "empty.out").string();
  const DatasetStats stats = run(config);
  CHECK(stats.images == 0);
  CHECK(stats.captions == 0);
  CHECK(stats.prompted == 0);
  CHECK(stats.unprompted == 0);
  CHECK(testgen::read_file(config.output_path).empty());
}

TEST_CASE("missing input is an io error") {
  PipelineConfig config;
  config.input_path = "/nonexistent/nope.jsonl";
  config.output_path = "/tmp/never.out";
  try {
    run(config);
    FAIL("expected io error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
}

TEST_CASE("compute_stats counts an input manifest") {
  std::stringstream corpus;
  for (int i = 0; i < 12; ++i) {
    ImageRecord rec;
    rec.id = "m" + std::to_string(i);
    rec.width = 100;
    rec.height = 100;
    rec.captions = {"one", "two", "three"};
    if (i % 2 == 0) {
      rec.detections.push_back({{10, 10, 10, 10}, "dog", 0.5});
    }
    corpus << serialize_record(rec) << "\n";
  }
  const DatasetStats stats = compute_stats(corpus, 3);
  CHECK(stats.images == 12);
  CHECK(stats.captions == 36);
  CHECK(stats.records_with_boxes == 6);
  CHECK(stats.unprompted == 12);
  CHECK(stats.prompted == 0);

  std::stringstream bad("{\"neither\":1}\n");
  CHECK_THROWS_AS(compute_stats(bad, 3), Error);
}

TEST_CASE("run in embedding mode with a table sidecar") {
  const auto dir = temp_dir();
  EmbeddingMatrix table;
  table.phrases = {"sky", "dog", "grass"};
  table.dim = 3;
  table.values = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  const auto table_path = (dir / "table.ptpe").string();
  save_embedding_table(table_path, table);

  const auto input = dir / "emb.jsonl";
  {
    std::ofstream out(input, std::ios::binary | std::ios::trunc);
    SplitMix64 gen(8);
    for (int i = 0; i < 50; ++i) {
      ImageRecord rec;
      rec.id = "e" + std::to_string(i);
      rec.width = 300;
      rec.height = 300;
      rec.captions = {"scene " + std::to_string(i)};
      rec.has_block_embeddings = true;
      for (int b = 0; b < 9; ++b) {
        std::vector<float> v(3);
        for (float& x : v) x = static_cast<float>(testgen::unit_real(gen));
        rec.block_embeddings.push_back(std::move(v));
      }
      out << serialize_record(rec) << "\n";
    }
    // dimension mismatch lands in rejects via validation
    ImageRecord bad;
    bad.id = "bad";
    bad.width = 10;
    bad.height = 10;
    bad.captions = {"x"};
    bad.has_block_embeddings = true;
    bad.block_embeddings.assign(9, std::vector<float>{1.0f});
    out << serialize_record(bad) << "\n";
  }

  PipelineConfig config;
  config.mode = TagMode::Embedding;
  config.embeddings_path = table_path;
  config.input_path = input.string();
  config.output_path = (dir / "emb.out").string();
  config.rejects_path = (dir / "emb.rej").string();
  config.workers = 3;
  const DatasetStats stats = run(config);
  CHECK(stats.images == 50);
  CHECK(stats.rejected == 1);
  CHECK(stats.prompted == 50);

  std::ifstream out_in(config.output_path);
  std::string line;
  std::size_t lines = 0;
  while (std::getline(out_in, line)) {
    const PromptedSample s = parse_sample(line);
    CHECK(!s.prompt.empty());
    // nine blocks, nine sentences, every tag from the table
    CHECK(std::count(s.composed.begin(), s.composed.end(), '.') == 9);
    ++lines;
  }
  CHECK(lines == 50);

  // stats recomputed from the output agree (embedding blocks hold one entry)
  std::ifstream again(config.output_path);
  const DatasetStats recount = compute_stats(again, config.grid_n);
  CHECK(recount.block_occupancy == stats.block_occupancy);
  CHECK(recount.per_template == stats.per_template);
}

TEST_CASE("mixed templates survive the output round trip") {
  const auto dir = temp_dir();
  const auto input = dir / "mixed.jsonl";
  testgen::write_corpus(input.string(), 400, 3, 5, 1);
  PipelineConfig config;
  config.template_id = TemplateId::Mixed;
  config.input_path = input.string();
  config.output_path = (dir / "mixed.out").string();
  config.workers = 2;
  const DatasetStats stats = run(config);
  CHECK(stats.per_template.count("mixed") == 1);

  std::ifstream out_in(config.output_path);
  const DatasetStats recount = compute_stats(out_in, config.grid_n);
  CHECK(recount.per_template == stats.per_template);
  CHECK(recount.images == stats.images);
  CHECK(recount.prompted == stats.prompted);
}

TEST_CASE("per-epoch reruns with different seeds vary, same seed does not") {
  SplitMix64 gen(55);
  ImageRecord rec = testgen::make_record(gen, 0, 0, 1);
  rec.detections.push_back({{1, 1, 4, 4}, "dog", 0.9});
  rec.detections.push_back({{2, 2, 4, 4}, "cat", 0.8});
  rec.detections.push_back({{3, 3, 4, 4}, "bird", 0.7});
  // all three centers land in block 0, so the sampled tag depends on the seed
  rec.width = 300;
  rec.height = 300;

  PipelineConfig a;
  a.global_seed = 1;
  PipelineConfig b;
  b.global_seed = 1;
  CHECK(process_record(rec, a, nullptr).composed == process_record(rec, b, nullptr).composed);

  bool varied = false;
  const std::string base = process_record(rec, a, nullptr).composed;
  for (std::uint64_t seed = 2; seed < 22; ++seed) {
    PipelineConfig c;
    c.global_seed = seed;
    if (process_record(rec, c, nullptr).composed != base) {
      varied = true;
      break;
    }
  }
  CHECK(varied);
}
