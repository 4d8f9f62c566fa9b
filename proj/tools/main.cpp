// SPDX-License-Identifier: Apache-2.0
// Command line front end: generate / vocab / cloze / stats.
#include <atomic>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "gridprompt/errors.hpp"
#include "gridprompt/ingest.hpp"
#include "gridprompt/pipeline.hpp"
#include "gridprompt/prompt.hpp"
#include "gridprompt/simd_dot.hpp"
#include "gridprompt/vocab.hpp"

namespace {

using namespace gridprompt;

struct GenerateArgs {
  std::string input;
  std::string output;
  std::string rejects;
  std::string mode = "detector";
  std::string template_id = "block_has_o";
  std::string embeddings;
  std::string augment;
  int grid = kDefaultGridN;
  int top_k = kDefaultTopK;
  std::uint64_t seed = 0;
  bool partial_ok = true;
  bool emit_x = true;
  int workers = 0;
  std::size_t max_sentences = 0;
};

int cmd_generate(const GenerateArgs& args) {
  PipelineConfig config;
  config.input_path = args.input;
  config.output_path = args.output;
  config.rejects_path = args.rejects;
  config.grid_n = args.grid;
  config.top_k = args.top_k;
  config.global_seed = args.seed;
  config.partial_ok = args.partial_ok;
  config.emit_x = args.emit_x;
  config.workers = args.workers;
  config.max_sentences = args.max_sentences;
  config.embeddings_path = args.embeddings;

  const auto mode = tag_mode_from_name(args.mode);
  if (!mode.has_value()) {
    throw Error(ErrorKind::Config, "unknown mode: " + args.mode);
  }
  config.mode = *mode;

  const auto tmpl = template_from_name(args.template_id);
  if (!tmpl.has_value()) {
    throw Error(ErrorKind::Config, "unknown template: " + args.template_id);
  }
  config.template_id = *tmpl;

  if (!args.augment.empty()) {
    config.augmentation = AugmentationSpec::parse(args.augment);
  }

  const DatasetStats stats = run(config);
  std::cout << stats.to_json() << "\n";
  return 0;
}

struct VocabArgs {
  std::string input;
  std::string output;
  std::size_t vocab_size = kDefaultVocabSize;
  int workers = 0;
};

int cmd_vocab(const VocabArgs& args) {
  std::ifstream in(args.input, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::Io, "cannot open input corpus: " + args.input);
  }
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) {
      lines.push_back(std::move(line));
      line.clear();
    }
  }

  PipelineConfig worker_probe;
  worker_probe.workers = args.workers;
  const int workers = effective_workers(worker_probe);

  std::vector<VocabCounter> shards(static_cast<std::size_t>(workers));
  std::atomic<std::uint64_t> skipped{0};
  std::atomic<std::size_t> next{0};
  const auto work = [&](int shard) {
    for (std::size_t i; (i = next.fetch_add(1, std::memory_order_relaxed)) < lines.size();) {
      try {
        const ImageRecord rec = parse_record(lines[i]);
        for (const std::string& caption : rec.captions) {
          shards[static_cast<std::size_t>(shard)].add_caption(caption);
        }
      } catch (const Error&) {
        skipped.fetch_add(1, std::memory_order_relaxed);
      }
    }
  };
  std::vector<std::thread> threads;
  for (int t = 1; t < workers; ++t) {
    threads.emplace_back(work, t);
  }
  work(0);
  for (std::thread& t : threads) {
    t.join();
  }

  VocabCounter total;
  for (VocabCounter& shard : shards) {
    total.merge(std::move(shard));
  }
  const Vocabulary vocab = total.top(args.vocab_size);

  std::ofstream out(args.output, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorKind::Io, "cannot create vocabulary file: " + args.output);
  }
  write_vocabulary(out, vocab);
  if (skipped.load() > 0) {
    std::cerr << "vocab: skipped " << skipped.load() << " malformed line(s)\n";
  }
  std::cout << "{\"phrases\":" << vocab.phrases.size() << ",\"skipped\":" << skipped.load()
            << "}\n";
  return 0;
}

struct ClozeArgs {
  std::string input;
  std::string output;
  std::string mask_kind = "both";
  std::string mask_token = "[MASK]";
};

int cmd_cloze(const ClozeArgs& args) {
  std::ifstream in(args.input, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::Io, "cannot open corpus: " + args.input);
  }
  std::ofstream out(args.output, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorKind::Io, "cannot create cloze file: " + args.output);
  }
  std::vector<MaskKind> kinds;
  if (args.mask_kind == "both") {
    kinds = {MaskKind::Position, MaskKind::Object};
  } else if (const auto kind = mask_kind_from_name(args.mask_kind)) {
    kinds = {*kind};
  } else {
    throw Error(ErrorKind::Config, "mask kind must be P, O or both");
  }

  std::string line;
  std::uint64_t offset = 0;
  std::uint64_t emitted = 0;
  std::uint64_t skipped = 0;
  while (std::getline(in, line)) {
    const std::uint64_t line_offset = offset;
    offset += line.size() + 1;
    if (line.empty()) continue;
    const PromptedSample sample = parse_sample(line, line_offset);
    for (MaskKind kind : kinds) {
      try {
        const ClozeRecord cloze = make_cloze(sample, kind, args.mask_token);
        out << serialize_cloze(sample.id, cloze) << "\n";
        ++emitted;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::NoSuchSlot) throw;
        ++skipped;  // sample has no slot of this kind
      }
    }
  }
  if (!out) {
    throw Error(ErrorKind::Io, "write failure while emitting cloze records");
  }
  std::cout << "{\"emitted\":" << emitted << ",\"skipped\":" << skipped << "}\n";
  return 0;
}

struct StatsArgs {
  std::string input;
  std::string output;
  int grid = kDefaultGridN;
};

int cmd_stats(const StatsArgs& args) {
  std::ifstream in(args.input, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::Io, "cannot open corpus: " + args.input);
  }
  const DatasetStats stats = compute_stats(in, args.grid);
  if (args.output.empty()) {
    std::cout << stats.to_json() << "\n";
  } else {
    std::ofstream out(args.output, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(ErrorKind::Io, "cannot create stats file: " + args.output);
    }
    out << stats.to_json() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gridprompt: compiles image-caption corpora into position-prompted "
               "training text, cloze probes and dataset statistics"};
  app.require_subcommand(1);

  GenerateArgs gen;
  CLI::App* generate = app.add_subcommand(
      "generate", "Generate the prompted output corpus from an input corpus");
  generate->add_option("--input", gen.input, "Input corpus (one record per line)")->required();
  generate->add_option("--output", gen.output, "Output corpus path")->required();
  generate->add_option("--rejects", gen.rejects,
                       "Rejects path (default: <output>.rejects)");
  generate->add_option("--mode", gen.mode, "Tag source: detector|embedding")
      ->default_val("detector");
  generate->add_option("--grid", gen.grid, "Blocks per image side")->default_val(kDefaultGridN);
  generate->add_option("--top-k", gen.top_k, "Objects kept per image")->default_val(kDefaultTopK);
  generate->add_option("--template", gen.template_id,
                       "Template id (block_has_o, o_in_block, ..., mixed)")
      ->default_val("block_has_o");
  generate->add_option("--seed", gen.seed, "Global seed")->default_val(0);
  generate->add_flag("--partial-ok,!--no-partial-ok", gen.partial_ok,
                     "Emit the bare caption when a record has nothing to tag");
  generate->add_flag("--emit-x,!--no-emit-x", gen.emit_x,
                     "Emit X-position sentences for objects pushed off-canvas");
  generate->add_option("--embeddings", gen.embeddings, "Embedding table (embedding mode)");
  generate->add_option("--workers", gen.workers,
                       "Worker threads (default: GRIDPROMPT_WORKERS or hardware)");
  generate->add_option("--max-sentences", gen.max_sentences,
                       "Sentence cap per sample (default: grid^2)");
  generate->add_option("--augment", gen.augment,
                       "Augmentation spec, e.g. rotate:15+hflip or affine:a,b,c,d,tx,ty");

  VocabArgs voc;
  CLI::App* vocab = app.add_subcommand("vocab", "Build the frequency vocabulary of a corpus");
  vocab->add_option("--input", voc.input, "Input corpus")->required();
  vocab->add_option("--output", voc.output, "Vocabulary file (phrase<TAB>count)")->required();
  vocab->add_option("--vocab-size", voc.vocab_size, "Maximum phrases kept")
      ->default_val(kDefaultVocabSize);
  vocab->add_option("--workers", voc.workers, "Worker threads");

  ClozeArgs clo;
  CLI::App* cloze = app.add_subcommand("cloze", "Derive cloze probes from a generated corpus");
  cloze->add_option("--input", clo.input, "Generated corpus")->required();
  cloze->add_option("--output", clo.output, "Cloze set path")->required();
  cloze->add_option("--mask-kind", clo.mask_kind, "P, O or both")->default_val("both");
  cloze->add_option("--mask-token", clo.mask_token, "Mask token")->default_val("[MASK]");

  StatsArgs sta;
  CLI::App* stats = app.add_subcommand("stats", "Count dataset statistics of a corpus");
  stats->add_option("--input", sta.input, "Corpus (input manifest or generated output)")
      ->required();
  stats->add_option("--grid", sta.grid, "Grid side for occupancy binning")
      ->default_val(kDefaultGridN);
  stats->add_option("--output", sta.output, "Stats file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (generate->parsed()) return cmd_generate(gen);
    if (vocab->parsed()) return cmd_vocab(voc);
    if (cloze->parsed()) return cmd_cloze(clo);
    if (stats->parsed()) return cmd_stats(sta);
  } catch (const gridprompt::Error& e) {
    std::cerr << "error (" << error_kind_name(e.kind()) << "): " << e.what();
    if (!e.field_path().empty()) {
      std::cerr << " [field " << e.field_path() << "]";
    }
    std::cerr << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
