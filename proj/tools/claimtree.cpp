// claimtree command-line interface.
//
// Exit codes: 0 success, 2 domain error, 3 partial (resumable) run, 64 usage.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "claimtree/bench.hpp"
#include "claimtree/config.hpp"
#include "claimtree/corpus.hpp"
#include "claimtree/engine.hpp"
#include "claimtree/error.hpp"
#include "claimtree/extract.hpp"
#include "claimtree/metrics.hpp"
#include "claimtree/run_store.hpp"
#include "claimtree/text.hpp"
#include "claimtree/util.hpp"

namespace fs = std::filesystem;
using namespace claimtree;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 2;
constexpr int kExitPartial = 3;
constexpr int kExitUsage = 64;

struct Globals {
  std::string config;
  std::optional<uint64_t> seed;
  bool deterministic = false;
  std::optional<int> jobs;
  std::string out;
};

RunConfig load_config(const Globals& g) {
  if (g.config.empty()) throw Error(ErrorKind::kInvalidInput, "--config is required for this command");
  RunConfig cfg = RunConfig::load(g.config);
  if (g.seed) cfg.seed = *g.seed;
  if (g.jobs) cfg.engine.jobs = *g.jobs;
  if (g.deterministic) cfg.engine.consolidation = ConsolidationMode::kDeterministic;
  if (!g.out.empty()) cfg.out = g.out;
  cfg.engine.validate();
  return cfg;
}

fs::path require_out(const Globals& g, const fs::path& fallback = {}) {
  if (!g.out.empty()) return g.out;
  if (!fallback.empty()) return fallback;
  throw Error(ErrorKind::kInvalidInput, "--out is required for this command");
}

void emit(const Globals& g, const std::string& body) {
  if (g.out.empty()) {
    std::cout << body;
  } else {
    write_file(g.out, body);
  }
}

std::string pad(std::string s, size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

void print_verdicts(const json& report) {
  std::cout << "sample " << report.value("sample_id", "") << " (" << report.at("status").get<std::string>()
            << ")\n";
  for (const auto& c : report.at("claims")) {
    std::cout << "  " << pad(c.at("node_id").get<std::string>(), 4) << " "
              << pad(c.at("state").get<std::string>(), 16) << " " << c.at("claim").get<std::string>() << "\n";
  }
}

// ---------------------------------------------------------------------------
// extract

int cmd_extract(const Globals& g, const std::string& input, const std::string& strategy) {
  RunConfig cfg = load_config(g);
  std::string passage = text::trim(read_file(input));
  if (text::trim(passage).empty()) throw Error(ErrorKind::kInvalidInput, input + " is empty");
  auto rt = build_runtime(cfg);
  auto chosen = strategy.empty() ? cfg.engine.strategy : parse_extraction_strategy(strategy);
  std::string body;
  for (const auto& c : extract_claims(passage, chosen, *rt->client)) {
    body += json{{"text", c.text},
                 {"span_start", c.span_start},
                 {"span_end", c.span_end},
                 {"self_contained", c.self_contained}}
                .dump() +
            "\n";
  }
  emit(g, body);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyJob {
  std::string sample_id;
  std::string category;
  std::string query;
  std::optional<std::vector<std::string>> fixed_claims;
  fs::path dir;
};

std::optional<std::vector<std::string>> claims_for(const std::vector<json>& claim_lines,
                                                   const std::string& sample_id) {
  if (claim_lines.empty()) return std::nullopt;
  std::vector<std::string> out;
  for (const auto& j : claim_lines) {
    const std::string sid = j.value("sample_id", "");
    if (sid.empty() || sid == sample_id) out.push_back(j.at("text").get<std::string>());
  }
  return out;
}

json run_record(const VerifyJob& job, const RunConfig& cfg, bool deterministic) {
  return {{"schema_version", kRunSchemaVersion},
          {"command", "verify"},
          {"sample_id", job.sample_id},
          {"category", job.category},
          {"query", job.query},
          {"fixed_claims", job.fixed_claims ? json(*job.fixed_claims) : json(nullptr)},
          {"deterministic", deterministic},
          {"config", cfg.to_json()}};
}

bool finish(const VerifyJob& job, const VerificationRun& run, const json& record) {
  persist_run(job.dir, record, run, RunMeta{job.sample_id, job.category});
  json report = load_report(job.dir);
  print_verdicts(report);
  if (!run.complete) {
    std::cerr << "partial run in " << job.dir.string() << ": " << run.error << "\n"
              << "resume with: claimtree verify --resume " << job.dir.string() << " --token "
              << report.at("resume_token").get<std::string>() << "\n";
  }
  return run.complete;
}

int cmd_verify(const Globals& g, const std::string& input, const std::string& claims_path,
               const std::string& sample_id, const std::string& category) {
  RunConfig cfg = load_config(g);
  const fs::path out = require_out(g, cfg.out);
  if (!category.empty()) parse_category(category);

  std::vector<json> claim_lines;
  if (!claims_path.empty()) {
    for (const auto& line : read_lines(claims_path)) {
      try {
        claim_lines.push_back(json::parse(line));
      } catch (const json::exception& e) {
        throw Error(ErrorKind::kParse, claims_path + ": " + e.what());
      }
    }
  }

  std::vector<VerifyJob> jobs;
  if (fs::path(input).extension() == ".jsonl") {
    for (const auto& p : read_passages(input)) {
      jobs.push_back({p.id, std::string(to_string(p.category)), p.text, claims_for(claim_lines, p.id), out / p.id});
    }
  } else {
    std::string query = text::trim(read_file(input));
    if (text::trim(query).empty()) throw Error(ErrorKind::kInvalidInput, input + " is empty");
    std::string sid = sample_id.empty() ? fs::path(input).stem().string() : sample_id;
    std::string cat = category.empty() ? "" : std::string(to_string(parse_category(category)));
    jobs.push_back({sid, cat, query, claims_for(claim_lines, sid), out});
  }

  auto rt = build_runtime(cfg);
  Verifier verifier(cfg.engine, *rt->client, rt->registry);
  bool all_complete = true;
  for (const auto& job : jobs) {
    VerificationRun run = verifier.run(job.query, job.fixed_claims);
    all_complete = finish(job, run, run_record(job, cfg, g.deterministic)) && all_complete;
  }
  return all_complete ? kExitOk : kExitPartial;
}

int cmd_resume(const Globals& g, const std::string& dir, const std::string& token) {
  json record = load_run_config(dir);
  RunConfig cfg = g.config.empty() ? RunConfig::from_json(record.at("config"), fs::path(dir))
                                   : load_config(g);
  if (g.config.empty()) {
    if (g.jobs) cfg.engine.jobs = *g.jobs;
    cfg.engine.validate();
  }
  VerifyJob job{record.at("sample_id").get<std::string>(), record.at("category").get<std::string>(),
                record.at("query").get<std::string>(), std::nullopt, dir};
  if (record.at("fixed_claims").is_array()) {
    job.fixed_claims = record["fixed_claims"].get<std::vector<std::string>>();
  }
  VerificationRun partial = load_run(dir, token);
  if (partial.complete) {
    std::cout << dir << " is already complete\n";
    return kExitOk;
  }
  auto rt = build_runtime(cfg);
  Verifier verifier(cfg.engine, *rt->client, rt->registry);
  VerificationRun run = verifier.resume(std::move(partial), job.fixed_claims);
  json updated = record;
  updated["config"] = cfg.to_json();
  return finish(job, run, updated) ? kExitOk : kExitPartial;
}

// ---------------------------------------------------------------------------
// bench

int cmd_curate(const Globals& g, const std::string& input, size_t falsify_count, const std::string& containment) {
  RunConfig cfg = load_config(g);
  require_out(g);
  auto rt = build_runtime(cfg);
  CurateOptions options;
  options.falsify_count = falsify_count;
  options.containment = containment == "model" ? ContainmentCheck::kModel : ContainmentCheck::kTemplate;
  auto curations = curate_all(read_passages(input), cfg.seed, *rt->client, options, cfg.engine.jobs);
  std::vector<BenchRecord> records;
  for (auto& c : curations) {
    for (const auto& w : c.warnings) std::cerr << "warning: " << w << "\n";
    records.push_back(std::move(c.record));
  }
  write_records(g.out, records);
  std::cout << "curated " << records.size() << " record(s) with seed " << cfg.seed << "\n";
  return kExitOk;
}

int cmd_stats(const Globals& g, const std::string& input) {
  emit(g, stats(read_records(input)).to_json().dump(2) + "\n");
  return kExitOk;
}

std::vector<fs::path> report_files(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    fs::path p = in;
    if (fs::is_regular_file(p)) {
      out.push_back(p);
    } else if (fs::is_regular_file(p / "report.json")) {
      out.push_back(p / "report.json");
    } else if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::directory_iterator(p)) {
        if (fs::is_regular_file(entry.path() / "report.json")) found.push_back(entry.path() / "report.json");
      }
      if (found.empty()) throw Error(ErrorKind::kIo, "no report.json under " + p.string());
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      throw Error(ErrorKind::kIo, p.string() + " does not exist");
    }
  }
  return out;
}

int cmd_eval(const Globals& g, const std::string& gold_path, const std::vector<std::string>& runs,
             const std::string& mode, std::vector<size_t> ks) {
  const fs::path out = require_out(g);
  if (ks.empty()) ks.assign(std::begin(kDefaultKs), std::end(kDefaultKs));
  std::vector<Prediction> predictions;
  for (const auto& file : report_files(runs)) {
    json report;
    try {
      report = json::parse(read_file(file));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kParse, file.string() + ": " + e.what());
    }
    auto preds = predictions_from_report(report);
    predictions.insert(predictions.end(), preds.begin(), preds.end());
  }
  Alignment alignment = match_claims(predictions, read_gold(gold_path), parse_match_mode(mode));
  MetricsReport metrics = report(alignment, ks);
  write_file(out / "metrics.json", metrics.to_json().dump(2) + "\n");
  const std::string table = metrics.render_table();
  write_file(out / "metrics.txt", table);
  std::cout << table;
  return kExitOk;
}

int cmd_ingest(const Globals& g, const std::string& input, const std::string& map_path) {
  require_out(g);
  IngestResult result = ingest_qa(input, read_category_map(map_path));
  for (const auto& [type, count] : result.skipped_types) {
    std::cerr << "skipped " << count << " row(s) of unmapped type '" << type << "'\n";
  }
  write_passages(g.out, result.passages);
  std::cout << "wrote " << result.passages.size() << " passage(s)\n";
  return kExitOk;
}

int cmd_corpus_index(const Globals& g, const std::string& input) {
  require_out(g);
  CorpusIndex index = CorpusIndex::build(read_corpus_jsonl(input));
  index.save(g.out);
  std::cout << "indexed " << index.size() << " document(s)\n";
  return kExitOk;
}

int cmd_report(const std::vector<std::string>& runs) {
  for (const auto& file : report_files(runs)) {
    json report = load_report(file.parent_path());
    print_verdicts(report);
    const auto& counts = report.at("counts");
    std::cout << "  accepted " << counts.at("accepted") << ", rejected " << counts.at("rejected")
              << ", unsubstantiated " << counts.at("unsubstantiated") << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"claimtree: claim extraction and tree-structured verification"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config, "Run configuration (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Seed for every random choice");
  app.add_flag("--deterministic", g.deterministic, "Rule-based consolidation for byte-stable artifacts");
  app.add_option("--jobs", g.jobs, "Worker thread cap")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Output file or directory");

  std::string input, strategy, claims, sample_id, category, resume, token, containment = "template",
                                                                              gold, mode = "fixed", map;
  std::vector<std::string> runs;
  std::vector<size_t> ks;
  size_t falsify_count = 1;

  auto* extract = app.add_subcommand("extract", "Extract claims from a passage");
  extract->add_option("input", input, "Passage text file")->required();
  extract->add_option("--strategy", strategy, "atomic | decontext | med-decontext")
      ->check(CLI::IsMember({"atomic", "decontext", "med-decontext", "med_decontext"}));

  auto* verify = app.add_subcommand("verify", "Verify a passage (text file) or passages (JSONL)");
  verify->add_option("input", input, "Passage text file or passages JSONL");
  verify->add_option("--claims", claims, "Fixed claims JSONL {text, sample_id?}; skips extraction")
      ->check(CLI::ExistingFile);
  verify->add_option("--sample-id", sample_id, "Sample id recorded in the report");
  verify->add_option("--category", category, "Category recorded in the report");
  verify->add_option("--resume", resume, "Resume the partial run in this directory")->check(CLI::ExistingDirectory);
  verify->add_option("--token", token, "Resume token printed by the interrupted run");

  auto* bench = app.add_subcommand("bench", "Benchmark curation and evaluation");
  bench->require_subcommand(1);
  auto* curate_cmd = bench->add_subcommand("curate", "Curate labeled records from passages JSONL");
  curate_cmd->add_option("input", input, "Passages JSONL {id, category, text}")->required()->check(CLI::ExistingFile);
  curate_cmd->add_option("--falsify-count", falsify_count, "Claims falsified per record")->check(CLI::PositiveNumber);
  curate_cmd->add_option("--containment", containment, "template | model")
      ->check(CLI::IsMember({"template", "model"}));
  auto* stats_cmd = bench->add_subcommand("stats", "Dataset statistics of a records JSONL");
  stats_cmd->add_option("input", input, "Records JSONL")->required()->check(CLI::ExistingFile);
  auto* eval_cmd = bench->add_subcommand("eval", "Score run reports against gold labels");
  eval_cmd->add_option("--gold", gold, "Gold labels JSONL")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("runs", runs, "Run directories, directories of runs, or report files")->required();
  eval_cmd->add_option("--mode", mode, "fixed | matched")->check(CLI::IsMember({"fixed", "matched"}));
  eval_cmd->add_option("--k", ks, "K values for Recall@K and F1@K (default 5 10)")->check(CLI::PositiveNumber);
  auto* ingest_cmd = bench->add_subcommand("ingest", "Turn question-answer rows into passages");
  ingest_cmd->add_option("input", input, "QA JSONL {id?, question_type, answer}")->required()->check(CLI::ExistingFile);
  ingest_cmd->add_option("--map", map, "JSON object question type -> category")->required()->check(CLI::ExistingFile);

  auto* corpus = app.add_subcommand("corpus", "Local corpus tools");
  corpus->require_subcommand(1);
  auto* index_cmd = corpus->add_subcommand("index", "Build a BM25 index from corpus JSONL");
  index_cmd->add_option("input", input, "Corpus JSONL {id, title, body, tier}")->required()->check(CLI::ExistingFile);

  auto* report_cmd = app.add_subcommand("report", "Print verdicts of finished runs");
  report_cmd->add_option("runs", runs, "Run directories or directories of runs")->required();

  for (auto* sub : {extract, verify, bench, curate_cmd, stats_cmd, eval_cmd, ingest_cmd, corpus, index_cmd, report_cmd}) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*extract) return cmd_extract(g, input, strategy);
    if (*verify) {
      if (!resume.empty()) return cmd_resume(g, resume, token);
      if (input.empty()) {
        std::cerr << "verify: an input file or --resume is required\n";
        return kExitUsage;
      }
      return cmd_verify(g, input, claims, sample_id, category);
    }
    if (*curate_cmd) return cmd_curate(g, input, falsify_count, containment);
    if (*stats_cmd) return cmd_stats(g, input);
    if (*eval_cmd) return cmd_eval(g, gold, runs, mode, ks);
    if (*ingest_cmd) return cmd_ingest(g, input, map);
    if (*index_cmd) return cmd_corpus_index(g, input);
    if (*report_cmd) return cmd_report(runs);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return kExitDomain;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomain;
  }
  return kExitUsage;
}
