#include "claimtree/run_store.hpp"

#include <algorithm>

#include "claimtree/error.hpp"
#include "claimtree/util.hpp"

namespace claimtree {

namespace fs = std::filesystem;

std::string resume_token(const VerificationTree& tree) {
  return "tree-" + sha256_hex(tree.serialize()).substr(0, 16);
}

json build_report(const VerificationRun& run, const RunMeta& meta) {
  json claims = json::array();
  for (const auto& c : run.result().claims) {
    json refs = json::array();
    for (const auto& r : c.references) refs.push_back(to_json(r));
    claims.push_back({{"node_id", c.node_id.str()},
                      {"claim", c.claim},
                      {"state", std::string(to_string(c.state))},
                      {"reason", c.reason},
                      {"references", std::move(refs)}});
  }
  json counts = {{"accepted", 0}, {"rejected", 0}, {"unsubstantiated", 0}, {"verifying", 0}};
  for (const auto& c : run.result().claims) {
    auto key = std::string(to_string(c.state));
    counts[key] = counts[key].get<int>() + 1;
  }
  json report = {{"schema_version", kRunSchemaVersion},
                 {"sample_id", meta.sample_id},
                 {"category", meta.category},
                 {"query", run.tree.query()},
                 {"status", run.complete ? "complete" : "partial"},
                 {"error", run.complete ? json(nullptr) : json(run.error)},
                 {"resume_token", run.complete ? json(nullptr) : json(resume_token(run.tree))},
                 {"root_state", std::string(to_string(run.tree.node(run.tree.root()).state))},
                 {"claims", std::move(claims)},
                 {"counts", std::move(counts)},
                 {"tree_nodes", run.tree.size()},
                 {"truncated_claims", run.truncated_claims}};
  return report;
}

void persist_run(const fs::path& dir, const json& run_config, const VerificationRun& run,
                 const RunMeta& meta) {
  fs::create_directories(dir);
  write_file(dir / "run.json", run_config.dump(2) + "\n");
  save(run.tree, dir / "tree.json");
  const fs::path evidence_dir = dir / "evidence";
  std::error_code ec;
  fs::remove_all(evidence_dir, ec);
  fs::create_directories(evidence_dir);
  for (const auto& [id, e] : run.evidence.items()) {
    write_file(evidence_dir / (id + ".json"), to_json(e).dump(2) + "\n");
  }
  std::string events;
  for (const auto& entry : run.events.entries()) events += entry.dump() + "\n";
  write_file(dir / "events.log", events);
  write_file(dir / "report.json", build_report(run, meta).dump(2) + "\n");
}

namespace {

json read_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, path.string() + ": " + e.what());
  }
}

}  // namespace

json load_run_config(const fs::path& dir) { return read_json(dir / "run.json"); }

json load_report(const fs::path& dir) {
  json report = read_json(dir / "report.json");
  if (report.value("schema_version", 0) != kRunSchemaVersion) {
    throw Error(ErrorKind::kSchemaVersion, (dir / "report.json").string() + ": unsupported schema_version");
  }
  return report;
}

VerificationRun load_run(const fs::path& dir, const std::string& expected_token) {
  VerificationRun run{load_tree(dir / "tree.json"), {}, {}, {}, {}, false, {}};
  if (!expected_token.empty() && expected_token != resume_token(run.tree)) {
    throw Error(ErrorKind::kInvalidInput,
                "resume token " + expected_token + " does not match " + (dir / "tree.json").string());
  }
  if (fs::is_directory(dir / "evidence")) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir / "evidence")) {
      if (entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) run.evidence.add(evidence_from_json(read_json(f)));
  }
  std::vector<json> events;
  for (const auto& line : read_lines(dir / "events.log")) {
    try {
      events.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kParse, (dir / "events.log").string() + ": " + e.what());
    }
  }
  for (const auto& ev : events) {
    if (ev.value("event", "") != "leaf_verified") continue;
    auto id = NodeId::parse(ev.at("node").get<std::string>());
    std::vector<EvidenceRef> refs;
    for (const auto& eid : ev.at("evidence_ids")) {
      const Evidence& e = run.evidence.get(eid.get<std::string>());
      refs.push_back(EvidenceRef{e.id, 0, e.content.size()});
    }
    run.own_refs[id] = std::move(refs);
  }
  run.events.assign(std::move(events));
  json report = load_report(dir);
  run.truncated_claims = report.at("truncated_claims").get<std::vector<std::string>>();
  run.complete = report.at("status") == "complete";
  if (!run.complete && report.at("error").is_string()) run.error = report.at("error").get<std::string>();
  return run;
}

}  // namespace claimtree
