#pragma once

#include <filesystem>
#include <string>

#include "claimtree/engine.hpp"

namespace claimtree {

inline constexpr int kRunSchemaVersion = 1;

// Identity of the verified input, carried into report.json for evaluation.
struct RunMeta {
  std::string sample_id;
  std::string category;
};

// Token naming the exact tree state a partial run stopped at. It does not
// contain the run directory, so identical runs in different directories
// produce identical reports.
std::string resume_token(const VerificationTree& tree);

json build_report(const VerificationRun& run, const RunMeta& meta);

// Writes run.json, tree.json, evidence/<id>.json, report.json and events.log.
// The evidence directory is rewritten from scratch.
void persist_run(const std::filesystem::path& dir, const json& run_config,
                 const VerificationRun& run, const RunMeta& meta);

json load_run_config(const std::filesystem::path& dir);
json load_report(const std::filesystem::path& dir);

// Rebuilds a run from its directory: tree, evidence, events, per-node
// evidence and truncation list. Throws kInvalidInput when `expected_token`
// is non-empty and does not match the stored tree.
VerificationRun load_run(const std::filesystem::path& dir, const std::string& expected_token = {});

}  // namespace claimtree
