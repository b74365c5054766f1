#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "claimtree/engine.hpp"
#include "claimtree/llm.hpp"
#include "claimtree/retrieval.hpp"

namespace claimtree {

struct ToolSpec {
  Tool tool;
  std::filesystem::path corpus;  // JSONL documents, indexed at startup
  std::filesystem::path index;   // or a saved index
  std::string endpoint;          // web search base URL
  std::string api_key_env;
  std::filesystem::path domain_tiers;
  double timeout_seconds = 30;
};

struct BackendSpec {
  std::string kind = "scripted";  // scripted | http
  std::filesystem::path fixture;
  std::filesystem::path templates_dir;  // optional prompt overrides
  int repair_rounds = 2;
  BackendConfig http;
};

// Run configuration read from a JSON document. Relative paths resolve
// against the document's directory and must exist. API keys appear only as
// environment variable names.
struct RunConfig {
  BackendSpec backend;
  EngineConfig engine;
  std::vector<ToolSpec> tools;
  uint64_t seed = 0;
  std::filesystem::path out;

  static RunConfig load(const std::filesystem::path& path);
  static RunConfig from_json(const json& doc, const std::filesystem::path& base_dir);
  // Canonical form with resolved paths; from_json(to_json()) round-trips.
  json to_json() const;
};

// Backend, client and tools instantiated from a RunConfig.
struct Runtime {
  std::unique_ptr<TemplateStore> templates;
  std::shared_ptr<Backend> backend;
  std::unique_ptr<LlmClient> client;
  ToolRegistry registry;
};

ToolRegistry build_registry(const RunConfig& config);
std::unique_ptr<Runtime> build_runtime(const RunConfig& config);

}  // namespace claimtree
