#pragma once

#include <condition_variable>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace claimtree {

using json = nlohmann::json;

// One role per model call site in the pipeline.
enum class PromptRole {
  kGenerate,
  kDecontextualize,
  kSpan,
  kQuery,
  kVerifyLeaf,
  kConsolidate,
  kCurateExtract,
  kCurateFalsify,
  kCurateParaphrase,
  kCurateAlternative,
};

std::string_view to_string(PromptRole role);
PromptRole parse_prompt_role(std::string_view name);
std::string_view default_template_id(PromptRole role);

using Variables = std::map<std::string, std::string>;

// Prompt templates keyed by id. `{{name}}` placeholders are substituted on
// render; every placeholder must be supplied.
class TemplateStore {
 public:
  // Templates compiled into the library from templates/*.txt.
  static const TemplateStore& builtin();
  // Builtins overlaid with every <id>.txt found in `dir`.
  static TemplateStore with_overrides(const std::filesystem::path& dir);

  void put(std::string id, std::string body) { templates_[std::move(id)] = std::move(body); }
  bool contains(std::string_view id) const { return templates_.count(std::string(id)) != 0; }
  const std::string& get(std::string_view id) const;
  std::vector<std::string> placeholders(std::string_view id) const;
  std::string render(std::string_view id, const Variables& vars) const;

 private:
  std::map<std::string, std::string> templates_;
};

struct PromptRequest {
  PromptRole role = PromptRole::kGenerate;
  std::string template_id;
  Variables variables;
  std::string prompt;  // rendered text, what the model sees
  int attempt = 0;     // 0 for the first call, n for the n-th repair
};

// Raw text-in/text-out model access. Implementations must be safe to call
// from several threads.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string complete_raw(const PromptRequest& request) = 0;
};

// Throws kSchemaInvalid when `response` does not match the role's schema.
void validate_response(PromptRole role, const json& response);

// Parses model output as JSON, tolerating a surrounding ``` fence.
json parse_model_json(std::string_view raw);

using ExtraCheck = std::function<void(const json&)>;

// Renders prompts, calls the backend and validates responses. On schema
// failure the model gets up to `repair_rounds` repair prompts before the
// call fails with kSchemaInvalid.
class LlmClient {
 public:
  LlmClient(std::shared_ptr<Backend> backend, const TemplateStore* templates = nullptr,
            int repair_rounds = 2);

  json complete(PromptRole role, const Variables& vars, const ExtraCheck& check = {}) const;
  json complete(PromptRole role, std::string_view template_id, const Variables& vars,
                const ExtraCheck& check = {}) const;

  // Rendered prompt for a role without calling the backend.
  std::string render(std::string_view template_id, const Variables& vars) const {
    return templates_->render(template_id, vars);
  }

  int repair_rounds() const { return repair_rounds_; }
  const TemplateStore& templates() const { return *templates_; }
  Backend& backend() const { return *backend_; }

 private:
  std::shared_ptr<Backend> backend_;
  const TemplateStore* templates_;
  int repair_rounds_;
};

// Replays responses from a fixture keyed by (role, SHA-256 of the rendered
// prompt). Fixture:
//   {"schema_version": 1,
//    "entries": [{"role": "...", "digest": "<hex>", "response": "<raw>"}]}
class ScriptedBackend : public Backend {
 public:
  static std::shared_ptr<ScriptedBackend> from_file(const std::filesystem::path& path);
  static std::shared_ptr<ScriptedBackend> from_json(const json& fixture);

  std::string complete_raw(const PromptRequest& request) override;
  size_t size() const { return responses_.size(); }

 private:
  std::map<std::pair<std::string, std::string>, std::string> responses_;
};

// Wraps another backend and records every exchange as a fixture entry.
class RecordingBackend : public Backend {
 public:
  explicit RecordingBackend(std::shared_ptr<Backend> inner) : inner_(std::move(inner)) {}

  std::string complete_raw(const PromptRequest& request) override;
  json fixture() const;
  void write_fixture(const std::filesystem::path& path) const;
  // Folds another recording's fixture document into this one.
  void merge(const json& fixture);

 private:
  std::shared_ptr<Backend> inner_;
  mutable std::mutex mu_;
  std::map<std::pair<std::string, std::string>, std::string> recorded_;
};

json fixture_entry(PromptRole role, std::string_view prompt, std::string_view response);

struct BackendConfig {
  std::string endpoint;  // full chat-completions URL
  std::string model;
  std::string api_key_env;  // name of the environment variable, never the key
  int max_retries = 2;
  double timeout_seconds = 60.0;
  double temperature = 0.0;
  std::optional<uint64_t> seed;
  int max_in_flight = 4;

  void validate() const;
};

// OpenAI-compatible chat-completion client.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(BackendConfig config);

  std::string complete_raw(const PromptRequest& request) override;

  // The request body sent for a prompt; exposed for tests.
  json request_body(const PromptRequest& request) const;

 private:
  BackendConfig config_;
  std::string base_;  // scheme://host[:port]
  std::string path_;
  std::mutex mu_;
  std::condition_variable cv_;
  int in_flight_ = 0;
};

}  // namespace claimtree
