#include "claimtree/llm.hpp"

#include <algorithm>
#include <set>

#include "claimtree/error.hpp"
#include "claimtree/text.hpp"
#include "claimtree/util.hpp"

namespace claimtree {

// Defined in the generated builtin_templates.cpp.
const std::vector<std::pair<std::string_view, std::string_view>>& builtin_template_sources();

namespace {

constexpr int kFixtureSchemaVersion = 1;

struct RoleInfo {
  PromptRole role;
  std::string_view name;
  std::string_view template_id;
};

constexpr RoleInfo kRoles[] = {
    {PromptRole::kGenerate, "generate", "generate.atomic.v1"},
    {PromptRole::kDecontextualize, "decontextualize", "decontextualize.v1"},
    {PromptRole::kSpan, "span", "span.v1"},
    {PromptRole::kQuery, "query", "query.v1"},
    {PromptRole::kVerifyLeaf, "verify_leaf", "verify_leaf.v1"},
    {PromptRole::kConsolidate, "consolidate", "consolidate.v1"},
    {PromptRole::kCurateExtract, "curate_extract", "curate_extract.v1"},
    {PromptRole::kCurateFalsify, "curate_falsify", "curate_falsify.v1"},
    {PromptRole::kCurateParaphrase, "curate_paraphrase", "curate_paraphrase.v1"},
    {PromptRole::kCurateAlternative, "curate_alternative", "curate_alternative.v1"},
};

const RoleInfo& info(PromptRole role) {
  for (const auto& r : kRoles) {
    if (r.role == role) return r;
  }
  throw Error(ErrorKind::kInvalidInput, "unregistered prompt role");
}

[[noreturn]] void schema_error(PromptRole role, const std::string& what) {
  throw Error(ErrorKind::kSchemaInvalid, std::string(to_string(role)) + " response: " + what);
}

void require_string(PromptRole role, const json& obj, const char* key, bool non_empty = true) {
  if (!obj.contains(key) || !obj[key].is_string()) {
    schema_error(role, std::string("field '") + key + "' must be a string");
  }
  if (non_empty && text::trim(obj[key].get<std::string>()).empty()) {
    schema_error(role, std::string("field '") + key + "' is empty");
  }
}

void require_object(PromptRole role, const json& response) {
  if (!response.is_object()) schema_error(role, "expected a JSON object");
}

void require_string_array(PromptRole role, const json& value, const char* what,
                          bool non_empty_items) {
  if (!value.is_array()) schema_error(role, std::string(what) + " must be an array");
  for (const auto& item : value) {
    if (!item.is_string()) schema_error(role, std::string(what) + " items must be strings");
    if (non_empty_items && text::trim(item.get<std::string>()).empty()) {
      schema_error(role, std::string(what) + " contains an empty string");
    }
  }
}

void require_decision(PromptRole role, const json& obj) {
  require_string(role, obj, "decision");
  static const std::set<std::string> kDecisions = {"accept", "reject", "unsubstantiated"};
  if (!kDecisions.count(obj["decision"].get<std::string>())) {
    schema_error(role, "decision must be accept, reject or unsubstantiated");
  }
}

std::pair<std::string, std::string> fixture_key(std::string_view role_name,
                                                std::string_view prompt) {
  return {std::string(role_name), sha256_hex(prompt)};
}

json fixture_document(const std::map<std::pair<std::string, std::string>, std::string>& entries) {
  json list = json::array();
  for (const auto& [key, response] : entries) {
    list.push_back(json{{"role", key.first}, {"digest", key.second}, {"response", response}});
  }
  return json{{"schema_version", kFixtureSchemaVersion}, {"entries", std::move(list)}};
}

}  // namespace

std::string_view to_string(PromptRole role) { return info(role).name; }

PromptRole parse_prompt_role(std::string_view name) {
  for (const auto& r : kRoles) {
    if (r.name == name) return r.role;
  }
  throw Error(ErrorKind::kParse, "unknown prompt role '" + std::string(name) + "'");
}

std::string_view default_template_id(PromptRole role) { return info(role).template_id; }

// ---------------------------------------------------------------------------
// Templates

const TemplateStore& TemplateStore::builtin() {
  static const TemplateStore store = [] {
    TemplateStore s;
    for (const auto& [id, body] : builtin_template_sources()) s.put(std::string(id), std::string(body));
    return s;
  }();
  return store;
}

TemplateStore TemplateStore::with_overrides(const std::filesystem::path& dir) {
  TemplateStore store = builtin();
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw Error(ErrorKind::kIo, "template directory " + dir.string() + " does not exist");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) store.put(file.stem().string(), read_file(file));
  return store;
}

const std::string& TemplateStore::get(std::string_view id) const {
  auto it = templates_.find(std::string(id));
  if (it == templates_.end()) {
    throw Error(ErrorKind::kInvalidInput, "unknown prompt template '" + std::string(id) + "'");
  }
  return it->second;
}

std::vector<std::string> TemplateStore::placeholders(std::string_view id) const {
  const std::string& body = get(id);
  std::vector<std::string> names;
  size_t pos = 0;
  while ((pos = body.find("{{", pos)) != std::string::npos) {
    size_t end = body.find("}}", pos + 2);
    if (end == std::string::npos) break;
    std::string name = body.substr(pos + 2, end - pos - 2);
    if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
    pos = end + 2;
  }
  return names;
}

std::string TemplateStore::render(std::string_view id, const Variables& vars) const {
  std::vector<std::string> missing;
  for (const auto& name : placeholders(id)) {
    if (!vars.count(name)) missing.push_back(name);
  }
  if (!missing.empty()) {
    throw Error(ErrorKind::kInvalidInput, "template '" + std::string(id) +
                                              "' is missing variables: " +
                                              text::join(missing, ", "));
  }
  const std::string& body = get(id);
  std::string out;
  out.reserve(body.size());
  size_t pos = 0;
  while (true) {
    size_t open = body.find("{{", pos);
    size_t close = open == std::string::npos ? open : body.find("}}", open + 2);
    if (close == std::string::npos) {
      out.append(body, pos, std::string::npos);
      break;
    }
    out.append(body, pos, open - pos);
    out.append(vars.at(body.substr(open + 2, close - open - 2)));
    pos = close + 2;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Response schemas

void validate_response(PromptRole role, const json& response) {
  switch (role) {
    case PromptRole::kGenerate: {
      if (!response.is_array()) schema_error(role, "expected a JSON array of claims");
      for (const auto& claim : response) {
        require_object(role, claim);
        require_string(role, claim, "text");
        for (const char* key : {"span_start", "span_end"}) {
          if (!claim.contains(key) || !claim[key].is_number_integer() || claim[key].get<long long>() < 0) {
            schema_error(role, std::string("field '") + key + "' must be a non-negative integer");
          }
        }
        if (claim["span_start"].get<long long>() > claim["span_end"].get<long long>()) {
          schema_error(role, "span_start exceeds span_end");
        }
      }
      return;
    }
    case PromptRole::kDecontextualize:
    case PromptRole::kCurateParaphrase:
    case PromptRole::kCurateAlternative:
      require_object(role, response);
      require_string(role, response, "text");
      return;
    case PromptRole::kSpan:
      require_string_array(role, response, "sub-claim list", true);
      return;
    case PromptRole::kCurateExtract:
      require_string_array(role, response, "claim list", true);
      return;
    case PromptRole::kQuery:
      require_object(role, response);
      require_string(role, response, "tool_id");
      require_string(role, response, "query");
      return;
    case PromptRole::kVerifyLeaf:
      require_object(role, response);
      require_decision(role, response);
      require_string(role, response, "reason");
      if (!response.contains("evidence_ids")) schema_error(role, "missing evidence_ids");
      require_string_array(role, response["evidence_ids"], "evidence_ids", false);
      return;
    case PromptRole::kConsolidate: {
      require_object(role, response);
      bool has_decision = response.contains("decision");
      bool has_score = response.contains("score");
      if (has_decision == has_score) schema_error(role, "give exactly one of decision or score");
      if (has_decision) require_decision(role, response);
      if (has_score) {
        const auto& score = response["score"];
        if (!score.is_number_integer() || score.get<int>() < 1 || score.get<int>() > 10) {
          schema_error(role, "score must be an integer from 1 to 10");
        }
      }
      require_string(role, response, "reason");
      if (!response.contains("essential_child_ids")) schema_error(role, "missing essential_child_ids");
      require_string_array(role, response["essential_child_ids"], "essential_child_ids", false);
      return;
    }
    case PromptRole::kCurateFalsify:
      require_object(role, response);
      if (!response.contains("consistent") || !response["consistent"].is_boolean()) {
        schema_error(role, "field 'consistent' must be a boolean");
      }
      require_string(role, response, "reason");
      return;
  }
}

json parse_model_json(std::string_view raw) {
  std::string body = text::trim(raw);
  if (body.rfind("```", 0) == 0) {
    size_t first_newline = body.find('\n');
    size_t closing = body.rfind("```");
    if (first_newline != std::string::npos && closing > first_newline) {
      body = body.substr(first_newline + 1, closing - first_newline - 1);
    }
  }
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kSchemaInvalid, std::string("response is not JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Client

LlmClient::LlmClient(std::shared_ptr<Backend> backend, const TemplateStore* templates,
                     int repair_rounds)
    : backend_(std::move(backend)),
      templates_(templates ? templates : &TemplateStore::builtin()),
      repair_rounds_(repair_rounds) {
  if (!backend_) throw Error(ErrorKind::kInvalidInput, "no backend given");
  if (repair_rounds_ < 0) throw Error(ErrorKind::kInvalidInput, "repair_rounds must be >= 0");
}

json LlmClient::complete(PromptRole role, const Variables& vars, const ExtraCheck& check) const {
  return complete(role, default_template_id(role), vars, check);
}

json LlmClient::complete(PromptRole role, std::string_view template_id, const Variables& vars,
                         const ExtraCheck& check) const {
  PromptRequest request;
  request.role = role;
  request.template_id = std::string(template_id);
  request.variables = vars;
  request.prompt = templates_->render(template_id, vars);
  const std::string original_prompt = request.prompt;

  std::string last_error;
  for (int attempt = 0; attempt <= repair_rounds_; ++attempt) {
    request.attempt = attempt;
    std::string raw = backend_->complete_raw(request);
    try {
      json parsed = parse_model_json(raw);
      validate_response(role, parsed);
      if (check) check(parsed);
      return parsed;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kSchemaInvalid) throw;
      last_error = e.what();
    }
    request.template_id = "repair.v1";
    request.variables = {{"error", last_error}, {"response", raw}, {"prompt", original_prompt}};
    request.prompt = templates_->render(request.template_id, request.variables);
  }
  throw Error(ErrorKind::kSchemaInvalid,
              std::string(to_string(role)) + " response still invalid after " +
                  std::to_string(repair_rounds_) + " repair round(s): " + last_error);
}

// ---------------------------------------------------------------------------
// Fixture backends

json fixture_entry(PromptRole role, std::string_view prompt, std::string_view response) {
  auto key = fixture_key(to_string(role), prompt);
  return json{{"role", key.first}, {"digest", key.second}, {"response", std::string(response)}};
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_file(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kParse, path.string() + ": " + e.what());
  }
  return from_json(doc);
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_json(const json& fixture) {
  auto backend = std::make_shared<ScriptedBackend>();
  try {
    if (fixture.at("schema_version").get<int>() != kFixtureSchemaVersion) {
      throw Error(ErrorKind::kSchemaVersion, "unsupported fixture schema_version");
    }
    for (const auto& entry : fixture.at("entries")) {
      std::string role = entry.at("role").get<std::string>();
      parse_prompt_role(role);
      std::pair key{role, entry.at("digest").get<std::string>()};
      if (!backend->responses_.emplace(key, entry.at("response").get<std::string>()).second) {
        throw Error(ErrorKind::kFixtureCollision,
                    "two fixture entries for role " + role + " digest " + key.second);
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("malformed fixture: ") + e.what());
  }
  return backend;
}

std::string ScriptedBackend::complete_raw(const PromptRequest& request) {
  auto key = fixture_key(to_string(request.role), request.prompt);
  auto it = responses_.find(key);
  if (it == responses_.end()) {
    throw Error(ErrorKind::kFixtureGap, "no fixture entry for role " + key.first + " digest " +
                                            key.second + " (template " + request.template_id + ")");
  }
  return it->second;
}

std::string RecordingBackend::complete_raw(const PromptRequest& request) {
  std::string response = inner_->complete_raw(request);
  auto key = fixture_key(to_string(request.role), request.prompt);
  std::lock_guard lock(mu_);
  auto [it, inserted] = recorded_.emplace(key, response);
  if (!inserted && it->second != response) {
    throw Error(ErrorKind::kFixtureCollision,
                "prompt " + key.second + " answered differently on repeat");
  }
  return response;
}

json RecordingBackend::fixture() const {
  std::lock_guard lock(mu_);
  return fixture_document(recorded_);
}

void RecordingBackend::write_fixture(const std::filesystem::path& path) const {
  write_file(path, fixture().dump(2) + "\n");
}

void RecordingBackend::merge(const json& fixture) {
  ScriptedBackend::from_json(fixture);  // validates and detects collisions
  std::lock_guard lock(mu_);
  for (const auto& entry : fixture.at("entries")) {
    std::pair key{entry.at("role").get<std::string>(), entry.at("digest").get<std::string>()};
    auto response = entry.at("response").get<std::string>();
    auto [it, inserted] = recorded_.emplace(key, response);
    if (!inserted && it->second != response) {
      throw Error(ErrorKind::kFixtureCollision, "conflicting entries for digest " + key.second);
    }
  }
}

void BackendConfig::validate() const {
  if (max_retries < 0) throw Error(ErrorKind::kInvalidInput, "max_retries must be >= 0");
  if (!(timeout_seconds > 0)) throw Error(ErrorKind::kInvalidInput, "timeout must be positive");
  if (max_in_flight < 1) throw Error(ErrorKind::kInvalidInput, "max_in_flight must be >= 1");
}

}  // namespace claimtree
