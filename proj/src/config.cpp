#include "claimtree/config.hpp"

#include <set>

#include "claimtree/error.hpp"
#include "claimtree/util.hpp"

namespace claimtree {

namespace fs = std::filesystem;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorKind::kInvalidInput, where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw Error(ErrorKind::kInvalidInput, "unknown key '" + key + "' in " + where);
  }
}

fs::path existing_path(const json& obj, const char* key, const fs::path& base, const std::string& where) {
  fs::path p = obj.at(key).get<std::string>();
  if (p.empty()) throw Error(ErrorKind::kInvalidInput, where + "." + key + " is empty");
  if (p.is_relative()) p = base / p;
  p = p.lexically_normal();
  if (!fs::exists(p)) throw Error(ErrorKind::kIo, where + "." + key + ": " + p.string() + " does not exist");
  return p;
}

}  // namespace

RunConfig RunConfig::load(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, path.string() + ": " + e.what());
  }
  return from_json(doc, fs::absolute(path).parent_path());
}

RunConfig RunConfig::from_json(const json& doc, const fs::path& base_dir) {
  RunConfig c;
  try {
    reject_unknown(doc, {"backend", "budget", "engine", "tools", "seed", "jobs", "out"}, "config");

    const json& b = doc.at("backend");
    reject_unknown(b, {"kind", "fixture", "templates_dir", "repair_rounds", "endpoint", "model",
                       "api_key_env", "max_retries", "timeout_seconds", "temperature", "seed",
                       "max_in_flight"},
                   "backend");
    c.backend.kind = b.at("kind").get<std::string>();
    c.backend.repair_rounds = b.value("repair_rounds", 2);
    if (c.backend.repair_rounds < 0) throw Error(ErrorKind::kInvalidInput, "backend.repair_rounds must be >= 0");
    if (b.contains("templates_dir")) c.backend.templates_dir = existing_path(b, "templates_dir", base_dir, "backend");
    if (c.backend.kind == "scripted") {
      c.backend.fixture = existing_path(b, "fixture", base_dir, "backend");
    } else if (c.backend.kind == "http") {
      auto& h = c.backend.http;
      h.endpoint = b.at("endpoint").get<std::string>();
      h.model = b.at("model").get<std::string>();
      h.api_key_env = b.value("api_key_env", "");
      h.max_retries = b.value("max_retries", h.max_retries);
      h.timeout_seconds = b.value("timeout_seconds", h.timeout_seconds);
      h.temperature = b.value("temperature", h.temperature);
      if (b.contains("seed")) h.seed = b["seed"].get<uint64_t>();
      h.max_in_flight = b.value("max_in_flight", h.max_in_flight);
      h.validate();
    } else {
      throw Error(ErrorKind::kInvalidInput, "backend.kind must be 'scripted' or 'http'");
    }

    if (doc.contains("budget")) {
      const json& j = doc["budget"];
      reject_unknown(j, {"max_depth", "max_children_per_node", "max_total_nodes"}, "budget");
      auto& budget = c.engine.budget;
      budget.max_depth = j.value("max_depth", budget.max_depth);
      budget.max_children_per_node = j.value("max_children_per_node", budget.max_children_per_node);
      budget.max_total_nodes = j.value("max_total_nodes", budget.max_total_nodes);
    }
    if (doc.contains("engine")) {
      const json& j = doc["engine"];
      reject_unknown(j, {"strategy", "max_results", "top_k", "consolidation", "consolidate_with_parent_evidence"},
                     "engine");
      if (j.contains("strategy")) c.engine.strategy = parse_extraction_strategy(j["strategy"].get<std::string>());
      c.engine.max_results = j.value("max_results", c.engine.max_results);
      c.engine.top_k = j.value("top_k", c.engine.top_k);
      if (j.contains("consolidation")) {
        c.engine.consolidation = parse_consolidation_mode(j["consolidation"].get<std::string>());
      }
      c.engine.consolidate_with_parent_evidence =
          j.value("consolidate_with_parent_evidence", c.engine.consolidate_with_parent_evidence);
    }
    c.engine.jobs = doc.value("jobs", 1);
    c.seed = doc.value("seed", uint64_t{0});
    if (doc.contains("out")) {
      fs::path out = doc["out"].get<std::string>();
      c.out = (out.is_relative() ? base_dir / out : out).lexically_normal();
    }

    std::set<std::string> ids;
    for (const auto& t : doc.value("tools", json::array())) {
      reject_unknown(t, {"id", "kind", "description", "corpus", "index", "endpoint", "api_key_env",
                         "domain_tiers", "timeout_seconds"},
                     "tool");
      ToolSpec spec;
      spec.tool.id = t.at("id").get<std::string>();
      const std::string where = "tool " + spec.tool.id;
      if (!ids.insert(spec.tool.id).second) throw Error(ErrorKind::kDuplicateId, "duplicate " + where);
      spec.tool.kind = parse_tool_kind(t.at("kind").get<std::string>());
      spec.tool.description = t.value("description", "");
      switch (spec.tool.kind) {
        case ToolKind::kCorpusSearch:
          if (t.contains("corpus") == t.contains("index")) {
            throw Error(ErrorKind::kInvalidInput, where + " needs exactly one of 'corpus' or 'index'");
          }
          if (t.contains("corpus")) spec.corpus = existing_path(t, "corpus", base_dir, where);
          if (t.contains("index")) spec.index = existing_path(t, "index", base_dir, where);
          break;
        case ToolKind::kWebSearch:
          spec.endpoint = t.at("endpoint").get<std::string>();
          spec.api_key_env = t.value("api_key_env", "");
          spec.timeout_seconds = t.value("timeout_seconds", spec.timeout_seconds);
          if (t.contains("domain_tiers")) spec.domain_tiers = existing_path(t, "domain_tiers", base_dir, where);
          break;
        case ToolKind::kCalculator:
          break;
      }
      c.tools.push_back(std::move(spec));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kInvalidInput, std::string("config: ") + e.what());
  }
  c.engine.validate();
  return c;
}

json RunConfig::to_json() const {
  json b = {{"kind", backend.kind}, {"repair_rounds", backend.repair_rounds}};
  if (!backend.templates_dir.empty()) b["templates_dir"] = backend.templates_dir.string();
  if (backend.kind == "scripted") {
    b["fixture"] = backend.fixture.string();
  } else {
    const auto& h = backend.http;
    b["endpoint"] = h.endpoint;
    b["model"] = h.model;
    b["api_key_env"] = h.api_key_env;
    b["max_retries"] = h.max_retries;
    b["timeout_seconds"] = h.timeout_seconds;
    b["temperature"] = h.temperature;
    if (h.seed) b["seed"] = *h.seed;
    b["max_in_flight"] = h.max_in_flight;
  }
  json tools_json = json::array();
  for (const auto& t : tools) {
    json j = {{"id", t.tool.id}, {"kind", std::string(to_string(t.tool.kind))}, {"description", t.tool.description}};
    if (!t.corpus.empty()) j["corpus"] = t.corpus.string();
    if (!t.index.empty()) j["index"] = t.index.string();
    if (t.tool.kind == ToolKind::kWebSearch) {
      j["endpoint"] = t.endpoint;
      j["api_key_env"] = t.api_key_env;
      j["timeout_seconds"] = t.timeout_seconds;
      if (!t.domain_tiers.empty()) j["domain_tiers"] = t.domain_tiers.string();
    }
    tools_json.push_back(std::move(j));
  }
  json doc = {{"backend", std::move(b)},
              {"budget",
               {{"max_depth", engine.budget.max_depth},
                {"max_children_per_node", engine.budget.max_children_per_node},
                {"max_total_nodes", engine.budget.max_total_nodes}}},
              {"engine",
               {{"strategy", std::string(to_string(engine.strategy))},
                {"max_results", engine.max_results},
                {"top_k", engine.top_k},
                {"consolidation", std::string(to_string(engine.consolidation))},
                {"consolidate_with_parent_evidence", engine.consolidate_with_parent_evidence}}},
              {"tools", std::move(tools_json)},
              {"seed", seed},
              {"jobs", engine.jobs}};
  if (!out.empty()) doc["out"] = out.string();
  return doc;
}

ToolRegistry build_registry(const RunConfig& config) {
  ToolRegistry registry;
  for (const auto& t : config.tools) {
    switch (t.tool.kind) {
      case ToolKind::kCorpusSearch: {
        auto index = std::make_shared<const CorpusIndex>(
            t.corpus.empty() ? CorpusIndex::load(t.index) : CorpusIndex::build(read_corpus_jsonl(t.corpus)));
        registry.add_corpus(t.tool, std::move(index));
        break;
      }
      case ToolKind::kWebSearch:
        registry.add_web(t.tool,
                         std::make_shared<HttpSearchTransport>(t.endpoint, t.api_key_env, t.timeout_seconds),
                         t.domain_tiers.empty() ? DomainTierMap{} : DomainTierMap::load(t.domain_tiers));
        break;
      case ToolKind::kCalculator:
        registry.add_calculator(t.tool, std::make_shared<const Calculator>(Calculator::with_clinical_scores()));
        break;
    }
  }
  return registry;
}

std::unique_ptr<Runtime> build_runtime(const RunConfig& config) {
  auto rt = std::make_unique<Runtime>();
  if (!config.backend.templates_dir.empty()) {
    rt->templates = std::make_unique<TemplateStore>(TemplateStore::with_overrides(config.backend.templates_dir));
  }
  if (config.backend.kind == "scripted") {
    rt->backend = ScriptedBackend::from_file(config.backend.fixture);
  } else {
    rt->backend = std::make_shared<HttpBackend>(config.backend.http);
  }
  rt->client = std::make_unique<LlmClient>(rt->backend, rt->templates.get(), config.backend.repair_rounds);
  rt->registry = build_registry(config);
  return rt;
}

}  // namespace claimtree
