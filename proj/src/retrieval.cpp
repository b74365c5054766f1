#include "claimtree/retrieval.hpp"

#include "claimtree/error.hpp"
#include "claimtree/text.hpp"
#include "claimtree/util.hpp"

namespace claimtree {
namespace {

constexpr size_t kKeywordLimit = 12;

const Tool* fallback_tool(const ToolRegistry& registry) {
  for (ToolKind kind : {ToolKind::kCorpusSearch, ToolKind::kWebSearch}) {
    for (const auto& tool : registry.tools()) {
      if (tool.kind == kind) return &tool;
    }
  }
  return nullptr;
}

}  // namespace

std::string_view to_string(ToolKind kind) {
  switch (kind) {
    case ToolKind::kCorpusSearch: return "corpus_search";
    case ToolKind::kWebSearch: return "web_search";
    case ToolKind::kCalculator: return "calculator";
  }
  return "corpus_search";
}

ToolKind parse_tool_kind(std::string_view name) {
  std::string key = text::to_lower(name);
  if (key == "corpus_search" || key == "corpus") return ToolKind::kCorpusSearch;
  if (key == "web_search" || key == "web") return ToolKind::kWebSearch;
  if (key == "calculator") return ToolKind::kCalculator;
  throw Error(ErrorKind::kInvalidInput, "unknown tool kind '" + std::string(name) + "'");
}

void ToolRegistry::add(Tool tool, Backing backing) {
  if (text::trim(tool.id).empty()) throw Error(ErrorKind::kInvalidInput, "tool without id");
  if (find(tool.id)) throw Error(ErrorKind::kDuplicateId, "tool '" + tool.id + "' registered twice");
  tools_.push_back(std::move(tool));
  backings_.push_back(std::move(backing));
}

void ToolRegistry::add_corpus(Tool tool, std::shared_ptr<const CorpusIndex> index) {
  if (!index) throw Error(ErrorKind::kInvalidInput, "corpus tool without index");
  tool.kind = ToolKind::kCorpusSearch;
  Backing b;
  b.corpus = std::move(index);
  add(std::move(tool), std::move(b));
}

void ToolRegistry::add_web(Tool tool, std::shared_ptr<SearchTransport> transport,
                           DomainTierMap tiers, int retries) {
  if (!transport) throw Error(ErrorKind::kInvalidInput, "web tool without transport");
  tool.kind = ToolKind::kWebSearch;
  Backing b;
  b.web = std::move(transport);
  b.tiers = std::move(tiers);
  b.retries = retries;
  add(std::move(tool), std::move(b));
}

void ToolRegistry::add_calculator(Tool tool, std::shared_ptr<const Calculator> calculator) {
  if (!calculator) throw Error(ErrorKind::kInvalidInput, "calculator tool without calculator");
  tool.kind = ToolKind::kCalculator;
  Backing b;
  b.calculator = std::move(calculator);
  add(std::move(tool), std::move(b));
}

const Tool* ToolRegistry::find(std::string_view id) const {
  for (const auto& tool : tools_) {
    if (tool.id == id) return &tool;
  }
  return nullptr;
}

std::string ToolRegistry::describe() const {
  std::string out;
  for (const auto& tool : tools_) {
    out += "- " + tool.id + " (" + std::string(to_string(tool.kind)) + "): " + tool.description + "\n";
  }
  return out;
}

std::vector<RawDocument> ToolRegistry::execute(const QueryPlan& plan, size_t max_results) const {
  if (text::trim(plan.query).empty()) throw Error(ErrorKind::kInvalidInput, "empty query");
  size_t index = 0;
  while (index < tools_.size() && tools_[index].id != plan.tool_id) ++index;
  if (index == tools_.size()) {
    throw Error(ErrorKind::kInvalidInput, "tool '" + plan.tool_id + "' is not registered");
  }
  const Tool& tool = tools_[index];
  const Backing& backing = backings_[index];
  std::vector<RawDocument> docs;

  switch (tool.kind) {
    case ToolKind::kCorpusSearch: {
      for (const auto& hit : backing.corpus->search(plan.query, max_results)) {
        const auto& doc = backing.corpus->documents()[hit.doc];
        docs.push_back(RawDocument{doc.id, tool.id, doc.tier, doc.title, doc.body,
                                   "corpus://" + tool.id + "/" + doc.id});
      }
      break;
    }
    case ToolKind::kCalculator: {
      double value = backing.calculator->evaluate(plan.query);
      docs.push_back(RawDocument{sha256_hex(plan.query).substr(0, 12), tool.id,
                                 SourceTier::kPeerReviewed, "Calculator: " + plan.query,
                                 text::format_number(value), ""});
      break;
    }
    case ToolKind::kWebSearch: {
      std::vector<WebHit> hits;
      for (int attempt = 0;; ++attempt) {
        try {
          hits = backing.web->search(plan.query, max_results);
          break;
        } catch (const Error& e) {
          bool retriable = e.kind() == ErrorKind::kTransport || e.kind() == ErrorKind::kTimeout;
          if (!retriable || attempt >= backing.retries) throw;
        }
      }
      for (const auto& hit : hits) {
        if (docs.size() >= max_results) break;
        std::string key = hit.uri.empty() ? hit.title + "\n" + hit.snippet : hit.uri;
        docs.push_back(RawDocument{sha256_hex(key).substr(0, 12), tool.id,
                                   backing.tiers.lookup(hit.domain), hit.title, hit.snippet,
                                   hit.uri});
      }
      break;
    }
  }
  if (docs.size() > max_results) docs.resize(max_results);
  return docs;
}

std::string keyword_query(std::string_view claim) {
  auto words = text::content_word_sequence(claim);
  if (words.size() > kKeywordLimit) words.resize(kKeywordLimit);
  if (words.empty()) return text::trim(claim);
  return text::join(words, " ");
}

QueryPlan plan_query(const ClaimNode& node, const ClaimNode* parent, const ToolRegistry& registry,
                     const LlmClient& client) {
  if (registry.empty()) throw Error(ErrorKind::kInvalidInput, "tool registry is empty");
  if (node.finalized()) {
    throw Error(ErrorKind::kInvalidInput, "node " + node.id.str() + " is already final");
  }
  const bool forced = registry.tools().size() == 1;
  Variables vars{{"tools", registry.describe()},
                 {"claim", node.claim},
                 {"parent_claim", parent ? parent->claim : std::string("(none)")}};
  QueryPlan plan;
  plan.origin_node = node.id;
  try {
    json response = client.complete(PromptRole::kQuery, vars, [&](const json& r) {
      if (!forced && !registry.find(r["tool_id"].get<std::string>())) {
        throw Error(ErrorKind::kSchemaInvalid,
                    "tool '" + r["tool_id"].get<std::string>() + "' is not available");
      }
    });
    plan.tool_id = forced ? registry.tools().front().id : response["tool_id"].get<std::string>();
    plan.query = text::trim(response["query"].get<std::string>());
    return plan;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kSchemaInvalid) throw;
  }
  const Tool* tool = fallback_tool(registry);
  if (!tool) {
    throw Error(ErrorKind::kInvalidInput, "no search tool to fall back to for node " + node.id.str());
  }
  plan.tool_id = tool->id;
  plan.query = keyword_query(node.claim);
  plan.fallback = true;
  return plan;
}

}  // namespace claimtree
