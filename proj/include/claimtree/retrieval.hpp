#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "claimtree/calculator.hpp"
#include "claimtree/corpus.hpp"
#include "claimtree/evidence.hpp"
#include "claimtree/llm.hpp"
#include "claimtree/tree.hpp"
#include "claimtree/web_search.hpp"

namespace claimtree {

enum class ToolKind { kCorpusSearch, kWebSearch, kCalculator };

std::string_view to_string(ToolKind kind);
ToolKind parse_tool_kind(std::string_view name);

struct Tool {
  std::string id;
  ToolKind kind = ToolKind::kCorpusSearch;
  std::string description;  // shown to the query planner
};

struct QueryPlan {
  std::string tool_id;
  std::string query;  // search string or calculator expression
  NodeId origin_node;
  bool fallback = false;  // planner output was unusable; keyword query used
};

inline constexpr size_t kDefaultMaxResults = 8;

// Tools and their backing services. Read-only after construction, so
// execute() may run concurrently.
class ToolRegistry {
 public:
  void add_corpus(Tool tool, std::shared_ptr<const CorpusIndex> index);
  void add_web(Tool tool, std::shared_ptr<SearchTransport> transport, DomainTierMap tiers = {},
               int retries = 2);
  void add_calculator(Tool tool, std::shared_ptr<const Calculator> calculator);

  bool empty() const { return tools_.empty(); }
  const std::vector<Tool>& tools() const { return tools_; }
  const Tool* find(std::string_view id) const;

  // At most max_results documents. Calculator plans yield exactly one
  // document holding the value; evaluation errors throw kEvidenceUnavailable.
  // Web transport errors are retried, then rethrown.
  std::vector<RawDocument> execute(const QueryPlan& plan,
                                   size_t max_results = kDefaultMaxResults) const;

  // Tool list as rendered into the planning prompt.
  std::string describe() const;

 private:
  struct Backing {
    std::shared_ptr<const CorpusIndex> corpus;
    std::shared_ptr<SearchTransport> web;
    DomainTierMap tiers;
    int retries = 0;
    std::shared_ptr<const Calculator> calculator;
  };
  void add(Tool tool, Backing backing);

  std::vector<Tool> tools_;
  std::vector<Backing> backings_;
};

// Keyword query from the claim's content words (at most 12), used when the
// planner cannot be trusted.
std::string keyword_query(std::string_view claim);

// Asks the planner for {tool, query}. With a single registered tool that tool
// is always used. When the planner's output stays unusable after the repair
// rounds, falls back to the first corpus (else web) tool with a keyword query.
QueryPlan plan_query(const ClaimNode& node, const ClaimNode* parent, const ToolRegistry& registry,
                     const LlmClient& client);

}  // namespace claimtree
