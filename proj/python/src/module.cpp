#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "claimtree/bench.hpp"
#include "claimtree/config.hpp"
#include "claimtree/engine.hpp"
#include "claimtree/error.hpp"
#include "claimtree/extract.hpp"
#include "claimtree/falsify.hpp"
#include "claimtree/metrics.hpp"
#include "claimtree/run_store.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace claimtree;

namespace {

// A loaded configuration with its backend, templates and tool registry.
class Session {
 public:
  Session(const fs::path& config, bool deterministic, std::optional<size_t> jobs)
      : config_(RunConfig::load(config)) {
    if (deterministic) config_.engine.consolidation = ConsolidationMode::kDeterministic;
    if (jobs) config_.engine.jobs = *jobs;
    config_.engine.validate();
    runtime_ = build_runtime(config_);
  }

  std::string extract(const std::string& passage, const std::string& strategy) const {
    auto chosen = strategy.empty() ? config_.engine.strategy : parse_extraction_strategy(strategy);
    json out = json::array();
    for (const auto& c : extract_claims(passage, chosen, *runtime_->client)) {
      out.push_back({{"text", c.text},
                     {"span_start", c.span_start},
                     {"span_end", c.span_end},
                     {"self_contained", c.self_contained}});
    }
    return out.dump();
  }

  std::string verify(const std::string& query, const std::optional<std::vector<std::string>>& claims,
                     const std::string& sample_id, const std::string& category,
                     const std::optional<fs::path>& out) const {
    const std::string cat = category.empty() ? "" : std::string(to_string(parse_category(category)));
    Verifier verifier(config_.engine, *runtime_->client, runtime_->registry);
    VerificationRun run = verifier.run(query, claims);
    RunMeta meta{sample_id, cat};
    if (out) {
      json record = {{"schema_version", kRunSchemaVersion},
                     {"command", "verify"},
                     {"sample_id", sample_id},
                     {"category", cat},
                     {"query", query},
                     {"fixed_claims", claims ? json(*claims) : json(nullptr)},
                     {"deterministic", config_.engine.consolidation == ConsolidationMode::kDeterministic},
                     {"config", config_.to_json()}};
      persist_run(*out, record, run, meta);
    }
    return build_report(run, meta).dump();
  }

  std::string config_json() const { return config_.to_json().dump(); }

 private:
  RunConfig config_;
  std::unique_ptr<Runtime> runtime_;
};

std::string evaluate(const fs::path& gold, const std::vector<std::string>& reports, const std::string& mode,
                     const std::vector<size_t>& ks) {
  std::vector<Prediction> predictions;
  for (const auto& r : reports) {
    auto preds = predictions_from_report(json::parse(r));
    predictions.insert(predictions.end(), preds.begin(), preds.end());
  }
  Alignment alignment = match_claims(predictions, read_gold(gold), parse_match_mode(mode));
  return report(alignment, ks).to_json().dump();
}

py::dict falsify_claim(const std::string& claim, const std::string& op, uint64_t seed) {
  Falsification f = falsify(claim, parse_falsify_operator(op), seed);
  py::dict d;
  d["text"] = f.text;
  d["operator"] = std::string(to_string(f.meta.op));
  d["original_claim"] = f.meta.original_claim;
  d["seed"] = f.meta.seed;
  return d;
}

}  // namespace

PYBIND11_MODULE(_claimtree, m) {
  m.doc() = "Recursive claim verification trees and benchmark tooling";

  static py::exception<Error> error(m, "ClaimtreeError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  py::class_<Session>(m, "Session")
      .def(py::init<const fs::path&, bool, std::optional<size_t>>(), py::arg("config"),
           py::arg("deterministic") = false, py::arg("jobs") = py::none())
      .def("extract", &Session::extract, py::arg("passage"), py::arg("strategy") = "",
           py::call_guard<py::gil_scoped_release>())
      .def("verify", &Session::verify, py::arg("query"), py::arg("claims") = py::none(),
           py::arg("sample_id") = "", py::arg("category") = "", py::arg("out") = py::none(),
           py::call_guard<py::gil_scoped_release>())
      .def("config", &Session::config_json);

  m.def("precision", &precision_of, py::arg("supported"), py::arg("not_supported"));
  m.def("recall_at_k", &recall_at_k, py::arg("supported"), py::arg("k"));
  m.def("f1_at_k", &f1_at_k, py::arg("supported"), py::arg("not_supported"), py::arg("k"));
  m.def("token_f1", &token_f1, py::arg("a"), py::arg("b"));
  m.def(
      "consolidate_states",
      [](const std::vector<std::string>& children) {
        std::vector<NodeState> states;
        for (const auto& c : children) states.push_back(parse_node_state(c));
        return std::string(to_string(consolidate_states(states)));
      },
      py::arg("children"));
  m.def("falsify", &falsify_claim, py::arg("claim"), py::arg("operator"), py::arg("seed"));
  m.def(
      "applicable_operators",
      [](const std::string& claim) {
        std::vector<std::string> out;
        for (auto op : applicable_operators(claim)) out.emplace_back(to_string(op));
        return out;
      },
      py::arg("claim"));
  m.def("scale_numeral", &scale_numeral, py::arg("numeral"), py::arg("factor"));
  m.def(
      "dataset_stats", [](const fs::path& records) { return stats(read_records(records)).to_json().dump(); },
      py::arg("records"));
  m.def(
      "table_row_means", [](const std::string& table) { return table_row_means(json::parse(table)); },
      py::arg("table"));
  m.def("evaluate", &evaluate, py::arg("gold"), py::arg("reports"), py::arg("mode") = "fixed",
        py::arg("ks") = std::vector<size_t>{5, 10});
}
