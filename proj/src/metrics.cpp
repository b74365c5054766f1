#include "claimtree/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "claimtree/error.hpp"
#include "claimtree/text.hpp"
#include "claimtree/util.hpp"

namespace claimtree {

std::vector<GoldLabel> read_gold(const std::filesystem::path& path) {
  std::vector<GoldLabel> out;
  size_t n = 0;
  for (const auto& line : read_lines(path)) {
    const std::string where = path.string() + ":" + std::to_string(++n);
    try {
      json j = json::parse(line);
      GoldLabel g{j.value("sample_id", ""), j.at("text").get<std::string>(),
                  parse_label(j.at("label").get<std::string>()),
                  parse_category(j.at("category").get<std::string>())};
      if (text::trim(g.text).empty()) throw Error(ErrorKind::kInvalidInput, where + ": empty claim text");
      out.push_back(std::move(g));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kParse, where + ": " + e.what());
    }
  }
  return out;
}

std::vector<Prediction> predictions_from_report(const json& report) {
  try {
    std::vector<Prediction> out;
    const std::string sample = report.value("sample_id", "");
    std::optional<Category> category;
    if (report.contains("category") && report["category"].is_string() &&
        !report["category"].get<std::string>().empty()) {
      category = parse_category(report["category"].get<std::string>());
    }
    for (const auto& c : report.at("claims")) {
      out.push_back({sample, category, c.at("claim").get<std::string>(),
                     parse_node_state(c.at("state").get<std::string>())});
    }
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("report: ") + e.what());
  }
}

std::string_view to_string(MatchMode mode) { return mode == MatchMode::kFixed ? "fixed" : "matched"; }

MatchMode parse_match_mode(std::string_view name) {
  if (name == "fixed") return MatchMode::kFixed;
  if (name == "matched") return MatchMode::kMatched;
  throw Error(ErrorKind::kInvalidInput, "unknown match mode '" + std::string(name) + "'");
}

double token_f1(std::string_view a, std::string_view b) {
  auto ta = text::tokenize(a);
  auto tb = text::tokenize(b);
  if (ta.empty() || tb.empty()) return 0.0;
  std::map<std::string, int> counts;
  for (const auto& t : ta) ++counts[t];
  size_t common = 0;
  for (const auto& t : tb) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  return 2.0 * static_cast<double>(common) / static_cast<double>(ta.size() + tb.size());
}

Alignment match_claims(const std::vector<Prediction>& predictions,
                       const std::vector<GoldLabel>& gold, MatchMode mode) {
  Alignment out;
  out.mode = mode;

  std::map<std::string, std::vector<size_t>> gold_by_sample, pred_by_sample;
  std::vector<std::string> sample_order;
  for (size_t i = 0; i < gold.size(); ++i) {
    if (gold_by_sample[gold[i].sample_id].empty()) sample_order.push_back(gold[i].sample_id);
    gold_by_sample[gold[i].sample_id].push_back(i);
  }
  for (size_t i = 0; i < predictions.size(); ++i) {
    if (!gold_by_sample.count(predictions[i].sample_id) && !pred_by_sample.count(predictions[i].sample_id)) {
      sample_order.push_back(predictions[i].sample_id);
    }
    pred_by_sample[predictions[i].sample_id].push_back(i);
  }

  for (const auto& g : gold) {
    out.claims.push_back({g.sample_id, g.category, g.text, g.label, std::nullopt, std::nullopt, 0.0});
  }

  std::vector<std::string> diffs;
  for (const auto& sample : sample_order) {
    const auto& gi = gold_by_sample[sample];
    const auto& pi = pred_by_sample[sample];

    SampleVerdicts verdicts{sample, Category::kPathophysiology, 0, 0, 0};
    if (!gi.empty()) {
      verdicts.category = gold[gi.front()].category;
    } else if (!pi.empty() && predictions[pi.front()].category) {
      verdicts.category = *predictions[pi.front()].category;
    }
    for (size_t p : pi) {
      switch (predictions[p].state) {
        case NodeState::kAccepted: ++verdicts.accepted; break;
        case NodeState::kRejected: ++verdicts.rejected; break;
        default: ++verdicts.unsubstantiated; break;
      }
    }
    if (!gi.empty()) out.samples.push_back(verdicts);

    std::vector<bool> pred_used(pi.size(), false);
    if (mode == MatchMode::kFixed) {
      for (size_t g : gi) {
        const std::string key = text::normalize_claim(gold[g].text);
        bool found = false;
        for (size_t k = 0; k < pi.size() && !found; ++k) {
          if (!pred_used[k] && text::normalize_claim(predictions[pi[k]].claim) == key) {
            pred_used[k] = true;
            found = true;
            out.claims[g].predicted_text = predictions[pi[k]].claim;
            out.claims[g].state = predictions[pi[k]].state;
            out.claims[g].similarity = 1.0;
          }
        }
        if (!found) diffs.push_back("sample '" + sample + "': no prediction for gold claim '" + gold[g].text + "'");
      }
      for (size_t k = 0; k < pi.size(); ++k) {
        if (!pred_used[k]) {
          diffs.push_back("sample '" + sample + "': prediction '" + predictions[pi[k]].claim + "' has no gold claim");
        }
      }
      continue;
    }

    struct Candidate {
      double f1;
      size_t g;  // position in gi
      size_t p;  // position in pi
    };
    std::vector<Candidate> candidates;
    for (size_t a = 0; a < gi.size(); ++a) {
      for (size_t b = 0; b < pi.size(); ++b) {
        double f1 = token_f1(gold[gi[a]].text, predictions[pi[b]].claim);
        if (f1 >= kMatchThreshold) candidates.push_back({f1, a, b});
      }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
      if (x.f1 != y.f1) return x.f1 > y.f1;
      if (x.g != y.g) return x.g < y.g;
      return x.p < y.p;
    });
    std::vector<bool> gold_used(gi.size(), false);
    for (const auto& c : candidates) {
      if (gold_used[c.g] || pred_used[c.p]) continue;
      gold_used[c.g] = pred_used[c.p] = true;
      AlignedClaim& a = out.claims[gi[c.g]];
      a.predicted_text = predictions[pi[c.p]].claim;
      a.state = predictions[pi[c.p]].state;
      a.similarity = c.f1;
    }
    for (size_t k = 0; k < pi.size(); ++k) {
      if (!pred_used[k]) out.unmatched_predictions.push_back(predictions[pi[k]]);
    }
  }
  if (!diffs.empty()) {
    throw Error(ErrorKind::kClaimSetMismatch, "claim sets differ:\n  " + text::join(diffs, "\n  "));
  }
  return out;
}

namespace {

bool is_correct(const AlignedClaim& c) {
  if (!c.state) return false;
  return (*c.state == NodeState::kAccepted && c.label == Label::kFactual) ||
         (*c.state == NodeState::kRejected && c.label == Label::kFalsified);
}

}  // namespace

double accuracy(const Alignment& alignment) {
  if (alignment.claims.empty()) throw Error(ErrorKind::kUndefinedMetric, "accuracy of an empty alignment");
  size_t correct = static_cast<size_t>(std::count_if(alignment.claims.begin(), alignment.claims.end(), is_correct));
  return static_cast<double>(correct) / static_cast<double>(alignment.claims.size());
}

double precision_of(size_t supported, size_t not_supported) {
  size_t total = supported + not_supported;
  return total == 0 ? 0.0 : static_cast<double>(supported) / static_cast<double>(total);
}

double recall_at_k(size_t supported, size_t k) {
  if (k == 0) throw Error(ErrorKind::kInvalidInput, "K must be >= 1");
  return static_cast<double>(std::min(supported, k)) / static_cast<double>(k);
}

double f1_at_k(size_t supported, size_t not_supported, size_t k) {
  if (k == 0) throw Error(ErrorKind::kInvalidInput, "K must be >= 1");
  if (supported == 0) return 0.0;
  // 2PR / (P + R) with P = S/T and R = m/K reduces to 2Sm / (SK + mT); a
  // single division keeps the result correctly rounded.
  const size_t t = supported + not_supported;
  const size_t m = std::min(supported, k);
  return static_cast<double>(2 * supported * m) / static_cast<double>(supported * k + m * t);
}

VerdictCounts& VerdictCounts::operator+=(const VerdictCounts& other) {
  accepted += other.accepted;
  rejected += other.rejected;
  unsubstantiated += other.unsubstantiated;
  unmatched += other.unmatched;
  return *this;
}

namespace {

MetricsRow compute_row(const std::vector<const AlignedClaim*>& claims,
                       const std::vector<const SampleVerdicts*>& samples, const std::vector<size_t>& ks) {
  MetricsRow row;
  size_t correct = 0;
  for (const auto* c : claims) {
    if (is_correct(*c)) ++correct;
    if (!c->state) {
      ++row.counts.unmatched;
    } else if (*c->state == NodeState::kAccepted) {
      ++row.counts.accepted;
    } else if (*c->state == NodeState::kRejected) {
      ++row.counts.rejected;
    } else {
      ++row.counts.unsubstantiated;
    }
  }
  row.accuracy = claims.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(claims.size());
  row.num_samples = samples.size();
  for (size_t k : ks) {
    row.recall_at[k] = 0;
    row.f1_at[k] = 0;
  }
  if (samples.empty()) return row;
  const double n = static_cast<double>(samples.size());
  for (const auto* s : samples) {
    const size_t not_supported = s->rejected + s->unsubstantiated;
    row.precision += precision_of(s->accepted, not_supported) / n;
    for (size_t k : ks) {
      row.recall_at[k] += recall_at_k(s->accepted, k) / n;
      row.f1_at[k] += f1_at_k(s->accepted, not_supported, k) / n;
    }
  }
  return row;
}

json row_json(const MetricsRow& row) {
  json recall = json::object(), f1 = json::object();
  for (const auto& [k, v] : row.recall_at) recall[std::to_string(k)] = v;
  for (const auto& [k, v] : row.f1_at) f1[std::to_string(k)] = v;
  return {{"accuracy", row.accuracy},
          {"precision", row.precision},
          {"recall_at", std::move(recall)},
          {"f1_at", std::move(f1)},
          {"counts",
           {{"accepted", row.counts.accepted},
            {"rejected", row.counts.rejected},
            {"unsubstantiated", row.counts.unsubstantiated},
            {"unmatched", row.counts.unmatched}}},
          {"num_samples", row.num_samples}};
}

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v * 100.0);
  return buf;
}

}  // namespace

MetricsReport report(const Alignment& alignment, const std::vector<size_t>& ks) {
  if (ks.empty()) throw Error(ErrorKind::kInvalidInput, "at least one K is required");
  if (std::find(ks.begin(), ks.end(), size_t{0}) != ks.end()) {
    throw Error(ErrorKind::kInvalidInput, "K must be >= 1");
  }
  MetricsReport r;
  r.mode = alignment.mode;
  r.ks = ks;
  std::sort(r.ks.begin(), r.ks.end());
  r.ks.erase(std::unique(r.ks.begin(), r.ks.end()), r.ks.end());

  std::map<Category, std::vector<const AlignedClaim*>> claims_by;
  std::map<Category, std::vector<const SampleVerdicts*>> samples_by;
  std::vector<const AlignedClaim*> all_claims;
  std::vector<const SampleVerdicts*> all_samples;
  for (const auto& c : alignment.claims) {
    claims_by[c.category].push_back(&c);
    all_claims.push_back(&c);
  }
  for (const auto& s : alignment.samples) {
    samples_by[s.category].push_back(&s);
    all_samples.push_back(&s);
  }
  for (const auto& [cat, claims] : claims_by) r.per_category[cat] = compute_row(claims, samples_by[cat], r.ks);
  r.overall = compute_row(all_claims, all_samples, r.ks);

  for (size_t k : r.ks) {
    r.avg.recall_at[k] = 0;
    r.avg.f1_at[k] = 0;
  }
  if (!r.per_category.empty()) {
    const double n = static_cast<double>(r.per_category.size());
    for (const auto& [cat, row] : r.per_category) {
      r.avg.accuracy += row.accuracy / n;
      r.avg.precision += row.precision / n;
      for (size_t k : r.ks) {
        r.avg.recall_at[k] += row.recall_at.at(k) / n;
        r.avg.f1_at[k] += row.f1_at.at(k) / n;
      }
      r.avg.counts += row.counts;
      r.avg.num_samples += row.num_samples;
    }
  }
  return r;
}

json MetricsReport::to_json() const {
  json cats = json::object();
  for (const auto& [cat, row] : per_category) cats[std::string(to_string(cat))] = row_json(row);
  return {{"schema_version", 1},
          {"match_mode", std::string(to_string(mode))},
          {"ks", ks},
          {"categories", std::move(cats)},
          {"avg", row_json(avg)},
          {"overall", row_json(overall)}};
}

std::string MetricsReport::render_table() const {
  std::vector<std::string> header{"Metric"};
  std::vector<const MetricsRow*> cols;
  for (const auto& [cat, row] : per_category) {
    header.push_back(std::string(to_string(cat)));
    cols.push_back(&row);
  }
  header.push_back("Avg");
  cols.push_back(&avg);

  std::vector<std::vector<std::string>> rows{header};
  auto add = [&](const std::string& name, auto value) {
    std::vector<std::string> line{name};
    for (const auto* c : cols) line.push_back(value(*c));
    rows.push_back(std::move(line));
  };
  add("Accuracy", [](const MetricsRow& r) { return percent(r.accuracy); });
  add("Precision", [](const MetricsRow& r) { return percent(r.precision); });
  for (size_t k : ks) add("Recall@" + std::to_string(k), [k](const MetricsRow& r) { return percent(r.recall_at.at(k)); });
  for (size_t k : ks) add("F1@" + std::to_string(k), [k](const MetricsRow& r) { return percent(r.f1_at.at(k)); });
  add("Accepted", [](const MetricsRow& r) { return std::to_string(r.counts.accepted); });
  add("Rejected", [](const MetricsRow& r) { return std::to_string(r.counts.rejected); });
  add("Unsubstantiated", [](const MetricsRow& r) { return std::to_string(r.counts.unsubstantiated); });
  add("Unmatched", [](const MetricsRow& r) { return std::to_string(r.counts.unmatched); });

  std::vector<size_t> width(header.size(), 0);
  for (const auto& line : rows) {
    for (size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());
  }
  std::string out;
  for (size_t r = 0; r < rows.size(); ++r) {
    for (size_t i = 0; i < rows[r].size(); ++i) {
      const std::string& cell = rows[r][i];
      std::string pad(width[i] - cell.size(), ' ');
      out += i == 0 ? cell + pad : "  " + pad + cell;
    }
    out += "\n";
    if (r == 0) {
      size_t total = width[0];
      for (size_t i = 1; i < width.size(); ++i) total += width[i] + 2;
      out += std::string(total, '-') + "\n";
    }
  }
  return out;
}

}  // namespace claimtree
