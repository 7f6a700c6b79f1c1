#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "entromap/common.hpp"
#include "entromap/flow.hpp"
#include "entromap/ingest.hpp"
#include "entromap/lasso.hpp"
#include "entromap/report.hpp"
#include "entromap/search.hpp"
#include "entromap/topo.hpp"

namespace entromap {

struct PipelineConfig {
  std::filesystem::path prices;
  std::filesystem::path universe;
  std::filesystem::path stages;
  std::optional<std::filesystem::path> industries;
  std::filesystem::path out;
  std::uint64_t seed = 42;
  int folds = 10;
  int restarts = 10;
  int top_k = 5;
  int crosstab_k = 9;
};

struct StageOutcome {
  std::string code;
  bool ok = false;
  std::string phase;  ///< failing phase, empty on success
  std::string message;
};

struct PipelineResult {
  std::vector<StageOutcome> stages;
  bool all_ok() const {
    if (stages.empty()) return false;
    for (const auto& s : stages) {
      if (!s.ok) return false;
    }
    return true;
  }
};

/// Everything computed for one stage, before it is written out.
struct StageAnalysis {
  ReturnPanel panel;
  std::vector<LassoFit> fits;
  DirectedAdjacency adjacency;
  /// Heap-held so the partition's pointer to it survives moves.
  std::shared_ptr<const FlowSystem> flow;
  std::optional<SearchResult> search;
  report::StockModules stock_modules;
  report::StockModuleTable modules;
  topo::IndicatorTable indicators;
  topo::Centralities centralities;
};

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

template <typename F>
std::string render(F&& f) {
  std::ostringstream os;
  f(os);
  return os.str();
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Tags exceptions with the phase they came from.
struct PhaseError : Error {
  std::string phase;
  PhaseError(std::string p, const std::string& what) : Error(what), phase(std::move(p)) {}
};

template <typename F>
auto in_phase(const char* phase, F&& f) {
  try {
    return f();
  } catch (const PhaseError&) {
    throw;
  } catch (const std::exception& e) {
    throw PhaseError(phase, e.what());
  }
}

}  // namespace detail

inline StageAnalysis analyze_stage(const ReturnMatrix& returns, const std::vector<std::string>& universe,
                                   const StageDefinition& stage, const PipelineConfig& cfg) {
  StageAnalysis a;
  a.panel = detail::in_phase("slice", [&] { return slice_stage(returns, universe, stage); });
  detail::in_phase("lasso", [&] {
    CvSettings cv;
    cv.folds = cfg.folds;
    cv.seed = cfg.seed;
    auto [fits, adj] = infer_network(a.panel.returns, cv);
    a.fits = std::move(fits);
    a.adjacency = std::move(adj);
    return 0;
  });
  a.flow = detail::in_phase("flow", [&] { return std::make_shared<const FlowSystem>(build_flow_system(a.adjacency)); });
  detail::in_phase("search", [&] {
    SearchConfig sc;
    sc.seed = cfg.seed;
    sc.n_restarts = cfg.restarts;
    a.search = optimize(*a.flow, sc);
    return 0;
  });
  detail::in_phase("topology", [&] {
    a.indicators = topo::indicators(a.adjacency);
    a.centralities = topo::centralities(a.adjacency, topo::Mode::directed);
    return 0;
  });
  detail::in_phase("report", [&] {
    a.stock_modules = report::collapse_partition(a.search->best);
    a.modules = report::module_table(a.search->best, a.adjacency, a.stock_modules);
    return 0;
  });
  return a;
}

/// Writes the per-stage artifacts into `dir`. Returns a notice when the
/// cross-tab was skipped or clamped.
inline std::vector<std::string> write_stage(const StageAnalysis& a, const std::filesystem::path& dir,
                                            const std::optional<IndustryMap>& industries, const PipelineConfig& cfg) {
  std::vector<std::string> notices;
  std::filesystem::create_directories(dir);
  const auto& tickers = a.panel.tickers;
  const auto& part = a.search->best;
  detail::write_file(dir / "edges.tsv", detail::render([&](auto& os) { write_edge_list(os, a.adjacency, tickers); }));
  detail::write_file(dir / "flow.json",
                     detail::render([&](auto& os) { report::write_flow_json(os, report::flow_json(part, a.modules, tickers)); }));
  detail::write_file(dir / "modules.csv", detail::render([&](auto& os) { report::write_module_table(os, a.modules); }));
  detail::write_file(dir / "assignment.csv",
                     detail::render([&](auto& os) { report::write_assignment(os, a.modules, tickers); }));
  detail::write_file(dir / "indicators.csv", detail::render([&](auto& os) {
                       report::write_indicator_header(os);
                       report::write_indicator_row(os, a.panel.stage.code, a.indicators);
                     }));
  std::vector<bool> isolated(tickers.size());
  for (std::size_t s = 0; s < tickers.size(); ++s) isolated[s] = a.stock_modules.module[s] == report::kIsolated;
  const IndustryMap empty;
  auto rankings = report::centrality_rankings(a.centralities, tickers, industries ? *industries : empty, cfg.top_k, isolated);
  detail::write_file(dir / "centrality.csv", detail::render([&](auto& os) { report::write_rankings(os, rankings); }));
  if (industries) {
    auto x = report::cross_tab(a.modules, tickers, *industries, cfg.crosstab_k);
    if (!x.warning.empty()) notices.push_back(x.warning);
    detail::write_file(dir / "crosstab.csv", detail::render([&](auto& os) { report::write_cross_tab(os, x); }));
  } else {
    notices.emplace_back("no industry file, cross-tab skipped");
  }
  detail::write_file(dir / "modules.dot", detail::render([&](auto& os) { report::write_module_dot(os, part, a.modules); }));
  return notices;
}

/// End-to-end run: ingest, one network and module map per stage, tables and
/// a manifest. A failing stage is reported and skipped; the others proceed.
inline PipelineResult run_pipeline(const PipelineConfig& cfg, std::ostream& log) {
  PipelineResult result;
  std::filesystem::create_directories(cfg.out);

  std::string prices_text, universe_text, stages_text, industries_text;
  std::vector<StageDefinition> stages;
  std::optional<IndustryMap> industries;
  std::optional<ReturnMatrix> returns;
  std::vector<std::string> universe;
  std::string ingest_error;
  try {
    prices_text = detail::read_file(cfg.prices);
    universe_text = detail::read_file(cfg.universe);
    stages_text = detail::read_file(cfg.stages);
    {
      std::istringstream in(stages_text);
      stages = parse_stages(in);
    }
    if (cfg.industries) {
      industries_text = detail::read_file(*cfg.industries);
      std::istringstream in(industries_text);
      industries = parse_industries(in);
    } else {
      log << "notice: no industry file given, cross-tabs will be skipped\n";
    }
    std::istringstream pin(prices_text), uin(universe_text);
    auto panel = parse_prices(pin);
    auto flags = parse_universe(uin);
    returns = compute_log_returns(panel);
    universe = filter_universe(*returns, flags, stages);
  } catch (const std::exception& e) {
    ingest_error = e.what();
    log << "error: ingest: " << ingest_error << '\n';
  }

  std::ostringstream indicator_csv;
  report::write_indicator_header(indicator_csv);
  for (const auto& stage : stages) {
    StageOutcome outcome{stage.code, false, "", ""};
    if (!ingest_error.empty()) {
      outcome.phase = "ingest";
      outcome.message = ingest_error;
    } else {
      try {
        auto analysis = analyze_stage(*returns, universe, stage, cfg);
        for (const auto& n : write_stage(analysis, cfg.out / stage.code, industries, cfg)) {
          log << "notice: stage " << stage.code << ": " << n << '\n';
        }
        report::write_indicator_row(indicator_csv, stage.code, analysis.indicators);
        outcome.ok = true;
      } catch (const detail::PhaseError& e) {
        outcome.phase = e.phase;
        outcome.message = e.what();
      } catch (const std::exception& e) {
        outcome.phase = "write";
        outcome.message = e.what();
      }
      if (!outcome.ok) log << "error: stage " << stage.code << ": " << outcome.phase << ": " << outcome.message << '\n';
    }
    result.stages.push_back(outcome);
  }
  if (stages.empty() && ingest_error.empty()) log << "error: no stages defined\n";
  detail::write_file(cfg.out / "indicators.csv", indicator_csv.str());

  // Input contents, not paths, enter the hash so relocated runs agree.
  std::ostringstream canon;
  canon << "prices=" << detail::hex64(fnv1a(prices_text)) << ";universe=" << detail::hex64(fnv1a(universe_text))
        << ";stages=" << detail::hex64(fnv1a(stages_text))
        << ";industries=" << (cfg.industries ? detail::hex64(fnv1a(industries_text)) : "none") << ";seed=" << cfg.seed
        << ";folds=" << cfg.folds << ";restarts=" << cfg.restarts << ";top_k=" << cfg.top_k
        << ";crosstab_k=" << cfg.crosstab_k;
  nlohmann::json manifest;
  manifest["tool"] = "entromap";
  manifest["version"] = kVersion;
  manifest["seed"] = cfg.seed;
  manifest["config_hash"] = detail::hex64(fnv1a(canon.str()));
  manifest["settings"] = {{"folds", cfg.folds}, {"restarts", cfg.restarts}, {"top_k", cfg.top_k}, {"crosstab_k", cfg.crosstab_k}};
  manifest["universe_size"] = universe.size();
  auto st = nlohmann::json::array();
  for (const auto& s : result.stages) {
    st.push_back({{"code", s.code}, {"status", s.ok ? "ok" : "failed"}, {"phase", s.phase}, {"message", s.message}});
  }
  manifest["stages"] = std::move(st);
  detail::write_file(cfg.out / "manifest.json", manifest.dump(2) + "\n");
  return result;
}

}  // namespace entromap
