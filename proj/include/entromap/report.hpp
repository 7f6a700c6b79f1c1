#pragma once

#include <algorithm>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "entromap/flow.hpp"
#include "entromap/ingest.hpp"
#include "entromap/lasso.hpp"
#include "entromap/search.hpp"
#include "entromap/text.hpp"
#include "entromap/topo.hpp"

namespace entromap::report {

inline constexpr int kIsolated = -1;

/// Stock-level module per stock (flow-module id), or kIsolated when both
/// role copies sit outside the walk.
struct StockModules {
  std::vector<int> module;
  int isolated_count() const { return static_cast<int>(std::count(module.begin(), module.end(), kIsolated)); }
};

/// Resolves the two role copies of each stock to one module: agreement
/// wins, otherwise the copy with the larger visit rate, the out-copy on ties.
inline StockModules collapse_partition(const Partition& p) {
  const auto& fs = p.flow_system();
  StockModules out;
  out.module.assign(static_cast<std::size_t>(fs.n_stocks), kIsolated);
  for (int s = 0; s < fs.n_stocks; ++s) {
    const int a = p.module_of(fs.out_copy(s)), b = p.module_of(fs.in_copy(s));
    if (a < 0 && b < 0) continue;
    if (a == b || b < 0) {
      out.module[static_cast<std::size_t>(s)] = a;
    } else if (a < 0) {
      out.module[static_cast<std::size_t>(s)] = b;
    } else {
      const double va = fs.visit[static_cast<std::size_t>(fs.out_copy(s))];
      const double vb = fs.visit[static_cast<std::size_t>(fs.in_copy(s))];
      out.module[static_cast<std::size_t>(s)] = vb > va ? b : a;
    }
  }
  return out;
}

/// Fractions of total flow per flow module.
struct FlowShare {
  double within = 0.0;    ///< flow on links with both ends in the module
  double flow_in = 0.0;   ///< boundary flow entering the module
  double flow_out = 0.0;  ///< boundary flow leaving the module (exit frequency)
};

inline std::vector<FlowShare> flow_shares(const Partition& p) {
  const auto& fs = p.flow_system();
  std::vector<FlowShare> out(static_cast<std::size_t>(p.module_count()));
  for (int i = 0; i < fs.n_flow(); ++i) {
    const int a = p.module_of(i);
    if (a < 0) continue;
    for (auto [j, prob] : fs.transition[static_cast<std::size_t>(i)]) {
      const double f = prob * fs.visit[static_cast<std::size_t>(i)];
      const int b = p.module_of(j);
      if (a == b) {
        out[static_cast<std::size_t>(a)].within += f;
      } else {
        out[static_cast<std::size_t>(a)].flow_out += f;
        out[static_cast<std::size_t>(b)].flow_in += f;
      }
    }
  }
  return out;
}

struct ModuleRow {
  std::string name;     ///< M1, M2, ... by within-module flow, descending
  int flow_module = 0;  ///< id in the underlying flow partition
  int node_count = 0;
  int link_count = 0;
  FlowShare share;
  double usage = 0.0;
};

struct StockModuleTable {
  std::vector<ModuleRow> rows;
  int isolated = 0;
  /// Row index per stock, kIsolated for isolated stocks.
  std::vector<int> stock_row;

  const std::string& name_of_stock(int s) const {
    static const std::string iso = "isolated";
    const int r = stock_row[static_cast<std::size_t>(s)];
    return r < 0 ? iso : rows[static_cast<std::size_t>(r)].name;
  }
};

/// Orders flow modules by within-module flow (ties by module id), names them
/// M1..Mm and counts member stocks and the directed links among them.
inline StockModuleTable module_table(const Partition& p, const DirectedAdjacency& adj, const StockModules& stocks) {
  const auto shares = flow_shares(p);
  const int m = p.module_count();
  std::vector<int> order(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) order[static_cast<std::size_t>(k)] = k;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return shares[static_cast<std::size_t>(a)].within > shares[static_cast<std::size_t>(b)].within;
  });
  std::vector<int> rank(static_cast<std::size_t>(m));
  StockModuleTable t;
  for (int r = 0; r < m; ++r) {
    const int k = order[static_cast<std::size_t>(r)];
    rank[static_cast<std::size_t>(k)] = r;
    ModuleRow row;
    row.name = "M" + std::to_string(r + 1);
    row.flow_module = k;
    row.share = shares[static_cast<std::size_t>(k)];
    row.usage = p.usage(k);
    t.rows.push_back(row);
  }
  t.stock_row.assign(stocks.module.size(), kIsolated);
  for (std::size_t s = 0; s < stocks.module.size(); ++s) {
    const int k = stocks.module[s];
    if (k == kIsolated) {
      ++t.isolated;
      continue;
    }
    t.stock_row[s] = rank[static_cast<std::size_t>(k)];
    ++t.rows[static_cast<std::size_t>(t.stock_row[s])].node_count;
  }
  for (auto [i, j] : adj.entries) {
    const int ri = t.stock_row[static_cast<std::size_t>(i)];
    if (ri != kIsolated && ri == t.stock_row[static_cast<std::size_t>(j)]) ++t.rows[static_cast<std::size_t>(ri)].link_count;
  }
  return t;
}

struct IndustryCrossTab {
  std::vector<std::string> industries;  ///< sorted, "unknown" last when present
  std::vector<std::string> modules;
  std::vector<std::vector<int>> counts;  ///< [industry][module]
  std::string warning;
};

inline constexpr const char* kUnknownIndustry = "unknown";

/// Stock counts per (industry, module) over the first top_k modules of the
/// table. Stocks without an industry label land in the "unknown" row.
inline IndustryCrossTab cross_tab(const StockModuleTable& table, const std::vector<std::string>& tickers,
                                  const IndustryMap& industries, int top_k) {
  IndustryCrossTab x;
  const int m = static_cast<int>(table.rows.size());
  if (top_k > m) {
    x.warning = "top_k " + std::to_string(top_k) + " exceeds module count " + std::to_string(m) + ", clamped";
    top_k = m;
  }
  top_k = std::max(top_k, 0);
  std::set<std::string> known;
  bool unknown = false;
  for (std::size_t s = 0; s < tickers.size(); ++s) {
    const int r = table.stock_row[s];
    if (r < 0 || r >= top_k) continue;
    auto it = industries.find(tickers[s]);
    if (it == industries.end()) {
      unknown = true;
    } else {
      known.insert(it->second);
    }
  }
  x.industries.assign(known.begin(), known.end());
  if (unknown) x.industries.emplace_back(kUnknownIndustry);
  for (int r = 0; r < top_k; ++r) x.modules.push_back(table.rows[static_cast<std::size_t>(r)].name);
  x.counts.assign(x.industries.size(), std::vector<int>(static_cast<std::size_t>(top_k), 0));
  for (std::size_t s = 0; s < tickers.size(); ++s) {
    const int r = table.stock_row[s];
    if (r < 0 || r >= top_k) continue;
    auto it = industries.find(tickers[s]);
    const std::string& label = it == industries.end() ? std::string(kUnknownIndustry) : it->second;
    std::size_t row = 0;
    if (it == industries.end()) {
      row = x.industries.size() - 1;
    } else {
      row = static_cast<std::size_t>(std::lower_bound(x.industries.begin(), x.industries.end() - (unknown ? 1 : 0), label) -
                                     x.industries.begin());
    }
    ++x.counts[row][static_cast<std::size_t>(r)];
  }
  return x;
}

struct RankedStock {
  std::string ticker;
  std::string industry;
  double value = 0.0;
};

struct CentralityRanking {
  std::string kind;  ///< degree, betweenness or closeness
  std::vector<RankedStock> entries;
};

/// Top-K stocks for relative degree, betweenness and closeness (directed
/// variants averaged over in and out roles). Values descend, ties by ticker.
/// Stocks flagged in `excluded` are skipped.
inline std::vector<CentralityRanking> centrality_rankings(const topo::Centralities& c,
                                                          const std::vector<std::string>& tickers,
                                                          const IndustryMap& industries, int top_k,
                                                          const std::vector<bool>& excluded = {}) {
  std::vector<CentralityRanking> out;
  const std::pair<const char*, const std::vector<double>*> kinds[] = {
      {"degree", &c.degree}, {"betweenness", &c.betweenness}, {"closeness", &c.closeness}};
  for (auto [kind, values] : kinds) {
    std::vector<RankedStock> all;
    for (std::size_t s = 0; s < tickers.size(); ++s) {
      if (!excluded.empty() && excluded[s]) continue;
      auto it = industries.find(tickers[s]);
      all.push_back({tickers[s], it == industries.end() ? kUnknownIndustry : it->second, (*values)[s]});
    }
    std::sort(all.begin(), all.end(), [](const RankedStock& a, const RankedStock& b) {
      return a.value != b.value ? a.value > b.value : a.ticker < b.ticker;
    });
    if (static_cast<int>(all.size()) > top_k) all.resize(static_cast<std::size_t>(std::max(top_k, 0)));
    out.push_back({kind, std::move(all)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Writers and parsers. All output is LF-terminated with a fixed field order.

inline constexpr const char* kModuleTableNote =
    "# within_pct: flow on links inside the module; flow_in_pct: boundary flow entering the module; "
    "flow_out_pct: boundary flow leaving the module (exit frequency); all as percent of total flow";

inline void write_module_table(std::ostream& out, const StockModuleTable& t) {
  out << kModuleTableNote << '\n';
  out << "# isolated_stocks: " << t.isolated << '\n';
  out << "module,node_count,link_count,within_pct,flow_in_pct,flow_out_pct\n";
  for (const auto& r : t.rows) {
    out << r.name << ',' << r.node_count << ',' << r.link_count << ',' << text::fmt_fixed(100.0 * r.share.within, 2)
        << ',' << text::fmt_fixed(100.0 * r.share.flow_in, 2) << ',' << text::fmt_fixed(100.0 * r.share.flow_out, 2)
        << '\n';
  }
}

/// Reads back a module table; shares come back as fractions rounded to the
/// printed precision. flow_module and usage are not part of the file.
inline StockModuleTable parse_module_table(std::istream& in) {
  StockModuleTable t;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (text::getline(in, line)) {
    ++lineno;
    if (line.rfind("# isolated_stocks: ", 0) == 0) {
      auto v = text::parse_int(line.substr(19));
      if (!v) throw Error(text::at_line(lineno) + "bad isolated count");
      t.isolated = static_cast<int>(*v);
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "module,node_count,link_count,within_pct,flow_in_pct,flow_out_pct") {
        throw Error(text::at_line(lineno) + "malformed module table header");
      }
      header = true;
      continue;
    }
    auto f = text::split(line);
    if (f.size() != 6) throw Error(text::at_line(lineno) + "expected 6 fields");
    ModuleRow r;
    r.name = f[0];
    auto nodes = text::parse_int(f[1]), links = text::parse_int(f[2]);
    auto w = text::parse_double(f[3]), fi = text::parse_double(f[4]), fo = text::parse_double(f[5]);
    if (!nodes || !links || !w || !fi || !fo) throw Error(text::at_line(lineno) + "bad number");
    r.flow_module = static_cast<int>(t.rows.size());
    r.node_count = static_cast<int>(*nodes);
    r.link_count = static_cast<int>(*links);
    r.share = {*w / 100.0, *fi / 100.0, *fo / 100.0};
    t.rows.push_back(r);
  }
  return t;
}

inline void write_indicator_header(std::ostream& out) {
  out << "stage";
  for (const char* label : topo::kIndicatorLabels) out << ',' << label;
  out << '\n';
}

inline void write_indicator_row(std::ostream& out, const std::string& stage, const topo::IndicatorTable& t) {
  out << stage << ',' << t.diameter;
  const auto v = topo::values(t);
  for (std::size_t k = 1; k < v.size(); ++k) out << ',' << text::fmt_exact(v[k]);
  out << '\n';
}

inline std::vector<std::pair<std::string, topo::IndicatorTable>> parse_indicators(std::istream& in) {
  std::string line;
  std::ostringstream expected;
  write_indicator_header(expected);
  if (!text::getline(in, line) || line + "\n" != expected.str()) throw Error(text::at_line(1) + "malformed indicator header");
  std::vector<std::pair<std::string, topo::IndicatorTable>> rows;
  std::size_t lineno = 1;
  while (text::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = text::split(line);
    if (f.size() != 13) throw Error(text::at_line(lineno) + "expected 13 fields");
    std::array<double, 12> v{};
    for (std::size_t k = 0; k < 12; ++k) {
      auto d = text::parse_double(f[k + 1]);
      if (!d) throw Error(text::at_line(lineno) + "bad number '" + f[k + 1] + "'");
      v[k] = *d;
    }
    topo::IndicatorTable t;
    t.diameter = static_cast<int>(v[0]);
    t.density = v[1];
    t.avg_shortest_path = v[2];
    t.clustering = v[3];
    t.mean_rel_degree = v[4];
    t.mean_rel_betweenness = v[5];
    t.mean_rel_closeness = v[6];
    t.out_degree_centralisation = v[7];
    t.in_degree_centralisation = v[8];
    t.betweenness_centralisation = v[9];
    t.out_closeness_centralisation = v[10];
    t.in_closeness_centralisation = v[11];
    rows.emplace_back(f[0], t);
  }
  return rows;
}

inline void write_rankings(std::ostream& out, const std::vector<CentralityRanking>& rankings) {
  out << "kind,rank,ticker,industry,value\n";
  for (const auto& r : rankings) {
    for (std::size_t k = 0; k < r.entries.size(); ++k) {
      const auto& e = r.entries[k];
      out << r.kind << ',' << (k + 1) << ',' << e.ticker << ',' << e.industry << ',' << text::fmt_exact(e.value) << '\n';
    }
  }
}

inline std::vector<CentralityRanking> parse_rankings(std::istream& in) {
  std::string line;
  if (!text::getline(in, line) || line != "kind,rank,ticker,industry,value") {
    throw Error(text::at_line(1) + "malformed ranking header");
  }
  std::vector<CentralityRanking> out;
  std::size_t lineno = 1;
  while (text::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = text::split(line);
    auto v = f.size() == 5 ? text::parse_double(f[4]) : std::nullopt;
    if (!v) throw Error(text::at_line(lineno) + "malformed ranking row");
    if (out.empty() || out.back().kind != f[0]) out.push_back({f[0], {}});
    out.back().entries.push_back({f[2], f[3], *v});
  }
  return out;
}

inline void write_cross_tab(std::ostream& out, const IndustryCrossTab& x) {
  out << "industry";
  for (const auto& m : x.modules) out << ',' << m;
  out << '\n';
  for (std::size_t r = 0; r < x.industries.size(); ++r) {
    out << x.industries[r];
    for (int c : x.counts[r]) out << ',' << c;
    out << '\n';
  }
}

inline IndustryCrossTab parse_cross_tab(std::istream& in) {
  IndustryCrossTab x;
  std::string line;
  if (!text::getline(in, line)) throw Error(text::at_line(1) + "empty cross-tab");
  auto head = text::split(line);
  if (head.empty() || head[0] != "industry") throw Error(text::at_line(1) + "malformed cross-tab header");
  x.modules.assign(head.begin() + 1, head.end());
  std::size_t lineno = 1;
  while (text::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = text::split(line);
    if (f.size() != head.size()) throw Error(text::at_line(lineno) + "wrong field count");
    x.industries.push_back(f[0]);
    std::vector<int> row;
    for (std::size_t k = 1; k < f.size(); ++k) {
      auto v = text::parse_int(f[k]);
      if (!v) throw Error(text::at_line(lineno) + "bad count");
      row.push_back(static_cast<int>(*v));
    }
    x.counts.push_back(std::move(row));
  }
  return x;
}

inline void write_assignment(std::ostream& out, const StockModuleTable& t, const std::vector<std::string>& tickers) {
  out << "ticker,module\n";
  for (std::size_t s = 0; s < tickers.size(); ++s) out << tickers[s] << ',' << t.name_of_stock(static_cast<int>(s)) << '\n';
}

inline std::vector<std::pair<std::string, std::string>> parse_assignment(std::istream& in) {
  std::string line;
  if (!text::getline(in, line) || line != "ticker,module") throw Error(text::at_line(1) + "malformed assignment header");
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t lineno = 1;
  while (text::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = text::split(line);
    if (f.size() != 2) throw Error(text::at_line(lineno) + "expected ticker,module");
    out.emplace_back(f[0], f[1]);
  }
  return out;
}

inline std::string flow_node_label(const FlowSystem& fs, const std::vector<std::string>& tickers, int node) {
  return node < fs.n_stocks ? tickers.at(static_cast<std::size_t>(node)) + ":out"
                            : tickers.at(static_cast<std::size_t>(node - fs.n_stocks)) + ":in";
}

/// {nodes: [{id, label, visit}], modules: [{id, name, members, exit_freq,
/// usage_freq}], codelength_bits}. Module ids are 1-based flow-module ids.
inline nlohmann::json flow_json(const Partition& p, const StockModuleTable& t, const std::vector<std::string>& tickers) {
  const auto& fs = p.flow_system();
  nlohmann::json j;
  j["codelength_bits"] = codelength(p).total;
  auto nodes = nlohmann::json::array();
  for (int v = 0; v < fs.n_flow(); ++v) {
    nodes.push_back({{"id", v}, {"label", flow_node_label(fs, tickers, v)}, {"visit", fs.visit[static_cast<std::size_t>(v)]}});
  }
  j["nodes"] = std::move(nodes);
  std::vector<std::string> names(static_cast<std::size_t>(p.module_count()));
  for (const auto& r : t.rows) names[static_cast<std::size_t>(r.flow_module)] = r.name;
  auto modules = nlohmann::json::array();
  for (int k = 0; k < p.module_count(); ++k) {
    modules.push_back({{"id", k + 1},
                       {"name", names[static_cast<std::size_t>(k)]},
                       {"members", p.members(k)},
                       {"exit_freq", p.exit_flow(k)},
                       {"usage_freq", p.usage(k)}});
  }
  j["modules"] = std::move(modules);
  return j;
}

inline void write_flow_json(std::ostream& out, const nlohmann::json& j) { out << j.dump(2) << '\n'; }

/// Rebuilds the flow-module assignment recorded in a flow JSON document.
inline std::vector<int> assignment_from_flow_json(const nlohmann::json& j) {
  std::vector<int> a(j.at("nodes").size(), kNoModule);
  for (const auto& m : j.at("modules")) {
    for (int v : m.at("members")) a.at(static_cast<std::size_t>(v)) = m.at("id").get<int>() - 1;
  }
  return a;
}

/// Module-level digraph: node size tracks module usage frequency, edge
/// weight the flow between modules.
inline void write_module_dot(std::ostream& out, const Partition& p, const StockModuleTable& t) {
  const auto& fs = p.flow_system();
  std::vector<int> row_of(static_cast<std::size_t>(p.module_count()));
  for (std::size_t r = 0; r < t.rows.size(); ++r) row_of[static_cast<std::size_t>(t.rows[r].flow_module)] = static_cast<int>(r);
  std::map<std::pair<int, int>, double> between;
  for (int i = 0; i < fs.n_flow(); ++i) {
    const int a = p.module_of(i);
    if (a < 0) continue;
    for (auto [j, prob] : fs.transition[static_cast<std::size_t>(i)]) {
      const int b = p.module_of(j);
      if (a != b) {
        between[{row_of[static_cast<std::size_t>(a)], row_of[static_cast<std::size_t>(b)]}] +=
            prob * fs.visit[static_cast<std::size_t>(i)];
      }
    }
  }
  double max_usage = 0.0, max_flow = 0.0;
  for (const auto& r : t.rows) max_usage = std::max(max_usage, r.usage);
  for (const auto& [k, f] : between) max_flow = std::max(max_flow, f);

  out << "digraph modules {\n";
  out << "  node [shape=circle, fixedsize=true];\n";
  for (const auto& r : t.rows) {
    const double width = max_usage > 0 ? 0.3 + 2.0 * std::sqrt(r.usage / max_usage) : 0.3;
    out << "  " << r.name << " [label=\"" << r.name << "\\n" << r.node_count << "\", usage_freq=\""
        << text::fmt_exact(r.usage) << "\", exit_freq=\"" << text::fmt_exact(r.share.flow_out) << "\", width=\""
        << text::fmt_fixed(width, 4) << "\"];\n";
  }
  for (const auto& [k, f] : between) {
    const double pen = max_flow > 0 ? 0.5 + 5.0 * f / max_flow : 0.5;
    out << "  " << t.rows[static_cast<std::size_t>(k.first)].name << " -> " << t.rows[static_cast<std::size_t>(k.second)].name
        << " [flow=\"" << text::fmt_exact(f) << "\", penwidth=\"" << text::fmt_fixed(pen, 4) << "\"];\n";
  }
  out << "}\n";
}

}  // namespace entromap::report
