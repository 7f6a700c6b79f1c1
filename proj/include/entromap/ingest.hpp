#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "entromap/common.hpp"
#include "entromap/text.hpp"

namespace entromap {

using Date = std::chrono::year_month_day;

/// Marker for an absent price or return cell.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) { return std::isnan(v); }

inline std::optional<Date> try_parse_date(std::string_view s) {
  s = text::trim(s);
  // YYYY-MM-DD or, with day_optional, YYYY-MM (first of month).
  auto field = [&](std::size_t pos, std::size_t len) -> std::optional<long long> {
    if (s.size() < pos + len) return std::nullopt;
    auto sub = s.substr(pos, len);
    if (!std::all_of(sub.begin(), sub.end(), [](char c) { return c >= '0' && c <= '9'; })) return std::nullopt;
    return text::parse_int(sub);
  };
  if (s.size() != 10 && s.size() != 7) return std::nullopt;
  if (s[4] != '-') return std::nullopt;
  auto y = field(0, 4), m = field(5, 2);
  long long d = 1;
  if (s.size() == 10) {
    if (s[7] != '-') return std::nullopt;
    auto dd = field(8, 2);
    if (!dd) return std::nullopt;
    d = *dd;
  }
  if (!y || !m) return std::nullopt;
  Date out{std::chrono::year{static_cast<int>(*y)}, std::chrono::month{static_cast<unsigned>(*m)},
           std::chrono::day{static_cast<unsigned>(d)}};
  if (!out.ok()) return std::nullopt;
  return out;
}

inline std::string to_string(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                static_cast<unsigned>(d.day()));
  return buf;
}

/// Closing prices on a (date x ticker) grid; absent cells hold kMissing.
struct PricePanel {
  std::vector<Date> dates;
  std::vector<std::string> tickers;
  Eigen::MatrixXd prices;  // dates.size() x tickers.size()
};

enum class StageKind { bull, bear };

inline const char* to_string(StageKind k) { return k == StageKind::bull ? "bull" : "bear"; }

/// A market stage covering the half-open window [start, end).
struct StageDefinition {
  std::string code;
  Date start;
  Date end;
  StageKind kind = StageKind::bull;

  bool contains(const Date& d) const { return start <= d && d < end; }
};

/// Log returns over the full sample. Row t holds ln P_t - ln P_{t-1} and is
/// stamped with the later date.
struct ReturnMatrix {
  std::vector<Date> dates;
  std::vector<std::string> tickers;
  Eigen::MatrixXd returns;
};

/// Gap-free returns of the retained universe inside one stage.
struct ReturnPanel {
  StageDefinition stage;
  std::vector<Date> dates;
  std::vector<std::string> tickers;
  Eigen::MatrixXd returns;  // T x N
};

using StFlags = std::map<std::string, bool>;
using IndustryMap = std::map<std::string, std::string>;

// ---------------------------------------------------------------------------
// Readers

/// Reads the long-format price CSV (`date,ticker,close`). Tickers keep their
/// order of first appearance; dates are sorted. Cells that never appear or
/// whose close field is empty or non-numeric are marked missing.
inline PricePanel parse_prices(std::istream& in) {
  std::string line;
  std::size_t lineno = 1;
  if (!text::getline(in, line)) throw Error(text::at_line(1) + "empty price file");
  {
    auto header = text::split(line);
    if (header != std::vector<std::string>{"date", "ticker", "close"}) {
      throw Error(text::at_line(1) + "malformed header, expected 'date,ticker,close'");
    }
  }

  struct Row {
    Date date;
    std::size_t ticker;
    double close;
  };
  std::vector<Row> rows;
  std::vector<std::string> tickers;
  std::unordered_map<std::string, std::size_t> ticker_index;
  std::map<std::pair<int, std::size_t>, std::size_t> seen;  // (day serial, ticker) -> line

  while (text::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    auto f = text::split(line);
    if (f.size() != 3) throw Error(text::at_line(lineno) + "expected 3 fields, found " + std::to_string(f.size()));
    auto date = try_parse_date(f[0]);
    if (!date || f[0].size() != 10) throw Error(text::at_line(lineno) + "bad date '" + f[0] + "'");
    if (f[1].empty()) throw Error(text::at_line(lineno) + "empty ticker");
    auto [it, inserted] = ticker_index.try_emplace(f[1], tickers.size());
    if (inserted) tickers.push_back(f[1]);

    double close = kMissing;
    if (auto v = text::parse_double(f[2])) {
      if (!(*v > 0.0)) throw Error(text::at_line(lineno) + "non-positive price " + f[2]);
      close = *v;
    }
    const int serial = std::chrono::sys_days{*date}.time_since_epoch().count();
    auto [dup, fresh] = seen.try_emplace({serial, it->second}, lineno);
    if (!fresh) {
      throw Error(text::at_line(lineno) + "duplicate (date,ticker) pair " + f[0] + "," + f[1] + " (first at line " +
                  std::to_string(dup->second) + ")");
    }
    rows.push_back({*date, it->second, close});
  }

  PricePanel panel;
  panel.tickers = tickers;
  for (const auto& r : rows) panel.dates.push_back(r.date);
  std::sort(panel.dates.begin(), panel.dates.end());
  panel.dates.erase(std::unique(panel.dates.begin(), panel.dates.end()), panel.dates.end());
  panel.prices = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(panel.dates.size()),
                                           static_cast<Eigen::Index>(tickers.size()), kMissing);
  for (const auto& r : rows) {
    auto t = std::lower_bound(panel.dates.begin(), panel.dates.end(), r.date) - panel.dates.begin();
    panel.prices(t, static_cast<Eigen::Index>(r.ticker)) = r.close;
  }
  return panel;
}

/// Reads `ticker,st_flag` with st_flag in {0,1}.
inline StFlags parse_universe(std::istream& in) {
  std::string line;
  if (!text::getline(in, line) || text::split(line) != std::vector<std::string>{"ticker", "st_flag"}) {
    throw Error(text::at_line(1) + "malformed header, expected 'ticker,st_flag'");
  }
  StFlags flags;
  std::size_t lineno = 1;
  while (text::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    auto f = text::split(line);
    if (f.size() != 2 || f[0].empty()) throw Error(text::at_line(lineno) + "expected 'ticker,st_flag'");
    if (f[1] != "0" && f[1] != "1") throw Error(text::at_line(lineno) + "st_flag must be 0 or 1");
    if (!flags.emplace(f[0], f[1] == "1").second) throw Error(text::at_line(lineno) + "duplicate ticker " + f[0]);
  }
  return flags;
}

/// Reads `ticker,industry`.
inline IndustryMap parse_industries(std::istream& in) {
  std::string line;
  if (!text::getline(in, line) || text::split(line) != std::vector<std::string>{"ticker", "industry"}) {
    throw Error(text::at_line(1) + "malformed header, expected 'ticker,industry'");
  }
  IndustryMap out;
  std::size_t lineno = 1;
  while (text::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    auto f = text::split(line);
    if (f.size() != 2 || f[0].empty()) throw Error(text::at_line(lineno) + "expected 'ticker,industry'");
    if (!out.emplace(f[0], f[1]).second) throw Error(text::at_line(lineno) + "duplicate ticker " + f[0]);
  }
  return out;
}

/// Reads stage lines `CODE,start=YYYY-MM,end=YYYY-MM,kind=bull|bear`.
/// Blank lines and lines starting with '#' are skipped.
inline std::vector<StageDefinition> parse_stages(std::istream& in) {
  std::vector<StageDefinition> stages;
  std::string line;
  std::size_t lineno = 0;
  while (text::getline(in, line)) {
    ++lineno;
    auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto f = text::split(t);
    if (f.size() != 4 || f[0].empty()) throw Error(text::at_line(lineno) + "expected CODE,start=..,end=..,kind=..");
    auto value = [&](const std::string& field, std::string_view key) {
      if (field.rfind(key, 0) != 0 || field.size() <= key.size() || field[key.size()] != '=') {
        throw Error(text::at_line(lineno) + "expected '" + std::string(key) + "=' field");
      }
      return field.substr(key.size() + 1);
    };
    auto month = [&](const std::string& s) {
      auto d = try_parse_date(s);
      if (!d || s.size() != 7) throw Error(text::at_line(lineno) + "bad month '" + s + "', expected YYYY-MM");
      return *d;
    };
    StageDefinition st;
    st.code = f[0];
    st.start = month(value(f[1], "start"));
    st.end = month(value(f[2], "end"));
    auto kind = value(f[3], "kind");
    if (kind == "bull") {
      st.kind = StageKind::bull;
    } else if (kind == "bear") {
      st.kind = StageKind::bear;
    } else {
      throw Error(text::at_line(lineno) + "kind must be bull or bear");
    }
    if (!(st.start < st.end)) throw Error(text::at_line(lineno) + "stage start must precede end");
    if (!stages.empty() && st.start < stages.back().end) {
      throw Error(text::at_line(lineno) + "stages must be ordered and non-overlapping");
    }
    for (const auto& s : stages) {
      if (s.code == st.code) throw Error(text::at_line(lineno) + "duplicate stage code " + st.code);
    }
    stages.push_back(st);
  }
  return stages;
}

// ---------------------------------------------------------------------------
// Returns and universe selection

inline ReturnMatrix compute_log_returns(const PricePanel& panel) {
  ReturnMatrix out;
  out.tickers = panel.tickers;
  const auto rows = panel.prices.rows();
  if (rows < 2) {
    out.returns.resize(0, panel.prices.cols());
    return out;
  }
  out.dates.assign(panel.dates.begin() + 1, panel.dates.end());
  out.returns.resize(rows - 1, panel.prices.cols());
  for (Eigen::Index j = 0; j < panel.prices.cols(); ++j) {
    for (Eigen::Index t = 1; t < rows; ++t) {
      const double prev = panel.prices(t - 1, j), cur = panel.prices(t, j);
      // NaN propagates, so a missing price invalidates both adjacent returns.
      out.returns(t - 1, j) = std::log(cur) - std::log(prev);
    }
  }
  return out;
}

namespace detail {
inline std::vector<Eigen::Index> rows_in(const std::vector<Date>& dates, const StageDefinition& stage) {
  std::vector<Eigen::Index> rows;
  for (std::size_t t = 0; t < dates.size(); ++t) {
    if (stage.contains(dates[t])) rows.push_back(static_cast<Eigen::Index>(t));
  }
  return rows;
}
}  // namespace detail

/// Applies the three exclusion rules jointly over all stages: any missing
/// return inside a stage window, a special-treatment flag, or returns that
/// are identically zero across a whole stage window. Input order is kept.
inline std::vector<std::string> filter_universe(const ReturnMatrix& returns, const StFlags& st_flags,
                                                std::span<const StageDefinition> stages) {
  std::vector<std::vector<Eigen::Index>> windows;
  for (const auto& s : stages) windows.push_back(detail::rows_in(returns.dates, s));

  std::vector<std::string> kept;
  for (std::size_t j = 0; j < returns.tickers.size(); ++j) {
    const auto& ticker = returns.tickers[j];
    auto flag = st_flags.find(ticker);
    if (flag == st_flags.end()) throw Error("ticker " + ticker + " has no entry in the universe file");
    if (flag->second) continue;
    bool keep = true;
    for (const auto& rows : windows) {
      if (rows.empty()) continue;
      bool all_zero = true;
      for (auto t : rows) {
        const double r = returns.returns(t, static_cast<Eigen::Index>(j));
        if (is_missing(r)) {
          keep = false;
          break;
        }
        if (r != 0.0) all_zero = false;
      }
      if (!keep || all_zero) {
        keep = false;
        break;
      }
    }
    if (keep) kept.push_back(ticker);
  }
  if (kept.empty()) throw Error("no ticker survives the universe filter");
  return kept;
}

inline ReturnPanel slice_stage(const ReturnMatrix& returns, const std::vector<std::string>& retained,
                               const StageDefinition& stage) {
  auto rows = detail::rows_in(returns.dates, stage);
  if (rows.size() < 2) {
    throw Error("stage " + stage.code + " window holds " + std::to_string(rows.size()) +
                " return rows, at least 2 are required");
  }
  std::unordered_map<std::string, Eigen::Index> col;
  for (std::size_t j = 0; j < returns.tickers.size(); ++j) col[returns.tickers[j]] = static_cast<Eigen::Index>(j);

  ReturnPanel panel;
  panel.stage = stage;
  panel.tickers = retained;
  panel.returns.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(retained.size()));
  for (auto t : rows) panel.dates.push_back(returns.dates[static_cast<std::size_t>(t)]);
  for (std::size_t k = 0; k < retained.size(); ++k) {
    auto it = col.find(retained[k]);
    if (it == col.end()) throw Error("retained ticker " + retained[k] + " not in return matrix");
    bool all_zero = true;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const double v = returns.returns(rows[r], it->second);
      if (is_missing(v)) throw Error("stage " + stage.code + ": missing return for " + retained[k]);
      if (v != 0.0) all_zero = false;
      panel.returns(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = v;
    }
    if (all_zero) throw Error("stage " + stage.code + ": returns of " + retained[k] + " are all zero");
  }
  return panel;
}

}  // namespace entromap
