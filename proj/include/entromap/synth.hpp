#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "entromap/common.hpp"
#include "entromap/ingest.hpp"
#include "entromap/text.hpp"

// Seeded block-correlated return panels for demos and end-to-end tests.
namespace entromap::synth {

struct SyntheticSpec {
  std::uint64_t seed = 7;
  int industries = 4;
  int stocks_per_industry = 5;
  int weeks_per_stage = 104;
  double vol = 0.02;
  /// Market-factor loading per stage; the bear-like stage co-moves harder.
  double bull_market = 0.3;
  double bear_market = 1.5;
  double industry = 1.2;
};

struct SyntheticFiles {
  std::string prices, universe, stages, industries;
};

inline const std::vector<std::string>& industry_names() {
  static const std::vector<std::string> names = {"Materials", "Industrials", "Health care", "Consumer staples",
                                                 "Utilities", "Finance", "Energy", "Real estate"};
  return names;
}

/// Weekly prices for the clean universe plus two stocks that the universe
/// filter must drop: one flagged special-treatment and one with a gap.
/// Stage BULL1 spans 2010-01..2012-01, BEAR1 2012-01..2014-01.
inline SyntheticFiles generate(const SyntheticSpec& spec = {}) {
  using namespace std::chrono;
  Rng rng = make_rng(spec.seed);
  std::normal_distribution<double> z(0.0, 1.0);

  const int n_clean = spec.industries * spec.stocks_per_industry;
  const int n_total = n_clean + 2;
  std::vector<std::string> tickers;
  for (int s = 0; s < n_total; ++s) tickers.push_back(std::to_string(600001 + s));
  const std::string st_ticker = tickers[static_cast<std::size_t>(n_clean)];
  const std::string gap_ticker = tickers[static_cast<std::size_t>(n_clean + 1)];

  const int weeks = 2 * spec.weeks_per_stage;
  const sys_days first{year{2010} / January / 4};
  std::vector<double> log_price(static_cast<std::size_t>(n_total), std::log(100.0));

  std::ostringstream prices;
  prices << "date,ticker,close\n";
  for (int w = 0; w <= weeks; ++w) {
    const Date date{first + days{7 * w}};
    if (w > 0) {
      const bool bear = date >= Date{year{2012} / January / 1};
      const double market = z(rng);
      std::vector<double> sector(static_cast<std::size_t>(spec.industries));
      for (auto& g : sector) g = z(rng);
      const double beta = bear ? spec.bear_market : spec.bull_market;
      for (int s = 0; s < n_total; ++s) {
        const double g = sector[static_cast<std::size_t>(s % spec.industries)];
        log_price[static_cast<std::size_t>(s)] += spec.vol * (beta * market + spec.industry * g + z(rng));
      }
    }
    for (int s = 0; s < n_total; ++s) {
      prices << to_string(date) << ',' << tickers[static_cast<std::size_t>(s)] << ',';
      const bool gap = tickers[static_cast<std::size_t>(s)] == gap_ticker && w == spec.weeks_per_stage + 10;
      if (!gap) prices << text::fmt_fixed(std::exp(log_price[static_cast<std::size_t>(s)]), 6);
      prices << '\n';
    }
  }

  SyntheticFiles f;
  f.prices = prices.str();
  std::ostringstream uni, ind;
  uni << "ticker,st_flag\n";
  ind << "ticker,industry\n";
  for (int s = 0; s < n_total; ++s) {
    uni << tickers[static_cast<std::size_t>(s)] << ',' << (tickers[static_cast<std::size_t>(s)] == st_ticker ? 1 : 0) << '\n';
    ind << tickers[static_cast<std::size_t>(s)] << ','
        << industry_names()[static_cast<std::size_t>(s % spec.industries) % industry_names().size()] << '\n';
  }
  f.universe = uni.str();
  f.industries = ind.str();
  f.stages = "BULL1,start=2010-01,end=2012-01,kind=bull\nBEAR1,start=2012-01,end=2014-01,kind=bear\n";
  return f;
}

inline void write(const std::filesystem::path& dir, const SyntheticFiles& f) {
  std::filesystem::create_directories(dir);
  auto put = [&](const char* name, const std::string& content) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw Error("cannot write " + (dir / name).string());
    out << content;
  };
  put("prices.csv", f.prices);
  put("universe.csv", f.universe);
  put("stages.txt", f.stages);
  put("industries.csv", f.industries);
}

}  // namespace entromap::synth
