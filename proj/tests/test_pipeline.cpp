#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "entromap/pipeline.hpp"
#include "entromap/synth.hpp"

using namespace entromap;
namespace fs = std::filesystem;

namespace {

const fs::path kData = fs::path(ENTROMAP_DATA_DIR) / "synthetic";

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("entromap_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

PipelineConfig config_for(const fs::path& data, const fs::path& out, bool with_industries = true) {
  PipelineConfig c;
  c.prices = data / "prices.csv";
  c.universe = data / "universe.csv";
  c.stages = data / "stages.txt";
  if (with_industries) c.industries = data / "industries.csv";
  c.out = out;
  c.restarts = 3;
  return c;
}

/// A smaller dataset for the error-path tests.
fs::path small_dataset(const std::string& name, const std::string& stages) {
  synth::SyntheticSpec spec;
  spec.industries = 2;
  spec.stocks_per_industry = 3;
  auto files = synth::generate(spec);
  files.stages = stages;
  auto dir = scratch(name);
  synth::write(dir, files);
  return dir;
}

std::string slurp(const fs::path& p) { return detail::read_file(p); }

}  // namespace

TEST(Synthetic, BundledDataMatchesGenerator) {
  auto files = synth::generate();
  EXPECT_EQ(files.prices, slurp(kData / "prices.csv"));
  EXPECT_EQ(files.universe, slurp(kData / "universe.csv"));
  EXPECT_EQ(files.stages, slurp(kData / "stages.txt"));
  EXPECT_EQ(files.industries, slurp(kData / "industries.csv"));
}

TEST(Pipeline, BundledDatasetIsReproducible) {
  auto out = scratch("repro");
  std::ostringstream log_a, log_b;
  auto a = run_pipeline(config_for(kData, out / "a"), log_a);
  auto b = run_pipeline(config_for(kData, out / "b"), log_b);
  ASSERT_TRUE(a.all_ok()) << log_a.str();
  ASSERT_TRUE(b.all_ok());
  ASSERT_EQ(a.stages.size(), 2u);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(out / "a")) {
    if (!e.is_regular_file()) continue;
    ++files;
    auto rel = fs::relative(e.path(), out / "a");
    EXPECT_EQ(slurp(e.path()), slurp(out / "b" / rel)) << rel;
  }
  EXPECT_EQ(files, 2u + 2u * 8u);
  for (const char* stage : {"BULL1", "BEAR1"}) {
    for (const char* f : {"edges.tsv", "flow.json", "modules.csv", "assignment.csv", "indicators.csv", "centrality.csv",
                          "crosstab.csv", "modules.dot"}) {
      EXPECT_TRUE(fs::exists(out / "a" / stage / f)) << stage << "/" << f;
    }
  }
  auto manifest = nlohmann::json::parse(slurp(out / "a" / "manifest.json"));
  EXPECT_EQ(manifest["universe_size"], 20);
  EXPECT_EQ(manifest["stages"][0]["status"], "ok");

  std::istringstream ind(slurp(out / "a" / "indicators.csv"));
  auto rows = report::parse_indicators(ind);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_GT(rows[1].second.density, rows[0].second.density);
}

TEST(Pipeline, MissingIndustryFileSkipsCrossTab) {
  auto data = small_dataset("noind", "S1,start=2010-01,end=2012-01,kind=bull\n");
  auto out = scratch("noind_out");
  std::ostringstream log;
  auto r = run_pipeline(config_for(data, out, false), log);
  ASSERT_TRUE(r.all_ok()) << log.str();
  EXPECT_FALSE(fs::exists(out / "S1" / "crosstab.csv"));
  EXPECT_TRUE(fs::exists(out / "S1" / "modules.csv"));
  EXPECT_NE(log.str().find("cross-tab"), std::string::npos);
}

TEST(Pipeline, FailingStageDoesNotStopOthers) {
  auto data = small_dataset("bad",
                            "S1,start=2010-01,end=2012-01,kind=bull\n"
                            "S2,start=2012-01,end=2014-01,kind=bear\n"
                            "EMPTY,start=2015-01,end=2016-01,kind=bear\n");
  auto out = scratch("bad_out");
  std::ostringstream log;
  auto r = run_pipeline(config_for(data, out), log);
  ASSERT_EQ(r.stages.size(), 3u);
  EXPECT_TRUE(r.stages[0].ok);
  EXPECT_TRUE(r.stages[1].ok);
  EXPECT_FALSE(r.stages[2].ok);
  EXPECT_EQ(r.stages[2].phase, "slice");
  EXPECT_FALSE(r.all_ok());
  EXPECT_TRUE(fs::exists(out / "S2" / "modules.csv"));
  EXPECT_FALSE(fs::exists(out / "EMPTY"));
  auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(manifest["stages"][2]["status"], "failed");
}

TEST(Pipeline, IngestErrorFailsEveryStage) {
  auto data = small_dataset("ingest", "S1,start=2010-01,end=2012-01,kind=bull\n");
  {
    std::ofstream u(data / "universe.csv");
    u << "ticker,st_flag\n600001,0\n";
  }
  auto out = scratch("ingest_out");
  std::ostringstream log;
  auto r = run_pipeline(config_for(data, out), log);
  ASSERT_EQ(r.stages.size(), 1u);
  EXPECT_EQ(r.stages[0].phase, "ingest");
  EXPECT_TRUE(fs::exists(out / "manifest.json"));
}
