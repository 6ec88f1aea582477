#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "gtest/gtest.h"

#include "evcharge/pipeline.hpp"

using namespace evcharge;
namespace fs = std::filesystem;

namespace {

fs::path scratch(std::string const& name) {
  auto const p = fs::temp_directory_path() / ("evcharge_pipeline_test_" + name);
  fs::remove_all(p);
  return p;
}

std::map<std::string, std::string> snapshot(fs::path const& dir) {
  std::map<std::string, std::string> files;
  for (auto const& e : fs::recursive_directory_iterator{dir}) {
    if (e.is_regular_file()) {
      files[fs::relative(e.path(), dir).generic_string()] = read_file(e.path());
    }
  }
  return files;
}

// Generates the 3 x 20 fixture and its matrices once for the whole suite.
struct fixture_dirs {
  fs::path gen = scratch("gen");
  fs::path mats = scratch("mats");
  fixture_dirs() {
    run_config g;
    g.out_ = gen;
    g.seed_ = 5;
    cmd_generate(g);
    run_config m;
    m.input_ = gen / "transactions.csv";
    m.out_ = mats;
    cmd_matrices(m);
  }
};

fixture_dirs const& dirs() {
  static fixture_dirs const d;
  return d;
}

int run_cli(std::string const& args) {
  auto const cmd = std::string{EVCHARGE_CLI} + " " + args + " >/dev/null 2>&1";
  auto const rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(cmd_matrices, one_matrix_per_station) {
  auto const files = snapshot(dirs().mats);
  std::size_t n = 0;
  for (auto const& [name, _] : files) {
    n += name.starts_with("matrices/") ? 1 : 0;
  }
  EXPECT_EQ(n, 60U);
  EXPECT_EQ(load_matrices(dirs().mats).size(), 60U);
  EXPECT_EQ(files.at("rejections.csv"), "line,reason\n");
  EXPECT_TRUE(files.contains("frequency.csv"));
  EXPECT_TRUE(files.contains("pools.csv"));
  auto const manifest = nlohmann::json::parse(files.at("manifest.json"));
  EXPECT_EQ(manifest["summary"]["surviving_pools"], 60);
  EXPECT_EQ(manifest["outputs"].size(), files.size() - 1);
}

TEST(cmd_matrices, zero_surviving_pools) {
  auto const dir = scratch("few");
  fs::create_directories(dir);
  {
    std::ofstream f{dir / "in.csv"};
    f << "station_id,latitude,longitude,arrival_time,duration_seconds\n";
    for (int i = 0; i < 29; ++i) {
      f << "A,52,5,2015-01-01T10:00:00,3600\nB,53,5,2015-01-01T10:00:00,3600\n";
    }
  }
  run_config c;
  c.input_ = dir / "in.csv";
  c.out_ = dir / "out";
  EXPECT_THROW(cmd_matrices(c), data_error);
  EXPECT_EQ(run_cli("matrices --input " + (dir / "in.csv").string() + " --out " +
                    (dir / "out").string()),
            2);
  c.min_transactions_ = 29;
  EXPECT_EQ(cmd_matrices(c).matrices_.size(), 2U);
}

TEST(cmd_matrices, period_filter_flags) {
  run_config c;
  c.input_ = dirs().gen / "transactions.csv";
  c.out_ = scratch("period");
  c.period_start_ = "2015-01-01";
  EXPECT_THROW(cmd_matrices(c), config_error);
  c.period_end_ = "2015-02-01";
  c.min_transactions_ = 1;
  auto const r = cmd_matrices(c);
  EXPECT_EQ(r.matrices_.size(), 60U);
  for (auto const& m : r.matrices_) {
    EXPECT_LT(m.matrix_.source_count(), 200U);
  }
  c.period_end_ = "2015-13-01";
  EXPECT_THROW(cmd_matrices(c), config_error);
}

TEST(cmd_rules, theta_grid_and_extreme_theta) {
  run_config c;
  c.input_ = dirs().mats;
  c.out_ = scratch("rules");
  c.theta_grid_ = "0.03:0.15:0.01";
  auto const r = cmd_rules(c);
  EXPECT_EQ(r.theta_sweep_.size(), 13U);
  auto const files = snapshot(c.out_);
  EXPECT_TRUE(files.contains("theta_sweep/groups_theta_0.03.csv"));
  EXPECT_TRUE(files.contains("theta_sweep/groups_theta_0.15.csv"));
  EXPECT_TRUE(files.contains("signatures.csv"));
  EXPECT_TRUE(files.contains("top_groups.csv"));

  c.theta_grid_.reset();
  c.theta_ = 0.999;
  c.out_ = scratch("rules_high");
  auto const high = cmd_rules(c);
  ASSERT_EQ(high.groups_.size(), 1U);
  EXPECT_EQ(high.groups_.begin()->first.to_string(), "00000000");
  EXPECT_EQ(high.groups_.begin()->second.size(), 60U);
}

TEST(cmd_rules, custom_band_file) {
  auto const dir = scratch("bands");
  fs::create_directories(dir);
  {
    std::ofstream f{dir / "bands.json"};
    f << R"({"arrival_bands":[{"name":"day","hours":[6,7,8,9,10,11,12,13,14,15,16,17]}],
             "duration_bands":[{"name":"any","hours":[0,1,2,3,4,5,6,7,8,9,10,11]}]})";
  }
  run_config c;
  c.input_ = dirs().mats;
  c.out_ = dir / "out";
  c.bands_ = dir / "bands.json";
  auto const r = cmd_rules(c);
  for (auto const& [sig, _] : r.groups_) {
    EXPECT_EQ(sig.flags_.size(), 1U);
  }
  {
    std::ofstream f{dir / "bad.json"};
    f << R"({"arrival_bands":[{"name":"a","hours":[1,2]},{"name":"b","hours":[2]}],
             "duration_bands":[{"name":"any","hours":[0]}]})";
  }
  c.bands_ = dir / "bad.json";
  EXPECT_THROW(cmd_rules(c), config_error);
  EXPECT_EQ(run_cli("rules --input " + dirs().mats.string() + " --out " +
                    (dir / "o2").string() + " --bands " + (dir / "bad.json").string()),
            1);
}

TEST(cmd_cluster, outputs_and_k_one) {
  run_config c;
  c.input_ = dirs().mats;
  c.out_ = scratch("cluster");
  c.k_ = 3;
  auto const r = cmd_cluster(c);
  EXPECT_EQ(r.assignment_.sizes().size(), 3U);
  auto const files = snapshot(c.out_);
  for (auto const* name :
       {"dendrogram.json", "assignments.csv", "distances.csv", "distance_params.json",
        "clusters.csv", "representatives/cluster_00_mean.json",
        "representatives/cluster_02_medoid.json", "heatmaps/cluster_01_mean.svg"}) {
    EXPECT_TRUE(files.contains(name)) << name;
  }
  EXPECT_EQ(nlohmann::json::parse(files.at("dendrogram.json")).size(), 59U);
  auto const params = nlohmann::json::parse(files.at("distance_params.json"));
  EXPECT_EQ(params["o"], 1.0);
  EXPECT_NEAR(params["p"].get<double>(), 2.0 / 3.0, 1e-15);
  EXPECT_TRUE(files.at("heatmaps/cluster_01_mean.svg").starts_with("<svg"));

  c.k_ = 1;
  c.out_ = scratch("cluster_k1");
  EXPECT_EQ(cmd_cluster(c).assignment_.sizes(), (std::vector<std::size_t>{60}));
  c.k_ = 61;
  EXPECT_THROW(cmd_cluster(c), config_error);
  c.k_ = 3;
  c.o_ = 0.5;
  EXPECT_THROW(cmd_cluster(c), config_error);
}

TEST(cmd_sweep, eight_rows) {
  run_config c;
  c.input_ = dirs().mats;
  c.out_ = scratch("sweep");
  auto const r = cmd_sweep(c);
  EXPECT_EQ(r.rows_.size(), 8U);
  auto const text = read_file(c.out_ / "sweep.csv");
  EXPECT_EQ(std::count(begin(text), end(text), '\n'), 9);
}

TEST(theta_grid, parsing) {
  EXPECT_EQ(parse_theta_grid("0.03:0.15:0.01").size(), 13U);
  EXPECT_EQ(parse_theta_grid("0.03:0.15:0.01")[3], 0.06);
  EXPECT_EQ(parse_theta_grid("0.05,0.1"), (std::vector<double>{0.05, 0.1}));
  EXPECT_THROW(parse_theta_grid("0.1:0.05:0.01"), config_error);
  EXPECT_THROW(parse_theta_grid("a:b"), config_error);
}

TEST(cli, exit_codes) {
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli(""), 1);
  EXPECT_EQ(run_cli("frobnicate"), 1);
  EXPECT_EQ(run_cli("matrices --out /tmp/x"), 1);
  EXPECT_EQ(run_cli("matrices --input /nonexistent.csv --out " +
                    scratch("missing").string()),
            2);
  EXPECT_EQ(run_cli("cluster --input " + dirs().mats.string() + " --out " +
                    scratch("cli_bad_p").string() + " --p 0"),
            1);
  auto const out = scratch("cli_ok");
  EXPECT_EQ(run_cli("cluster --input " + dirs().mats.string() + " --out " +
                    out.string() + " --k 3 --sweep"),
            0);
  EXPECT_TRUE(fs::exists(out / "sweep.csv"));
}

TEST(heatmap_svg, color_ramp) {
  EXPECT_EQ(ramp_color(0.0, 1.0), "#ffffff");
  EXPECT_EQ(ramp_color(1.0, 1.0), "#08306b");
  EXPECT_EQ(ramp_color(0.0, 0.0), "#ffffff");
}
