#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "evcharge/pipeline.hpp"

using namespace evcharge;

namespace {

enum exit_code { kOk = 0, kUsage = 1, kData = 2 };

void add_preprocess_flags(CLI::App& cmd, run_config& cfg) {
  cmd.add_option("--period-start", cfg.period_start_,
                 "keep arrivals on or after this date (YYYY-MM-DD)");
  cmd.add_option("--period-end", cfg.period_end_,
                 "keep arrivals before this date (YYYY-MM-DD)");
  cmd.add_option("--merge-radius", cfg.merge_radius_m_,
                 "pool stations closer than this many meters")
      ->capture_default_str();
  cmd.add_option("--min-transactions", cfg.min_transactions_,
                 "drop pools with fewer usable transactions")
      ->capture_default_str();
  cmd.add_option("--max-duration-hours", cfg.max_duration_hours_,
                 "discard sessions this long or longer")
      ->capture_default_str();
}

void add_cluster_flags(CLI::App& cmd, run_config& cfg) {
  cmd.add_option("--o", cfg.o_, "outer root of the dissimilarity (>= 1)")
      ->capture_default_str();
  cmd.add_option("--p", cfg.p_, "inner exponent of the dissimilarity (> 0)")
      ->capture_default_str();
  cmd.add_option("--k", cfg.k_, "number of clusters")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Charging-pattern analysis of EV charging transaction logs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  run_config cfg;
  std::string input, out;

  auto* generate = app.add_subcommand("generate", "write a synthetic transaction log");
  generate->add_option("--out", out, "output directory")->required();
  generate->add_option("--seed", cfg.seed_, "random seed")->capture_default_str();
  generate->add_option("--stations", cfg.stations_per_archetype_,
                       "stations per archetype")
      ->capture_default_str();
  generate->add_option("--transactions", cfg.transactions_per_station_,
                       "transactions per station")
      ->capture_default_str();
  std::string archetypes;
  generate->add_option("--archetypes", archetypes, "archetype JSON file");

  auto* matrices = app.add_subcommand("matrices", "build per-pool charging matrices");
  matrices->add_option("--input", input, "transaction CSV")->required();
  matrices->add_option("--out", out, "output directory")->required();
  add_preprocess_flags(*matrices, cfg);

  auto* rules = app.add_subcommand("rules", "rule-based pattern signatures");
  rules->add_option("--input", input, "output directory of 'matrices'")->required();
  rules->add_option("--out", out, "output directory")->required();
  std::string bands;
  rules->add_option("--bands", bands, "band scheme JSON file");
  rules->add_option("--theta", cfg.theta_, "submatrix mass threshold")
      ->capture_default_str();
  std::string theta_grid;
  rules->add_option("--theta-grid", theta_grid,
                    "extra thresholds: start:stop:step or a comma list");

  auto* cluster = app.add_subcommand("cluster", "complete-linkage clustering");
  cluster->add_option("--input", input, "output directory of 'matrices'")->required();
  cluster->add_option("--out", out, "output directory")->required();
  add_cluster_flags(*cluster, cfg);
  cluster->add_flag("--sweep", cfg.sweep_, "also run the reference (o, p) sweep");

  auto* sweep = app.add_subcommand("sweep", "cluster sizes over the reference (o, p) sweep");
  sweep->add_option("--input", input, "output directory of 'matrices'")->required();
  sweep->add_option("--out", out, "output directory")->required();
  sweep->add_option("--k", cfg.k_, "number of clusters")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (CLI::ParseError const& e) {
    auto const rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  cfg.input_ = input;
  cfg.out_ = out;
  if (!archetypes.empty()) {
    cfg.archetypes_ = archetypes;
  }
  if (!bands.empty()) {
    cfg.bands_ = bands;
  }
  if (!theta_grid.empty()) {
    cfg.theta_grid_ = theta_grid;
  }

  try {
    if (generate->parsed()) {
      auto const f = cmd_generate(cfg);
      std::cout << "generated " << f.transactions_.size() << " transactions at "
                << f.truth_.size() << " stations\n";
    } else if (matrices->parsed()) {
      auto const r = cmd_matrices(cfg);
      std::cout << r.matrices_.size() << " pools, " << r.rejected_
                << " rejected rows\n";
    } else if (rules->parsed()) {
      auto const r = cmd_rules(cfg);
      std::cout << r.groups_.size() << " signature groups\n";
    } else if (cluster->parsed()) {
      auto const r = cmd_cluster(cfg);
      std::cout << "cluster sizes:";
      for (auto const s : r.assignment_.sizes()) {
        std::cout << ' ' << s;
      }
      std::cout << '\n';
    } else if (sweep->parsed()) {
      auto const r = cmd_sweep(cfg);
      std::cout << r.rows_.size() << " sweep rows\n";
    }
  } catch (config_error const& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (data_error const& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (std::filesystem::filesystem_error const& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}
