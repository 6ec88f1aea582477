#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"

#include "evcharge/digest.hpp"
#include "evcharge/dissim.hpp"
#include "evcharge/error.hpp"
#include "evcharge/hac.hpp"
#include "evcharge/ingest.hpp"
#include "evcharge/matrix.hpp"
#include "evcharge/preprocess.hpp"
#include "evcharge/rules.hpp"
#include "evcharge/svg.hpp"
#include "evcharge/synth.hpp"

namespace evcharge {

constexpr char const* kToolVersion = "1.0.0";
constexpr std::size_t kTopGroups = 10;

struct run_config {
  std::filesystem::path input_;
  std::filesystem::path out_;
  std::optional<std::string> period_start_, period_end_;
  double merge_radius_m_{kDefaultMergeRadiusM};
  std::size_t min_transactions_{kDefaultMinTransactions};
  double max_duration_hours_{kDefaultMaxDurationHours};
  std::optional<std::filesystem::path> bands_;
  double theta_{kDefaultTheta};
  std::optional<std::string> theta_grid_;
  double o_{1.0};
  double p_{2.0 / 3.0};
  std::size_t k_{10};
  bool sweep_{false};
  std::uint64_t seed_{1};
  // generate only
  std::size_t stations_per_archetype_{20};
  std::size_t transactions_per_station_{200};
  std::optional<std::filesystem::path> archetypes_;
};

// Collects output files and writes a manifest listing their digests.
class run_writer {
public:
  run_writer(std::filesystem::path out, std::string command)
      : out_{std::move(out)}, command_{std::move(command)} {
    std::filesystem::create_directories(out_);
  }

  void write(std::filesystem::path const& rel, std::string const& content) {
    auto const path = out_ / rel;
    std::filesystem::create_directories(path.parent_path());
    std::ofstream f{path, std::ios::binary};
    f << content;
    if (!f) {
      throw data_error{"cannot write '" + path.string() + "'"};
    }
    outputs_[rel.generic_string()] = sha256_hex(content);
  }

  void input(std::string const& name, std::string const& content) {
    inputs_[name] = sha256_hex(content);
  }

  nlohmann::json& config() { return config_; }
  nlohmann::json& summary() { return summary_; }

  void finish() {
    nlohmann::json m{{"tool", "evcharge"},
                     {"version", kToolVersion},
                     {"command", command_},
                     {"config", config_},
                     {"inputs", inputs_},
                     {"summary", summary_},
                     {"outputs", outputs_}};
    std::ofstream f{out_ / "manifest.json", std::ios::binary};
    f << m.dump(2) << '\n';
    if (!f) {
      throw data_error{"cannot write manifest"};
    }
  }

private:
  std::filesystem::path out_;
  std::string command_;
  nlohmann::json config_ = nlohmann::json::object();
  nlohmann::json summary_ = nlohmann::json::object();
  std::map<std::string, std::string> inputs_, outputs_;
};

namespace detail {

inline std::string file_safe(std::string const& id) {
  std::string s;
  for (char const c : id) {
    auto const ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
    s.push_back(ok ? c : '_');
  }
  return s;
}

inline std::string indexed_name(std::size_t i, std::string const& stem) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04zu_", i);
  return buf + file_safe(stem);
}

template <typename F>
std::string to_text(F&& f) {
  std::ostringstream ss;
  f(ss);
  return ss.str();
}

inline std::chrono::sys_days require_date(std::string const& s, char const* what) {
  auto const d = parse_date(s);
  if (!d) {
    throw config_error{std::string{"invalid "} + what + " date '" + s +
                       "' (expected YYYY-MM-DD)"};
  }
  return *d;
}

}  // namespace detail

inline preprocess_config make_preprocess_config(run_config const& cfg) {
  preprocess_config pc;
  if (cfg.period_start_.has_value() != cfg.period_end_.has_value()) {
    throw config_error{"--period-start and --period-end must be given together"};
  }
  if (cfg.period_start_) {
    pc.period_.emplace(detail::require_date(*cfg.period_start_, "period start"),
                       detail::require_date(*cfg.period_end_, "period end"));
  }
  if (!(cfg.merge_radius_m_ > 0.0)) {
    throw config_error{"--merge-radius must be positive"};
  }
  if (cfg.min_transactions_ < 1) {
    throw config_error{"--min-transactions must be at least 1"};
  }
  if (!(cfg.max_duration_hours_ > 0.0 && cfg.max_duration_hours_ <= 24.0)) {
    throw config_error{"--max-duration-hours must lie in (0, 24]"};
  }
  pc.merge_radius_m_ = cfg.merge_radius_m_;
  pc.min_transactions_ = cfg.min_transactions_;
  pc.max_duration_hours_ = cfg.max_duration_hours_;
  return pc;
}

// --- generate ---------------------------------------------------------------

inline fixture cmd_generate(run_config const& cfg) {
  if (cfg.stations_per_archetype_ < 1 || cfg.transactions_per_station_ < 1) {
    throw config_error{"station and transaction counts must be at least 1"};
  }
  run_writer w{cfg.out_, "generate"};
  auto archetypes = default_archetypes();
  if (cfg.archetypes_) {
    auto const text = read_file(*cfg.archetypes_);
    w.input("archetypes", text);
    try {
      archetypes = archetypes_from_json(nlohmann::json::parse(text));
    } catch (nlohmann::json::parse_error const& e) {
      throw config_error{std::string{"archetype file is not JSON: "} + e.what()};
    }
  }
  auto f = generate_fixture(archetypes, cfg.stations_per_archetype_,
                            cfg.transactions_per_station_, cfg.seed_);

  w.config() = {{"seed", cfg.seed_},
                {"stations_per_archetype", cfg.stations_per_archetype_},
                {"transactions_per_station", cfg.transactions_per_station_},
                {"rng", "mt19937_64 + splitmix64 station seeds + Box-Muller"}};
  w.write("transactions.csv",
          detail::to_text([&](auto& s) { write_transactions(s, f.transactions_); }));
  w.write("ground_truth.csv", detail::to_text([&](auto& s) {
            s << "station_id,archetype\n";
            for (auto const& [id, a] : f.truth_) {
              s << csv::escape(id) << ',' << csv::escape(archetypes[a].name_) << '\n';
            }
          }));
  auto arr = nlohmann::json::array();
  for (auto const& a : archetypes) {
    auto const mix = [](std::vector<mixture_component> const& m) {
      auto out = nlohmann::json::array();
      for (auto const& c : m) {
        out.push_back({{"mean", c.mean_}, {"std", c.std_}, {"weight", c.weight_}});
      }
      return out;
    };
    arr.push_back(
        {{"name", a.name_}, {"arrival", mix(a.arrival_)}, {"duration", mix(a.duration_)}});
  }
  w.write("archetypes.json", arr.dump(2) + "\n");
  w.summary() = {{"stations", f.truth_.size()},
                 {"transactions", f.transactions_.size()}};
  w.finish();
  return f;
}

// --- matrices ---------------------------------------------------------------

struct matrices_result {
  std::vector<labeled_matrix> matrices_;
  value_frequencies frequencies_{};
  std::size_t rejected_{0};
};

inline matrices_result cmd_matrices(run_config const& cfg) {
  auto const pc = make_preprocess_config(cfg);
  auto const text = read_file(cfg.input_);
  std::istringstream in{text};
  auto parsed = parse_transactions(in);

  run_writer w{cfg.out_, "matrices"};
  w.input(cfg.input_.filename().string(), text);
  w.config() = {{"period_start", cfg.period_start_.value_or("")},
                {"period_end", cfg.period_end_.value_or("")},
                {"merge_radius_m", cfg.merge_radius_m_},
                {"min_transactions", cfg.min_transactions_},
                {"max_duration_hours", cfg.max_duration_hours_}};
  w.write("rejections.csv", detail::to_text([&](auto& s) {
            write_rejections(s, parsed.rejections_);
          }));

  auto const pre = preprocess(std::move(parsed.transactions_), pc);
  if (pre.pools_.empty()) {
    throw data_error{"zero surviving pools"};
  }

  matrices_result r;
  r.rejected_ = parsed.rejections_.size();
  for (auto const& pool : pre.pools_) {
    r.matrices_.push_back({pool.pool_id_, build_matrix(pool.transactions_)});
  }
  std::vector<charging_matrix> plain;
  for (auto const& m : r.matrices_) {
    plain.push_back(m.matrix_);
  }
  r.frequencies_ = value_frequency_report(plain);

  w.write("pools.csv", detail::to_text([&](auto& s) {
            s << "pool_id,station_id\n";
            for (auto const& p : pre.all_pools_) {
              for (auto const& m : p.members_) {
                s << csv::escape(p.pool_id_) << ',' << csv::escape(m) << '\n';
              }
            }
          }));
  for (std::size_t i = 0; i < r.matrices_.size(); ++i) {
    w.write(std::filesystem::path{"matrices"} /
                (detail::indexed_name(i, r.matrices_[i].pool_id_) + ".json"),
            to_json(r.matrices_[i]).dump(1) + "\n");
  }
  w.write("matrices.csv", detail::to_text([&](auto& s) {
            write_nonzero_cells(s, r.matrices_);
          }));
  w.write("frequency.csv", detail::to_text([&](auto& s) {
            write_value_frequencies(s, r.frequencies_);
          }));
  w.summary() = {{"rows", parsed.rows_},
                 {"rejected", parsed.rejections_.size()},
                 {"in_period", pre.in_period_},
                 {"long_sessions_discarded", pre.long_discarded_},
                 {"pools", pre.all_pools_.size()},
                 {"surviving_pools", pre.pools_.size()}};
  w.finish();
  return r;
}

// Reads the matrices written by cmd_matrices from `dir`/matrices.
inline std::vector<labeled_matrix> load_matrices(std::filesystem::path const& dir,
                                                 run_writer* w = nullptr) {
  auto const mdir = dir / "matrices";
  if (!std::filesystem::is_directory(mdir)) {
    throw data_error{"no matrices directory under '" + dir.string() + "'"};
  }
  std::vector<std::filesystem::path> files;
  for (auto const& e : std::filesystem::directory_iterator{mdir}) {
    if (e.is_regular_file() && e.path().extension() == ".json") {
      files.push_back(e.path());
    }
  }
  std::sort(begin(files), end(files));
  std::vector<labeled_matrix> out;
  for (auto const& f : files) {
    auto const text = read_file(f);
    if (w != nullptr) {
      w->input("matrices/" + f.filename().string(), text);
    }
    try {
      out.push_back(matrix_from_json(nlohmann::json::parse(text)));
    } catch (nlohmann::json::parse_error const& e) {
      throw data_error{"'" + f.string() + "' is not JSON: " + e.what()};
    }
  }
  if (out.empty()) {
    throw data_error{"no matrix files under '" + mdir.string() + "'"};
  }
  return out;
}

// --- rules ------------------------------------------------------------------

// "start:stop:step" (inclusive) or a comma separated list.
inline std::vector<double> parse_theta_grid(std::string const& spec) {
  auto const num = [](std::string_view s) {
    double v = 0.0;
    if (!detail::parse_number(s, v) || !std::isfinite(v)) {
      throw config_error{"invalid theta grid value '" + std::string{s} + "'"};
    }
    return v;
  };
  std::vector<double> out;
  if (spec.find(':') != std::string::npos) {
    auto const parts = [&] {
      std::vector<std::string> p;
      std::string cur;
      for (char const c : spec) {
        if (c == ':') {
          p.push_back(cur);
          cur.clear();
        } else {
          cur.push_back(c);
        }
      }
      p.push_back(cur);
      return p;
    }();
    if (parts.size() != 3) {
      throw config_error{"theta grid must be start:stop:step"};
    }
    auto const start = num(parts[0]), stop = num(parts[1]), step = num(parts[2]);
    if (!(step > 0.0) || stop < start) {
      throw config_error{"theta grid needs step > 0 and stop >= start"};
    }
    auto const count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (std::size_t i = 0; i < count; ++i) {
      out.push_back(std::round((start + static_cast<double>(i) * step) * 1e9) / 1e9);
    }
  } else {
    for (auto const& f : csv::split_line(spec)) {
      out.push_back(num(f));
    }
  }
  return out;
}

struct rules_result {
  signature_groups groups_;
  std::vector<std::pair<double, signature_groups>> theta_sweep_;
};

inline rules_result cmd_rules(run_config const& cfg) {
  run_writer w{cfg.out_, "rules"};
  auto scheme = default_band_scheme();
  if (cfg.bands_) {
    auto const text = read_file(*cfg.bands_);
    w.input("bands", text);
    try {
      scheme = band_scheme_from_json(nlohmann::json::parse(text));
    } catch (nlohmann::json::parse_error const& e) {
      throw config_error{std::string{"band scheme is not JSON: "} + e.what()};
    }
  }
  rule_config const rc{scheme, cfg.theta_};
  std::vector<double> grid;
  if (cfg.theta_grid_) {
    grid = parse_theta_grid(*cfg.theta_grid_);
    for (auto const t : grid) {
      rule_config{scheme, t};  // validates
    }
  }
  auto const matrices = load_matrices(cfg.input_, &w);

  w.config() = {{"bands", to_json(scheme)},
                {"theta", cfg.theta_},
                {"theta_grid", grid}};
  rules_result r;
  r.groups_ = group_by_signature(matrices, rc);
  w.write("signatures.csv", detail::to_text([&](auto& s) {
            write_signatures(s, matrices, rc);
          }));
  w.write("groups.csv",
          detail::to_text([&](auto& s) { write_groups(s, r.groups_); }));
  w.write("top_groups.csv", detail::to_text([&](auto& s) {
            s << "rank,signature,size\n";
            auto rank = 1;
            for (auto const& [sig, size] : top_k_groups(r.groups_, kTopGroups)) {
              s << rank++ << ',' << sig.to_string() << ',' << size << '\n';
            }
          }));

  if (!grid.empty()) {
    std::string summary = "theta,groups,largest\n";
    for (auto const t : grid) {
      auto g = group_by_signature(matrices, rule_config{scheme, t});
      w.write(std::filesystem::path{"theta_sweep"} /
                  ("groups_theta_" + format_double(t) + ".csv"),
              detail::to_text([&](auto& s) { write_groups(s, g); }));
      summary += format_double(t) + ',' + std::to_string(g.size()) + ',' +
                 std::to_string(top_k_groups(g, 1).front().second) + '\n';
      r.theta_sweep_.emplace_back(t, std::move(g));
    }
    w.write(std::filesystem::path{"theta_sweep"} / "summary.csv", summary);
  }
  w.summary() = {{"pools", matrices.size()}, {"groups", r.groups_.size()}};
  w.finish();
  return r;
}

// --- cluster / sweep --------------------------------------------------------

inline sweep_result run_sweep(std::vector<labeled_matrix> const& matrices,
                              std::size_t k, run_writer& w) {
  auto const params = reference_sweep_params();
  auto r = sweep(matrices, params, k);
  w.write("sweep.csv", detail::to_text([&](auto& s) { write_sweep(s, r, k); }));
  return r;
}

struct cluster_result {
  std::vector<std::string> labels_;
  cluster_assignment assignment_;
  std::optional<sweep_result> sweep_;
};

inline cluster_result cmd_cluster(run_config const& cfg) {
  dissim_params const params{cfg.o_, cfg.p_};
  run_writer w{cfg.out_, "cluster"};
  auto const matrices = load_matrices(cfg.input_, &w);
  if (matrices.size() < 2) {
    throw data_error{"clustering needs at least 2 pools"};
  }
  if (cfg.k_ < 1 || cfg.k_ > matrices.size()) {
    throw config_error{"--k must lie in [1, " + std::to_string(matrices.size()) + "]"};
  }
  w.config() = {{"o", params.o()}, {"p", params.p()}, {"k", cfg.k_},
                {"linkage", "complete"}, {"sweep", cfg.sweep_}};

  auto const d = make_distance_matrix(matrices, params);
  w.write("distances.csv", detail::to_text([&](auto& s) { write_distance_csv(s, d); }));
  w.write("distance_params.json", to_json(params).dump() + "\n");
  auto const tree = agglomerate(d);
  w.write("dendrogram.json", to_json(tree).dump(1) + "\n");

  cluster_result r{d.labels(), cut(tree, cfg.k_), std::nullopt};
  w.write("assignments.csv", detail::to_text([&](auto& s) {
            write_assignment(s, r.labels_, r.assignment_);
          }));

  std::string clusters = "cluster,size,medoid\n";
  for (std::size_t c = 0; c < cfg.k_; ++c) {
    auto const members = r.assignment_.members(c);
    std::vector<charging_matrix> member_matrices;
    for (auto const i : members) {
      member_matrices.push_back(matrices[i].matrix_);
    }
    auto const med = medoid(members, d);
    char stem[32];
    std::snprintf(stem, sizeof(stem), "cluster_%02zu", c);
    labeled_matrix const mean{stem, cluster_representative_mean(member_matrices)};
    w.write(std::filesystem::path{"representatives"} / (std::string{stem} + "_mean.json"),
            to_json(mean).dump(1) + "\n");
    w.write(std::filesystem::path{"representatives"} /
                (std::string{stem} + "_medoid.json"),
            to_json(matrices[med]).dump(1) + "\n");
    w.write(std::filesystem::path{"heatmaps"} / (std::string{stem} + "_mean.svg"),
            heatmap_svg(mean.matrix_, std::string{stem} + " mean, " +
                                          std::to_string(members.size()) +
                                          " pools"));
    w.write(std::filesystem::path{"heatmaps"} / (std::string{stem} + "_medoid.svg"),
            heatmap_svg(matrices[med].matrix_,
                        std::string{stem} + " medoid " + matrices[med].pool_id_));
    clusters += std::to_string(c) + ',' + std::to_string(members.size()) + ',' +
                csv::escape(matrices[med].pool_id_) + '\n';
  }
  w.write("clusters.csv", clusters);

  if (cfg.sweep_) {
    r.sweep_ = run_sweep(matrices, cfg.k_, w);
  }
  auto const sizes = r.assignment_.sizes();
  w.summary() = {{"pools", matrices.size()}, {"sizes", sizes}};
  w.finish();
  return r;
}

inline sweep_result cmd_sweep(run_config const& cfg) {
  run_writer w{cfg.out_, "sweep"};
  auto const matrices = load_matrices(cfg.input_, &w);
  if (cfg.k_ < 1 || cfg.k_ > matrices.size()) {
    throw config_error{"--k must lie in [1, " + std::to_string(matrices.size()) + "]"};
  }
  w.config() = {{"k", cfg.k_}, {"linkage", "complete"}};
  auto r = run_sweep(matrices, cfg.k_, w);
  w.summary() = {{"pools", matrices.size()}, {"rows", r.rows_.size()}};
  w.finish();
  return r;
}

}  // namespace evcharge
