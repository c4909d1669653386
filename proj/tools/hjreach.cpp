// hjreach: command-line driver for training, grid solves and verification.

#include "hjreach/grid.hpp"
#include "hjreach/io.hpp"
#include "hjreach/pipeline.hpp"
#include "hjreach/rollout.hpp"
#include "hjreach/value_model.hpp"
#include "hjreach/verify.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace hjreach;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitChecksum = 3;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> iters;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Run configuration (JSON)")->required();
  cmd->add_option("--seed", c.seed, "Override the run seed");
  cmd->add_option("--iters", c.iters, "Override the training iteration count");
  cmd->add_option("--out", c.out, "Output path");
}

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

RunConfig load(const Common& c) {
  if (!fs::exists(c.config)) throw UsageError("config file '" + c.config + "' not found");
  RunConfig cfg = load_config(c.config);
  if (c.seed) {
    cfg.train.seed = *c.seed;
    cfg.verify.seed = *c.seed;
  }
  if (c.iters) cfg.train.iters = *c.iters;
  cfg.train.validate();
  return cfg;
}

fs::path output_path(const RunConfig& cfg, const Common& c, const std::string& fallback) {
  return c.out.empty() ? fs::path(cfg.out_dir) / fallback : fs::path(c.out);
}

std::unique_ptr<std::ofstream> open_log(const RunConfig& cfg) {
  const fs::path path = fs::path(cfg.log_file).is_absolute() ? fs::path(cfg.log_file) : fs::path(cfg.out_dir) / cfg.log_file;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto log = std::make_unique<std::ofstream>(path, std::ios::app);
  if (!*log) throw std::runtime_error("cannot open log file '" + path.string() + "'");
  return log;
}

std::shared_ptr<const System> system_for(const RunConfig& cfg) { return make_system(cfg.system); }

Checkpoint load_model(const std::string& path, const RunConfig& cfg, bool force) {
  Checkpoint c = load_checkpoint(path);
  if (c.system_hash != cfg.system.hash() && !force) {
    throw ContractError("checkpoint '" + path + "' was trained on system '" + c.system +
                        "' with different parameters; pass --force to use it anyway");
  }
  return c;
}

void print_record(const VolumeRecord& r, const std::string& out) {
  write_volume_record(std::cout, r);
  if (!out.empty()) {
    std::ofstream f(out, std::ios::app);
    write_volume_record(f, r);
  }
}

std::vector<VolumeRecord> read_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<VolumeRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    records.push_back({j.at("system").get<std::string>(), j.at("variant").get<std::string>(),
                       j.at("seed").get<std::uint64_t>(), j.at("delta").get<double>(), j.at("volume").get<double>()});
  }
  return records;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hamilton-Jacobi reachability with exact terminal conditions"};
  app.require_subcommand(1);

  Common pre;
  auto* cmd_pre = app.add_subcommand("pretrain", "Initialize and pretrain a network, write a checkpoint");
  add_common(cmd_pre, pre);

  Common tr;
  std::string from;
  bool force = false;
  auto* cmd_train = app.add_subcommand("train", "Curriculum training (pretrains first unless --from is given)");
  add_common(cmd_train, tr);
  cmd_train->add_option("--from", from, "Continue from a checkpoint");
  cmd_train->add_flag("--force", force, "Accept a checkpoint from a different system");

  Common gs;
  auto* cmd_grid = app.add_subcommand("grid-solve", "Dense-grid ground truth V(., 0)");
  add_common(cmd_grid, gs);

  Common ev;
  std::string ev_model;
  double ev_delta = 0.0;
  auto* cmd_vol = app.add_subcommand("eval-volume", "Monte-Carlo volume of the safe set at a fixed delta");
  add_common(cmd_vol, ev);
  cmd_vol->add_option("--model", ev_model, "Checkpoint")->required();
  cmd_vol->add_option("--delta", ev_delta, "Level-set correction");

  Common vf;
  std::string vf_model;
  auto* cmd_verify = app.add_subcommand("verify", "Conformal calibration followed by the corrected volume");
  add_common(cmd_verify, vf);
  cmd_verify->add_option("--model", vf_model, "Checkpoint")->required();

  Common ro;
  std::string ro_model, ro_x0;
  double ro_dt = 0.0;
  auto* cmd_roll = app.add_subcommand("rollout", "Simulate the learned policy from one state, write CSV");
  add_common(cmd_roll, ro);
  cmd_roll->add_option("--model", ro_model, "Checkpoint")->required();
  cmd_roll->add_option("--x0", ro_x0, "Initial state, comma separated")->required();
  cmd_roll->add_option("--dt", ro_dt, "Step size (default T/500)");

  Common sl;
  std::string sl_model, sl_field;
  auto* cmd_slice = app.add_subcommand("export-slice", "Write a 2D slice of a model or grid field as CSV");
  add_common(cmd_slice, sl);
  auto* opt_model = cmd_slice->add_option("--model", sl_model, "Checkpoint");
  auto* opt_field = cmd_slice->add_option("--field", sl_field, "Grid field file");
  opt_model->excludes(opt_field);

  Common rp;
  std::vector<std::string> rp_records;
  std::string rp_model, rp_field;
  auto* cmd_report = app.add_subcommand("report", "Summarize volume records; compare a model with a grid field");
  add_common(cmd_report, rp);
  cmd_report->add_option("--records", rp_records, "Record files (JSON lines)");
  cmd_report->add_option("--model", rp_model, "Checkpoint to compare");
  cmd_report->add_option("--field", rp_field, "Grid field to compare against");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*cmd_pre) {
      const RunConfig cfg = load(pre);
      auto log = open_log(cfg);
      const Checkpoint c = run_pretrain(system_for(cfg), cfg.train, log.get());
      const fs::path out = output_path(cfg, pre, "pretrained.ckpt");
      save_checkpoint(out, c);
      std::cout << "wrote " << out.string() << "\n";
    } else if (*cmd_train) {
      const RunConfig cfg = load(tr);
      auto sys = system_for(cfg);
      auto log = open_log(cfg);
      Checkpoint c;
      if (!from.empty()) {
        const Checkpoint start = load_model(from, cfg, force);
        c = run_train(sys, cfg.train, &start, log.get());
      } else {
        c = run_train(sys, cfg.train, nullptr, log.get());
      }
      const fs::path out = output_path(cfg, tr, "trained.ckpt");
      save_checkpoint(out, c);
      std::cout << "wrote " << out.string() << "\n";
    } else if (*cmd_grid) {
      const RunConfig cfg = load(gs);
      auto sys = system_for(cfg);
      const Grid grid = Grid::for_system(*sys, cfg.grid.nodes);
      const fs::path out = output_path(cfg, gs, "ground_truth.hjrg");
      GridField field;
      if (cfg.grid.snapshot_every > 0) {
        const auto snaps = solve_snapshots(*sys, grid, sys->horizon(), cfg.grid.cfl, cfg.grid.snapshot_every);
        for (std::size_t k = 0; k + 1 < snaps.size(); ++k) {
          fs::path p = out;
          p.replace_filename(out.stem().string() + "_snap" + std::to_string(k) + out.extension().string());
          save_field(p, snaps[k]);
        }
        field = snaps.back();
      } else {
        field = solve(*sys, grid, sys->horizon(), cfg.grid.cfl);
      }
      save_field(out, field);
      std::printf("wrote %s (sub-zero fraction %.4f)\n", out.string().c_str(), field.subzero_fraction());
    } else if (*cmd_vol) {
      const RunConfig cfg = load(ev);
      auto sys = system_for(cfg);
      const Checkpoint c = load_model(ev_model, cfg, false);
      const ValueModel model(c.variant, c.params, sys);
      Rng rng = Rng::stream(cfg.verify.seed, "volume");
      const double vol = mc_volume(model, ev_delta, cfg.verify, rng);
      print_record({c.system, std::string(to_string(c.variant)), cfg.verify.seed, ev_delta, vol}, ev.out);
    } else if (*cmd_verify) {
      const RunConfig cfg = load(vf);
      cfg.verify.validate();
      auto sys = system_for(cfg);
      const Checkpoint c = load_model(vf_model, cfg, false);
      const ValueModel model(c.variant, c.params, sys);
      Rng calib = Rng::stream(cfg.verify.seed, "calibration");
      const Calibration cal = calibrate(model, cfg.verify, calib);
      Rng vol_rng = Rng::stream(cfg.verify.seed, "volume");
      const double vol = mc_volume(model, cal.delta, cfg.verify, vol_rng);
      print_record({c.system, std::string(to_string(c.variant)), cfg.verify.seed, cal.delta, vol}, vf.out);
    } else if (*cmd_roll) {
      const RunConfig cfg = load(ro);
      auto sys = system_for(cfg);
      const Checkpoint c = load_model(ro_model, cfg, false);
      const ValueModel model(c.variant, c.params, sys);
      const std::vector<double> x = parse_list(ro_x0);
      if (static_cast<int>(x.size()) != sys->state_dim()) throw ContractError("--x0 needs one value per state");
      const StateVec x0 = Eigen::Map<const StateVec>(x.data(), sys->state_dim());
      const Trajectory traj =
          simulate(*sys, policy_controller(model), x0, 0.0, ro_dt > 0.0 ? ro_dt : default_rollout_step(*sys));
      const fs::path out = output_path(cfg, ro, "rollout.csv");
      std::ostringstream csv;
      write_trajectory_csv(csv, *sys, traj);
      write_file(out, csv.str());
      std::printf("cost %.9g%s\n", traj.cost, traj.failed ? (" (" + traj.error + ")").c_str() : "");
      if (traj.failed) return kExitFailure;
    } else if (*cmd_slice) {
      const RunConfig cfg = load(sl);
      auto sys = system_for(cfg);
      std::ostringstream csv;
      if (!sl_field.empty()) {
        export_slice(csv, *sys, load_field(sl_field), cfg.slice);
      } else if (!sl_model.empty()) {
        const Checkpoint c = load_model(sl_model, cfg, false);
        export_slice(csv, ValueModel(c.variant, c.params, sys), cfg.slice);
      } else {
        throw ContractError("export-slice needs --model or --field");
      }
      const fs::path out = output_path(cfg, sl, "slice.csv");
      write_file(out, csv.str());
      std::cout << "wrote " << out.string() << "\n";
    } else if (*cmd_report) {
      const RunConfig cfg = load(rp);
      std::ostringstream text;
      if (!rp_records.empty()) {
        std::vector<VolumeRecord> all;
        for (const auto& p : rp_records) {
          auto r = read_records(p);
          all.insert(all.end(), r.begin(), r.end());
        }
        write_volume_table(text, volume_report(all));
      }
      if (!rp_model.empty() && !rp_field.empty()) {
        auto sys = system_for(cfg);
        const Checkpoint c = load_model(rp_model, cfg, false);
        const GridField truth = load_field(rp_field);
        const GridField learned = model_field(ValueModel(c.variant, c.params, sys), truth.grid, 0.0);
        char buf[160];
        std::snprintf(buf, sizeof(buf), "iou %.4f  learned/ground-truth BRT volume %.4f\n", iou(learned, truth),
                      learned.subzero_fraction() / truth.subzero_fraction());
        text << buf;
      }
      std::cout << text.str();
      if (!rp.out.empty()) write_file(rp.out, text.str());
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  } catch (const ChecksumError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitChecksum;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return 0;
}
