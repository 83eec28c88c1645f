// stm: synthetic data export, experiment runs and report re-rendering.
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "stm/error.hpp"
#include "stm/harness.hpp"
#include "stm/parallel.hpp"

namespace {

int fail(std::string_view code, const std::string& message) {
  std::cerr << nlohmann::json{{"error", code}, {"message", message}}.dump() << '\n';
  return 1;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw stm::Error(stm::ErrorCode::io_error, path.string() + ": cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Support tensor machine benchmark"};
  app.require_subcommand(1);

  std::size_t threads = stm::default_thread_count();

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset and export it");
  stm::SynthConfig sc;
  std::string scenario = "leaf", law = "normal";
  std::filesystem::path synth_out;
  synth->add_option("--scenario", scenario, "core or leaf")->capture_default_str();
  synth->add_option("--mode-size", sc.mode_size)->capture_default_str();
  synth->add_option("--r-exact", sc.r_exact)->capture_default_str();
  synth->add_option("--r-approx", sc.r_approx)->capture_default_str();
  synth->add_option("--noise", sc.noise_variance, "noise variance")->capture_default_str();
  synth->add_option("--samples-per-class", sc.samples_per_class)->capture_default_str();
  synth->add_option("--seed", sc.seed)->capture_default_str();
  synth->add_option("--frequency-law", law, "normal or uniform")->capture_default_str();
  synth->add_option("--out", synth_out, "output directory")->required();

  // run
  auto* run = app.add_subcommand("run", "run a cross-validated experiment from a YAML config");
  std::filesystem::path config_path, run_out;
  run->add_option("config", config_path, "experiment config")->required()->check(CLI::ExistingFile);
  run->add_option("--out", run_out, "output directory (overrides the config)");
  run->add_option("--threads", threads, "worker threads (default: STM_THREADS or all cores)")
      ->check(CLI::PositiveNumber);

  // report
  auto* report = app.add_subcommand("report", "re-render a CSV report from summary.json");
  std::filesystem::path summary_path, csv_out;
  report->add_option("summary", summary_path, "summary.json from a previous run")
      ->required()
      ->check(CLI::ExistingFile);
  report->add_option("--csv", csv_out, "write here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what());
  }

  try {
    if (*synth) {
      sc.scenario = stm::parse_scenario(scenario);
      sc.frequency_law = stm::parse_frequency_law(law);
      sc.validate();
      std::vector<stm::DenseTensor> tensors;
      std::vector<int> labels;
      for (const auto& s : stm::generate(sc)) {
        tensors.push_back(stm::tucker_reconstruct(s.tensor));
        labels.push_back(s.label);
      }
      stm::export_dataset(synth_out, tensors, labels);
      std::cout << "wrote " << tensors.size() << " samples to " << synth_out.string() << '\n';
    } else if (*run) {
      stm::ExperimentConfig cfg = stm::load_config(config_path);
      if (!run_out.empty()) cfg.output = run_out;
      const stm::CVReport r = stm::run_experiment(cfg, threads);
      stm::emit_report(r, cfg.output);
      std::size_t invalid = 0;
      for (const auto& row : r.rows) invalid += !row.valid;
      std::cout << "wrote " << r.rows.size() << " rows to " << cfg.output.string();
      if (invalid) std::cout << " (" << invalid << " invalid cells)";
      std::cout << '\n';
    } else if (*report) {
      const stm::CVReport r = stm::parse_report_json(slurp(summary_path));
      const std::string csv = stm::report_csv(r);
      if (csv_out.empty()) {
        std::cout << csv;
      } else {
        std::ofstream out(csv_out, std::ios::binary | std::ios::trunc);
        out << csv;
        if (!out) throw stm::Error(stm::ErrorCode::io_error, csv_out.string() + ": write failed");
      }
    }
  } catch (const stm::Error& e) {
    return fail(stm::to_string(e.code()), e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return 0;
}
