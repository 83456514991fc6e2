#pragma once

// Command-line front end wiring the pipeline together. Exit codes: 0 on
// success, 1 on usage errors, 2 on data errors. Diagnostics go to standard
// error; results go to files or standard output as JSON.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "seqcal/alignment.hpp"
#include "seqcal/confusion.hpp"
#include "seqcal/core.hpp"
#include "seqcal/jsonl.hpp"
#include "seqcal/metrics.hpp"
#include "seqcal/smoothing.hpp"
#include "seqcal/svg.hpp"
#include "seqcal/synth.hpp"
#include "seqcal/synth_config.hpp"
#include "seqcal/temperature.hpp"

namespace seqcal::cli {

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write file: " + path);
  out << content;
  if (!out) throw Error(ErrorCode::IoError, "failed writing file: " + path);
}

inline void emit(const std::optional<std::string>& out_path, const std::string& content) {
  if (out_path)
    write_file(*out_path, content);
  else
    std::cout << content << std::flush;
}

// Shape checks that do not need an alphabet, enough to keep the metric code
// within bounds when --k is not supplied.
inline void check_record_shape(const PredictionRecord& record) {
  const std::size_t n = record.predicted.size();
  if (record.full_mode()) {
    if (record.dists.size() != n)
      throw Error(ErrorCode::LengthMismatch,
                  "record '" + record.id + "': dists and pred lengths differ");
    for (std::size_t t = 0; t < n; ++t) {
      const auto pred = record.predicted[t];
      if (pred < 0 || static_cast<std::size_t>(pred) >= record.dists[t].probs.size())
        throw Error(ErrorCode::IndexOutOfRange,
                    "record '" + record.id + "': predicted class outside its distribution");
    }
  } else {
    if (record.confidences.size() != n)
      throw Error(ErrorCode::LengthMismatch,
                  "record '" + record.id + "': conf and pred lengths differ");
    for (double c : record.confidences)
      if (!(c > 0.0) || c > 1.0)
        throw Error(ErrorCode::NotADistribution,
                    "record '" + record.id + "': confidence outside (0, 1]");
  }
}

struct ReferenceSequence {
  std::string id;
  std::vector<ClassId> tokens;
};

// Reference lists are JSONL with at least {"id": str, "ref": [int]}; a full
// prediction log therefore works unchanged.
inline std::vector<ReferenceSequence> read_references(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open reference file: " + path);
  std::vector<ReferenceSequence> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      out.push_back({j.at("id").get<std::string>(), j.at("ref").get<std::vector<ClassId>>()});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError,
                  "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace detail

struct CommonSmoothingFlags {
  std::string mode = "casls";
  double alpha_prime = 0.05;
  double threshold = 0.5;
  bool adaptive = true;
  std::string normalization = "renormalized";

  SmoothingConfig to_config() const {
    SmoothingConfig config;
    if (mode == "ls")
      config.mode = SmoothingMode::LS;
    else if (mode == "sls")
      config.mode = SmoothingMode::SLS;
    else
      config.mode = SmoothingMode::CASLS;
    config.alpha_prime = alpha_prime;
    config.threshold = threshold;
    config.adaptive = adaptive;
    config.normalization =
        normalization == "aswritten" ? Normalization::AsWritten : Normalization::Renormalized;
    return config;
  }
};

inline int run_cli(std::vector<std::string> args) {
  CLI::App app{"sequence-recognition confidence calibration toolkit"};
  app.name("seqcal");
  app.require_subcommand(1);

  // stats ------------------------------------------------------------
  auto* stats_cmd =
      app.add_subcommand("stats", "build context confusion statistics from a prediction log");
  std::string stats_in, stats_out_path;
  int stats_k = 0;
  std::optional<std::string> stats_out;
  stats_cmd->add_option("--in", stats_in, "JSONL prediction log")->required();
  stats_cmd->add_option("--k", stats_k, "ordinary class count")->required()->check(CLI::Range(2, 1 << 20));
  stats_cmd->add_option("--out", stats_out_path, "stats file (default: stdout)");

  // targets ----------------------------------------------------------
  auto* targets_cmd =
      app.add_subcommand("targets", "emit soft-target distributions for reference sequences");
  std::string targets_stats, targets_refs, targets_out_path;
  CommonSmoothingFlags targets_flags;
  targets_cmd->add_option("--stats", targets_stats, "stats file from the stats subcommand")
      ->required();
  targets_cmd->add_option("--refs", targets_refs, "JSONL with id and ref fields")->required();
  targets_cmd->add_option("--out", targets_out_path, "targets JSONL (default: stdout)");
  targets_cmd->add_option("--mode", targets_flags.mode, "ls, sls or casls")
      ->check(CLI::IsMember({"ls", "sls", "casls"}));
  targets_cmd->add_option("--alpha-prime", targets_flags.alpha_prime, "sequence-level strength")
      ->check(CLI::Range(1e-12, 1.0 - 1e-12));
  targets_cmd->add_option("--threshold", targets_flags.threshold, "error-prone threshold")
      ->check(CLI::Range(0.0, 1.0 - 1e-12));
  targets_cmd->add_flag("--adaptive,!--no-adaptive", targets_flags.adaptive,
                        "derive per-sequence strength from length (default on)");
  targets_cmd->add_option("--normalization", targets_flags.normalization,
                          "renormalized or aswritten")
      ->check(CLI::IsMember({"renormalized", "aswritten"}));

  // evaluate ----------------------------------------------------------
  auto* evaluate_cmd = app.add_subcommand("evaluate", "calibration report for a prediction log");
  std::string evaluate_in, evaluate_out_path, evaluate_svg;
  int evaluate_bins = 15;
  int evaluate_k = 0;
  evaluate_cmd->add_option("--in", evaluate_in, "JSONL prediction log")->required();
  evaluate_cmd->add_option("--bins", evaluate_bins, "reliability bin count (default 15)")
      ->check(CLI::Range(1, 1 << 20));
  evaluate_cmd->add_option("--k", evaluate_k, "validate records against this class count")
      ->check(CLI::Range(2, 1 << 20));
  evaluate_cmd->add_option("--out", evaluate_out_path, "report file (default: stdout)");
  evaluate_cmd->add_option("--svg", evaluate_svg, "also write a reliability diagram SVG");

  // fit-temperature ----------------------------------------------------
  auto* fit_cmd = app.add_subcommand("fit-temperature",
                                     "fit the temperature-scaling baseline on a full-mode log");
  std::string fit_in, fit_out_path;
  int fit_k = 0;
  fit_cmd->add_option("--in", fit_in, "JSONL prediction log with dists")->required();
  fit_cmd->add_option("--k", fit_k, "ordinary class count")->required()->check(CLI::Range(2, 1 << 20));
  fit_cmd->add_option("--out", fit_out_path, "result file (default: stdout)");

  // synth-run ----------------------------------------------------------
  auto* synth_cmd = app.add_subcommand("synth-run", "run the synthetic benchmark end to end");
  std::string synth_spec_path, synth_out_dir;
  std::uint64_t synth_seed = 0;
  bool synth_seed_given = false;
  synth_cmd->add_option("--spec", synth_spec_path, "task spec JSON (default: built-in task)");
  synth_cmd->add_option("--out", synth_out_dir, "output directory")->required();
  synth_cmd->add_option("--seed", synth_seed, "override the task seed")
      ->each([&](const std::string&) { synth_seed_given = true; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (stats_cmd->parsed()) {
      const Alphabet alphabet(stats_k);
      const auto records = read_records(stats_in);
      ContextConfusionStats stats(alphabet);
      for (const auto& record : records) {
        validate_record(record, alphabet);
        stats.accumulate(align(record.reference, record.predicted, alphabet));
      }
      detail::emit(stats_cmd->count("--out") ? std::optional(stats_out_path) : std::nullopt,
                   stats_to_json(stats) + "\n");
    } else if (targets_cmd->parsed()) {
      const ContextConfusionStats stats = stats_from_json(detail::read_file(targets_stats));
      const SmoothingConfig config = targets_flags.to_config();
      const ErrorProneSets sets = error_prone_sets(stats, config.threshold);
      const auto references = detail::read_references(targets_refs);
      std::string out;
      for (const auto& ref : references) {
        const auto targets =
            sequence_targets(ref.tokens, config, stats, sets, stats.alphabet());
        seqcal::detail::JsonWriter w;
        w.begin_object();
        w.key("id").value(ref.id);
        w.key("targets").begin_array();
        for (const auto& target : targets) {
          w.begin_array();
          for (double v : target) w.value(v);
          w.end_array();
        }
        w.end_array();
        w.end_object();
        out += w.str();
        out += '\n';
      }
      detail::emit(targets_cmd->count("--out") ? std::optional(targets_out_path) : std::nullopt,
                   out);
    } else if (evaluate_cmd->parsed()) {
      const auto records = read_records(evaluate_in);
      if (evaluate_cmd->count("--k")) {
        const Alphabet alphabet(evaluate_k);
        for (const auto& record : records) validate_record(record, alphabet);
      } else {
        for (const auto& record : records) detail::check_record_shape(record);
      }
      const CalibrationReport report = evaluate(records, evaluate_bins);
      detail::emit(
          evaluate_cmd->count("--out") ? std::optional(evaluate_out_path) : std::nullopt,
          report_to_json(report) + "\n");
      if (evaluate_cmd->count("--svg"))
        detail::write_file(evaluate_svg, reliability_diagram_svg(report.bins));
    } else if (fit_cmd->parsed()) {
      const Alphabet alphabet(fit_k);
      const auto records = read_records(fit_in);
      for (const auto& record : records) validate_record(record, alphabet);
      const TemperatureFit fit = fit_temperature(records, alphabet);
      seqcal::detail::JsonWriter w;
      w.begin_object();
      w.key("temperature").value(fit.temperature.value);
      w.key("nll_before").value(fit.nll_before);
      w.key("nll_after").value(fit.nll_after);
      w.end_object();
      detail::emit(fit_cmd->count("--out") ? std::optional(fit_out_path) : std::nullopt,
                   w.str() + "\n");
    } else if (synth_cmd->parsed()) {
      SynthRunConfig config;
      if (synth_cmd->count("--spec"))
        config = synth_config_from_json(detail::read_file(synth_spec_path));
      else
        config.spec = default_task_spec();
      if (const char* env_seed = std::getenv("SEQCAL_SEED"))
        config.spec.seed = std::strtoull(env_seed, nullptr, 10);
      if (synth_seed_given) config.spec.seed = synth_seed;

      const ExperimentResult result = run_experiment(config.spec, config.protocol);

      namespace fs = std::filesystem;
      std::error_code ec;
      fs::create_directories(synth_out_dir, ec);
      if (ec) throw Error(ErrorCode::IoError, "cannot create directory: " + synth_out_dir);
      const fs::path dir(synth_out_dir);
      for (const auto& method : result.methods) {
        detail::write_file((dir / (method.name + ".json")).string(),
                           report_to_json(method.report) + "\n");
        detail::write_file((dir / ("reliability_" + method.name + ".svg")).string(),
                           reliability_diagram_svg(method.report.bins, method.name));
      }
      detail::write_file((dir / "stats.json").string(), result.stats_json + "\n");
      const std::string csv = experiment_summary_csv(result);
      detail::write_file((dir / "summary.csv").string(), csv);
      std::cout << csv << std::flush;
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "seqcal: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "seqcal: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace seqcal::cli
