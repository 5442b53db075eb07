#include "pgov_cli/cli.hpp"

#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "pgov/config.hpp"
#include "pgov/io.hpp"
#include "pgov/pipeline.hpp"

namespace pgov::cli {

namespace {

struct Options {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::string preset;
  bool ablation = false;
  std::vector<std::uint64_t> seeds{7, 8, 9};
};

PipelineConfig resolve_config(const Options& opt) {
  PipelineConfig config = opt.config_path.empty() ? PipelineConfig{} : load_config(opt.config_path);
  if (!opt.out_dir.empty()) config.output_dir = opt.out_dir;
  if (opt.seed) config.seed = *opt.seed;
  if (!opt.preset.empty()) config.preset = opt.preset;
  validate_config(config);
  return apply_preset(config, config.preset);
}

void print_outcome(const EvalOutcome& outcome) {
  std::printf("mIoU %.4f  mAcc %.4f  (%llu points, %llu unmatched)\n", outcome.report.miou, outcome.report.macc,
              static_cast<unsigned long long>(outcome.report.evaluated_points),
              static_cast<unsigned long long>(outcome.report.unmatched_points));
  if (outcome.report.split) {
    std::printf("base %.4f  novel %.4f  hIoU %.4f\n", outcome.report.split->miou_base, outcome.report.split->miou_novel,
                outcome.report.split->hiou);
  }
}

int dispatch(const std::string& command, const Options& opt) {
  const PipelineConfig config = resolve_config(opt);
  const fs::path out = config.output_dir;
  if (command == "experiment") {
    if (opt.ablation) {
      const auto rows = run_ablation_suite(config, out, opt.seeds);
      std::fputs(format_ablation_csv(rows).c_str(), stdout);
      return kExitOk;
    }
    print_outcome(run_experiment(config, out));
    return kExitOk;
  }
  if (command == "report") {
    emit_report(out);
    std::printf("wrote %s\n", (out / "summary.txt").string().c_str());
    return kExitOk;
  }
  const auto stage = parse_stage(command);
  if (!stage) throw ConfigError("<command>", "unknown subcommand '" + command + "'");
  Pipeline pipeline(config, out);
  if (*stage == Stage::kEval) {
    print_outcome(pipeline.eval());
  } else {
    pipeline.run(*stage);
  }
  return kExitOk;
}

}  // namespace

int run_subcommand(const std::vector<std::string>& argv) {
  CLI::App app{"Partial-to-global open-vocabulary 3D segmentation pipeline", argv.empty() ? "pgov" : argv[0]};
  app.require_subcommand(1, 1);
  app.fallthrough();
  Options opt;
  std::uint64_t seed = 0;
  app.add_option("--config", opt.config_path, "JSON pipeline config");
  app.add_option("--out", opt.out_dir, "Output directory (overrides output_dir)");
  auto* seed_opt = app.add_option("--seed", seed, "Global seed (overrides seed)");
  app.add_option("--preset", opt.preset, "full_curriculum | stage1_only | no_consistency | no_pretrained_weights");
  app.add_flag("--ablation", opt.ablation, "experiment: run every preset over --seeds");
  app.add_option("--seeds", opt.seeds, "experiment --ablation: comma-separated seeds")->delimiter(',');

  const char* descriptions[][2] = {
      {"synth", "Generate synthetic global scenes"},
      {"render", "Render RGB-D frames along camera trajectories"},
      {"oracle", "Produce per-frame pixel entity masks"},
      {"pretrain", "Stage 1: alignment + consistency on partial scenes"},
      {"pseudolabel", "Voxel-resampled pseudo labels on global scenes"},
      {"finetune", "Stage 2: alignment on accepted pseudo labels"},
      {"eval", "Zero-shot segmentation metrics on held-out scenes"},
      {"experiment", "Run every stage (or the ablation suite)"},
      {"report", "Write summary.txt and loss_curves.svg"},
  };
  for (const auto& d : descriptions) app.add_subcommand(d[0], d[1]);

  std::vector<std::string> args(argv.begin() + (argv.empty() ? 0 : 1), argv.end());
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  if (seed_opt->count() > 0) opt.seed = seed;

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return dispatch(command, opt);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "format error: %s\n", e.what());
    return kExitFormat;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
}

int run_subcommand(int argc, char** argv) { return run_subcommand(std::vector<std::string>(argv, argv + argc)); }

}  // namespace pgov::cli
