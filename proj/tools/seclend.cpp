// seclend: synthetic log generation, log inspection and offline policy replay.

#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "seclend/cli.hpp"

namespace {

// Config paths may come from the environment when the flag is absent.
void env_default(std::optional<std::filesystem::path>& target, const char* var) {
  if (target) return;
  if (const char* value = std::getenv(var); value != nullptr && *value != '\0') target = value;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic pricing for securities lending: contextual-bandit replay on transaction logs"};
  app.require_subcommand(1);

  seclend::cli::GenerateOptions gen;
  std::vector<std::string> gen_paths;
  auto* generate = app.add_subcommand("generate", "Write a seeded synthetic transaction log");
  // [config] out; the config may come from SECLEND_SYNTH_CONFIG instead.
  generate->add_option("paths", gen_paths, "Scenario config (JSON, else env SECLEND_SYNTH_CONFIG) and output log path")
      ->expected(1, 2)
      ->type_name("[CONFIG] OUT")
      ->required();

  seclend::cli::ReplayOptions rep;
  std::string rep_config;
  std::string rep_schema;
  std::string warm_start;
  std::string save_snapshot;
  std::string mode;
  std::string benchmark;
  std::uint64_t seed = 0;
  double delta = 0.0;
  std::size_t threads = 0;
  std::vector<std::string> policies;
  auto* replay = app.add_subcommand("replay", "Replay a log through the pricing policies over sliding windows");
  replay->add_option("log", rep.log, "Transaction log")->required();
  replay->add_option("config", rep_config, "Replay config (JSON); env SECLEND_REPLAY_CONFIG");
  replay->add_option("--out-dir,-o", rep.out_dir, "Output directory")->required();
  replay->add_option("--schema", rep_schema, "Ingestion schema config (JSON); env SECLEND_SCHEMA_CONFIG");
  auto* mode_opt = replay->add_option("--mode", mode, "Feedback mode")->check(CLI::IsMember({"full", "replay-match"}));
  auto* seed_opt = replay->add_option("--seed", seed, "Random seed");
  auto* delta_opt = replay->add_option("--delta", delta, "Anti-spoofing multiplier (default 0.85)");
  auto* bench_opt = replay->add_option("--benchmark", benchmark, "market-vwaf or fixed:<fee>");
  replay->add_flag("--freeze-test", rep.freeze_test, "Disable policy updates in the test segment");
  replay->add_flag("--merge-rule-into-ml", rep.merge_rule_into_ml, "Merge RuleBased into MlBased in the ratio table");
  auto* policies_opt = replay->add_option("--policies", policies, "Policy names")->delimiter(',');
  auto* threads_opt = replay->add_option("--threads", threads, "Windows replayed in parallel")->check(CLI::PositiveNumber);
  replay->add_option("--warm-start", warm_start, "Policy snapshot to start every window from");
  replay->add_option("--save-snapshot", save_snapshot, "Write the policies after the last window to this file");

  seclend::cli::InspectOptions ins;
  std::string ins_schema;
  auto* inspect = app.add_subcommand("inspect", "Summarise a transaction log");
  inspect->add_option("log", ins.log, "Transaction log")->required();
  inspect->add_option("--schema", ins_schema, "Ingestion schema config (JSON); env SECLEND_SCHEMA_CONFIG");

  CLI11_PARSE(app, argc, argv);

  auto optional_path = [](const std::string& s) -> std::optional<std::filesystem::path> {
    if (s.empty()) return std::nullopt;
    return std::filesystem::path(s);
  };

  if (generate->parsed()) {
    gen.out = gen_paths.back();
    std::optional<std::filesystem::path> config =
        gen_paths.size() == 2 ? optional_path(gen_paths.front()) : std::nullopt;
    env_default(config, "SECLEND_SYNTH_CONFIG");
    if (!config) {
      std::cerr << "config not found: no config path given\n";
      return seclend::cli::kGenerateFailure;
    }
    gen.config = *config;
    return seclend::cli::cmd_generate(gen, std::cout, std::cerr);
  }
  if (replay->parsed()) {
    rep.config = optional_path(rep_config);
    env_default(rep.config, "SECLEND_REPLAY_CONFIG");
    rep.schema = optional_path(rep_schema);
    env_default(rep.schema, "SECLEND_SCHEMA_CONFIG");
    rep.warm_start = optional_path(warm_start);
    rep.save_snapshot = optional_path(save_snapshot);
    if (mode_opt->count() > 0) rep.mode = mode;
    if (seed_opt->count() > 0) rep.seed = seed;
    if (delta_opt->count() > 0) rep.delta = delta;
    if (bench_opt->count() > 0) rep.benchmark = benchmark;
    if (policies_opt->count() > 0) rep.policies = policies;
    if (threads_opt->count() > 0) rep.threads = threads;
    return seclend::cli::cmd_replay(rep, std::cout, std::cerr);
  }
  ins.schema = optional_path(ins_schema);
  env_default(ins.schema, "SECLEND_SCHEMA_CONFIG");
  return seclend::cli::cmd_inspect(ins, std::cout, std::cerr);
}
