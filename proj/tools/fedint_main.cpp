#include <CLI11.hpp>
#include <iostream>

#include "fedint/experiment.hpp"

using namespace fedint;
namespace ex = fedint::experiment;

int main(int argc, char** argv) {
  CLI::App app{"fedint: federated integration and learning driver"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config, out, mode, execution;
  std::uint64_t seed = 0;
  app.add_option("--config", config, "Experiment config (JSON)");
  auto* seed_opt = app.add_option("--seed", seed, "Override the config seed");
  app.add_option("--out", out, "Override the output directory");
  app.add_option("--mode", mode, "Query mode")->check(CLI::IsMember({"certain", "impute"}));
  app.add_option("--execution", execution, "Federation execution mode")
      ->check(CLI::IsMember({"simulated", "threaded"}));

  auto* validate = app.add_subcommand("validate", "Validate mappings and queries");
  auto* materialize = app.add_subcommand("materialize", "Materialize the global schema per silo");
  auto* query = app.add_subcommand("query", "Answer a query per silo");
  std::string query_name;
  query->add_option("name", query_name, "Query name (default: the training query)");
  auto* impute_fit = app.add_subcommand("impute-fit", "Fit imputers from federated statistics");
  auto* run = app.add_subcommand("run", "Run the full pipeline and the federation");
  auto* report = app.add_subcommand("report", "Pretty-print a RunLog");
  std::string runlog;
  report->add_option("runlog", runlog, "RunLog path (default: <out>/runlog.jsonl)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  ex::CommandOptions opts;
  opts.config = config;
  if (*seed_opt) opts.seed = seed;
  if (!out.empty()) opts.out = out;
  if (!mode.empty()) opts.mode = exchange::mode_from_string(mode);
  if (!execution.empty()) opts.execution = fed::execution_mode_from_string(execution);
  opts.query = query_name;
  opts.runlog = runlog;

  if (*validate) return ex::cmd_validate(opts, std::cout, std::cerr);
  if (*materialize) return ex::cmd_materialize(opts, std::cout, std::cerr);
  if (*query) return ex::cmd_query(opts, std::cout, std::cerr);
  if (*impute_fit) return ex::cmd_impute_fit(opts, std::cout, std::cerr);
  if (*run) return ex::cmd_run(opts, std::cout, std::cerr);
  if (*report) return ex::cmd_report(opts, std::cout, std::cerr);
  return 2;
}
