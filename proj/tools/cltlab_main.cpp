// cltlab command-line driver: one config file in, CSV/JSON reports plus a
// checksummed manifest out.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "cltlab/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"cltlab - correlation, CLT, and transfer-operator experiments for chaotic maps"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;
  unsigned workers = 0;

  const std::vector<std::string> names = {"simulate",  "correlations", "clt",       "bernstein",
                                          "transfer",  "billiard-check", "regularity"};
  for (const auto& n : names) {
    auto* sub = app.add_subcommand(n);
    sub->add_option("--config", config_path, "path to the JSON config file")->required();
    sub->add_option("--out", out_dir, "output directory (overrides config)");
    sub->add_option("--seed", seed, "root seed (overrides config)")
        ->each([&](const std::string&) { seed_given = true; });
    sub->add_option("--workers", workers, "worker pool size (0 = logical cores)");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = cltlab::cli::parse_config_file(config_path);
    if (seed_given) {
      cfg.seed = seed;
      cfg.seed_set = true;
    }
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (workers != 0) cfg.workers = workers;
    const auto cmd = cltlab::cli::parse_command(app.get_subcommands().front()->get_name());
    return cltlab::cli::run_guarded(cmd, cfg);
  } catch (const cltlab::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.kind() == cltlab::ErrorKind::config ? 2 : 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
