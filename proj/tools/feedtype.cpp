// Batch driver: one subcommand per experiment kind.
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "feedtype/error.hpp"
#include "feedtype/experiments.hpp"

namespace ex = feedtype::experiments;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitViolation = 1;
constexpr int kExitUsage = 2;

struct Options {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  int workers = 0;
  std::string format = "csv";
};

bool is_usage_error(feedtype::ErrorCode c) {
  using feedtype::ErrorCode;
  return c == ErrorCode::ConfigParse || c == ErrorCode::ChannelParse || c == ErrorCode::CodeParse ||
         c == ErrorCode::Io || c == ErrorCode::InvalidArgument;
}

int run_kind(ex::Kind kind, const Options& opt) {
  ex::ExperimentConfig cfg = ex::load_config(opt.config);
  if (cfg.kind != kind) {
    throw feedtype::Error(feedtype::ErrorCode::ConfigParse,
                          fmt::format("config declares kind '{}' but subcommand is '{}'", ex::to_string(cfg.kind),
                                      ex::to_string(kind)));
  }
  const std::uint64_t seed = opt.seed.value_or(cfg.seed.value_or(0));
  const ex::RunManifest m = ex::run(cfg, opt.out, seed, feedtype::ExecPolicy{opt.workers});
  for (const auto& o : m.outputs) {
    fmt::print("{}/{}  rows={}  sha256={}\n", opt.out, o.file, o.rows, o.sha256);
  }
  for (const auto& s : m.stages) fmt::print("stage {}: {:.3f} s\n", s.name, s.seconds);
  fmt::print("{}\n", m.all_pass ? "all checks passed" : "INVARIANT VIOLATION (see pass columns)");
  return m.all_pass ? kExitPass : kExitViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feedback type-deviation and ISAC converse experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ex::version()));

  Options opt;
  std::optional<ex::Kind> chosen;
  for (ex::Kind kind : ex::all_kinds()) {
    CLI::App* sub = app.add_subcommand(std::string(ex::to_string(kind)));
    sub->add_option("--config", opt.config, "experiment config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "output directory")->capture_default_str();
    sub->add_option("--seed", opt.seed, "RNG seed (overrides the config)");
    sub->add_option("--workers", opt.workers, "worker threads, 0 = all")->check(CLI::NonNegativeNumber);
    sub->add_option("--format", opt.format, "output format")->check(CLI::IsMember({"csv"}))->capture_default_str();
    sub->callback([&chosen, kind] { chosen = kind; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  try {
    return run_kind(*chosen, opt);
  } catch (const feedtype::Error& e) {
    std::cerr << "error [" << feedtype::to_string(e.code()) << "]: " << e.what() << '\n';
    return is_usage_error(e.code()) ? kExitUsage : kExitViolation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitViolation;
  }
}
