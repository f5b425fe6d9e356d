// dvm - command line driver for the meshless cavity solver
#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "dvm/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

int exit_code(dvm::ErrorKind k) {
  using dvm::ErrorKind;
  switch (k) {
    case ErrorKind::ParseError:
    case ErrorKind::ValidationError:
    case ErrorKind::NonConformingSpacing:
    case ErrorKind::EmptyRegion:
    case ErrorKind::IsolatedNode:
    case ErrorKind::InvalidMode:
      return kExitConfig;
    default:
      return kExitNumerical;
  }
}

dvm::ExperimentConfig load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw dvm::Error(dvm::ErrorKind::ParseError, "cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return dvm::parse_config(ss.str());
}

dvm::BasisMode parse_mode(const std::string& s) {
  if (s == "vector") return dvm::BasisMode::Vector;
  if (s == "scalar") return dvm::BasisMode::Scalar;
  throw dvm::Error(dvm::ErrorKind::ValidationError, "--mode must be vector or scalar");
}

struct Range {
  double lo = 0.0, hi = 0.0;
  int steps = 0;
};

Range parse_range(const std::string& s) {
  Range r;
  const auto a = s.find(':');
  const auto b = a == std::string::npos ? a : s.find(':', a + 1);
  auto num = [&](std::string_view t, auto& out) {
    const auto res = std::from_chars(t.data(), t.data() + t.size(), out);
    return res.ec == std::errc() && res.ptr == t.data() + t.size();
  };
  const std::string_view v(s);
  if (b == std::string::npos || !num(v.substr(0, a), r.lo) || !num(v.substr(a + 1, b - a - 1), r.hi) ||
      !num(v.substr(b + 1), r.steps)) {
    throw dvm::Error(dvm::ErrorKind::ValidationError, "--range must be lo:hi:steps, got '" + s + "'");
  }
  return r;
}

void print_summary(const dvm::ExperimentReport& rep) {
  std::printf("%s: %zu vector nodes, %zu scalar nodes, %ld steps of %.4g s\n", dvm::to_string(rep.mode),
              rep.setup.cloud.vector_nodes.size(), rep.setup.cloud.scalar_nodes.size(), rep.setup.solver.n_steps,
              rep.setup.solver.dt);
  if (rep.dominant) {
    std::printf("  dominant peak %.6g GHz", rep.dominant->frequency * 1e-9);
    if (rep.reference) {
      std::printf(" (oracle %.6g GHz, error %+.3f%%)", *rep.reference * 1e-9,
                  100.0 * (rep.dominant->frequency - *rep.reference) / *rep.reference);
    }
    std::printf("\n");
  } else {
    std::printf("  no peak in the analysis band\n");
  }
  std::printf("  spurious peaks: %zu\n", rep.spurious.size());
  for (std::size_t k = 0; k < rep.concentration.size(); ++k) {
    if (rep.concentration[k]) std::printf("  charge concentration %zu: %.6g\n", k, *rep.concentration[k]);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Meshless time-domain solver for a plasma-loaded PEC cavity"};
  app.require_subcommand(1);

  std::string config_path, out_dir, mode_name, param = "shape_parameter", range_text;

  auto* run_cmd = app.add_subcommand("run", "run one experiment and write its artifacts");
  run_cmd->add_option("config", config_path, "configuration file")->required();
  run_cmd->add_option("--out", out_dir, "output directory (default from config)");
  run_cmd->add_option("--mode", mode_name, "basis mode: vector or scalar (default from config)");

  auto* cmp_cmd = app.add_subcommand("compare", "run vector and scalar modes side by side");
  cmp_cmd->add_option("config", config_path, "configuration file")->required();
  cmp_cmd->add_option("--out", out_dir, "output directory (default from config)");

  auto* orc_cmd = app.add_subcommand("oracle", "print reference resonances for the configured cavity");
  orc_cmd->add_option("config", config_path, "configuration file")->required();

  auto* swp_cmd = app.add_subcommand("sweep", "sweep a kernel parameter and tabulate the dominant peak");
  swp_cmd->add_option("config", config_path, "configuration file")->required();
  swp_cmd->add_option("--param", param, "parameter name")->default_val("shape_parameter");
  swp_cmd->add_option("--range", range_text, "lo:hi:steps")->required();
  swp_cmd->add_option("--out", out_dir, "output directory (default from config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    dvm::ExperimentConfig cfg = load(config_path);
    cfg.validate();
    const std::filesystem::path out = out_dir.empty() ? cfg.output_dir : out_dir;

    if (*orc_cmd) {
      const auto oracles = dvm::compute_oracles(cfg);
      dvm::write_oracle_csv(std::cout, oracles);
      return 0;
    }

    const auto oracles = dvm::compute_oracles(cfg);

    if (*run_cmd) {
      const auto mode = mode_name.empty() ? cfg.basis_mode : parse_mode(mode_name);
      const auto rep = dvm::run_experiment(cfg, mode, &oracles);
      dvm::write_artifacts(rep, &oracles, out);
      print_summary(rep);
      std::printf("artifacts written to %s\n", out.string().c_str());
      return 0;
    }

    if (*cmp_cmd) {
      const auto cmp = dvm::compare_modes(cfg, &oracles);
      dvm::write_artifacts(cmp.vector, &oracles, out / "vector");
      dvm::write_artifacts(cmp.scalar, &oracles, out / "scalar");
      std::ofstream os(out / "compare.txt");
      cmp.manifest.write(os);
      print_summary(cmp.vector);
      print_summary(cmp.scalar);
      std::printf("artifacts written to %s\n", out.string().c_str());
      return 0;
    }

    if (*swp_cmd) {
      const Range r = parse_range(range_text);
      const auto rows = dvm::sweep(cfg, param, r.lo, r.hi, r.steps, &oracles);
      std::filesystem::create_directories(out);
      std::ofstream os(out / "sweep.csv");
      dvm::write_sweep_csv(os, param, rows);
      dvm::write_sweep_csv(std::cout, param, rows);
      return 0;
    }
  } catch (const dvm::Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", std::string(dvm::to_string(e.kind())).c_str(), e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
