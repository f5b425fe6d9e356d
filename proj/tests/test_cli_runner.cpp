#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dvm/experiment.hpp"

using namespace dvm;

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream is(p);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

ExperimentConfig bundled(const std::string& name) { return parse_config(read_file(std::filesystem::path(DVM_CONFIG_DIR) / name)); }

ErrorKind kind_of(const std::string& text) {
  try {
    parse_config(text).validate();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::NoConvergence;  // sentinel: nothing thrown
}

const char* kMinimal = "[cavity]\nwidth = 5e-3\nheight = 5e-3\nspacing = 0.5e-3\n";

}  // namespace

TEST(CliRunner, BundledTable1IsValid) {
  const auto c = bundled("table1.cfg");
  EXPECT_NO_THROW(c.validate());
  EXPECT_TRUE(c.plasma.enabled);
  EXPECT_EQ(c.plasma.material.omega_ep, 1e11);
  EXPECT_FALSE(c.dt.has_value());
  EXPECT_NEAR(c.resolved_dt(), c.dt_safety * 0.5e-3 / (constants::c0 * std::sqrt(2.0)), 1e-27);
  EXPECT_GE(c.resolved_steps() * c.resolved_dt(), 2e-9);
}

TEST(CliRunner, ZeroTauRejected) {
  try {
    parse_config(std::string(kMinimal) + "[source]\ntau = 0\n").validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ValidationError);
    EXPECT_NE(std::string(e.what()).find("source.tau"), std::string::npos);
  }
}

TEST(CliRunner, RoundTrip) {
  for (const char* name : {"table1.cfg", "vacuum.cfg", "charge.cfg"}) {
    const auto a = bundled(name);
    const auto text = serialize_config(a);
    const auto b = parse_config(text);
    EXPECT_EQ(serialize_config(b), text) << name;
    EXPECT_EQ(b.shape_parameter, a.shape_parameter);
    EXPECT_EQ(b.probes.size(), a.probes.size());
    EXPECT_EQ(b.plasma.region.x1, a.plasma.region.x1);
    EXPECT_EQ(b.diagnostics.charge_times, a.diagnostics.charge_times);
  }
}

TEST(CliRunner, RejectsUnknownAndMalformedInput) {
  EXPECT_EQ(kind_of(std::string(kMinimal) + "[kernel]\nshape = 3\n"), ErrorKind::ValidationError);
  EXPECT_EQ(kind_of(std::string(kMinimal) + "[nonsense]\na = 1\n"), ErrorKind::ValidationError);
  EXPECT_EQ(kind_of(std::string(kMinimal) + "[kernel]\nshape_parameter = three\n"), ErrorKind::ParseError);
  EXPECT_EQ(kind_of(std::string(kMinimal) + "[time]\nn_steps = 10\nduration = 1e-9\n"), ErrorKind::ValidationError);
  EXPECT_EQ(kind_of(std::string(kMinimal) + "[cavity]\n"), ErrorKind::ParseError);
  EXPECT_EQ(kind_of(std::string(kMinimal) + "[plasma]\nenabled = true\nregion = 0 0 0 5e-3\n"),
            ErrorKind::ValidationError);
  try {
    parse_config("[cavity]\nwidth 5e-3\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ParseError);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(CliRunner, NStepsOverridesDefaultDuration) {
  const auto c = parse_config(std::string(kMinimal) + "[time]\nn_steps = 10\n");
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.resolved_steps(), 10);
}

TEST(CliRunner, Table1VectorPeakNear150GHz) {
  const auto cfg = bundled("table1.cfg");
  const auto oracles = compute_oracles(cfg);
  const auto rep = run_experiment(cfg, BasisMode::Vector, &oracles);
  ASSERT_TRUE(rep.dominant);
  EXPECT_LE(std::abs(rep.dominant->frequency - 150e9), 1e9);
  const auto dir = std::filesystem::temp_directory_path() / "dvm_test_table1";
  std::filesystem::remove_all(dir);
  write_artifacts(rep, &oracles, dir);
  for (const char* f : {"probes.csv", "spectrum.csv", "peaks.csv", "cloud.csv", "manifest.txt"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  std::istringstream peaks(read_file(dir / "peaks.csv"));
  std::string line;
  std::getline(peaks, line);
  EXPECT_EQ(line, "frequency_hz,magnitude,level_db,reference_hz,relative_error");
  bool found = false;
  while (std::getline(peaks, line)) found |= std::abs(std::stod(line.substr(0, line.find(','))) - 150e9) <= 1e9;
  EXPECT_TRUE(found);
  std::istringstream manifest(read_file(dir / "manifest.txt"));
  while (std::getline(manifest, line)) EXPECT_NE(line.find(" = "), std::string::npos) << line;
}

TEST(CliRunner, CompareModesChargeOrdering) {
  const auto cmp = compare_modes(bundled("charge.cfg"));
  ASSERT_EQ(cmp.vector.concentration.size(), 1u);
  ASSERT_TRUE(cmp.vector.concentration[0] && cmp.scalar.concentration[0]);
  EXPECT_GT(*cmp.vector.concentration[0], *cmp.scalar.concentration[0]);
  EXPECT_EQ(cmp.vector.setup.cloud.vector_nodes.size(), cmp.scalar.setup.cloud.vector_nodes.size());
  EXPECT_EQ(cmp.vector.setup.cloud.scalar_nodes.size(), cmp.scalar.setup.cloud.scalar_nodes.size());
  EXPECT_EQ(cmp.vector.setup.stencils.wb.index.size(), cmp.scalar.setup.stencils.wb.index.size());
  EXPECT_EQ(cmp.vector.setup.stencils.wd.index.size(), cmp.scalar.setup.stencils.wd.index.size());
}

TEST(CliRunner, VacuumShortcutGivesSameSpectrum) {
  auto cfg = bundled("vacuum.cfg");
  cfg.duration = 1e-9;
  const auto a = run_experiment(cfg, BasisMode::Vector);
  cfg.vacuum_shortcut = true;
  const auto b = run_experiment(cfg, BasisMode::Vector);
  ASSERT_TRUE(a.dominant && b.dominant);
  EXPECT_NEAR(a.dominant->frequency, b.dominant->frequency, 1e-9 * a.dominant->frequency);
}

TEST(CliRunner, SweepTabulatesEachValue) {
  auto cfg = bundled("vacuum.cfg");
  cfg.duration = 0.5e-9;
  const auto oracles = compute_oracles(cfg);
  const auto rows = sweep(cfg, "shape_parameter", 2.5, 3.0, 3, &oracles);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_DOUBLE_EQ(rows[1].value, 2.75);
  for (const auto& r : rows) EXPECT_EQ(r.status, "ok");
  std::ostringstream os;
  write_sweep_csv(os, "shape_parameter", rows);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "shape_parameter,dominant_hz,reference_hz,relative_error,status");
  EXPECT_THROW(sweep(cfg, "spacing", 1.0, 2.0, 2), Error);
}

TEST(CliRunner, SweepRecordsFailedPoints) {
  auto cfg = bundled("vacuum.cfg");
  cfg.duration = 0.1e-9;
  const auto rows = sweep(cfg, "shape_parameter", 40.0, 40.0, 1);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].status, "SingularMomentMatrix");
}
