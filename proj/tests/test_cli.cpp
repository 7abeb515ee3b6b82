#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "proxyaudit/io.hpp"
#include "proxyaudit/synth.hpp"

namespace pa = proxyaudit;
namespace fs = std::filesystem;

namespace {

std::string cli_path() {
  const char* p = std::getenv("PROXYAUDIT_CLI");
  if (!p) throw std::runtime_error("PROXYAUDIT_CLI not set");
  return p;
}

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = cli_path() + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed");
  RunResult result;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof(buf), pipe))
    result.output.append(buf, n);
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("proxyaudit_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

void write_worked_example_inputs(const fs::path& dir) {
  write_file(dir / "confusion.csv",
             "prediction,A,B\nA,0.9,0.1\nB,0.1,0.9\n");
  write_file(dir / "counts.csv", "label,count\nA,100\nB,100\n");
  write_file(dir / "beta.csv", "label,beta\nA,1\nB,3\n");
}

}  // namespace

TEST(Cli, GenerateThenClassifyPerfectSharpness) {
  const auto dir = scratch_dir("classify");
  auto gen = run_cli("generate --scenario default --seed 5 --regions 6"
                     " --region-pop 120 --sharpness 1.0 --format csv --out " +
                     dir.string());
  ASSERT_EQ(gen.exit_code, 0) << gen.output;

  auto cls = run_cli("classify --surname-table " + (dir / "surname_table.csv").string() +
                     " --first-table " + (dir / "first_table.csv").string() +
                     " --geo-table " + (dir / "geo_table.csv").string() +
                     " --microdata " + (dir / "population.csv").string() +
                     " --format csv --out " + dir.string());
  ASSERT_EQ(cls.exit_code, 0) << cls.output;

  const auto races = pa::CategorySet::default_races();
  const auto pop = pa::io::read_population((dir / "population.csv").string(), races);
  const auto cls_csv = pa::io::read_csv((dir / "classified.csv").string());
  ASSERT_EQ(cls_csv.rows.size(), pop.size());
  const int pred_col = cls_csv.column("predicted", "classified.csv");
  for (std::size_t i = 0; i < pop.size(); ++i)
    EXPECT_EQ(cls_csv.rows[i][pred_col], races.label(pop[i].true_race));
}

TEST(Cli, InferEmptyMicrodataEmitsHeaderOnly) {
  const auto dir = scratch_dir("empty");
  write_file(dir / "surname.csv", "surname,p_A,p_B\nfoo,0.5,0.5\n");
  write_file(dir / "first.csv", "first,l_A,l_B\nbar,0.5,0.5\n");
  write_file(dir / "geo.csv", "region,A_count,B_count\nr1,10,20\n");
  write_file(dir / "micro.csv", "id,region,surname,first\n");
  auto res = run_cli("infer --labels A,B --surname-table " +
                     (dir / "surname.csv").string() + " --first-table " +
                     (dir / "first.csv").string() + " --geo-table " +
                     (dir / "geo.csv").string() + " --microdata " +
                     (dir / "micro.csv").string() + " --format csv --out " +
                     dir.string());
  ASSERT_EQ(res.exit_code, 0) << res.output;
  const std::string content = slurp(dir / "posteriors.csv");
  EXPECT_EQ(content, "id,p_A,p_B,mode,argmax,tie_broken\n");
}

TEST(Cli, InferSingleMatchedRowIsBifsg) {
  const auto dir = scratch_dir("single");
  write_file(dir / "surname.csv", "surname,p_A,p_B\nfoo,0.6,0.4\n");
  write_file(dir / "first.csv", "first,l_A,l_B\nbar,0.2,0.7\n");
  write_file(dir / "geo.csv", "region,A_count,B_count\nr1,10,20\n");
  write_file(dir / "micro.csv", "id,region,surname,first\n0,r1,foo,bar\n");
  auto res = run_cli("infer --labels A,B --surname-table " +
                     (dir / "surname.csv").string() + " --first-table " +
                     (dir / "first.csv").string() + " --geo-table " +
                     (dir / "geo.csv").string() + " --microdata " +
                     (dir / "micro.csv").string() + " --format csv --out " +
                     dir.string());
  ASSERT_EQ(res.exit_code, 0) << res.output;
  const auto csv = pa::io::read_csv((dir / "posteriors.csv").string());
  ASSERT_EQ(csv.rows.size(), 1u);
  EXPECT_EQ(csv.rows[0][csv.column("mode", "posteriors.csv")], "BIFSG");
  const double pa_ = std::stod(csv.rows[0][csv.column("p_A", "p")]);
  const double pb_ = std::stod(csv.rows[0][csv.column("p_B", "p")]);
  EXPECT_NEAR(pa_ + pb_, 1.0, 1e-12);
}

TEST(Cli, ConfusionIdenticalColumnsGiveIdentity) {
  const auto dir = scratch_dir("confusion");
  std::ostringstream data;
  data << "true,pred\n";
  for (int i = 0; i < 10; ++i) data << "A,A\n";
  for (int i = 0; i < 20; ++i) data << "B,B\n";
  write_file(dir / "data.csv", data.str());
  auto res = run_cli("confusion --labels A,B --data " + (dir / "data.csv").string() +
                     " --format csv --out " + dir.string());
  ASSERT_EQ(res.exit_code, 0) << res.output;
  const auto prec = pa::io::read_csv((dir / "precision.csv").string());
  for (const auto& row : prec.rows)
    EXPECT_EQ(row[prec.column("accuracy_pct", "p")], "100.0");
  const auto races = pa::CategorySet({"A", "B"});
  const auto flows = pa::io::read_flows((dir / "flows.csv").string(), races);
  EXPECT_EQ(flows.flow[0][0], 10);
  EXPECT_EQ(flows.flow[1][1], 20);
  EXPECT_EQ(flows.flow[0][1], 0);
}

TEST(Cli, BiasWorkedExample) {
  const auto dir = scratch_dir("bias");
  write_worked_example_inputs(dir);
  auto res = run_cli("bias --labels A,B --confusion " +
                     (dir / "confusion.csv").string() + " --counts " +
                     (dir / "counts.csv").string() + " --beta " +
                     (dir / "beta.csv").string() + " --format csv --out " +
                     dir.string());
  ASSERT_EQ(res.exit_code, 0) << res.output;
  const auto csv = pa::io::read_csv((dir / "bias_report.csv").string());
  const int expected_col = csv.column("expected_beta", "bias_report.csv");
  const int bias_col = csv.column("bias", "bias_report.csv");
  EXPECT_NEAR(std::stod(csv.rows[0][expected_col]), 1.2, 1e-12);
  EXPECT_NEAR(std::stod(csv.rows[1][expected_col]), 2.8, 1e-12);
  EXPECT_NEAR(std::stod(csv.rows[0][bias_col]), -0.2, 1e-12);
  EXPECT_NEAR(std::stod(csv.rows[1][bias_col]), 0.2, 1e-12);
  // neutrality footer
  EXPECT_EQ(csv.rows[2][0], "neutrality_ok");
  EXPECT_EQ(csv.rows[2][1], "1");
}

TEST(Cli, BiasFlagsNonNeutralInput) {
  const auto dir = scratch_dir("nonneutral");
  write_file(dir / "confusion.csv", "prediction,A,B\nA,1,0.5\nB,0,0.5\n");
  write_file(dir / "counts.csv", "label,count\nA,100\nB,100\n");
  write_file(dir / "beta.csv", "label,beta\nA,1\nB,3\n");
  auto res = run_cli("bias --labels A,B --confusion " +
                     (dir / "confusion.csv").string() + " --counts " +
                     (dir / "counts.csv").string() + " --beta " +
                     (dir / "beta.csv").string() + " --out " + dir.string());
  ASSERT_EQ(res.exit_code, 0) << res.output;
  EXPECT_NE(res.output.find("neutrality check failed"), std::string::npos);
  const auto csv = pa::io::read_csv((dir / "bias_report.csv").string());
  EXPECT_EQ(csv.rows[2][0], "neutrality_ok");
  EXPECT_EQ(csv.rows[2][1], "0");
}

TEST(Cli, ShrinkageWorkedExample) {
  const auto dir = scratch_dir("shrinkage");
  write_worked_example_inputs(dir);
  auto res = run_cli("shrinkage --labels A,B --confusion " +
                     (dir / "confusion.csv").string() + " --counts " +
                     (dir / "counts.csv").string() + " --beta " +
                     (dir / "beta.csv").string() + " --format csv --out " +
                     dir.string());
  ASSERT_EQ(res.exit_code, 0) << res.output;
  const auto csv = pa::io::read_csv((dir / "shrinkage_report.csv").string());
  ASSERT_GE(csv.rows.size(), 6u);
  EXPECT_EQ(csv.rows[0][0], "ss_true");
  EXPECT_NEAR(std::stod(csv.rows[0][1]), 200.0, 1e-9);
  EXPECT_EQ(csv.rows[1][0], "ss_proxy");
  EXPECT_NEAR(std::stod(csv.rows[1][1]), 128.0, 1e-9);
  EXPECT_NEAR(std::stod(csv.rows[4][1]), 1.0, 1e-9);
  EXPECT_NEAR(std::stod(csv.rows[5][1]), 0.8, 1e-9);
}

TEST(Cli, SimulateSingleReplicateIdentity) {
  const auto dir = scratch_dir("simulate");
  write_file(dir / "confusion.csv", "prediction,A,B\nA,1,0\nB,0,1\n");
  write_file(dir / "counts.csv", "label,count\nA,50\nB,50\n");
  write_file(dir / "beta.csv", "label,beta\nA,1\nB,3\n");
  auto res = run_cli("simulate --labels A,B --confusion " +
                     (dir / "confusion.csv").string() + " --counts " +
                     (dir / "counts.csv").string() + " --beta " +
                     (dir / "beta.csv").string() +
                     " --replicates 1 --seed 9 --format csv --out " +
                     dir.string());
  ASSERT_EQ(res.exit_code, 0) << res.output;
  const auto csv = pa::io::read_csv((dir / "simulate_report.csv").string());
  const int mean_col = csv.column("mean_beta", "simulate_report.csv");
  EXPECT_DOUBLE_EQ(std::stod(csv.rows[0][mean_col]), 1.0);
  EXPECT_DOUBLE_EQ(std::stod(csv.rows[1][mean_col]), 3.0);
}

TEST(Cli, ExitCodeTwoOnValidationFailure) {
  const auto dir = scratch_dir("exit2");
  write_file(dir / "data.csv", "true,other\nA,A\n");
  auto res = run_cli("confusion --labels A,B --data " + (dir / "data.csv").string() +
                     " --out " + dir.string());
  EXPECT_EQ(res.exit_code, 2);
  EXPECT_NE(res.output.find("missing column"), std::string::npos);
}

TEST(Cli, ExitCodeThreeOnNumericFailure) {
  const auto dir = scratch_dir("exit3");
  // row B never predicted: (Cn)_B = 0 makes the expected estimator undefined
  write_file(dir / "confusion.csv", "prediction,A,B\nA,1,1\nB,0,0\n");
  write_file(dir / "counts.csv", "label,count\nA,10\nB,10\n");
  write_file(dir / "beta.csv", "label,beta\nA,1\nB,3\n");
  auto res = run_cli("bias --labels A,B --confusion " +
                     (dir / "confusion.csv").string() + " --counts " +
                     (dir / "counts.csv").string() + " --beta " +
                     (dir / "beta.csv").string() + " --out " + dir.string());
  EXPECT_EQ(res.exit_code, 3);
}

TEST(Cli, AuditDefaultScenarioIsByteDeterministic) {
  const auto dir_a = scratch_dir("audit_a");
  const auto dir_b = scratch_dir("audit_b");
  const std::string flags =
      "audit --scenario default --seed 17 --regions 10 --region-pop 80"
      " --controls demo+ses --format csv --out ";
  auto a = run_cli(flags + dir_a.string());
  ASSERT_EQ(a.exit_code, 0) << a.output;
  auto b = run_cli(flags + dir_b.string());
  ASSERT_EQ(b.exit_code, 0) << b.output;
  for (const char* name :
       {"exp1_report.csv", "exp2_report.csv", "zip_cells.csv",
        "shrinkage_report.csv", "flows.csv", "confusion.csv", "precision.csv"}) {
    EXPECT_EQ(slurp(dir_a / name), slurp(dir_b / name)) << name;
  }
}

TEST(Cli, AuditMicrodataWithPredColumn) {
  const auto dir = scratch_dir("audit_micro");
  // two regions, two races, proxy column present in the file
  std::ostringstream data;
  data << "id,region,race_code,pred,average_premium\n";
  int id = 0;
  auto rows = [&](const std::string& region, const std::string& race,
                  const std::string& pred, int count, double premium) {
    for (int i = 0; i < count; ++i)
      data << id++ << "," << region << "," << race << "," << pred << ","
           << premium << "\n";
  };
  rows("r1", "A", "A", 30, 100.0);
  rows("r1", "B", "B", 10, 90.0);
  rows("r1", "B", "A", 2, 90.0);
  rows("r2", "A", "A", 10, 110.0);
  rows("r2", "B", "B", 30, 95.0);
  rows("r2", "A", "B", 3, 110.0);
  rows("r3", "A", "A", 20, 105.0);
  rows("r3", "B", "B", 20, 92.0);
  write_file(dir / "micro.csv", data.str());
  auto res = run_cli("audit --labels A,B --microdata " + (dir / "micro.csv").string() +
                     " --pred-col pred --format csv --out " + dir.string());
  ASSERT_EQ(res.exit_code, 0) << res.output;
  EXPECT_TRUE(fs::exists(dir / "exp1_report.csv"));
  EXPECT_TRUE(fs::exists(dir / "exp2_report.csv"));
  EXPECT_TRUE(fs::exists(dir / "shrinkage_report.csv"));
}
