#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "ppa/harness.hpp"

using namespace ppa;
using namespace ppa::harness;
namespace fs = std::filesystem;

namespace {

class HarnessTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root_ = fs::temp_directory_path() / ("ppa_harness_" + std::string(info->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  ExperimentConfig config(const std::string& sub, const std::string& method = "ppa") const {
    ExperimentConfig c;
    c.method = method;
    c.sample_sizes = {150};
    c.output_dir = (root_ / sub).string();
    c.cache_dir = (root_ / "cache").string();
    return c;
  }

  fs::path root_;
};

std::string slurp(const fs::path& p) { return io::read_text(p); }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no ppa::Error thrown";
  return ErrorCode::InvalidArgument;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Config, ParsesSections) {
  const ExperimentConfig c = parse_config(
      "[model]\nname = borehole\n[method]\nkind = ppr\np = 2\ncriterion = rss\n"
      "[samples]\nsizes = 20, 40,80\n[seeds]\nbase_seed = 7\nn_repeats = 3\n"
      "[tolerances]\nstage_tol = 0.02\n[output]\ndir = somewhere\n");
  EXPECT_EQ(c.method, "ppr");
  EXPECT_EQ(c.p, 2);
  EXPECT_EQ(c.criterion, StageCriterion::TrainingRss);
  EXPECT_EQ(c.sample_sizes, (std::vector<Eigen::Index>{20, 40, 80}));
  EXPECT_EQ(c.base_seed, 7u);
  EXPECT_EQ(c.n_repeats, 3);
  EXPECT_EQ(c.stage_tol, 0.02);
  EXPECT_EQ(c.output_dir, "somewhere");
  EXPECT_EQ(data_seed(c, 2, 1), 7u + 2000u + 1u);
  EXPECT_EQ(test_seed(c), 7u + 1000000u);
}

TEST(Config, Rejections) {
  EXPECT_EQ(code_of([] { parse_config("[method]\ndegree = 3\n"); }), ErrorCode::Parse);
  EXPECT_EQ(code_of([] { parse_config("[method]\np = three\n"); }), ErrorCode::Parse);
  EXPECT_EQ(code_of([] { parse_config("[samples]\nsizes = 0\n"); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { parse_config("[samples]\nsizes = 80,40\n"); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { parse_config("[seeds]\nn_repeats = 0\n"); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { parse_config("[method]\nkind = lasso\n"); }), ErrorCode::InvalidArgument);
}

TEST(Config, HashTracksContent) {
  ExperimentConfig a, b;
  EXPECT_EQ(fnv1a(a.to_json().dump()), fnv1a(b.to_json().dump()));
  b.p = 4;
  EXPECT_NE(fnv1a(a.to_json().dump()), fnv1a(b.to_json().dump()));
  EXPECT_EQ(hex(fnv1a("")), "cbf29ce484222325");
  EXPECT_EQ(hex(fnv1a("a")), "af63dc4c8601ec8c");
}

TEST(Config, ShippedConfigsLoad) {
  for (const char* name : {"borehole.ini", "borehole_headline.ini"}) {
    const ExperimentConfig c = load_config(fs::path(PPA_SOURCE_DIR) / "configs" / name);
    EXPECT_EQ(c.model, "borehole") << name;
  }
}

TEST_F(HarnessTest, SampleIsDeterministic) {
  const ExperimentConfig c = config("a");
  const json rec = cmd_sample(c);
  const fs::path file = fs::path(c.output_dir) / sample_name("borehole", 150, data_seed(c, 0, 0));
  const io::CsvTable t = io::read_csv(file);
  EXPECT_EQ(t.values.rows(), 150);
  EXPECT_EQ(t.values.cols(), 8);
  EXPECT_EQ(t.header.front(), "xi_1");
  EXPECT_EQ(t.header.back(), "y");
  const std::string first = slurp(file);
  cmd_sample(c);
  EXPECT_EQ(slurp(file), first);
  EXPECT_TRUE(fs::exists(rec["artifacts"]["test"].get<std::string>()));
}

TEST_F(HarnessTest, FitRecordsAndRefitsIdentically) {
  const ExperimentConfig c = config("fit");
  const json rec = cmd_fit(c);
  EXPECT_LE(rec["metrics"]["r"].get<int>(), 4);
  EXPECT_EQ(rec["config_hash"], hex(fnv1a(c.to_json().dump())));
  EXPECT_EQ(rec["version"], kVersion);
  EXPECT_EQ(rec["config"]["seeds"]["base_seed"], c.base_seed);
  EXPECT_LE(rec["metrics"]["test_relative_l2"].get<double>(), 0.05);
  const fs::path model = rec["artifacts"]["model"].get<std::string>();
  const std::string bytes = slurp(model);

  const ExperimentConfig again = config("fit2");
  const json rec2 = cmd_fit(again, rec["artifacts"]["data"].get<std::string>());
  EXPECT_EQ(slurp(rec2["artifacts"]["model"].get<std::string>()), bytes);

  const json ppr = cmd_fit(config("ppr", "ppr"), rec["artifacts"]["data"].get<std::string>());
  EXPECT_GE(ppr["metrics"]["stages"].get<int>(), 1);

  const json ad = cmd_fit(config("ad", "adaptation"), rec["artifacts"]["data"].get<std::string>());
  EXPECT_GE(ad["metrics"]["r"].get<int>(), 1);
  EXPECT_TRUE(fs::exists(fs::path(config("ad").output_dir) / "fit_adaptation_record.json"));
}

TEST_F(HarnessTest, FitRejectsWrongDimension) {
  const fs::path data = root_ / "small.csv";
  io::write_dataset(data, Dataset(sample_gaussian(40, 3, 1), Vector::LinSpaced(40, 0, 1)));
  EXPECT_EQ(code_of([&] { cmd_fit(config("x"), data.string()); }), ErrorCode::DimensionMismatch);
}

TEST_F(HarnessTest, UqIsDeterministicAndAccurate) {
  const ExperimentConfig c = config("uq");
  const json fit = cmd_fit(c);
  const std::string model = fit["artifacts"]["model"];
  const json a = cmd_uq(c, model, fit["artifacts"]["data"]);
  EXPECT_LE(a["metrics"]["pdf_relative_l2"].get<double>(), 0.05);
  EXPECT_TRUE(a["metrics"].contains("data_pdf_relative_l2"));
  std::map<std::string, std::string> first;
  for (const auto& [k, v] : a["artifacts"].items()) first[k] = slurp(v.get<std::string>());
  EXPECT_EQ(first.size(), 5u);
  const json b = cmd_uq(c, model, fit["artifacts"]["data"]);
  for (const auto& [k, v] : b["artifacts"].items()) EXPECT_EQ(slurp(v.get<std::string>()), first[k]) << k;

  const auto pdf = io::read_density(a["artifacts"]["surrogate_pdf"].get<std::string>());
  EXPECT_NEAR(trapezoid(pdf.grid, pdf.values), 1.0, 0.02);
  const auto cdf = io::read_density(a["artifacts"]["reference_cdf"].get<std::string>());
  EXPECT_NEAR(cdf.values(cdf.values.size() - 1), 1.0, 0.02);
}

TEST_F(HarnessTest, UqNeedsReference) {
  const fs::path data = root_ / "ext.csv";
  const Matrix x = sample_gaussian(60, 2, 3);
  io::write_dataset(data, Dataset(x, (x.col(0).array() + x.col(1).array().square()).matrix()));
  ExperimentConfig c = config("ext");
  c.model = "csv";
  const json fit = cmd_fit(c, data.string());
  EXPECT_EQ(code_of([&] { cmd_uq(c, fit["artifacts"]["model"]); }), ErrorCode::InvalidArgument);
}

TEST_F(HarnessTest, ConvergenceSingleSize) {
  ExperimentConfig c = config("conv");
  c.sample_sizes = {60};
  c.n_repeats = 2;
  c.n_mc = 20000;
  const json rec = cmd_convergence(c);
  const io::CsvTable summary = io::read_csv(rec["artifacts"]["summary"].get<std::string>());
  EXPECT_EQ(summary.values.rows(), 1);
  EXPECT_EQ(io::read_csv(rec["artifacts"]["table"].get<std::string>()).values.rows(), 2);
  EXPECT_TRUE(fs::exists(fs::path(c.cache_dir) / "reference_borehole_n100000_s999.csv"));
}

TEST_F(HarnessTest, RobustnessRepeatsAndValidation) {
  ExperimentConfig c = config("rob");
  c.n_repeats = 2;
  c.robustness_size = 80;
  c.n_mc = 20000;
  const json a = cmd_robustness(c);
  const std::string table = slurp(a["artifacts"]["table"].get<std::string>());
  const json b = cmd_robustness(c);
  EXPECT_EQ(slurp(b["artifacts"]["table"].get<std::string>()), table);
  EXPECT_EQ(a["metrics"]["pdf_error"], b["metrics"]["pdf_error"]);
  const io::CsvTable pdfs = io::read_csv(a["artifacts"]["pdfs"].get<std::string>());
  EXPECT_EQ(pdfs.values.cols(), 4);
  c.n_repeats = 1;
  EXPECT_THROW(cmd_robustness(c), Error);
}

TEST_F(HarnessTest, PredictTrainingAndErrors) {
  const ExperimentConfig c = config("pred");
  const json fit = cmd_fit(c);
  const std::string model = fit["artifacts"]["model"];
  const std::string data = fit["artifacts"]["data"];
  const json rec = cmd_predict(c, model, data);
  const io::CsvTable out = io::read_csv(rec["artifacts"]["predictions"].get<std::string>());
  const Dataset train = io::read_dataset(data);
  const PpaModel m = std::get<PpaModel>(io::load_model(model).model);
  EXPECT_TRUE((out.values.col(1).array() == ppa_predict(m, train.inputs).array()).all());
  EXPECT_TRUE((out.values.col(0).array() == train.outputs.array()).all());

  const fs::path empty = root_ / "empty.csv";
  io::write_text(empty, "");
  EXPECT_THROW(cmd_predict(c, model, empty.string()), Error);
  const fs::path header_only = root_ / "header.csv";
  io::write_text(header_only, "xi_1,xi_2,xi_3,xi_4,xi_5,xi_6,xi_7,y\n");
  EXPECT_THROW(cmd_predict(c, model, header_only.string()), Error);
  const fs::path narrow = root_ / "narrow.csv";
  io::write_dataset(narrow, Dataset(sample_gaussian(5, 3, 4), Vector::Zero(5)));
  EXPECT_EQ(code_of([&] { cmd_predict(c, model, narrow.string()); }), ErrorCode::DimensionMismatch);
}

TEST_F(HarnessTest, IngestTwoQoi) {
  const fs::path csv = root_ / "runs.csv";
  const Matrix x = sample_gaussian(100, 3, 5);
  Matrix table(100, 5);
  table.leftCols(3) = x;
  table.col(3) = (x.col(0).array().cube() + x.col(0).array()).matrix();
  table.col(4) = (x.col(2).array().square() - x.col(1).array()).matrix();
  io::write_csv(csv, {"a", "b", "c", "q1", "q2"}, table);

  const ExperimentConfig c = config("ing");
  const json rec = cmd_ingest(c, {csv.string(), {"a", "b", "c"}, {"q1", "q2"}, {}});
  ASSERT_EQ(rec["artifacts"]["datasets"].size(), 2u);
  const Dataset d1 = io::read_dataset(rec["artifacts"]["datasets"]["q1"].get<std::string>());
  const Dataset d2 = io::read_dataset(rec["artifacts"]["datasets"]["q2"].get<std::string>());
  EXPECT_TRUE((d1.inputs.array() == x.array()).all());  // Gaussian-space passthrough
  EXPECT_TRUE((d2.outputs.array() == table.col(4).array()).all());

  // Only the QoI columns named: every other column becomes an input.
  const json implicit = cmd_ingest(config("ing2"), {csv.string(), {}, {"q2"}, {}});
  EXPECT_EQ(implicit["metrics"]["inputs"].size(), 4u);

  const std::string msg =
      message_of([&] { cmd_ingest(config("ing3"), {csv.string(), {"a", "zeta"}, {"q1"}, {}}); });
  EXPECT_NE(msg.find("zeta"), std::string::npos) << msg;
}

TEST_F(HarnessTest, IngestPhysicalInputs) {
  const fs::path csv = root_ / "phys.csv";
  const Matrix xi = sample_gaussian(50, 2, 6);
  Matrix table(50, 3);
  table.col(0) = (5.0 + 2.0 * xi.col(0).array()).matrix();
  table.col(1) = xi.col(1).array().exp().matrix();
  table.col(2) = xi.col(0) - xi.col(1);
  io::write_csv(csv, {"u", "v", "y"}, table);
  const fs::path spec = root_ / "spec.json";
  io::write_text(spec, io::to_json(InputSpec{{MarginalSpec::normal(5.0, 2.0), MarginalSpec::lognormal(0.0, 1.0)}}).dump());
  const json rec = cmd_ingest(config("phys"), {csv.string(), {"u", "v"}, {"y"}, spec.string()});
  const Dataset d = io::read_dataset(rec["artifacts"]["datasets"]["y"].get<std::string>());
  EXPECT_LT((d.inputs - xi).cwiseAbs().maxCoeff(), 1e-12);
}
