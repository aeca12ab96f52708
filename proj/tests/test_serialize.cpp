#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "mmtensor/errors.hpp"
#include "mmtensor/serialize.hpp"
#include "oracles.hpp"

namespace {

using mmt::Json;

TEST(ModelJson, ProposedRoundTripsBitwise) {
  std::mt19937_64 rng(1);
  mmt::RegressionModel m{{4, 3, 2}, {}, {}, 0.1 + 0.2};
  for (int r = 0; r < 3; ++r) {
    m.components.push_back({oracle::random_unit_rank(rng, {4, 3, 2}), 1.0 / (r + 3.0), -0.1 * r});
    m.train_rmse_path.push_back(std::exp(-r) / 7.0);
  }
  const auto j = mmt::model_to_json(m);
  EXPECT_EQ(j["format"], "mmtensor-model");
  EXPECT_EQ(j["method"], "proposed");
  const auto back = std::get<mmt::RegressionModel>(mmt::model_from_json(Json::parse(j.dump())));
  EXPECT_EQ(back.input_shape, m.input_shape);
  EXPECT_EQ(back.intercept, m.intercept);
  EXPECT_EQ(back.train_rmse_path, m.train_rmse_path);
  ASSERT_EQ(back.components.size(), 3u);
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_EQ(back.components[r].tensor, m.components[r].tensor);
    EXPECT_EQ(back.components[r].lambda, m.components[r].lambda);
    EXPECT_EQ(back.components[r].offset, m.components[r].offset);
  }
}

TEST(ModelJson, LinearRoundTripsBitwise) {
  mmt::LinearModel m;
  m.input_shape = {3, 2};
  m.weights = Eigen::VectorXd::LinSpaced(6, -1.0 / 3.0, 2.0 / 7.0);
  m.weights(2) = 0.0;
  m.intercept = -0.25;
  m.method = "glasso";
  m.hyperparameters = {{"lambda_group", 1e-6}, {"lambda_l1", 0.3}};
  m.grouping = "by-roi";
  const auto back = std::get<mmt::LinearModel>(mmt::model_from_json(Json::parse(mmt::model_to_json(m).dump())));
  EXPECT_EQ(back.input_shape, m.input_shape);
  EXPECT_EQ(back.weights, m.weights);
  EXPECT_EQ(back.intercept, m.intercept);
  EXPECT_EQ(back.method, "glasso");
  EXPECT_EQ(back.hyperparameters, m.hyperparameters);
  EXPECT_EQ(back.grouping, "by-roi");
}

TEST(ModelJson, RejectsMalformedDocuments) {
  EXPECT_THROW(mmt::model_from_json(Json::parse(R"({"format": "other"})")), mmt::InputError);
  EXPECT_THROW(mmt::model_from_json(Json::parse(R"({"format": "mmtensor-model", "version": 1})")),
               mmt::InputError);
  EXPECT_THROW(mmt::model_from_json(Json::parse(
                   R"({"format": "mmtensor-model", "version": 1, "method": "lasso", "input_shape": [2],
                       "intercept": 0, "weights": [1, 2, 3], "hyperparameters": {}})")),
               mmt::InputError);
}

TEST(DumpJson, RoundTripsAndBuildsDatasets) {
  mmt::TensorDump d;
  d.representation = "concat";
  d.shape = {2, 2};
  d.ids = {"a", "b"};
  d.tensors = {mmt::DenseTensor({2, 2}, {0.1, 0.2, 0.3, 1e-300}), mmt::DenseTensor({2, 2}, {-1, 2, -3, 4})};
  d.responses["ADAS13"] = {0.25, 1.0 / 3.0};
  const auto back = mmt::dump_from_json(Json::parse(mmt::dump_to_json(d).dump()));
  EXPECT_EQ(back.ids, d.ids);
  EXPECT_EQ(back.tensors, d.tensors);
  EXPECT_EQ(back.responses, d.responses);
  const auto ds = back.dataset("ADAS13");
  EXPECT_EQ(ds.y, d.responses["ADAS13"]);
  EXPECT_EQ(ds.score_name, "ADAS13");
  EXPECT_THROW(back.dataset("MMSE"), mmt::InputError);
  d.responses["MMSE"] = {1.0};
  EXPECT_THROW(d.validate(), mmt::InputError);
}

TEST(ReportCsv, HeadersEscapingAndMissingValues) {
  std::ostringstream out;
  mmt::write_report_csv(out, {{0, "ADAS13", "stack:5", "glasso", 0.5, 90.0,
                               std::numeric_limits<double>::quiet_NaN(), "a=1;grouping=by,roi"}});
  EXPECT_EQ(out.str(), std::string(mmt::kReportCsvHeader) + "\n0,ADAS13,stack:5,glasso,0.5,90,,\"a=1;grouping=by,roi\"\n");
  EXPECT_EQ(mmt::csv_escape("plain"), "plain");
  EXPECT_EQ(mmt::csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");

  mmt::EvalReport r;
  r.records.push_back({0, "DSS", "concat", "proposed", 0.25, 50, std::numeric_limits<double>::quiet_NaN(), ""});
  const auto j = mmt::report_to_json(r);
  EXPECT_TRUE(j["records"][0]["cv_rmse"].is_null());
}

TEST(RoiCsv, UsesAtlasLabelsFor116Rois) {
  std::ostringstream a, b;
  mmt::write_roi_csv(a, {{0, 3, 0.5}}, 116);
  EXPECT_EQ(a.str(), std::string(mmt::kRoiCsvHeader) + "\n1,1,Precentral_L,3,0.5\n");
  mmt::write_roi_csv(b, {{4, 1, 2.0}}, 20);
  EXPECT_EQ(b.str(), std::string(mmt::kRoiCsvHeader) + "\n1,5,roi5,1,2\n");
}

TEST(CurveCsv, FlagsFullyConnectedRows) {
  std::ostringstream out;
  mmt::write_curve_csv(out, {{5, 0.2, 0.01, 80, 1, false}, {116, 0.3, 0.02, 70, 2, true}}, "k");
  EXPECT_EQ(out.str(), mmt::curve_csv_header("k") + "\n5,0.2,0.01,80,1,\n116,0.3,0.02,70,2,fully-connected\n");
}

TEST(Files, MissingFilesAreIoErrors) {
  EXPECT_THROW(mmt::read_text_file("/nonexistent/x.json"), mmt::IoError);
  EXPECT_THROW(mmt::write_text_file("/nonexistent/dir/x.json", "x"), mmt::IoError);
}

}  // namespace
