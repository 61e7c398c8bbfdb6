#include <gtest/gtest.h>

#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "tabprompt/csv.hpp"
#include "tabprompt/dataset.hpp"
#include "test_util.hpp"

using namespace tabprompt;
using tabprompt::testing::fixture;
using tabprompt::testing::make_schema;
using tabprompt::testing::make_table;
using tabprompt::testing::TempDir;

namespace {

Schema claims_schema() {
  return make_schema({{"Make", ColumnKind::categorical},
                      {"color", ColumnKind::categorical},
                      {"price", ColumnKind::numeric},
                      {"Label", ColumnKind::categorical}});
}

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Csv, QuotedFieldsAndLineEndings) {
  auto recs = csv::parse(std::string_view("a,b\r\n\"x, y\",\"he said \"\"hi\"\"\"\n\"multi\nline\",\n"));
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_EQ(recs[1][0], "x, y");
  EXPECT_EQ(recs[1][1], "he said \"hi\"");
  EXPECT_EQ(recs[2][0], "multi\nline");
  EXPECT_EQ(recs[2][1], "");
}

TEST(Csv, UnterminatedQuoteIsAnError) {
  EXPECT_THROW(csv::parse(std::string_view("a\n\"oops\n")), ValidationError);
}

TEST(LoadTable, VehicleClaimsSample) {
  auto t = load_table(fixture("claims4.csv"), claims_schema());
  EXPECT_EQ(t.size(), 4u);
  EXPECT_EQ(t.schema().columns.size(), 4u);
  EXPECT_EQ(std::get<std::string>(t.row(1)[0]), "BMW");
  EXPECT_EQ(std::get<double>(t.row(1)[2]), 12000.0);
  EXPECT_EQ(t.targets(), (std::vector<int>{0, 1, 0, 1}));
}

TEST(LoadTable, EmptyNumericCellIsMissing) {
  auto t = load_table(fixture("claims4.csv"), claims_schema());
  EXPECT_TRUE(is_missing(t.row(3)[2]));
  EXPECT_TRUE(is_missing(t.row(2)[1]));
}

TEST(LoadTable, ThirdLabelValueNamesTheRow) {
  auto msg = error_of([] { load_table(fixture("claims_three_labels.csv"), claims_schema()); });
  EXPECT_NE(msg.find("row 1"), std::string::npos) << msg;
  EXPECT_NE(msg.find("Maybe"), std::string::npos) << msg;
}

TEST(LoadTable, DeclaredNegativeLabelIsEnforced) {
  auto schema = claims_schema();
  schema.negative_label = "0";
  auto msg = error_of([&] { load_table(fixture("claims_three_labels.csv"), schema); });
  EXPECT_NE(msg.find("row 1"), std::string::npos) << msg;
}

TEST(LoadTable, BadNumberReportsRowAndColumn) {
  auto msg = error_of([] { load_table(fixture("claims_bad_number.csv"), claims_schema()); });
  EXPECT_NE(msg.find("row 1"), std::string::npos) << msg;
  EXPECT_NE(msg.find("price"), std::string::npos) << msg;
}

TEST(LoadTable, HeaderMismatchNamesColumns) {
  auto schema = claims_schema();
  schema.columns[1].name = "colour";
  auto msg = error_of([&] { load_table(fixture("claims4.csv"), schema); });
  EXPECT_NE(msg.find("colour"), std::string::npos) << msg;
  EXPECT_NE(msg.find("color"), std::string::npos) << msg;
}

TEST(LoadTable, MissingFile) {
  auto msg = error_of([] { load_table("/nonexistent/claims.csv", claims_schema()); });
  EXPECT_NE(msg.find("/nonexistent/claims.csv"), std::string::npos);
}

TEST(LoadTable, UsesFileColumnOrder) {
  auto schema = claims_schema();
  std::swap(schema.columns[0], schema.columns[2]);
  auto t = load_table(fixture("claims4.csv"), schema);
  EXPECT_EQ(t.schema().columns[0].name, "Make");
  EXPECT_EQ(t.schema().columns[2].name, "price");
}

TEST(LoadTable, SingleClassIsRejected) {
  TempDir dir;
  auto path = dir.write("one.csv", "Make,color,price,Label\nFord,red,1,1\nBMW,red,2,1\n");
  EXPECT_THROW(load_table(path, claims_schema()), ValidationError);
}

TEST(InferSchema, ColumnKinds) {
  TempDir dir;
  auto path = dir.write("t.csv", "year,mixed,score,Label\n2004,red,5.0,1\n2010,2004,,0\n");
  auto s = infer_schema(path, "Label", "1");
  ASSERT_EQ(s.columns.size(), 4u);
  EXPECT_EQ(s.columns[0].kind, ColumnKind::numeric);
  EXPECT_EQ(s.columns[1].kind, ColumnKind::categorical);
  EXPECT_EQ(s.columns[2].kind, ColumnKind::numeric);
  auto t = load_table(path, s);
  EXPECT_TRUE(is_missing(t.row(1)[2]));
  EXPECT_EQ(std::get<double>(t.row(0)[2]), 5.0);
}

TEST(InferSchema, Errors) {
  TempDir dir;
  EXPECT_THROW(infer_schema(dir.write("empty.csv", ""), "Label", "1"), ValidationError);
  EXPECT_THROW(infer_schema(dir.write("hdr.csv", "a,Label\n"), "Label", "1"), ValidationError);
  EXPECT_THROW(infer_schema(dir.write("dup.csv", "a,a,Label\n1,2,1\n"), "Label", "1"), ValidationError);
  EXPECT_THROW(infer_schema(dir.write("nolabel.csv", "a,b\n1,2\n"), "Label", "1"), ValidationError);
}

TEST(FormatNumber, IntegersAndSignificantDigits) {
  EXPECT_EQ(format_number(5000), "5000");
  EXPECT_EQ(format_number(-12), "-12");
  EXPECT_EQ(format_number(-0.0), "0");
  EXPECT_EQ(format_number(2.5), "2.5");
  EXPECT_EQ(format_number(1.0 / 3.0), "0.333333");
  EXPECT_EQ(format_number(12500.5), "12500.5");
  EXPECT_EQ(format_number(1234567.25), "1.23457e+06");
  EXPECT_EQ(format_number(1e20), "1e+20");
}

TEST(OneHot, CategoricalLevelsSorted) {
  auto s = make_schema({{"color", ColumnKind::categorical}, {"y", ColumnKind::categorical}});
  auto t = make_table(s, {{"red", "1"}, {"blue", "0"}, {"red", "0"}});
  auto m = one_hot_encode(t);
  ASSERT_EQ(m.column_names, (std::vector<std::string>{"color=blue", "color=red"}));
  EXPECT_EQ(m.values, (std::vector<double>{0, 1, 1, 0, 0, 1}));
  EXPECT_EQ(m.target, (std::vector<double>{1, 0, 0}));
  EXPECT_EQ(m.feature_of, (std::vector<std::size_t>{0, 0}));
}

TEST(OneHot, NumericPassThrough) {
  auto s = make_schema({{"price", ColumnKind::numeric}, {"y", ColumnKind::categorical}});
  auto t = make_table(s, {{"100", "1"}, {"200", "0"}});
  auto m = one_hot_encode(t);
  ASSERT_EQ(m.column_names, std::vector<std::string>{"price"});
  EXPECT_EQ(m.values, (std::vector<double>{100, 200}));
}

TEST(OneHot, MissingCategoricalIsAllZero) {
  auto s = make_schema({{"color", ColumnKind::categorical}, {"y", ColumnKind::categorical}});
  auto t = make_table(s, {{"red", "1"}, {"", "0"}, {"blue", "0"}});
  auto m = one_hot_encode(t);
  EXPECT_EQ(m.at(1, 0) + m.at(1, 1), 0.0);
}

TEST(OneHot, MissingNumericTakesColumnMean) {
  auto s = make_schema({{"price", ColumnKind::numeric}, {"y", ColumnKind::categorical}});
  auto t = make_table(s, {{"100", "1"}, {"NA", "0"}, {"300", "0"}});
  EXPECT_EQ(one_hot_encode(t).column(0), (std::vector<double>{100, 200, 300}));
}

TEST(OneHotProperty, LevelRowSumsAreZeroOrOneAndDeterministic) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    auto t = tabprompt::testing::random_table(rng);
    auto m = one_hot_encode(t);
    auto again = one_hot_encode(t);
    ASSERT_EQ(m.column_names, again.column_names);
    ASSERT_EQ(m.values, again.values);
    for (std::size_t r = 0; r < m.rows; ++r) {
      std::map<std::size_t, double> sums;
      for (std::size_t c = 0; c < m.cols(); ++c)
        if (t.schema().columns[m.feature_of[c]].kind == ColumnKind::categorical) sums[m.feature_of[c]] += m.at(r, c);
      for (auto [f, sum] : sums) {
        ASSERT_TRUE(sum == 0.0 || sum == 1.0);
        ASSERT_EQ(sum == 0.0, is_missing(t.row(r)[f]));
      }
    }
  }
}

TEST(CsvRoundTrip, ReloadPreservesCells) {
  std::mt19937_64 rng(7);
  TempDir dir;
  for (int trial = 0; trial < 50; ++trial) {
    tabprompt::testing::RandomTableOptions opts;
    opts.integer_numeric = trial % 2 == 0;
    auto t = tabprompt::testing::random_table(rng, opts);
    std::ostringstream ss;
    write_csv(t, ss);
    auto path = dir.write("rt.csv", ss.str());
    auto back = load_table(path, t.schema());
    ASSERT_EQ(back.size(), t.size());
    for (std::size_t r = 0; r < t.size(); ++r)
      for (std::size_t c = 0; c < t.schema().columns.size(); ++c)
        ASSERT_EQ(cell_text(back.row(r)[c]), cell_text(t.row(r)[c])) << "row " << r << " col " << c;
  }
}

TEST(SchemaJson, RoundTripsAndRejectsBadKinds) {
  auto s = claims_schema();
  s.negative_label = "0";
  EXPECT_EQ(schema_from_json(schema_to_json(s)), s);
  auto j = schema_to_json(s);
  j["columns"][0]["kind"] = "ordinal";
  EXPECT_THROW(schema_from_json(j), ValidationError);
}

TEST(SchemaValidate, RejectsDuplicateAndEmptyNames) {
  auto s = claims_schema();
  s.columns[1].name = "Make";
  EXPECT_THROW(s.validate(), ValidationError);
  s.columns[1].name = "";
  EXPECT_THROW(s.validate(), ValidationError);
}
