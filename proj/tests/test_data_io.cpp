#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "volfilter/data_io.hpp"
#include "volfilter/estimator.hpp"
#include "volfilter/random.hpp"

using namespace volfilter;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("volfilter_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

PriceSeries parse(const std::string& text) {
  std::istringstream in(text);
  return parse_prices(in);
}

PriceSeries prices_of(std::vector<double> close) {
  PriceSeries p;
  p.close = std::move(close);
  for (std::size_t i = 0; i < p.close.size(); ++i) {
    p.dates.push_back("2001-01-" + std::string(i + 1 < 10 ? "0" : "") + std::to_string(i + 1));
  }
  return p;
}

}  // namespace

TEST(LoadPrices, WellFormedFile) {
  TempDir dir;
  std::ofstream(dir.file("p.csv")) << "date,close\n2020-01-02,100\n2020-01-03,101.5\n2020-01-06,99.25\n";
  const auto p = load_prices(dir.file("p.csv"));
  ASSERT_EQ(p.size(), 3u);
  EXPECT_EQ(p.dates[2], "2020-01-06");
  EXPECT_EQ(p.close[1], 101.5);
}

TEST(LoadPrices, ExtraColumnsAndCaseInsensitiveHeader) {
  const auto p = parse("Open,Date,High,CLOSE,Volume\n1,2020-01-02,2,100,5\n1,2020-01-03,2,101,5\n");
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p.close[1], 101.0);
}

TEST(LoadPrices, OutOfOrderDatesAreSorted) {
  const auto p = parse("date,close\n2020-01-06,3\n2020-01-02,1\n2020-01-03,2\n");
  EXPECT_EQ(p.dates, (std::vector<std::string>{"2020-01-02", "2020-01-03", "2020-01-06"}));
  EXPECT_EQ(p.close, (std::vector<double>{1, 2, 3}));
}

TEST(LoadPrices, ZeroPriceNamesTheRow) {
  try {
    parse("date,close\n2020-01-02,100\n2020-01-03,0\n");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(LoadPrices, UnparseableRowCarriesLineNumber) {
  try {
    parse("date,close\n2020-01-02,100\n2020-01-03,abc\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(parse("date,close\n02/01/2020,100\n"), ParseError);
  EXPECT_THROW(parse("when,price\n2020-01-02,100\n"), ParseError);
  EXPECT_THROW(parse("date,close\n2020-01-02,100\n2020-01-02,101\n"), ValidationError);
}

TEST(LoadPrices, MissingFileIsIoError) {
  EXPECT_THROW(load_prices("/nonexistent/prices.csv"), IoError);
}

TEST(LoadPrices, HeaderOnlyIsEmptySeries) { EXPECT_EQ(parse("date,close\n").size(), 0u); }

TEST(ToReturns, ConstantPricesGiveZeros) {
  const auto r = to_returns(prices_of({5, 5, 5, 5}));
  ASSERT_EQ(r.size(), 3u);
  for (const double x : r.dx) EXPECT_EQ(x, 0.0);
}

TEST(ToReturns, SymmetricConstruction) {
  const auto r = to_returns(prices_of({1.0, std::exp(1.0), 1.0}));
  ASSERT_EQ(r.size(), 2u);
  EXPECT_NEAR(r.dx[0], 1.0, 1e-15);
  EXPECT_NEAR(r.dx[1], -1.0, 1e-15);
  EXPECT_EQ(r.dates[0], "2001-01-02");
}

TEST(ToReturns, ExponentialGrowthIsFullyDetrended) {
  std::vector<double> s;
  for (int t = 0; t < 50; ++t) s.push_back(std::exp(0.0004 * t));
  for (const double x : to_returns(prices_of(s)).dx) EXPECT_NEAR(x, 0.0, 1e-15);
}

TEST(ToReturns, ZeroMeanAndInsufficientData) {
  const auto z = gaussian_stream(3, 2000);
  std::vector<double> s{100.0};
  for (const double e : z) s.push_back(s.back() * std::exp(0.0005 + 0.01 * e));
  const auto r = to_returns(prices_of(s));
  double sum = 0.0;
  for (const double x : r.dx) sum += x;
  EXPECT_LT(std::abs(sum / static_cast<double>(r.size())), 1e-12);
  EXPECT_THROW(to_returns(prices_of({1.0, 2.0})), InsufficientData);
}

TEST(ToReturns, DetrendingIsIdempotent) {
  const auto z = gaussian_stream(4, 500);
  std::vector<double> s{50.0};
  for (const double e : z) s.push_back(s.back() * std::exp(0.001 + 0.02 * e));
  const auto first = to_returns(prices_of(s));
  std::vector<double> rebuilt{1.0};
  for (const double x : first.dx) rebuilt.push_back(rebuilt.back() * std::exp(x));
  const auto second = to_returns(prices_of(rebuilt));
  ASSERT_EQ(second.size(), first.size());
  for (std::size_t i = 0; i < first.size(); ++i) EXPECT_NEAR(second.dx[i], first.dx[i], 1e-13);
}

TEST(SeriesFiles, VolRoundTripIsBitEqual) {
  TempDir dir;
  const auto z = gaussian_stream(5, 10'000);
  VolSeries vol;
  vol.estimator = "ml";
  vol.spec = *preset("dji-heston");
  vol.first_valid = 9;
  for (std::size_t i = 0; i < z.size(); ++i) {
    vol.sigma.push_back(i < 9 ? VolSeries::absent : 0.01 * std::exp(0.3 * z[i]));
  }
  save_series(dir.file("v.tsv"), vol);
  const auto back = load_vol(dir.file("v.tsv"));
  ASSERT_EQ(back.size(), vol.size());
  EXPECT_EQ(back.first_valid, 9u);
  EXPECT_EQ(back.estimator, "ml");
  ASSERT_TRUE(back.spec.has_value());
  EXPECT_EQ(back.spec->kind, ModelKind::Heston);
  EXPECT_EQ(back.spec->params.m, 8.62e-5);
  for (std::size_t i = 0; i < 9; ++i) EXPECT_TRUE(std::isnan(back.sigma[i]));
  for (std::size_t i = 9; i < vol.size(); ++i) EXPECT_EQ(back.sigma[i], vol.sigma[i]);
}

TEST(SeriesFiles, VolFileMarksAbsentEntriesNA) {
  VolSeries vol;
  vol.estimator = "ml";
  vol.sigma = {VolSeries::absent, 0.5};
  vol.first_valid = 1;
  std::ostringstream out;
  series_table(vol).write(out);
  EXPECT_NE(out.str().find("0\tNA\tml"), std::string::npos) << out.str();
}

TEST(SeriesFiles, ReturnsAndPricesRoundTrip) {
  TempDir dir;
  const auto z = gaussian_stream(6, 1000);
  std::vector<double> s{100.0};
  for (const double e : z) s.push_back(s.back() * std::exp(0.01 * e));
  auto prices = prices_of(std::vector<double>(s.begin(), s.begin() + 28));
  prices.label = "demo";
  save_series(dir.file("p.tsv"), prices);
  const auto p2 = load_price_series(dir.file("p.tsv"));
  EXPECT_EQ(p2.close, prices.close);
  EXPECT_EQ(p2.dates, prices.dates);
  EXPECT_EQ(p2.label, "demo");

  ReturnSeries r;
  r.dx = z;
  r.label = "noise";
  save_series(dir.file("r.tsv"), r);
  const auto r2 = load_returns(dir.file("r.tsv"));
  EXPECT_EQ(r2.dx, r.dx);
  EXPECT_EQ(r2.label, "noise");

  const auto dated = to_returns(prices);
  save_series(dir.file("rd.tsv"), dated);
  EXPECT_EQ(load_returns(dir.file("rd.tsv")).dates, dated.dates);
}

TEST(SeriesFiles, PathRoundTripEchoesConfig) {
  TempDir dir;
  SimConfig cfg{.spec = *preset("dji-expou"), .n_steps = 300, .dt = 0.5, .seed = 77, .y0 = 0.1};
  const auto path = simulate_path(cfg);
  save_series(dir.file("path.tsv"), path);
  const auto back = load_path(dir.file("path.tsv"));
  EXPECT_EQ(back.x, path.x);
  EXPECT_EQ(back.y, path.y);
  EXPECT_EQ(back.sigma, path.sigma);
  EXPECT_EQ(back.config.seed, 77u);
  EXPECT_EQ(back.config.n_steps, 300u);
  EXPECT_EQ(back.config.dt, 0.5);
  EXPECT_EQ(back.config.y0, 0.1);
  EXPECT_EQ(back.config.spec.kind, ModelKind::ExpOU);
}

TEST(SeriesFiles, WrongColumnCountIsSchemaError) {
  std::istringstream in("# type=vol\n# estimator=prop\n# index\tsigma\n0\t0.1\n");
  EXPECT_THROW(vol_from_table(AnalysisTable::read(in)), SchemaError);
  std::istringstream ragged("# type=returns\n# index\tdx\n0\t0.1\t7\n");
  EXPECT_THROW(AnalysisTable::read(ragged), SchemaError);
}

TEST(SeriesFiles, WrongTypeIsSchemaError) {
  TempDir dir;
  ReturnSeries r;
  r.dx = {0.1, 0.2};
  save_series(dir.file("r.tsv"), r);
  EXPECT_THROW(load_vol(dir.file("r.tsv")), SchemaError);
}

TEST(SeriesFiles, EmptyButValidFile) {
  TempDir dir;
  save_series(dir.file("r.tsv"), ReturnSeries{});
  EXPECT_EQ(load_returns(dir.file("r.tsv")).size(), 0u);
  VolSeries empty;
  empty.estimator = "decon";
  save_series(dir.file("v.tsv"), empty);
  EXPECT_EQ(load_vol(dir.file("v.tsv")).size(), 0u);
}

TEST(SeriesFiles, OutputIsByteStable) {
  TempDir dir;
  ReturnSeries r;
  r.dx = gaussian_stream(8, 100);
  save_series(dir.file("a.tsv"), r);
  save_series(dir.file("b.tsv"), r);
  std::ifstream a(dir.file("a.tsv"));
  std::ifstream b(dir.file("b.tsv"));
  std::stringstream sa;
  std::stringstream sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(Numbers, FormatParseRoundTrip) {
  for (const double v : {0.0, -0.0, 1.0 / 3.0, 1e-300, 6.02214076e23, -2.5e-7}) {
    EXPECT_EQ(parse_number(format_number(v)), v);
  }
  EXPECT_EQ(format_number(std::nan("")), "NA");
  EXPECT_TRUE(std::isnan(parse_number("NA")));
  EXPECT_THROW(parse_number("1.5x"), ValidationError);
}
