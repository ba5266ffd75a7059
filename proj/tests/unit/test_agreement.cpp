#include <gtest/gtest.h>

#include "qsuggest/agreement.hpp"
#include "qsuggest/errors.hpp"
#include "testkit.hpp"

using namespace qsuggest;
using namespace qsuggest::agreement;

namespace {

double kappa_oracle(const std::vector<AnnotationRecord>& h, const std::vector<AnnotationRecord>& a, Dimension d) {
  double n = 0, agree = 0, hy = 0, ay = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (h[i].dimension != d) continue;
    n += 1;
    agree += h[i].label == a[i].label;
    hy += h[i].label == Label::yes;
    ay += a[i].label == Label::yes;
  }
  const double po = agree / n;
  const double pe = (hy / n) * (ay / n) + (1 - hy / n) * (1 - ay / n);
  return (po - pe) / (1 - pe);
}

}  // namespace

TEST(Agreement, PublishedMatchCounts) {
  const std::vector<std::size_t> matches = {66, 46, 61, 68, 50};
  const double expected[] = {88.00, 61.33, 81.33, 90.67, 66.67};
  const double published[] = {88, 61.33, 81.33, 90.66, 66};
  auto f = testkit::agreement_fixture(matches, 75);
  auto r = percent_agreement(f.human, f.automatic);
  ASSERT_EQ(r.dimensions.size(), 5u);
  for (std::size_t d = 0; d < 5; ++d) {
    const auto& dim = r.dimensions[d];
    EXPECT_EQ(dim.matches, matches[d]);
    EXPECT_EQ(dim.total, 75u);
    EXPECT_NEAR(dim.percent, expected[d], 0.005);
    EXPECT_NEAR(dim.percent, published[d], 0.7);
    ASSERT_TRUE(dim.kappa);
    EXPECT_NEAR(*dim.kappa, kappa_oracle(f.human, f.automatic, dim.dimension), 1e-12);
  }
  // (66 + 46 + 61 + 68 + 50) / 375
  EXPECT_NEAR(*r.overall_percent, 100.0 * 291.0 / 375.0, 1e-9);
  EXPECT_GT(*r.overall_percent, 75.0);
}

TEST(Agreement, PartialCollapsesToNo) {
  EXPECT_EQ(label_from_string("PARTIAL"), Label::no);
  EXPECT_EQ(label_from_string("Yes"), Label::yes);
  EXPECT_THROW(label_from_string("maybe"), FormatError);
}

TEST(Agreement, UnpairedAreExcludedSymmetrically) {
  auto records = parse_csv(
      "item_id,dimension,label,annotator\n"
      "a,relevance,yes,human\n"
      "a,relevance,yes,auto\n"
      "b,relevance,no,human\n"
      "c,relevance,yes,auto\n");
  auto r = percent_agreement(records);
  ASSERT_EQ(r.dimensions.size(), 1u);
  EXPECT_EQ(r.dimensions[0].total, 1u);
  EXPECT_EQ(r.excluded.size(), 2u);
  EXPECT_DOUBLE_EQ(*r.overall_percent, 100.0);
  // Constant labels: chance agreement 1, so no kappa.
  EXPECT_FALSE(r.dimensions[0].kappa);
  EXPECT_EQ(r.warnings.size(), 4u);  // the other four dimensions
}

TEST(Agreement, CsvHandling) {
  auto records = parse_csv(
      "# comment\n\n"
      "\"item, with comma\",fluency,no,human\n"
      "\"item, with comma\",fluency,partial,auto\r\n");
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0].item_id, "item, with comma");
  EXPECT_EQ(records[1].annotator, Annotator::automatic);
  EXPECT_DOUBLE_EQ(*percent_agreement(records).overall_percent, 100.0);
}

TEST(Agreement, CsvErrors) {
  EXPECT_THROW(parse_csv("a,relevance,yes\n"), FormatError);
  EXPECT_THROW(parse_csv("a,vibes,yes,human\n"), FormatError);
  EXPECT_THROW(parse_csv("a,relevance,yes,robot\n"), FormatError);
  EXPECT_THROW(parse_csv("a,relevance,yes,human\na,relevance,no,human\n"), FormatError);
}

TEST(Agreement, EmptyInputs) {
  auto r = percent_agreement({}, {});
  EXPECT_TRUE(r.dimensions.empty());
  EXPECT_FALSE(r.overall_percent);
  EXPECT_NE(render_text(r).find("Overall (mean of dimensions): -"), std::string::npos);
}

TEST(Agreement, RenderedOutput) {
  auto f = testkit::agreement_fixture({66, 46, 61, 68, 50}, 75);
  auto r = percent_agreement(f.human, f.automatic);
  auto text = render_text(r);
  EXPECT_NE(text.find("Relevance"), std::string::npos);
  EXPECT_NE(text.find("88.00%"), std::string::npos);
  EXPECT_NE(text.find("77.60%"), std::string::npos);
  auto j = to_json(r);
  EXPECT_EQ(j["dimensions"].size(), 5u);
}
