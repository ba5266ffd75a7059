#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "qsuggest/corpus.hpp"
#include "qsuggest/errors.hpp"
#include "qsuggest/text.hpp"
#include "testkit.hpp"

using namespace qsuggest;
using corpus::ContextSource;

namespace {

corpus::Review review(const std::string& asin, std::int64_t votes, bool vine, std::size_t chars) {
  corpus::Review r;
  r.asin = asin;
  r.reviewer_id = "R";
  r.helpful_votes = votes;
  r.vine = vine;
  r.rating = 4;
  r.text = std::string(chars, 'x');
  return r;
}

}  // namespace

TEST(Corpus, VoteCounts) {
  EXPECT_EQ(corpus::parse_vote_count("2,401"), 2401);
  EXPECT_EQ(corpus::parse_vote_count("7"), 7);
  EXPECT_EQ(corpus::parse_vote_count("0"), 0);
  EXPECT_FALSE(corpus::parse_vote_count("-1"));
  EXPECT_FALSE(corpus::parse_vote_count("1,2,3,"));
  EXPECT_FALSE(corpus::parse_vote_count("abc"));
  EXPECT_FALSE(corpus::parse_vote_count(""));
}

TEST(Corpus, ParseReviewFieldMapping) {
  auto j = json::parse(R"({"reviewerID":"A1","asin":"X","reviewText":"ok","summary":"s","overall":4.0,
                          "vote":"1,024","vine":"Y","unixReviewTime":99})");
  auto r = corpus::parse_review(j);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->helpful_votes, 1024);
  EXPECT_TRUE(r->vine);
  EXPECT_EQ(r->rating, 4);
  EXPECT_EQ(r->timestamp, 99);
}

TEST(Corpus, ParseReviewRejectsBadRating) {
  std::string why;
  auto j = json::parse(R"({"reviewerID":"A1","asin":"X","reviewText":"ok","overall":9.0})");
  EXPECT_FALSE(corpus::parse_review(j, &why));
  EXPECT_FALSE(why.empty());
}

TEST(Corpus, ParseProductNeedsAsinAndTitle) {
  EXPECT_FALSE(corpus::parse_product(json::parse(R"({"title":"x"})")));
  auto p = corpus::parse_product(json::parse(R"({"asin":"A","title":"T","feature":["f1"],"price":"$12.50"})"));
  ASSERT_TRUE(p);
  EXPECT_EQ(p->features.size(), 1u);
}

TEST(Corpus, FilterPolicyBoundaries) {
  corpus::FilterPolicy policy;
  EXPECT_TRUE(corpus::passes_filter(review("A", 5, false, 80), policy));
  EXPECT_FALSE(corpus::passes_filter(review("A", 4, false, 80), policy));
  EXPECT_TRUE(corpus::passes_filter(review("A", 0, true, 80), policy));
  EXPECT_FALSE(corpus::passes_filter(review("A", 5, false, 79), policy));
  EXPECT_TRUE(corpus::passes_filter(review("A", 5, false, 2000), policy));
  EXPECT_FALSE(corpus::passes_filter(review("A", 5, false, 2001), policy));
  policy.accept_vine = false;
  EXPECT_FALSE(corpus::passes_filter(review("A", 0, true, 80), policy));
}

TEST(Corpus, FilterPolicyValidation) {
  corpus::FilterPolicy policy;
  policy.min_text_chars = 500;
  policy.max_text_chars = 100;
  EXPECT_THROW(policy.validate(), ContractViolation);
}

TEST(Corpus, TruncateAtSentence) {
  const std::string t = "First sentence. Second one is here! Third goes on and on.";
  EXPECT_EQ(corpus::truncate_at_sentence(t, 200), t);
  EXPECT_EQ(corpus::truncate_at_sentence(t, 40), "First sentence. Second one is here!");
  // No sentence end in range: falls back to a word break.
  EXPECT_EQ(corpus::truncate_at_sentence("alpha beta gamma delta", 12), "alpha beta");
  // Sentence cut too short for min_chars: word break instead.
  EXPECT_EQ(corpus::truncate_at_sentence("Hi. alpha beta gamma", 16, 8), "Hi. alpha beta");
}

TEST(Corpus, TruncateNeverSplitsUtf8) {
  const std::string t = "\xe2\x82\xac\xe2\x82\xac\xe2\x82\xac";
  auto cut = corpus::truncate_at_sentence(t, 4);
  EXPECT_EQ(cut, "\xe2\x82\xac");
}

TEST(Corpus, ContextIdIsStable) {
  auto a = corpus::make_context_id("A", ContextSource::review, "text");
  EXPECT_EQ(a, corpus::make_context_id("A", ContextSource::review, "text"));
  EXPECT_NE(a, corpus::make_context_id("A", ContextSource::catalog, "text"));
  EXPECT_EQ(a.size(), 16u);
}

TEST(Corpus, BuildContextsCatalogAndReviews) {
  corpus::Product p;
  p.asin = "A";
  p.title = "Thing";
  p.description = {"A description that is long enough to pass the minimum catalog length of eighty chars."};
  corpus::FilterPolicy policy;
  auto r = review("A", 10, false, 100);
  auto contexts = corpus::build_contexts(p, {r, r}, policy);
  ASSERT_EQ(contexts.size(), 2u);  // duplicate review collapsed
  EXPECT_EQ(contexts[0].source, ContextSource::catalog);
  EXPECT_EQ(contexts[0].product_title, "Thing");
}

TEST(Corpus, BuildContextsSkipsEmptyProducts) {
  corpus::Product p;
  p.asin = "A";
  p.title = "Thing";
  std::vector<corpus::SkipEntry> skips;
  EXPECT_TRUE(corpus::build_contexts(p, {}, {}, &skips).empty());
  ASSERT_EQ(skips.size(), 1u);
  EXPECT_EQ(skips[0].asin, "A");
}

TEST(Corpus, BuildContextsRejectsForeignReviews) {
  corpus::Product p;
  p.asin = "A";
  p.title = "Thing";
  EXPECT_THROW(corpus::build_contexts(p, {review("B", 10, false, 100)}, {}), ContractViolation);
}

TEST(Corpus, DeskCorpusIngest) {
  auto result = corpus::ingest(testkit::data_path("desk_catalog.jsonl"), testkit::data_path("desk_reviews.jsonl"), {});
  EXPECT_EQ(result.products.size(), 50u);
  EXPECT_EQ(result.catalog_malformed, 1u);
  EXPECT_EQ(result.reviews_malformed, 1u);
  EXPECT_EQ(result.reviews_orphaned, 1u);
  EXPECT_EQ(result.contexts.size(), 81u);
  EXPECT_EQ(result.skipped.size(), 4u);
  std::set<std::string> ids;
  for (const auto& c : result.contexts) {
    EXPECT_TRUE(ids.insert(c.context_id).second);
    EXPECT_GE(c.text.size(), 80u);
    EXPECT_EQ(c.text, text::normalize_whitespace(c.text));
  }
}

TEST(Corpus, ExampleRowsAreIngested) {
  auto result = corpus::ingest(testkit::data_path("desk_catalog.jsonl"), testkit::data_path("desk_reviews.jsonl"), {});
  std::set<std::string> ids;
  for (const auto& c : result.contexts) ids.insert(c.context_id);
  for (const auto& row : testkit::example_rows()) EXPECT_TRUE(ids.count(row.context.context_id)) << row.context.asin;
}

TEST(Corpus, MostlyMalformedFileIsFormatError) {
  testkit::TempDir dir;
  std::ofstream(dir / "bad.jsonl") << "{\n{\n{\"asin\":\"A\",\"title\":\"t\"}\n";
  EXPECT_THROW(corpus::load_catalog(dir / "bad.jsonl"), FormatError);
}

TEST(Corpus, MissingFileIsIoError) {
  EXPECT_THROW(corpus::load_catalog("/nonexistent/file.jsonl"), IoError);
}

TEST(Corpus, SampleIsDeterministicAndOrderFree) {
  auto result = corpus::ingest(testkit::data_path("desk_catalog.jsonl"), testkit::data_path("desk_reviews.jsonl"), {});
  auto a = corpus::sample_eval_set(result.contexts, 20, 9);
  auto shuffled = result.contexts;
  std::reverse(shuffled.begin(), shuffled.end());
  auto b = corpus::sample_eval_set(shuffled, 20, 9);
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.size(), 20u);
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end(), [](auto& x, auto& y) { return x.context_id < y.context_id; }));
  std::size_t reviews = 0, total_reviews = 0;
  for (const auto& c : a) reviews += c.source == ContextSource::review;
  for (const auto& c : result.contexts) total_reviews += c.source == ContextSource::review;
  const double expected = 20.0 * static_cast<double>(total_reviews) / static_cast<double>(result.contexts.size());
  EXPECT_LE(std::abs(static_cast<double>(reviews) - expected), 1.0);
  EXPECT_EQ(corpus::sample_eval_set(result.contexts, 1000, 9).size(), result.contexts.size());
  EXPECT_THROW(corpus::sample_eval_set(result.contexts, 0, 9), ContractViolation);
}

TEST(Corpus, ContextJsonRoundTrip) {
  auto c = testkit::example_rows()[0].context;
  EXPECT_EQ(corpus::context_from_json(corpus::to_json(c)), c);
}
