#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <queue>

#include "qsuggest/backend.hpp"
#include "qsuggest/deterministic_rng.hpp"
#include "qsuggest/errors.hpp"
#include "qsuggest/quality.hpp"
#include "qsuggest/text.hpp"
#include "testkit.hpp"

using namespace qsuggest;
using namespace qsuggest::quality;

namespace {

// Straightforward re-derivation of the three components, kept apart from the
// library code on purpose.
struct Oracle {
  double length, lexical, aspect, overall;
};

Oracle oracle(const std::vector<std::string>& qs) {
  const std::size_t n = qs.size();
  if (n == 1) return {1, 1, 1, 1};
  std::vector<text::StemSet> s;
  std::set<int> bins;
  for (const auto& q : qs) {
    s.push_back(text::content_stems(q));
    const auto tokens = text::tokenize(q).size();
    bins.insert(tokens <= 8 ? 0 : tokens <= 16 ? 1 : 2);
  }
  auto sim = [&](std::size_t i, std::size_t j) {
    std::size_t inter = 0;
    for (const auto& x : s[i]) inter += s[j].count(x);
    const std::size_t uni = s[i].size() + s[j].size() - inter;
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
  };
  double total = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) total += 1.0 - sim(i, j);
  const double lexical = total / (static_cast<double>(n * (n - 1)) / 2.0);

  std::vector<bool> seen(n, false);
  std::size_t clusters = 0;
  for (std::size_t start = 0; start < n; ++start) {
    if (seen[start]) continue;
    ++clusters;
    std::queue<std::size_t> q;
    q.push(start);
    seen[start] = true;
    while (!q.empty()) {
      auto i = q.front();
      q.pop();
      for (std::size_t j = 0; j < n; ++j) {
        if (!seen[j] && sim(i, j) >= 0.5) {
          seen[j] = true;
          q.push(j);
        }
      }
    }
  }
  const double length = static_cast<double>(bins.size()) / static_cast<double>(std::min<std::size_t>(n, 3));
  const double aspect = static_cast<double>(clusters) / static_cast<double>(n);
  return {length, lexical, aspect, (length + lexical + aspect) / 3.0};
}

std::vector<std::string> random_list(DeterministicRng& rng) {
  static const std::vector<std::string> pool = {
      "Is it waterproof?", "Does the battery last a full day of heavy use?", "What colors are available?",
      "Is the strap adjustable?", "How loud is the motor at full speed?", "Does it fit a queen size bed?",
      "Is it waterproof enough for swimming?", "Can it be washed in a dishwasher without damage?",
      "What is included in the box?", "How does it compare with the previous model in battery life?",
      "Does the battery last long?", "Is assembly required before first use?",
      "Which size suits a family of four that cooks every day and hosts guests on weekends?"};
  std::vector<std::string> out;
  const auto n = 1 + rng.below(8);
  for (std::uint64_t i = 0; i < n; ++i) out.push_back(pool[rng.below(pool.size())]);
  return out;
}

QualityVerdict verdict(Variant v, Dimension d, Verdict x, bool mapped = true) {
  QualityVerdict q;
  q.suggestion_ref = "r";
  q.variant = v;
  q.dimension = d;
  q.verdict = x;
  q.mapped = mapped;
  return q;
}

}  // namespace

TEST(Verdicts, Mapping) {
  EXPECT_EQ(map_verdict("YES", Dimension::relevance), Verdict::yes);
  EXPECT_EQ(map_verdict("no.", Dimension::relevance), Verdict::no);
  EXPECT_EQ(map_verdict("Yes, it is relevant.", Dimension::usefulness), Verdict::yes);
  EXPECT_EQ(map_verdict("Partial", Dimension::answerability), Verdict::partial);
  EXPECT_FALSE(map_verdict("Partial", Dimension::fluency));
  EXPECT_FALSE(map_verdict("I cannot tell.", Dimension::relevance));
  EXPECT_FALSE(map_verdict("", Dimension::relevance));
  EXPECT_FALSE(map_verdict("Yesterday", Dimension::relevance));  // whole words only
  EXPECT_EQ(map_verdict("Answer: NO (the text says nothing)", Dimension::answerability), Verdict::no);
}

TEST(Verdicts, JsonRoundTripAndPartialGuard) {
  auto v = verdict(Variant::sft, Dimension::answerability, Verdict::partial);
  v.raw_response = "PARTIAL";
  auto j = to_json(v);
  EXPECT_EQ(j["raw_response_sha256"], text::sha256_hex("PARTIAL"));
  auto back = verdict_from_json(j);
  EXPECT_EQ(back.verdict, Verdict::partial);
  EXPECT_EQ(back.variant, Variant::sft);
  j["dimension"] = "style";
  EXPECT_THROW(verdict_from_json(j), FormatError);
}

TEST(Aggregate, ScoreIsYesFraction) {
  std::vector<QualityVerdict> vs;
  for (int i = 0; i < 3; ++i) vs.push_back(verdict(Variant::icl_zero_shot, Dimension::relevance, Verdict::yes));
  vs.push_back(verdict(Variant::icl_zero_shot, Dimension::relevance, Verdict::no));
  auto t = aggregate(vs);
  EXPECT_DOUBLE_EQ(*t.score(Variant::icl_zero_shot, Dimension::relevance), 0.75);
  EXPECT_FALSE(t.score(Variant::sft, Dimension::relevance));
}

TEST(Aggregate, PartialIsNotYes) {
  std::vector<QualityVerdict> vs = {verdict(Variant::sft, Dimension::answerability, Verdict::yes),
                                    verdict(Variant::sft, Dimension::answerability, Verdict::partial),
                                    verdict(Variant::sft, Dimension::answerability, Verdict::partial),
                                    verdict(Variant::sft, Dimension::answerability, Verdict::no)};
  auto t = aggregate(vs);
  const auto* c = t.cell(Variant::sft, Dimension::answerability);
  EXPECT_DOUBLE_EQ(*c->score, 0.25);
  EXPECT_DOUBLE_EQ(*c->partial_among_negative, 2.0 / 3.0);
}

TEST(Aggregate, UnmappablePolicies) {
  std::vector<QualityVerdict> vs = {verdict(Variant::sft, Dimension::style, Verdict::yes),
                                    verdict(Variant::sft, Dimension::style, Verdict::no, false)};
  auto counted = aggregate(vs, UnmappablePolicy::count_as_no);
  EXPECT_DOUBLE_EQ(*counted.score(Variant::sft, Dimension::style), 0.5);
  EXPECT_EQ(counted.cell(Variant::sft, Dimension::style)->unmappable, 1u);
  auto excluded = aggregate(vs, UnmappablePolicy::exclude);
  EXPECT_DOUBLE_EQ(*excluded.score(Variant::sft, Dimension::style), 1.0);
  EXPECT_EQ(excluded.cell(Variant::sft, Dimension::style)->n, 1u);
  // All unmappable under exclude: no score rather than a division by zero.
  auto none = aggregate({verdict(Variant::sft, Dimension::style, Verdict::no, false)}, UnmappablePolicy::exclude);
  EXPECT_FALSE(none.score(Variant::sft, Dimension::style));
}

TEST(Aggregate, TableOneReplay) {
  auto table = aggregate(testkit::table1_fixture(1000, 99));
  for (std::size_t d = 0; d < 5; ++d) {
    for (std::size_t v = 0; v < 3; ++v) {
      auto s = table.score(kAllVariants[v], promptkit::kAllDimensions[d]);
      ASSERT_TRUE(s);
      EXPECT_NEAR(*s, testkit::kTable1[d][v], 0.005);
    }
  }
  // Negatives on answerability carry the 56% partial share.
  for (auto v : kAllVariants) {
    EXPECT_NEAR(*table.cell(v, Dimension::answerability)->partial_among_negative, 0.56, 0.005);
  }
}

TEST(Aggregate, OrderIndependent) {
  auto a = aggregate(testkit::table1_fixture(200, 1));
  auto b = aggregate(testkit::table1_fixture(200, 2));
  EXPECT_EQ(render_table(a), render_table(b));
}

TEST(Judge, MapsMockRepliesAndUnmappable) {
  const auto& row = testkit::doorbell_row();
  qparser::QuestionSuggestion s;
  s.question = row.questions[1];
  s.context_id = row.context.context_id;
  s.interest_score = 5;
  auto relevance_prompt = promptkit::render_judge_prompt(s.question, row.context, Dimension::relevance);
  auto style_prompt = promptkit::render_judge_prompt(s.question, row.context, Dimension::style);
  auto mock = backend::mock_backend({{backend::prompt_digest(relevance_prompt), "YES"},
                                     {backend::prompt_digest(style_prompt), "PARTIAL"}},
                                    "no");
  backend::Generator gen(mock);
  auto yes = judge(s, row.context, Dimension::relevance, Variant::icl_few_shot, gen);
  EXPECT_EQ(yes.verdict, Verdict::yes);
  EXPECT_TRUE(yes.mapped);
  EXPECT_EQ(yes.suggestion_ref, qparser::suggestion_ref(s));
  EXPECT_EQ(yes.judge_model, "mock-judge");
  auto bad = judge(s, row.context, Dimension::style, Variant::icl_few_shot, gen);
  EXPECT_FALSE(bad.mapped);
  EXPECT_EQ(bad.verdict, Verdict::no);
}

TEST(Judge, BackendErrorsNameTheSuggestion) {
  backend::MockOptions o;
  o.default_text = "x";
  class Failing final : public backend::Backend {
   public:
    backend::Completion complete(const backend::GenRequest&) override { throw TransportError("down", {"a"}); }
    backend::Completion complete_stream(const backend::GenRequest& r, const backend::ChunkSink&) override {
      return complete(r);
    }
    std::string_view kind() const override { return "failing"; }
  };
  backend::Generator gen(std::make_shared<Failing>());
  qparser::QuestionSuggestion s;
  s.question = "Is it loud?";
  s.context_id = "c";
  try {
    judge(s, testkit::doorbell_row().context, Dimension::fluency, Variant::sft, gen);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.error_class(), "transport_error");
    EXPECT_NE(std::string(e.what()).find(qparser::suggestion_ref(s)), std::string::npos);
  }
}

TEST(Judge, ParallelResultsMatchSerial) {
  auto cfg = backend::BackendConfig::load(testkit::config_path("mock_judge.toml"));
  std::vector<JudgeItem> items;
  for (const auto& row : testkit::example_rows()) {
    for (const auto& q : row.questions) {
      JudgeItem item;
      item.suggestion.question = q;
      item.suggestion.context_id = row.context.context_id;
      item.suggestion.interest_score = 5;
      item.context = row.context;
      items.push_back(item);
    }
  }
  std::vector<Dimension> dims(promptkit::kAllDimensions.begin(), promptkit::kAllDimensions.end());
  auto serial = judge_all(items, dims, *backend::make_generator(cfg), {}, 1);
  auto parallel = judge_all(items, dims, *backend::make_generator(cfg), {}, 8);
  ASSERT_EQ(serial.size(), items.size() * dims.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(serial[i].suggestion_ref, parallel[i].suggestion_ref);
    EXPECT_EQ(serial[i].dimension, dims[i % dims.size()]);
    EXPECT_EQ(serial[i].dimension, parallel[i].dimension);
    EXPECT_EQ(serial[i].verdict, parallel[i].verdict);
    EXPECT_EQ(serial[i].raw_response, parallel[i].raw_response);
  }
}

TEST(Diversity, LengthBins) {
  EXPECT_EQ(length_bin("one two three four five six seven eight?"), LengthBin::short_q);
  EXPECT_EQ(length_bin("one two three four five six seven eight nine?"), LengthBin::medium_q);
  EXPECT_EQ(length_bin("a b c d e f g h i j k l m n o p?"), LengthBin::medium_q);
  EXPECT_EQ(length_bin("a b c d e f g h i j k l m n o p q?"), LengthBin::long_q);
}

TEST(Diversity, Singleton) {
  auto r = diversity(std::vector<std::string>{"Is it loud?"});
  EXPECT_EQ(r.overall, 1.0);
  EXPECT_EQ(r.lexical_diversity, 1.0);
  EXPECT_EQ(r.length_diversity, 1.0);
  EXPECT_EQ(r.aspect_diversity, 1.0);
  EXPECT_THROW(diversity(std::vector<std::string>{}), ContractViolation);
}

TEST(Diversity, DuplicatesOnly) {
  for (std::size_t n = 2; n <= 6; ++n) {
    auto r = diversity(std::vector<std::string>(n, "Does the battery last a full day?"));
    EXPECT_EQ(r.lexical_diversity, 0.0);
    EXPECT_DOUBLE_EQ(r.aspect_diversity, 1.0 / static_cast<double>(n));
    EXPECT_DOUBLE_EQ(r.length_diversity, 1.0 / static_cast<double>(std::min<std::size_t>(n, 3)));
  }
  auto two = diversity(std::vector<std::string>(2, "Is it loud?"));
  EXPECT_DOUBLE_EQ(two.aspect_diversity, 0.5);
  EXPECT_DOUBLE_EQ(two.length_diversity, 0.5);
}

TEST(Diversity, ToiletPaperHolderRow) {
  auto r = diversity(testkit::example_rows()[0].questions);
  // Stem sets share toilet, paper, holder, wall: Jaccard 4/14.
  EXPECT_NEAR(r.lexical_diversity, 10.0 / 14.0, 1e-12);
  EXPECT_DOUBLE_EQ(r.length_diversity, 0.5);
  EXPECT_DOUBLE_EQ(r.aspect_diversity, 1.0);
  EXPECT_NEAR(r.overall, (0.5 + 10.0 / 14.0 + 1.0) / 3.0, 1e-12);
}

TEST(Diversity, MatchesOracleOnRandomLists) {
  DeterministicRng rng(8);
  for (int i = 0; i < 1000; ++i) {
    auto list = random_list(rng);
    auto r = diversity(list);
    auto o = oracle(list);
    ASSERT_NEAR(r.lexical_diversity, o.lexical, 1e-12);
    ASSERT_DOUBLE_EQ(r.length_diversity, o.length);
    ASSERT_DOUBLE_EQ(r.aspect_diversity, o.aspect);
    ASSERT_NEAR(r.overall, o.overall, 1e-12);
    for (double x : {r.lexical_diversity, r.length_diversity, r.aspect_diversity, r.overall}) {
      ASSERT_GE(x, 0.0);
      ASSERT_LE(x, 1.0);
    }
  }
}

TEST(Diversity, PermutationInvariant) {
  DeterministicRng rng(11);
  for (int i = 0; i < 1000; ++i) {
    auto list = random_list(rng);
    auto base = diversity(list);
    auto shuffled = list;
    rng.shuffle(shuffled);
    auto r = diversity(shuffled);
    ASSERT_EQ(r.lexical_diversity, base.lexical_diversity);
    ASSERT_EQ(r.length_diversity, base.length_diversity);
    ASSERT_EQ(r.aspect_diversity, base.aspect_diversity);
    ASSERT_EQ(r.overall, base.overall);
  }
}

TEST(Diversity, DuplicateNeverRaisesAspect) {
  DeterministicRng rng(12);
  for (int i = 0; i < 1000; ++i) {
    auto list = random_list(rng);
    auto before = diversity(list);
    list.push_back(list[rng.below(list.size())]);
    ASSERT_LE(diversity(list).aspect_diversity, before.aspect_diversity);
  }
}

// A duplicate of q lowers (or keeps) the mean pairwise distance exactly when
// q's mean distance to the list, counting its zero distance to itself, is at
// most the current mean. It can raise it otherwise.
TEST(Diversity, DuplicateEffectOnLexical) {
  DeterministicRng rng(13);
  for (int i = 0; i < 1000; ++i) {
    auto list = random_list(rng);
    if (list.size() < 2) continue;
    const auto pick = rng.below(list.size());
    const double before = diversity(list).lexical_diversity;
    double to_q = 0;
    const auto q = text::content_stems(list[pick]);
    for (const auto& other : list) to_q += 1.0 - text::jaccard(q, text::content_stems(other));
    const double mean_to_q = to_q / static_cast<double>(list.size());
    list.push_back(list[pick]);
    const double after = diversity(list).lexical_diversity;
    if (mean_to_q <= before - 1e-12) ASSERT_LE(after, before + 1e-12);
    if (mean_to_q >= before + 1e-12) ASSERT_GE(after, before - 1e-12);
  }
  // The concrete case where a duplicate raises it: A far from B, C, D which
  // are identical.
  std::vector<std::string> list = {"Is the zipper waterproof?", "Does the battery last?", "Does the battery last?",
                                   "Does the battery last?"};
  const double before = diversity(list).lexical_diversity;
  list.push_back(list[0]);
  EXPECT_GT(diversity(list).lexical_diversity, before);
}

TEST(Diversity, ExampleListsReproducible) {
  for (const auto& row : testkit::example_rows()) {
    auto a = diversity(row.questions);
    auto b = diversity(row.questions);
    auto o = oracle(row.questions);
    EXPECT_NEAR(a.overall, b.overall, 1e-9);
    EXPECT_NEAR(a.overall, o.overall, 1e-9);
  }
}

TEST(Report, EmptyDiversityOmitsSection) {
  auto doc = report(aggregate(testkit::table1_fixture(10, 1)), {});
  EXPECT_FALSE(doc.machine.contains("diversity"));
  EXPECT_EQ(doc.text.find("Diversity"), std::string::npos);
}

TEST(Report, DiversityTargetFlag) {
  DiversityReport d;
  d.overall = 0.78;
  d.length_diversity = d.lexical_diversity = d.aspect_diversity = 0.78;
  auto doc = report(QualityTable{}, {d});
  EXPECT_NE(doc.text.find("mean 0.78"), std::string::npos);
  EXPECT_NE(doc.text.find("target 0.75 met"), std::string::npos);
  EXPECT_TRUE(doc.machine["diversity"]["target_met"].get<bool>());
  d.overall = 0.70;
  EXPECT_FALSE(report(QualityTable{}, {d}).machine["diversity"]["target_met"].get<bool>());
}

TEST(Report, Golden) {
  auto table = aggregate(testkit::table1_fixture(100, 5));
  std::vector<DiversityReport> lists;
  for (const auto& row : testkit::example_rows()) lists.push_back(diversity(row.questions));
  auto doc = report(table, lists, {{"stopwords", qparser::stopwords_digest()}});
  const auto path = testkit::golden_path("quality_report.txt");
  if (std::getenv("QSUGGEST_UPDATE_GOLDEN")) std::ofstream(path, std::ios::binary) << doc.text;
  EXPECT_EQ(doc.text, testkit::read(path));
  EXPECT_EQ(doc.machine["cells"].size(), 15u);
}
