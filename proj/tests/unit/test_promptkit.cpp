#include <gtest/gtest.h>

#include "qsuggest/errors.hpp"
#include "qsuggest/promptkit.hpp"
#include "testkit.hpp"

using namespace qsuggest;
using promptkit::Dimension;

TEST(Promptkit, GoldenTemplateBytes) {
  const auto golden = testkit::read(testkit::golden_path("generation_prompt.txt"));
  EXPECT_EQ(promptkit::generation_template().body, golden);
}

TEST(Promptkit, RenderedPromptMatchesGoldenWithDataRemoved) {
  promptkit::GenConfig config;
  config.k_questions = 1;
  auto prompt = promptkit::render_generation_prompt(testkit::doorbell_row().context, config);
  EXPECT_EQ(promptkit::strip_data_block(prompt), testkit::read(testkit::golden_path("generation_prompt.txt")));
  EXPECT_EQ(promptkit::extract_data_block(prompt), promptkit::render_data_block(testkit::doorbell_row().context));
}

TEST(Promptkit, DuplicatedInstructionKept) {
  const auto& body = promptkit::generation_template().body;
  const std::string needle = "the top product question";
  std::size_t count = 0;
  for (auto p = body.find(needle); p != std::string::npos; p = body.find(needle, p + 1)) ++count;
  EXPECT_GE(count, 2u);
}

TEST(Promptkit, KGreaterThanOnePluralizes) {
  promptkit::GenConfig config;
  config.k_questions = 3;
  auto prompt = promptkit::render_generation_prompt(testkit::doorbell_row().context, config);
  EXPECT_NE(prompt.find("the top 3 product questions"), std::string::npos);
  EXPECT_EQ(prompt.find("the top product question"), std::string::npos);
}

TEST(Promptkit, DataBlockLayout) {
  auto block = promptkit::render_data_block(testkit::doorbell_row().context);
  EXPECT_EQ(block.rfind("Title: Smart Doorbell\nSource: catalog\nText: ", 0), 0u);
}

TEST(Promptkit, FewShotInsertedBeforeFinalProductInfo) {
  promptkit::GenConfig config;
  config.k_questions = 1;
  config.few_shot = {{"Example text about a kettle", "Does it boil fast? | specific product aspect | 7"}};
  auto prompt = promptkit::render_generation_prompt(testkit::doorbell_row().context, config);
  auto example = prompt.find("Product Info: Example text about a kettle.\nAssistant: Does it boil fast?");
  ASSERT_NE(example, std::string::npos);
  EXPECT_LT(example, prompt.rfind("Product Info: Title: Smart Doorbell"));
  // The real data block is still recoverable.
  EXPECT_EQ(promptkit::extract_data_block(prompt), promptkit::render_data_block(testkit::doorbell_row().context));
}

TEST(Promptkit, Preconditions) {
  auto ctx = testkit::doorbell_row().context;
  promptkit::GenConfig config;
  ctx.text.clear();
  EXPECT_THROW(promptkit::render_generation_prompt(ctx, config), ContractViolation);
  ctx.text = std::string(4000, 'a');
  config.max_tokens = 512;
  EXPECT_THROW(promptkit::render_generation_prompt(ctx, config), OversizeError);
  config.k_questions = 0;
  EXPECT_THROW(config.validate(), ContractViolation);
}

TEST(Promptkit, TemplateValidation) {
  promptkit::PromptTemplate t{"x", "no placeholder", promptkit::RoleFrame::plain};
  EXPECT_THROW(t.validate(), ContractViolation);
  t.body = "{data} and {data}";
  EXPECT_THROW(t.validate(), ContractViolation);
  t.body = "Describe: {data}";
  EXPECT_NO_THROW(t.validate());
}

TEST(Promptkit, ExtractWithoutDelimitersIsFormatError) {
  EXPECT_THROW(promptkit::extract_data_block("nothing here"), FormatError);
}

TEST(Promptkit, JudgePromptQuotesQuestionAndContext) {
  const auto& row = testkit::doorbell_row();
  for (auto d : promptkit::kAllDimensions) {
    auto p = promptkit::render_judge_prompt(row.questions[0], row.context, d);
    EXPECT_NE(p.find(row.context.text), std::string::npos);
    EXPECT_NE(p.find(row.questions[0]), std::string::npos);
    EXPECT_NE(p.find(promptkit::dimension_definition(d)), std::string::npos);
    EXPECT_EQ(p.find("PARTIAL") != std::string::npos, d == Dimension::answerability);
  }
}

TEST(Promptkit, DimensionNames) {
  for (auto d : promptkit::kAllDimensions) EXPECT_EQ(promptkit::dimension_from_string(promptkit::to_string(d)), d);
  EXPECT_THROW(promptkit::dimension_from_string("vibes"), FormatError);
}
