#include <gtest/gtest.h>

#include <fstream>
#include <map>

#include <json.hpp>

#include "generators.hpp"
#include "trace_gauge/trace_parser.hpp"

using namespace trace_gauge;

namespace {

const FormatProfile& in_text() {
  static const auto p = builtin_profile("in-text-think");
  return p;
}

const FormatProfile& prefixed() {
  static const auto p = builtin_profile("prefixed-think");
  return p;
}

}  // namespace

TEST(ParseResponse, ValidTrace) {
  const auto r = parse_response("<think>2 + 2 = 4</think>4", in_text());
  EXPECT_EQ(r.status, TraceStatus::Valid);
  EXPECT_EQ(r.reasoning, "2 + 2 = 4");
  EXPECT_EQ(r.answer, "4");
  EXPECT_TRUE(r.has_valid_reasoning());
  EXPECT_EQ(r.raw_length, 25U);
}

TEST(ParseResponse, AdjacentDelimitersAreEmpty) {
  const auto r = parse_response("<think></think>The answer is 4", in_text());
  EXPECT_EQ(r.status, TraceStatus::Empty);
  EXPECT_EQ(r.reasoning, "");
  EXPECT_EQ(r.answer, "The answer is 4");
}

TEST(ParseResponse, WhitespaceOnlyBodyIsEmpty) {
  EXPECT_EQ(parse_response("<think>\n \n</think>x", in_text()).status, TraceStatus::Empty);
}

TEST(ParseResponse, NoDelimitersIsMissing) {
  const auto r = parse_response("The answer is 4", in_text());
  EXPECT_EQ(r.status, TraceStatus::Missing);
  EXPECT_FALSE(r.reasoning.has_value());
  EXPECT_EQ(r.answer, "The answer is 4");
}

TEST(ParseResponse, UnclosedIsTruncated) {
  const auto r = parse_response("<think>Let me consider", in_text());
  EXPECT_EQ(r.status, TraceStatus::Truncated);
  EXPECT_FALSE(r.answer.has_value());
  EXPECT_EQ(r.reasoning, "Let me consider");
}

TEST(ParseResponse, PrefixedProfileImpliesOpen) {
  const auto r = parse_response("steps here</think>42", prefixed());
  EXPECT_EQ(r.status, TraceStatus::Valid);
  EXPECT_EQ(r.reasoning, "steps here");
  EXPECT_EQ(r.answer, "42");
  EXPECT_EQ(parse_response("still going", prefixed()).status, TraceStatus::Truncated);
}

TEST(ParseResponse, StrayCloseWithoutOpenIsMissing) {
  const auto r = parse_response("no open</think>42", in_text());
  EXPECT_EQ(r.status, TraceStatus::Missing);
  EXPECT_EQ(r.answer, "no open</think>42");
}

TEST(ParseResponse, TolerantProfileAcceptsStrayClose) {
  auto p = in_text();
  p.tolerate_unopened_close = true;
  const auto r = parse_response("steps</think>42", p);
  EXPECT_EQ(r.status, TraceStatus::Valid);
  EXPECT_EQ(r.reasoning, "steps");
}

TEST(ParseResponse, OnlyFirstBlockDelimits) {
  const auto r = parse_response("<think>a</think>b<think>c</think>d", in_text());
  EXPECT_EQ(r.reasoning, "a");
  EXPECT_EQ(r.answer, "b<think>c</think>d");
}

TEST(ParseResponse, EmptyTextIsMissing) {
  const auto r = parse_response("", in_text());
  EXPECT_EQ(r.status, TraceStatus::Missing);
  EXPECT_EQ(r.answer, "");
}

TEST(ParseResponse, RawLengthCountsCodePoints) {
  EXPECT_EQ(parse_response("\xC3\xA9\xE2\x88\x92", in_text()).raw_length, 2U);
}

TEST(ParseResponse, FixtureLabels) {
  std::ifstream in(std::string(TG_FIXTURE_DIR) + "/parser_labels.jsonl");
  ASSERT_TRUE(in);
  std::string line;
  std::map<std::string, int> per_status;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    const auto doc = nlohmann::json::parse(line);
    const auto p = builtin_profile(doc.at("profile").get<std::string>());
    const auto r = parse_response(doc.at("text").get<std::string>(), p);
    EXPECT_EQ(to_string(r.status), doc.at("status").get<std::string>()) << doc.at("id");
    ++per_status[doc.at("status").get<std::string>()];
    ++rows;
  }
  EXPECT_GE(rows, 100U);
  EXPECT_EQ(per_status.size(), 4U);
}

TEST(ParseBatch, EmptyAndSingleton) {
  EXPECT_TRUE(parse_batch({}, in_text()).empty());
  const auto one = parse_batch({"<think>x</think>y"}, in_text());
  ASSERT_EQ(one.size(), 1U);
  EXPECT_EQ(one[0], parse_response("<think>x</think>y", in_text()));
}

TEST(ParseBatch, ParallelMatchesElementwise) {
  tg_test::Rng rng(3);
  std::vector<std::string> texts;
  for (int i = 0; i < 1000; ++i) texts.push_back(tg_test::random_generation(rng, in_text()));
  const auto serial = parse_batch(texts, in_text(), 1);
  const auto parallel = parse_batch(texts, in_text(), 4);
  ASSERT_EQ(serial.size(), texts.size());
  EXPECT_EQ(serial, parallel);
  for (std::size_t i = 0; i < texts.size(); ++i) EXPECT_EQ(serial[i], parse_response(texts[i], in_text()));
}

TEST(ParseProperty, ExactlyOneStatusAndShapeInvariants) {
  tg_test::Rng rng(5);
  for (const auto& name : builtin_profile_names()) {
    const auto p = builtin_profile(name);
    for (int i = 0; i < 2000; ++i) {
      const auto text = tg_test::random_generation(rng, p);
      const auto r = parse_response(text, p);
      const int flags = r.has_valid_reasoning() + r.has_empty_reasoning() + r.has_missing_reasoning() +
                        r.has_truncated_reasoning();
      ASSERT_EQ(flags, 1);
      switch (r.status) {
        case TraceStatus::Valid: EXPECT_TRUE(r.reasoning && r.answer); break;
        case TraceStatus::Empty: EXPECT_TRUE(r.reasoning && r.reasoning->empty() && r.answer); break;
        case TraceStatus::Missing: EXPECT_TRUE(!r.reasoning && r.answer == text); break;
        case TraceStatus::Truncated: EXPECT_TRUE(r.reasoning && !r.answer); break;
      }
    }
  }
}

TEST(ParseProperty, CutInsideBodyIsTruncated) {
  tg_test::Rng rng(17);
  for (const auto& name : builtin_profile_names()) {
    const auto p = builtin_profile(name);
    const std::string open = p.implicit_open ? "" : p.think_open;
    for (int i = 0; i < 300; ++i) {
      const std::string body = tg_test::random_trimmed_text(rng, 1, 40, {p.think_open, p.think_close});
      const std::string tail = tg_test::random_text(rng, 0, 20, {p.think_open, p.think_close});
      const std::string text = open + body + p.think_close + tail;
      ASSERT_EQ(parse_response(text, p).status, TraceStatus::Valid);
      for (std::size_t cut : tg_test::code_point_boundaries(text)) {
        if (cut <= open.size() || cut >= open.size() + body.size()) continue;
        ASSERT_EQ(parse_response(text.substr(0, cut), p).status, TraceStatus::Truncated) << name << " " << cut;
      }
    }
  }
}

TEST(TeacherTrace, ExtractsOkayPrefixedBody) {
  EXPECT_EQ(extract_teacher_trace("<reasoning_steps>\nOkay, balance the equation first.\n</reasoning_steps>"),
            "Okay, balance the equation first.");
}

TEST(TeacherTrace, RejectsMissingTagsAndWrongPrefix) {
  EXPECT_FALSE(extract_teacher_trace("Okay, no tags here"));
  EXPECT_FALSE(extract_teacher_trace("<reasoning_steps>First, ...</reasoning_steps>"));
  EXPECT_FALSE(extract_teacher_trace("<reasoning_steps>Okay, never closed"));
}

TEST(StatusNames, RoundTrip) {
  for (auto s : {TraceStatus::Valid, TraceStatus::Empty, TraceStatus::Missing, TraceStatus::Truncated}) {
    EXPECT_EQ(status_from_string(to_string(s)), s);
  }
  EXPECT_FALSE(status_from_string("bogus"));
}
