#pragma once

// Types shared by the retrieval, dataset and evaluation layers.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "dpr/error.hpp"
#include "dpr/text.hpp"

namespace dpr {

enum class QuestionType { factoid, yesno };

inline std::string_view to_string(QuestionType t) { return t == QuestionType::factoid ? "factoid" : "yesno"; }

inline QuestionType question_type_from_string(std::string_view s) {
  if (s == "factoid") return QuestionType::factoid;
  if (s == "yesno") return QuestionType::yesno;
  throw InvalidArgument("unknown question type: " + std::string(s));
}

struct Question {
  std::string question_id;
  std::string text;
  QuestionType qtype = QuestionType::factoid;
  std::vector<std::string> answers;
  std::vector<std::string> gold_snippets;

  bool operator==(const Question&) const = default;
};

// Strings whose presence marks a passage as answering the question. The literal
// "yes"/"no" of a yes/no question would match almost anything, so those use the
// gold snippets instead.
inline const std::vector<std::string>& answer_evidence(const Question& q) {
  return q.qtype == QuestionType::yesno ? q.gold_snippets : q.answers;
}

inline bool contains_answer(std::string_view passage_text, const Question& q) {
  const auto hay = text::to_lower(passage_text);
  for (const auto& a : answer_evidence(q)) {
    if (!a.empty() && hay.find(text::to_lower(a)) != std::string::npos) return true;
  }
  return false;
}

struct Hit {
  std::string passage_id;
  double score = 0.0;
  std::size_t rank = 0;     // 1-based
  std::size_t ordinal = 0;  // row / passage ordinal in the source collection

  bool operator==(const Hit&) const = default;
};

struct RetrievalResult {
  std::vector<Hit> hits;

  std::size_t size() const noexcept { return hits.size(); }
  bool empty() const noexcept { return hits.empty(); }
  bool operator==(const RetrievalResult&) const = default;
};

}  // namespace dpr
