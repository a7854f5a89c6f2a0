#pragma once

#include "vra/core/errors.hpp"
#include "vra/core/types.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace vra::parsing {

class NoQuestionFound : public Error {
public:
    using Error::Error;
};

class UnparseableVerdict : public Error {
public:
    using Error::Error;
};

enum class Verdict { match, no_match };

std::string_view to_string(Verdict v);

// The last sentence ending in "?", trimmed of whitespace, list bullets,
// bold markers and a leading "Question:"-style label. A sentence is a
// maximal span ending at "?", "!", "." or a newline.
// Throws NoQuestionFound when there is none.
std::string extract_question(std::string_view text);
std::optional<std::string> find_question(std::string_view text);

// Splits a Drafter reply into answer, critique and follow-up question.
// Section detection tries, in order: a "1./2./3." numbered list, markdown
// headers, then "Answer:/Critique:/Question:" labels. Without any of
// these the first paragraph is the answer and the last question in the
// text is the follow-up. Throws NoQuestionFound when the text holds no
// question at all.
DraftTriple parse_draft(std::string_view text);

// Like parse_draft, but also splits off the trailing "References" section
// and never throws; problems surface as flags on the result.
DraftTriple parse_revision(std::string_view text);

// The first "0" or "1" not adjacent to another digit decides.
// Throws UnparseableVerdict when neither appears.
Verdict parse_judge_verdict(std::string_view text);

// Whitespace-separated tokens, not counting any "References" section.
int count_words(std::string_view text);

// Numbered layout parse_revision reads back into an equal triple.
std::string to_canonical(const DraftTriple& triple);

// Drops "<think>...</think>" blocks emitted by reasoning models, including
// an unopened block that runs from the start of the text.
std::string strip_reasoning(std::string_view text);

}  // namespace vra::parsing
