#include "vra/parsing/parsing.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <vector>

namespace vra::parsing {

namespace {

enum class Section { none, answer, critique, question, references };

bool is_space(char c)
{
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

bool is_digit(char c)
{
    return c >= '0' && c <= '9';
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && is_space(s.front()))
        s.remove_prefix(1);
    while (!s.empty() && is_space(s.back()))
        s.remove_suffix(1);
    return s;
}

std::string_view trim_chars(std::string_view s, std::string_view chars)
{
    while (!s.empty() && (is_space(s.front()) || chars.find(s.front()) != std::string_view::npos))
        s.remove_prefix(1);
    while (!s.empty() && (is_space(s.back()) || chars.find(s.back()) != std::string_view::npos))
        s.remove_suffix(1);
    return s;
}

std::string lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return char(std::tolower(c)); });
    return out;
}

bool has_alnum(std::string_view s)
{
    return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isalnum(c); });
}

int word_count_of(std::string_view s)
{
    int words = 0;
    bool in_word = false;
    for (char c : s)
    {
        if (is_space(c))
            in_word = false;
        else if (!in_word)
        {
            in_word = true;
            ++words;
        }
    }
    return words;
}

struct Line {
    std::string_view text;
    std::size_t offset;
};

std::vector<Line> split_lines(std::string_view text)
{
    std::vector<Line> lines;
    std::size_t start = 0;
    while (start <= text.size())
    {
        auto const nl = std::min(text.find('\n', start), text.size());
        lines.push_back({text.substr(start, nl - start), start});
        start = nl + 1;
    }
    return lines;
}

Section classify_label(std::string_view label)
{
    label = trim_chars(label, "*_#:");
    if (label.empty() || word_count_of(label) > 5)
        return Section::none;
    auto const l = lower(label);
    if (l.find("reference") != std::string::npos)
        return Section::references;
    if (l.find("critique") != std::string::npos || l.find("reflect") != std::string::npos)
        return Section::critique;
    if (l.find("question") != std::string::npos)
        return Section::question;
    if (l.find("answer") != std::string::npos)
        return Section::answer;
    return Section::none;
}

struct Header {
    Section section = Section::none;
    bool markdown = false;
    std::string_view rest;  // content following the label on the same line
};

// "## Answer", "**Answer:** text", "**Answer**: text" or "Answer: text".
Header parse_header(std::string_view line)
{
    auto s = trim(line);
    Header h;
    if (s.starts_with('#'))
    {
        s = trim(s.substr(std::min(s.find_first_not_of('#'), s.size())));
        h.markdown = true;
    }

    std::string_view label;
    if (s.starts_with("**"))
    {
        auto const close = s.find("**", 2);
        if (close == std::string_view::npos)
            return {};
        label = s.substr(2, close - 2);
        h.rest = s.substr(close + 2);
        h.markdown = true;
        if (h.rest.starts_with(':'))
            h.rest.remove_prefix(1);
        else if (!label.ends_with(':') && !trim(h.rest).empty())
            return {};  // bold lead-in inside a sentence
    }
    else
    {
        auto const colon = s.find(':');
        if (colon != std::string_view::npos && colon <= 48)
        {
            label = s.substr(0, colon);
            h.rest = s.substr(colon + 1);
        }
        else if (h.markdown)
        {
            label = s;
        }
        else
        {
            return {};
        }
    }

    h.section = classify_label(label);
    h.rest = trim(h.rest);
    return h.section == Section::none ? Header{} : h;
}

bool is_references_heading(std::string_view line)
{
    return lower(trim_chars(line, "#*_:")) == "references";
}

std::optional<Reference> parse_reference_line(std::string_view line)
{
    auto s = trim(line);
    if (s.starts_with('-') || s.starts_with('*'))
        s = trim(s.substr(1));
    else if (s.starts_with("\xE2\x80\xA2"))
        s = trim(s.substr(3));
    if (!s.starts_with('['))
        return std::nullopt;
    std::size_t pos = 1;
    int index = 0;
    while (pos < s.size() && is_digit(s[pos]) && pos < 8)
        index = index * 10 + (s[pos++] - '0');
    if (pos == 1 || pos >= s.size() || s[pos] != ']')
        return std::nullopt;
    auto text = trim(s.substr(pos + 1));
    if (text.starts_with(':'))
        text = trim(text.substr(1));
    return Reference{index, std::string(text)};
}

struct ReferenceSplit {
    std::string body;
    std::vector<Reference> references;
    bool heading_found = false;
};

// Cuts the last "References" section out of the text. The section runs
// until the next answer/critique/question header or the end.
ReferenceSplit split_references(std::string_view text)
{
    auto const lines = split_lines(text);
    std::optional<std::size_t> heading;
    for (std::size_t i = lines.size(); i-- > 0;)
        if (is_references_heading(lines[i].text))
        {
            heading = i;
            break;
        }

    ReferenceSplit out;
    if (!heading)
    {
        out.body = std::string(text);
        return out;
    }
    out.heading_found = true;

    auto end = *heading + 1;
    for (; end < lines.size(); ++end)
    {
        if (auto ref = parse_reference_line(lines[end].text))
        {
            out.references.push_back(std::move(*ref));
            continue;
        }
        auto const h = parse_header(lines[end].text);
        if (h.section != Section::none && h.section != Section::references)
            break;
    }

    out.body = std::string(text.substr(0, lines[*heading].offset));
    if (end < lines.size())
        out.body += std::string(text.substr(lines[end].offset));
    return out;
}

// "Answer:", "**Question:**" and similar labels at the start of a section.
std::string strip_label(std::string_view s)
{
    s = trim(s);
    auto const nl = s.find('\n');
    auto const h = parse_header(s.substr(0, nl));
    if (h.section == Section::none)
        return std::string(s);
    if (nl == std::string_view::npos)
        return std::string(h.rest);
    return std::string(trim(std::string(h.rest) + std::string(s.substr(nl))));
}

std::string clean_question(std::string_view s)
{
    s = trim(s);
    for (bool changed = true; changed;)
    {
        changed = false;
        for (std::string_view bullet : {"- ", "* ", "> ", "\xE2\x80\xA2 "})
            if (s.starts_with(bullet))
            {
                s = trim(s.substr(bullet.size()));
                changed = true;
            }
    }
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i)
    {
        if (s.substr(i, 2) == "**")
        {
            ++i;
            continue;
        }
        out += s[i];
    }

    std::string_view v = trim(out);
    if (auto const colon = v.find(':'); colon != std::string_view::npos && colon <= 48)
        if (classify_label(v.substr(0, colon)) == Section::question)
            v = trim(v.substr(colon + 1));
    std::string cleaned(trim_chars(v, "\"'`"));
    if (!cleaned.empty() && cleaned.back() != '?')
    {
        auto const q = cleaned.find_last_of('?');
        if (q != std::string::npos)
            cleaned.resize(q + 1);
    }
    return cleaned;
}

struct QuestionSpan {
    std::string question;
    std::size_t begin;  // raw sentence bounds in the scanned text
    std::size_t end;
};

std::optional<QuestionSpan> last_question_span(std::string_view text)
{
    std::optional<QuestionSpan> last;
    std::size_t start = 0;
    std::size_t i = 0;
    while (i < text.size())
    {
        auto const c = text[i];
        if (c != '?' && c != '!' && c != '.' && c != '\n')
        {
            ++i;
            continue;
        }

        auto end = i + 1;
        bool question = c == '?';
        if (c == '?' || c == '!')
            while (end < text.size() && (text[end] == '?' || text[end] == '!'))
                question |= text[end++] == '?';

        if (question)
        {
            auto candidate = clean_question(text.substr(start, end - start));
            if (has_alnum(candidate))
                last = QuestionSpan{std::move(candidate), start, end};
        }
        start = end;
        i = end;
    }
    return last;
}

constexpr std::array interrogatives{
    "how",  "what",  "which", "where", "when", "who",    "whom", "whose", "why",   "is",
    "are",  "was",   "were",  "do",    "does", "did",    "can",  "could", "will",  "would",
    "should", "has", "have",  "had",   "may",  "might",  "shall", "am",   "isn't", "aren't",
};

// First sentence of a section when it reads like a question but lacks "?".
std::optional<std::string> normalize_question(std::string_view section)
{
    auto s = trim(section);
    auto const end = s.find_first_of(".!\n");
    auto sentence = clean_question(s.substr(0, end));
    auto const space = sentence.find(' ');
    auto const first = lower(std::string_view(sentence).substr(0, space));
    if (std::find(interrogatives.begin(), interrogatives.end(), first) == interrogatives.end() || !has_alnum(sentence))
        return std::nullopt;
    return sentence + "?";
}

std::optional<std::string> question_from_section(std::string_view section)
{
    if (auto q = find_question(section))
        return q;
    return normalize_question(strip_label(section));
}

struct Sections {
    std::string preamble;
    std::optional<std::string> answer;
    std::optional<std::string> critique;
    std::optional<std::string> question;
};

struct Marker {
    std::size_t pos;
    std::size_t content;
};

std::optional<Marker> find_marker(std::string_view text, char digit, std::size_t from, bool line_start)
{
    for (auto p = text.find(digit, from); p != std::string_view::npos; p = text.find(digit, p + 1))
    {
        if (p + 1 >= text.size() || (text[p + 1] != '.' && text[p + 1] != ')'))
            continue;
        if (p + 2 < text.size() && !is_space(text[p + 2]))
            continue;
        if (line_start)
        {
            auto q = p;
            while (q > 0 && (text[q - 1] == ' ' || text[q - 1] == '\t'))
                --q;
            if (q != 0 && text[q - 1] != '\n')
                continue;
        }
        else if (p != 0 && !is_space(text[p - 1]))
        {
            continue;
        }
        return Marker{p, std::min(p + 2, text.size())};
    }
    return std::nullopt;
}

std::optional<Sections> numbered_sections(std::string_view text, bool line_start)
{
    auto const m1 = find_marker(text, '1', 0, line_start);
    if (!m1)
        return std::nullopt;
    auto const m2 = find_marker(text, '2', m1->content, line_start);
    if (!m2)
        return std::nullopt;
    auto const m3 = find_marker(text, '3', m2->content, line_start);
    if (!m3)
        return std::nullopt;

    Sections s;
    s.preamble = std::string(trim(text.substr(0, m1->pos)));
    s.answer = std::string(text.substr(m1->content, m2->pos - m1->content));
    s.critique = std::string(text.substr(m2->content, m3->pos - m2->content));
    s.question = std::string(text.substr(m3->content));
    return s;
}

std::optional<Sections> header_sections(std::string_view text, bool markdown_only)
{
    auto const lines = split_lines(text);
    struct Found {
        Section section;
        std::size_t line;
        std::string_view rest;
    };
    std::vector<Found> found;
    for (std::size_t i = 0; i < lines.size(); ++i)
    {
        auto const h = parse_header(lines[i].text);
        if (h.section == Section::none || h.section == Section::references || (markdown_only && !h.markdown))
            continue;
        found.push_back({h.section, i, h.rest});
    }

    auto distinct = [&] {
        std::vector<Section> kinds;
        for (auto const& f : found)
            if (std::find(kinds.begin(), kinds.end(), f.section) == kinds.end())
                kinds.push_back(f.section);
        return kinds.size();
    };
    if (found.empty())
        return std::nullopt;

    Sections s;
    s.preamble = std::string(trim(text.substr(0, lines[found.front().line].offset)));
    // A lone header only counts when there is text before it to act as the answer.
    if (distinct() < 2 && (s.preamble.empty() || found.front().section == Section::answer))
        return std::nullopt;
    for (std::size_t k = 0; k < found.size(); ++k)
    {
        auto const next = k + 1 < found.size() ? lines[found[k + 1].line].offset : text.size();
        auto const body_start = lines[found[k].line].offset + lines[found[k].line].text.size();
        std::string content(found[k].rest);
        if (body_start < next)
        {
            content += '\n';
            content += std::string(text.substr(body_start, next - body_start));
        }
        switch (found[k].section)
        {
            case Section::answer:
                if (!s.answer)
                    s.answer = std::move(content);
                break;
            case Section::critique:
                if (!s.critique)
                    s.critique = std::move(content);
                break;
            case Section::question: s.question = std::move(content); break;
            default: break;
        }
    }
    return s;
}

std::optional<Sections> detect_sections(std::string_view text)
{
    if (auto s = numbered_sections(text, true))
        return s;
    if (auto s = numbered_sections(text, false))
        return s;
    if (auto s = header_sections(text, true))
        return s;
    return header_sections(text, false);
}

std::string first_paragraph(std::string_view text)
{
    text = trim(text);
    auto const lines = split_lines(text);
    for (auto const& line : lines)
        if (trim(line.text).empty())
            return std::string(trim(text.substr(0, line.offset)));
    return std::string(text);
}

struct Parsed {
    DraftTriple triple;
    bool structured = false;
};

Parsed parse_body(std::string_view body, bool first_paragraph_answer)
{
    Parsed out;
    auto& t = out.triple;
    std::optional<std::string> question;

    if (auto const sections = detect_sections(body))
    {
        out.structured = true;
        t.answer = std::string(strip_label(sections->answer.value_or(sections->preamble)));
        t.critique = std::string(strip_label(sections->critique.value_or("")));
        t.critique_missing = t.critique.empty();
        if (sections->question)
            question = question_from_section(*sections->question);
        if (!question)
            question = find_question(body);
    }
    else
    {
        auto const span = last_question_span(body);
        if (span)
            question = span->question;
        if (first_paragraph_answer)
            t.answer = first_paragraph(body);
        else if (span && trim(body.substr(span->end)).empty())
            t.answer = std::string(trim(body.substr(0, span->begin)));
        else
            t.answer = std::string(trim(body));
        t.critique_missing = true;
    }

    t.follow_up_question = question.value_or("");
    t.question_missing = !question;
    t.word_count = count_words(t.answer);
    t.word_limit_ok = t.word_count <= 50;
    return out;
}

}  // namespace

std::string_view to_string(Verdict v)
{
    return v == Verdict::match ? "match" : "no_match";
}

std::optional<std::string> find_question(std::string_view text)
{
    if (auto span = last_question_span(text))
        return std::move(span->question);
    return std::nullopt;
}

std::string extract_question(std::string_view text)
{
    if (auto q = find_question(text))
        return std::move(*q);
    throw NoQuestionFound("no question found in response");
}

DraftTriple parse_draft(std::string_view text)
{
    auto parsed = parse_body(text, true);
    if (parsed.triple.question_missing)
        throw NoQuestionFound("draft holds no follow-up question");
    return std::move(parsed.triple);
}

DraftTriple parse_revision(std::string_view text)
{
    auto split = split_references(text);
    auto triple = parse_body(split.body, false).triple;

    triple.references = std::move(split.references);
    triple.references_missing = triple.references.empty();
    for (std::size_t i = 0; i < triple.references.size(); ++i)
        if (triple.references[i].index != int(i) + 1)
            triple.references_contiguous = false;
    return triple;
}

Verdict parse_judge_verdict(std::string_view text)
{
    for (std::size_t i = 0; i < text.size(); ++i)
    {
        if (text[i] != '0' && text[i] != '1')
            continue;
        if (i > 0 && is_digit(text[i - 1]))
            continue;
        if (i + 1 < text.size() && is_digit(text[i + 1]))
            continue;
        return text[i] == '1' ? Verdict::match : Verdict::no_match;
    }
    throw UnparseableVerdict(fmt::format("no standalone 0 or 1 in judge reply '{}'", text.substr(0, 80)));
}

int count_words(std::string_view text)
{
    return word_count_of(split_references(text).body);
}

std::string to_canonical(const DraftTriple& triple)
{
    auto out = fmt::format("1. {}\n2. {}\n3. {}", triple.answer, triple.critique, triple.follow_up_question);
    if (!triple.references.empty())
    {
        out += "\n\nReferences:";
        for (auto const& ref : triple.references)
            out += fmt::format("\n- [{}] {}", ref.index, ref.text);
    }
    return out;
}

std::string strip_reasoning(std::string_view text)
{
    constexpr std::string_view open = "<think>";
    constexpr std::string_view close = "</think>";

    std::string out(text);
    auto const first_close = out.find(close);
    auto const first_open = out.find(open);
    if (first_close != std::string::npos && (first_open == std::string::npos || first_close < first_open))
        out.erase(0, first_close + close.size());

    for (auto o = out.find(open); o != std::string::npos; o = out.find(open, o))
    {
        auto const c = out.find(close, o);
        out.erase(o, c == std::string::npos ? std::string::npos : c + close.size() - o);
    }
    return std::string(trim(out));
}

}  // namespace vra::parsing
