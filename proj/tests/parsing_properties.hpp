#pragma once

// Randomized property checks for the parsing module. Shared by the unit
// tests and the acceptance suite.

#include "vra/parsing/parsing.hpp"

#include <fmt/format.h>

#include <array>
#include <random>
#include <string>
#include <vector>

namespace vra::test {

struct PropertyOutcome {
    int cases = 0;
    int failures = 0;
    std::string first_failure;

    void fail(std::string why)
    {
        if (failures++ == 0)
            first_failure = std::move(why);
    }
};

class TextGen {
public:
    explicit TextGen(std::uint64_t seed) : rng_(seed) {}

    std::size_t below(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
    bool coin() { return below(2) == 0; }

    std::string word()
    {
        static constexpr std::array vocab{
            "runway", "plane",  "building", "two",  "large",   "white", "parked", "near",   "the",
            "a",      "image",  "shows",    "road", "visible", "north", "left",   "roof",   "tank",
            "green",  "field",  "harbor",   "ship", "small",   "three", "car",    "bridge", "river",
            "tennis", "court",  "of",       "in",   "is",      "there", "many",   "it",     "at",
        };
        return vocab[below(vocab.size())];
    }

    std::string words(std::size_t min, std::size_t max)
    {
        auto const n = min + below(max - min + 1);
        std::string out;
        for (std::size_t i = 0; i < n; ++i)
        {
            if (i)
                out += ' ';
            out += word();
        }
        return out;
    }

    // One sentence ending in "?" with no other terminator inside.
    std::string question()
    {
        static constexpr std::array starters{"How", "What", "Is", "Which", "Are", "Where", "Does", "Can"};
        return std::string(starters[below(starters.size())]) + " " + words(1, 8) + "?";
    }

    // Zero or more complete sentences, each closed by a terminator.
    std::string prefix()
    {
        static constexpr std::array terminators{". ", "! ", "? ", "\n", ".\n", "?\n", "... "};
        std::string out;
        auto const n = below(5);
        for (std::size_t i = 0; i < n; ++i)
            out += words(1, 10) + terminators[below(terminators.size())];
        if (!out.empty() && coin())
            out += "\"- [1] quoted line, is it?\"\n";
        return out;
    }

    // Fields restricted to what the canonical layout can carry: single
    // lines, no list markers, no section labels.
    DraftTriple triple()
    {
        DraftTriple t;
        t.answer = words(0, 70);
        if (coin() && !t.answer.empty())
            t.answer += " [" + std::to_string(1 + below(3)) + "].";
        t.critique = coin() ? words(1, 20) + (coin() ? "?" : ".") : "";
        t.follow_up_question = question();
        auto const refs = below(4);
        for (std::size_t i = 0; i < refs; ++i)
            t.references.push_back({int(i) + 1, words(1, 8)});
        t.word_count = parsing::count_words(t.answer);
        return t;
    }

    // Arbitrary text biased towards the fragments the parsers look for.
    std::string noise()
    {
        static constexpr std::array fragments{
            "References",  "References:", "**References**", "## References", "- [",  "]",        "[1]",
            "[2] ",        "[x]",         "[99999999999]",  "1. ",           "2. ",  "3) ",      "**",
            "Answer:",     "Critique:",   "Question:",      "#",             "\n",   "\n\n",     "?",
            "!",           ".",           " ",              "\t",            "0",    "1",        "\xC3\xA9",
            "\xE2\x80\xA2 ", "<think>",   "</think>",       ":",             "- ",   "How many?",
        };
        std::string out;
        auto const n = below(40);
        for (std::size_t i = 0; i < n; ++i)
        {
            switch (below(4))
            {
                case 0: out += word(); break;
                case 1: out += char(below(256)); break;
                default: out += fragments[below(fragments.size())]; break;
            }
        }
        return out;
    }

    // Text without any standalone "0" or "1".
    std::string verdict_free()
    {
        static constexpr std::array tokens{"yes", "no",  "match", "10", "01", "2021", "42", "7", "x1y0"};
        std::string out;
        auto const n = below(8);
        for (std::size_t i = 0; i < n; ++i)
        {
            std::string tok = coin() ? word() : tokens[below(tokens.size())];
            // x1y0 is standalone by the digit-adjacency rule; keep it out of this generator.
            if (tok == "x1y0")
                tok = "xy";
            out += tok;
            out += coin() ? " " : ". ";
        }
        return out;
    }

    std::mt19937_64& rng() { return rng_; }

private:
    std::mt19937_64 rng_;
};

// Escaped, quoted rendering for failure messages.
inline std::string quoted(const std::string& s)
{
    std::string out = "\"";
    for (unsigned char c : s)
    {
        if (c == '\n')
            out += "\\n";
        else if (c == '"' || c == '\\')
            out += std::string("\\") + char(c);
        else if (c < 0x20 || c >= 0x7f)
            out += fmt::format("\\x{:02x}", c);
        else
            out += char(c);
    }
    return out + "\"";
}

inline bool same_content(const DraftTriple& a, const DraftTriple& b)
{
    return a.answer == b.answer && a.critique == b.critique && a.follow_up_question == b.follow_up_question &&
           a.references == b.references && a.word_count == b.word_count;
}

// extract_question(x + " " + q) == q for a single-sentence question q.
inline PropertyOutcome check_suffix_dominance(int cases, std::uint64_t seed)
{
    TextGen gen(seed);
    PropertyOutcome out;
    for (int i = 0; i < cases; ++i, ++out.cases)
    {
        auto const x = gen.prefix();
        auto const q = gen.question();
        auto const text = x + " " + q;
        try
        {
            auto const got = parsing::extract_question(text);
            if (got != q)
                out.fail(fmt::format("text={} expected={} got={}", quoted(text), quoted(q), quoted(got)));
        }
        catch (const std::exception& e)
        {
            out.fail(fmt::format("text={} threw {}", quoted(text), e.what()));
        }
    }
    return out;
}

// parse_revision never throws and its flags agree with its fields.
inline PropertyOutcome check_revision_totality(int cases, std::uint64_t seed)
{
    TextGen gen(seed);
    PropertyOutcome out;
    for (int i = 0; i < cases; ++i, ++out.cases)
    {
        auto const text = gen.noise();
        try
        {
            auto const t = parsing::parse_revision(text);
            if (t.word_count != parsing::count_words(t.answer))
                out.fail(fmt::format("word_count mismatch for {}", quoted(text)));
            else if (t.word_limit_ok != (t.word_count <= 50))
                out.fail(fmt::format("word_limit_ok mismatch for {}", quoted(text)));
            else if (t.references_missing != t.references.empty())
                out.fail(fmt::format("references_missing mismatch for {}", quoted(text)));
            else if (t.question_missing != t.follow_up_question.empty())
                out.fail(fmt::format("question_missing mismatch for {}", quoted(text)));
        }
        catch (const std::exception& e)
        {
            out.fail(fmt::format("parse_revision threw on {}: {}", quoted(text), e.what()));
        }
    }
    return out;
}

// to_canonical then parse_revision gives back the same content.
inline PropertyOutcome check_canonical_round_trip(int cases, std::uint64_t seed)
{
    TextGen gen(seed);
    PropertyOutcome out;
    for (int i = 0; i < cases; ++i, ++out.cases)
    {
        auto const t = gen.triple();
        auto const text = parsing::to_canonical(t);
        auto const back = parsing::parse_revision(text);
        if (!same_content(t, back))
            out.fail(fmt::format("round trip changed {}: answer={} critique={} question={} refs={}",
                                 quoted(text), quoted(back.answer), quoted(back.critique),
                                 quoted(back.follow_up_question), back.references.size()));
    }
    return out;
}

// The first standalone 0/1 decides, and "0"/"1" prefixes dominate.
inline PropertyOutcome check_first_standalone_digit(int cases, std::uint64_t seed)
{
    TextGen gen(seed);
    PropertyOutcome out;
    static constexpr std::array separators{" ", ". ", ": ", "\n", "(", "x"};
    for (int i = 0; i < cases; ++i, ++out.cases)
    {
        auto const head = gen.verdict_free();
        auto const digit = gen.coin() ? '1' : '0';
        auto const expected = digit == '1' ? parsing::Verdict::match : parsing::Verdict::no_match;
        auto tail = gen.noise();
        if (!tail.empty() && tail.front() >= '0' && tail.front() <= '9')
            tail.insert(0, " ");

        std::string const embedded = head + separators[gen.below(separators.size())] + digit + " " + tail;
        std::string const prefixed = std::string(1, digit) + tail;
        for (auto const& text : {embedded, prefixed})
        {
            try
            {
                if (parsing::parse_judge_verdict(text) != expected)
                    out.fail(fmt::format("{} should be {}", quoted(text), parsing::to_string(expected)));
            }
            catch (const std::exception& e)
            {
                out.fail(fmt::format("{} threw {}", quoted(text), e.what()));
            }
        }

        try
        {
            parsing::parse_judge_verdict(head);
            out.fail(fmt::format("{} has no standalone digit but parsed", quoted(head)));
        }
        catch (const parsing::UnparseableVerdict&)
        {
        }
    }
    return out;
}

}  // namespace vra::test
