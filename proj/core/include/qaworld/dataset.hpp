#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qaworld {

enum class LineKind : std::uint8_t { statement, question };

struct StoryLine {
    int number = 1;
    LineKind kind = LineKind::statement;
    std::string text;
    std::vector<std::string> answers;  // questions only
    std::vector<int> supporting;       // questions only, ascending
    bool operator==(const StoryLine&) const = default;
};

struct Story {
    std::vector<StoryLine> lines;
    bool operator==(const Story&) const = default;
};

enum class Split : std::uint8_t { train, test };
enum class Variant : std::uint8_t { en, shuffled };

std::string_view to_string(Split s);
std::string_view to_string(Variant v);

struct Dataset {
    int task = 0;
    Split split = Split::train;
    Variant variant = Variant::en;
    std::vector<Story> stories;

    std::size_t question_count() const;
    bool operator==(const Dataset&) const = default;
};

struct ParseError : std::runtime_error {
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line(line) {}
    std::size_t line;  // 1-based line index in the input text
};

// Statements: "N text\n". Questions: "N text\tans1,ans2\tid1 id2\n".
std::string emit_babi(const Dataset& ds);

// Strict inverse of emit_babi; anything emit_babi cannot produce is rejected.
// The returned dataset has default task, split and variant.
Dataset parse_babi(std::string_view text);

// A question together with the statements that precede it in its story.
struct QaExample {
    std::vector<std::vector<std::string>> memory;  // tokenized statements, oldest first
    std::vector<std::string> question;
    std::vector<std::string> answer;
    std::vector<int> supporting;  // indices into memory
    int task = 0;
};

// Lowercase words with sentence punctuation removed.
std::vector<std::string> tokenize(std::string_view text);

std::vector<QaExample> extract_examples(const Dataset& ds);

} // namespace qaworld
