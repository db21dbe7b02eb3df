#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qaworld/dataset.hpp"
#include "qaworld/lexicon.hpp"
#include "qaworld/rng.hpp"
#include "qaworld/world.hpp"

namespace qaworld {

inline constexpr int kTaskCount = 20;

std::string_view task_name(int task);  // e.g. "single-supporting-fact"
void check_task_id(int task);

struct GenerationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct TaskConfig {
    int n_actors = 4;
    int n_locations = 6;
    int n_objects = 3;
    int min_statements = 2;
    int max_statements = 10;
    int questions_per_story = 5;  // upper bound
    int min_gap = 2;              // statements between questions
    int max_gap = 5;
    // Probability that a statement comes from an actor no question asks about.
    double distractor_rate = 0.3;
    std::vector<Verb> allowed_verbs;
    std::uint64_t rng_seed = 0;

    static TaskConfig defaults(int task);
    void validate(int task) const;  // throws ConfigError
};

struct StatementLine {
    std::string text;
    std::vector<Event> events;
};

struct QuestionLine {
    std::string text;
    Query query;
    Answer answer;
    std::vector<int> supporting;  // line numbers of earlier statements
};

struct GroundedLine {
    int number = 1;
    std::variant<StatementLine, QuestionLine> content;

    bool is_question() const { return std::holds_alternative<QuestionLine>(content); }
};

struct GroundedStory {
    int task = 0;
    std::vector<GroundedLine> lines;
    WorldState world;  // final state

    std::size_t question_count() const;
    Story surface() const;
};

GroundedStory generate_story(int task, const TaskConfig& cfg, Rng& rng,
                             const Lexicon& lex = Lexicon::english());

// Stories are concatenated until exactly n_questions questions exist; the
// last story is cut after its final required question.
Dataset generate_dataset(int task, std::size_t n_questions, const TaskConfig& cfg, Rng& rng,
                         const Lexicon& lex = Lexicon::english());

std::vector<GroundedStory> generate_stories(int task, std::size_t n_questions, const TaskConfig& cfg,
                                            Rng& rng, const Lexicon& lex = Lexicon::english());

// Tasks whose supporting facts are minimal (every fact is needed).
bool minimal_support_task(int task);

struct Diagnostic {
    int line = 0;
    std::string message;
};

// Recomputes every answer from the full prefix and from the supporting
// statements alone; for minimal tasks also checks each fact is needed.
std::vector<Diagnostic> verify_supporting_facts(const GroundedStory& story);

} // namespace qaworld
