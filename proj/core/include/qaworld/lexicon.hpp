#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qaworld/dataset.hpp"
#include "qaworld/rng.hpp"
#include "qaworld/world.hpp"

namespace qaworld {

struct LexiconError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TemplateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Key-value resource holding surface forms, synonym sets and templates.
class Lexicon {
public:
    static Lexicon parse(std::string_view text);
    static Lexicon from_file(const std::filesystem::path& path);
    // The lexicon shipped with the library.
    static const Lexicon& english();

    const std::vector<std::string>* find(std::string_view key) const;
    // Throws TemplateError when the key is missing.
    const std::vector<std::string>& values(std::string_view key) const;
    const std::string& first(std::string_view key) const { return values(key).front(); }

    // Canonical entity name to its surface form.
    std::string surface(std::string_view canonical) const;
    std::string singular(std::string_view species) const;
    std::string pronoun(std::string_view actor) const;
    std::vector<std::string> task_forms(int task) const;

    // Every lowercase word the lexicon can emit, answers included.
    std::set<std::string> vocabulary() const;

    std::vector<std::string> ids(std::string_view prefix) const;
    const std::string& language() const { return first("lexicon.language"); }

private:
    std::map<std::string, std::vector<std::string>, std::less<>> entries_;
};

struct RenderContext {
    int task = 0;
    std::vector<EntityId> previous_subjects;
};

// Renders the events of one statement (several for conjunctions).
std::string render_statement(std::span<const Event> events, const std::vector<Entity>& entities,
                             const Lexicon& lex, RenderContext& ctx, Rng& rng);

std::string render_question(const Query& q, const std::vector<Entity>& entities, const Lexicon& lex);

struct TemplateMatch {
    std::string form;
    std::map<std::string, std::string> slots;
};

// All ways the task's templates can produce `text`.
std::vector<TemplateMatch> match_statement(std::string_view text, const Lexicon& lex, int task);

// Bijection between words and random same-length lowercase strings.
class ShuffleMap {
public:
    ShuffleMap() = default;
    // Seed 0 gives the identity.
    ShuffleMap(const std::set<std::string>& vocabulary, std::uint64_t seed);
    // Throws std::invalid_argument when two words share an image.
    explicit ShuffleMap(std::unordered_map<std::string, std::string> pairs);

    ShuffleMap inverse() const;
    // Throws std::out_of_range for words outside the vocabulary.
    const std::string& map(const std::string& word) const;
    std::size_t size() const { return forward_.size(); }

private:
    std::unordered_map<std::string, std::string> forward_;
};

// Replaces every word, mirroring capitalization; layout and ids unchanged.
std::string shuffle_text(std::string_view text, const ShuffleMap& m);
Dataset apply_word_shuffle(const Dataset& ds, const ShuffleMap& m);
Dataset apply_word_shuffle(const Dataset& ds, std::uint64_t seed, const Lexicon& lex = Lexicon::english());

} // namespace qaworld
