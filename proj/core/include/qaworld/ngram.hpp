#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "qaworld/dataset.hpp"

namespace qaworld {

struct NgramConfig {
    int n = 3;                     // longest N-gram
    double learning_rate = 0.01;
    int epochs = 20;
    bool filter = true;            // keep only sentences sharing a word with the question
    bool strip_stopwords = false;  // ignore function words in the overlap test
    std::uint64_t seed = 1;

    void validate() const;
};

struct EmptyDatasetError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Feature name -> count. Story N-grams are prefixed "s:", question N-grams "q:".
using SparseFeatures = std::map<std::string, double>;

// Indices of the memory sentences that survive the overlap filter.
std::vector<std::size_t> overlapping_sentences(const QaExample& ex, bool strip_stopwords);

SparseFeatures featurize(const QaExample& ex, const NgramConfig& cfg);

class NgramModel {
public:
    // Multi-class hinge loss, one weight row per answer token.
    static NgramModel train(const std::vector<QaExample>& examples, const NgramConfig& cfg);

    std::string predict(const QaExample& ex) const;
    std::vector<double> scores(const QaExample& ex) const;

    const std::vector<std::string>& classes() const { return classes_; }
    const NgramConfig& config() const { return cfg_; }
    double train_accuracy() const { return train_accuracy_; }

    // Tab-separated weight table: one row per feature, one column per class.
    std::string to_text() const;
    static NgramModel from_text(std::string_view text);

private:
    NgramConfig cfg_;
    std::vector<std::string> classes_;
    std::vector<std::string> feature_names_;
    std::unordered_map<std::string, int> feature_ids_;
    Eigen::MatrixXd weights_;  // classes x features
    double train_accuracy_ = 0.0;

    std::vector<std::pair<int, double>> encode(const QaExample& ex) const;
};

} // namespace qaworld
