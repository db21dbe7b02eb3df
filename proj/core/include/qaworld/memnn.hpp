#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "qaworld/dataset.hpp"

namespace qaworld {

enum class FeatureMode : std::uint8_t { bow, ngram, multilinear };

struct MemNNConfig {
    int dim = 50;
    bool adaptive = false;     // stop on the null memory instead of a fixed hop count
    int hops = 2;              // fixed mode
    int max_hops = 10;         // adaptive mode
    bool multiword = false;    // emit words until the null word
    FeatureMode features = FeatureMode::bow;
    int ngram = 3;             // longest N-gram in ngram mode
    int positions = 4;         // position bins in multilinear mode
    bool nonlinear = false;
    bool time_features = true;
    int age_buckets = 32;      // memories older than this share a bucket
    int delta_clamp = 15;      // |offset| to the previous pick is clamped here
    double margin = 0.1;
    double learning_rate = 0.01;
    double init_scale = 0.1;
    int epochs = 100;
    std::uint64_t seed = 1;

    void validate() const;  // throws std::invalid_argument

    // Comma separated subset of am, ng, nl, ml. "am" turns on adaptive
    // memory together with multi-word responses.
    static MemNNConfig from_extensions(std::string_view extensions);
    std::string id() const;  // e.g. "memnn[am+ng+nl]"
};

struct UnknownTokenError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct MissingSupervisionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Word and feature dictionaries, in order of first occurrence.
struct Vocabulary {
    std::vector<std::string> words;     // single tokens: the response candidates
    std::vector<std::string> features;  // unigrams and, in ngram mode, longer N-grams
    std::unordered_map<std::string, int> word_ids;
    std::unordered_map<std::string, int> feature_ids;

    void add_word(const std::string& w);
    void add_feature(const std::string& f);
    void add_text(const std::vector<std::string>& tokens, int n);
};

// A piece of text placed in one dictionary block: (feature id, position bin).
struct EncodedText {
    std::vector<std::pair<int, int>> items;
};

struct EncodedExample {
    EncodedText question;
    std::vector<EncodedText> memory;
    std::vector<int> supporting;
    std::vector<int> answer;  // word ids, -1 when the token is not in the dictionary
};

struct Parameters {
    Eigen::MatrixXd match;     // n x (3F + 1): question, memory, candidate blocks, null memory
    Eigen::MatrixXd response;  // n x (5F + 1): question, memory, emitted, candidate, newest memory blocks, null word
    Eigen::MatrixXd match_w, response_w;              // nonlinear layers
    std::vector<Eigen::MatrixXd> match_p, response_p;  // position matrices
    Eigen::MatrixXd age, delta;                       // write-time feature weights (columns)

    // Visits every parameter block with a name, for checks and serialization.
    void for_each(const std::function<void(const std::string&, Eigen::MatrixXd&)>& f);
};

struct EpochStats {
    int epoch = 0;
    double loss = 0.0;
    double train_accuracy = 0.0;  // teacher-forced rankings all correct
};

struct GradientCheck {
    double max_relative_error = 0.0;
    double max_abs_gradient = 0.0;
    double loss = 0.0;
    std::size_t checked = 0;
};

struct Prediction {
    std::vector<int> supporting;
    std::vector<std::string> answer;
};

class MemNN {
public:
    explicit MemNN(MemNNConfig cfg = {});

    // Builds the dictionaries from the examples and initializes parameters.
    void initialize(const std::vector<const QaExample*>& examples);
    void initialize(const std::vector<QaExample>& examples);

    // Trains (initializing first when needed); returns one entry per epoch run.
    std::vector<EpochStats> train(const std::vector<QaExample>& examples,
                                  const std::function<void(const EpochStats&)>& on_epoch = {});

    EncodedExample encode(const QaExample& ex, bool strict = false) const;
    EncodedText encode_text(const std::vector<std::string>& tokens, bool strict = false) const;

    Prediction predict(const QaExample& ex) const;
    std::vector<int> infer_supporting(const QaExample& ex) const;
    std::vector<std::string> answer(const QaExample& ex) const { return predict(ex).answer; }

    // Stage scores for inspection: match score of memory `candidate` given the
    // question and already selected memories (time features included when on).
    double match_score(const QaExample& ex, const std::vector<int>& selected, int candidate) const;
    Eigen::VectorXd embed_text(const std::vector<std::string>& tokens, bool match_stage, int block) const;

    // Teacher-forced ranking loss and its gradient.
    double loss(const EncodedExample& ex, Parameters* grad = nullptr) const;
    GradientCheck gradient_check(const QaExample& ex, double epsilon = 1e-5);

    const MemNNConfig& config() const { return cfg_; }
    const Vocabulary& vocabulary() const { return vocab_; }
    Parameters& parameters() {
        word_cache_valid_ = false;
        return params_;
    }
    const Parameters& parameters() const { return params_; }
    bool initialized() const { return initialized_; }

    void save(const std::filesystem::path& path) const;
    static MemNN load(const std::filesystem::path& path);

private:
    struct Flat {
        std::vector<std::pair<int, int>> items;  // (column, bin)
    };
    struct Embedding {
        Eigen::VectorXd h, e;
        std::vector<Eigen::VectorXd> bins;
    };
    enum class Stage { match, response };
    struct Workspace;

    MemNNConfig cfg_;
    Vocabulary vocab_;
    Parameters params_;
    bool initialized_ = false;
    mutable std::vector<Embedding> word_cache_;
    mutable bool word_cache_valid_ = false;

    int features() const { return static_cast<int>(vocab_.features.size()); }
    int null_memory_column() const { return 3 * features(); }
    int null_word_column() const { return 5 * features(); }
    int bins() const { return cfg_.features == FeatureMode::multilinear ? cfg_.positions : 1; }

    void allocate();
    void append(Flat& f, const EncodedText& t, int block) const;
    void append_facts(Flat& f, const EncodedExample& ex, const std::vector<int>& facts) const;
    Flat single(int column) const;
    Flat word_flat(int word) const;
    Embedding embed(Stage stage, const Flat& x) const;
    void backprop(Stage stage, const Flat& x, const Embedding& emb, const Eigen::VectorXd& de, Workspace& w) const;
    double loss_impl(const EncodedExample& ex, Workspace* w, bool* correct) const;
    double time_score(int candidate, int n_memory, int last) const;
    int age_bucket(int candidate, int n_memory) const;
    int delta_bucket(int candidate, int last) const;
    const std::vector<Embedding>& word_embeddings() const;
    Prediction predict_encoded(const EncodedExample& ex) const;
    std::vector<int> word_feature_;  // word id -> feature id
};

} // namespace qaworld
