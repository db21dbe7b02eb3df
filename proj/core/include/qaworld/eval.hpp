#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qaworld/dataset.hpp"
#include "qaworld/memnn.hpp"
#include "qaworld/ngram.hpp"
#include "qaworld/tasks.hpp"

namespace qaworld {

inline constexpr double kPassAccuracy = 95.0;

struct TaskResult {
    int task = 0;
    std::string model_id;
    double accuracy = 0.0;  // percent
    std::size_t correct = 0;
    std::size_t total = 0;
    std::size_t n_train = 0;
    std::uint64_t seed = 0;

    bool passed() const { return accuracy >= kPassAccuracy; }
};

struct EvalReport {
    std::vector<TaskResult> results;
    std::map<std::string, std::string> provenance;  // e.g. manifest digests

    std::vector<std::string> models() const;  // order of first appearance
    std::vector<int> tasks() const;           // ascending
    const TaskResult* find(int task, const std::string& model) const;
    double mean_accuracy(const std::string& model) const;
    int failed_tasks(const std::string& model) const;
};

// Task 8 answers compare as sets, everything else as sequences.
bool answer_matches(int task, const std::vector<std::string>& predicted, const std::vector<std::string>& gold);

using Predictor = std::function<std::vector<std::string>(const QaExample&)>;
using Trainer = std::function<Predictor(const std::vector<QaExample>&)>;

TaskResult evaluate(const Predictor& predict, const std::vector<QaExample>& test, int task,
                    std::string model_id = {});

struct Learner {
    std::string id;
    Trainer train;
};

Learner memnn_learner(const MemNNConfig& cfg);
// A training set without single-token answers yields a learner that never answers.
Learner ngram_learner(const NgramConfig& cfg);

inline const std::vector<std::size_t> kCurveSizes = {100, 250, 500, 1000, 5000, 10000};

struct CurvePoint {
    std::size_t n_train = 0;
    double accuracy = 0.0;
};

struct LearningCurve {
    int task = 0;
    std::vector<CurvePoint> points;           // ascending sizes, up to the first pass
    std::optional<std::size_t> min_passing;   // nullopt means FAIL
    bool unstable = false;                    // accuracy fell by more than 5 points between sizes

    std::string label() const;  // size or "FAIL"
};

struct TaskData {
    int task = 0;
    std::vector<QaExample> train;
    std::vector<QaExample> test;
};

// Generates the standard split for `task` with the largest size as training
// set; smaller sizes are its prefixes.
TaskData make_task_data(int task, std::size_t n_train, std::size_t n_test, std::uint64_t seed,
                        Variant variant = Variant::en, std::uint64_t shuffle_seed = 0);

// Sizes are tried in ascending order and the curve stops at the first pass.
LearningCurve learning_curve(const TaskData& data, const Trainer& train, std::vector<std::size_t> sizes);

// Trains once per task; `jobs` tasks run at the same time.
EvalReport single_task_eval(const Learner& learner, const std::vector<TaskData>& tasks, std::uint64_t seed,
                            unsigned jobs = 1);

// The ranking loss sums over every word of the joint vocabulary, so training
// on all tasks at once needs a smaller step than a single task.
inline constexpr double kMultitaskLearningRate = 0.003;

// One model on the concatenation of all training sets, scored per task.
EvalReport multitask_eval(const Learner& learner, const std::vector<TaskData>& tasks, std::uint64_t seed);

// Fixed-width table: one row per task, one column per model, mean and
// failure rows at the bottom.
std::string render_text(const EvalReport& report);

// task_id,task_name,model_id,accuracy,passed,n_train,seed
std::string render_csv(const EvalReport& report);
EvalReport parse_csv(std::string_view text);  // throws std::invalid_argument

} // namespace qaworld
