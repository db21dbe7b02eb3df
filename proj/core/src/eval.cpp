#include "qaworld/eval.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "qaworld/splits.hpp"

namespace qaworld {

std::vector<std::string> EvalReport::models() const {
    std::vector<std::string> out;
    for (const auto& r : results)
        if (std::find(out.begin(), out.end(), r.model_id) == out.end()) out.push_back(r.model_id);
    return out;
}

std::vector<int> EvalReport::tasks() const {
    std::set<int> s;
    for (const auto& r : results) s.insert(r.task);
    return {s.begin(), s.end()};
}

const TaskResult* EvalReport::find(int task, const std::string& model) const {
    for (const auto& r : results)
        if (r.task == task && r.model_id == model) return &r;
    return nullptr;
}

double EvalReport::mean_accuracy(const std::string& model) const {
    double sum = 0.0;
    int n = 0;
    for (const auto& r : results)
        if (r.model_id == model) {
            sum += r.accuracy;
            ++n;
        }
    return n ? sum / n : 0.0;
}

int EvalReport::failed_tasks(const std::string& model) const {
    int n = 0;
    for (const auto& r : results) n += r.model_id == model && !r.passed();
    return n;
}

bool answer_matches(int task, const std::vector<std::string>& predicted, const std::vector<std::string>& gold) {
    if (task == 8) return std::multiset<std::string>(predicted.begin(), predicted.end()) ==
                          std::multiset<std::string>(gold.begin(), gold.end());
    return predicted == gold;
}

TaskResult evaluate(const Predictor& predict, const std::vector<QaExample>& test, int task, std::string model_id) {
    TaskResult r;
    r.task = task;
    r.model_id = std::move(model_id);
    r.total = test.size();
    for (const auto& ex : test) r.correct += answer_matches(task, predict(ex), ex.answer);
    r.accuracy = r.total ? 100.0 * static_cast<double>(r.correct) / static_cast<double>(r.total) : 0.0;
    return r;
}

Learner memnn_learner(const MemNNConfig& cfg) {
    cfg.validate();
    return {cfg.id(), [cfg](const std::vector<QaExample>& train) -> Predictor {
                auto model = std::make_shared<MemNN>(cfg);
                model->train(train);
                return [model](const QaExample& ex) { return model->answer(ex); };
            }};
}

Learner ngram_learner(const NgramConfig& cfg) {
    cfg.validate();
    return {"ngram", [cfg](const std::vector<QaExample>& train) -> Predictor {
                try {
                    auto model = std::make_shared<NgramModel>(NgramModel::train(train, cfg));
                    return [model](const QaExample& ex) { return std::vector<std::string>{model->predict(ex)}; };
                } catch (const EmptyDatasetError&) {
                    return [](const QaExample&) { return std::vector<std::string>{}; };
                }
            }};
}

std::string LearningCurve::label() const { return min_passing ? std::to_string(*min_passing) : "FAIL"; }

TaskData make_task_data(int task, std::size_t n_train, std::size_t n_test, std::uint64_t seed, Variant variant,
                        std::uint64_t shuffle_seed) {
    SplitSpec spec = default_split_spec(task, seed);
    spec.n_train = n_train;
    spec.n_test = n_test;
    spec.variant = variant;
    spec.shuffle_seed = shuffle_seed;
    SplitData split = make_split(spec);
    return {task, extract_examples(split.train), extract_examples(split.test)};
}

LearningCurve learning_curve(const TaskData& data, const Trainer& train, std::vector<std::size_t> sizes) {
    std::sort(sizes.begin(), sizes.end());
    sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
    LearningCurve curve;
    curve.task = data.task;
    for (std::size_t n : sizes) {
        if (n > data.train.size()) throw std::invalid_argument("curve size exceeds the training set");
        std::vector<QaExample> prefix(data.train.begin(), data.train.begin() + static_cast<long>(n));
        Predictor p = train(prefix);
        TaskResult r = evaluate(p, data.test, data.task);
        if (!curve.points.empty() && r.accuracy < curve.points.back().accuracy - 5.0) curve.unstable = true;
        curve.points.push_back({n, r.accuracy});
        if (r.passed()) {
            curve.min_passing = n;
            break;
        }
    }
    return curve;
}

EvalReport single_task_eval(const Learner& learner, const std::vector<TaskData>& tasks, std::uint64_t seed,
                            unsigned jobs) {
    EvalReport report;
    report.results.resize(tasks.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            try {
                const TaskData& d = tasks[i];
                TaskResult r = evaluate(learner.train(d.train), d.test, d.task, learner.id);
                r.n_train = d.train.size();
                r.seed = seed;
                report.results[i] = std::move(r);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(tasks.size())));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    return report;
}

EvalReport multitask_eval(const Learner& learner, const std::vector<TaskData>& tasks, std::uint64_t seed) {
    std::vector<QaExample> all;
    for (const auto& d : tasks) all.insert(all.end(), d.train.begin(), d.train.end());
    Predictor p = learner.train(all);
    EvalReport report;
    for (const auto& d : tasks) {
        TaskResult r = evaluate(p, d.test, d.task, learner.id);
        r.n_train = all.size();
        r.seed = seed;
        report.results.push_back(std::move(r));
    }
    return report;
}

namespace {

std::string fixed1(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
}

std::string pad(std::string s, std::size_t width, bool left) {
    if (s.size() >= width) return s;
    std::string fill(width - s.size(), ' ');
    return left ? s + fill : fill + s;
}

std::string shortest(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

template <class T>
T parse_number(const std::string& s, const char* what) {
    T v{};
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw std::invalid_argument(std::string("bad ") + what + ": " + s);
    return v;
}

constexpr const char* kCsvHeader = "task_id,task_name,model_id,accuracy,passed,n_train,seed";

} // namespace

std::string render_text(const EvalReport& report) {
    const auto models = report.models();
    std::size_t name_width = 4;
    for (int t : report.tasks()) name_width = std::max(name_width, 4 + task_name(t).size());
    std::vector<std::size_t> widths;
    for (const auto& m : models) widths.push_back(std::max<std::size_t>(8, m.size()));

    std::ostringstream out;
    out << pad("task", name_width, true);
    for (std::size_t i = 0; i < models.size(); ++i) out << "  " << pad(models[i], widths[i], false);
    out << '\n';
    for (int t : report.tasks()) {
        out << pad(std::to_string(t) + ": " + std::string(task_name(t)), name_width, true);
        for (std::size_t i = 0; i < models.size(); ++i) {
            const TaskResult* r = report.find(t, models[i]);
            std::string cell = r ? fixed1(r->accuracy) + (r->passed() ? " " : "*") : "-";
            out << "  " << pad(cell, widths[i], false);
        }
        out << '\n';
    }
    if (!models.empty()) {
        out << pad("mean", name_width, true);
        for (std::size_t i = 0; i < models.size(); ++i)
            out << "  " << pad(fixed1(report.mean_accuracy(models[i])) + " ", widths[i], false);
        out << '\n' << pad("failed (<95)", name_width, true);
        for (std::size_t i = 0; i < models.size(); ++i)
            out << "  " << pad(std::to_string(report.failed_tasks(models[i])) + " ", widths[i], false);
        out << '\n';
    }
    for (const auto& [k, v] : report.provenance) out << "# " << k << ": " << v << '\n';
    return out.str();
}

std::string render_csv(const EvalReport& report) {
    std::ostringstream out;
    out << kCsvHeader << '\n';
    for (const auto& m : report.models())
        for (int t : report.tasks())
            if (const TaskResult* r = report.find(t, m))
                out << r->task << ',' << task_name(r->task) << ',' << r->model_id << ',' << shortest(r->accuracy) << ','
                    << (r->passed() ? 1 : 0) << ',' << r->n_train << ',' << r->seed << '\n';
    return out.str();
}

EvalReport parse_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) throw std::invalid_argument("missing CSV header");
    EvalReport report;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        auto f = split_csv(line);
        if (f.size() != 7) throw std::invalid_argument("row " + std::to_string(row) + ": expected 7 fields");
        TaskResult r;
        r.task = parse_number<int>(f[0], "task_id");
        check_task_id(r.task);
        if (f[1] != task_name(r.task)) throw std::invalid_argument("row " + std::to_string(row) + ": task name mismatch");
        r.model_id = f[2];
        r.accuracy = parse_number<double>(f[3], "accuracy");
        if (f[4] != "0" && f[4] != "1") throw std::invalid_argument("row " + std::to_string(row) + ": bad passed flag");
        if ((f[4] == "1") != r.passed()) throw std::invalid_argument("row " + std::to_string(row) + ": passed flag disagrees");
        r.n_train = parse_number<std::size_t>(f[5], "n_train");
        r.seed = parse_number<std::uint64_t>(f[6], "seed");
        report.results.push_back(std::move(r));
    }
    return report;
}

} // namespace qaworld
