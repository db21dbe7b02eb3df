#include <gtest/gtest.h>

#include "qaworld/eval.hpp"

using namespace qaworld;

namespace {

std::vector<QaExample> questions(std::vector<std::vector<std::string>> answers) {
    std::vector<QaExample> out;
    for (auto& a : answers) {
        QaExample ex;
        ex.answer = std::move(a);
        ex.supporting = {0};
        ex.memory = {{"x"}};
        out.push_back(std::move(ex));
    }
    return out;
}

Predictor constant(std::vector<std::string> a) {
    return [a](const QaExample&) { return a; };
}

// Answers correctly once trained on at least `need` examples.
Trainer threshold_trainer(std::size_t need) {
    return [need](const std::vector<QaExample>& train) -> Predictor {
        bool ok = train.size() >= need;
        return [ok](const QaExample& ex) { return ok ? ex.answer : std::vector<std::string>{"wrong"}; };
    };
}

} // namespace

TEST(Score, ListAnswersCompareAsSetsOnlyForTaskEight) {
    EXPECT_TRUE(answer_matches(8, {"milk", "apple"}, {"apple", "milk"}));
    EXPECT_FALSE(answer_matches(8, {"milk"}, {"apple", "milk"}));
    EXPECT_FALSE(answer_matches(19, {"n", "w"}, {"w", "n"}));
    EXPECT_TRUE(answer_matches(19, {"w", "n"}, {"w", "n"}));
}

TEST(Score, AccuracyIsPercentCorrect) {
    auto test = questions({{"a"}, {"a"}, {"b"}, {"a"}});
    TaskResult r = evaluate(constant({"a"}), test, 1, "const");
    EXPECT_EQ(r.correct, 3u);
    EXPECT_EQ(r.total, 4u);
    EXPECT_DOUBLE_EQ(r.accuracy, 75.0);
    EXPECT_FALSE(r.passed());
}

TEST(Curve, StopsAtFirstPassingSize) {
    TaskData d;
    d.task = 1;
    d.train = questions(std::vector<std::vector<std::string>>(600, {"a"}));
    d.test = questions({{"a"}, {"a"}});
    LearningCurve c = learning_curve(d, threshold_trainer(250), {500, 100, 250});
    EXPECT_EQ(c.min_passing, 250u);
    EXPECT_EQ(c.label(), "250");
    ASSERT_EQ(c.points.size(), 2u);
    EXPECT_EQ(c.points[0].n_train, 100u);
}

TEST(Curve, FailWhenNoSizePasses) {
    TaskData d;
    d.task = 1;
    d.train = questions(std::vector<std::vector<std::string>>(100, {"a"}));
    d.test = questions({{"a"}});
    LearningCurve c = learning_curve(d, threshold_trainer(1000), {50, 100});
    EXPECT_FALSE(c.min_passing);
    EXPECT_EQ(c.label(), "FAIL");
}

TEST(Report, CsvRoundTrip) {
    EvalReport r;
    r.results.push_back({1, "memnn[am]", 99.5, 199, 200, 1000, 7});
    r.results.push_back({2, "memnn[am]", 40.25, 80, 200, 1000, 7});
    r.results.push_back({1, "ngram", 30, 60, 200, 1000, 7});
    std::string csv = render_csv(r);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "task_id,task_name,model_id,accuracy,passed,n_train,seed");
    EXPECT_NE(csv.find("1,single-supporting-fact,memnn[am],99.5,1,1000,7\n"), std::string::npos);
    EvalReport back = parse_csv(csv);
    ASSERT_EQ(back.results.size(), 3u);
    EXPECT_EQ(render_csv(back), csv);
    EXPECT_EQ(back.models(), (std::vector<std::string>{"memnn[am]", "ngram"}));
    EXPECT_EQ(back.failed_tasks("memnn[am]"), 1);
    EXPECT_DOUBLE_EQ(back.mean_accuracy("memnn[am]"), (99.5 + 40.25) / 2);
}

TEST(Report, CsvRejectsInconsistentRows) {
    EXPECT_THROW(parse_csv("bad header\n"), std::invalid_argument);
    std::string head = "task_id,task_name,model_id,accuracy,passed,n_train,seed\n";
    EXPECT_THROW(parse_csv(head + "1,single-supporting-fact,m,99.5,0,1000,7\n"), std::invalid_argument);
    EXPECT_THROW(parse_csv(head + "1,wrong-name,m,99.5,1,1000,7\n"), std::invalid_argument);
    EXPECT_THROW(parse_csv(head + "1,single-supporting-fact,m,99.5,1\n"), std::invalid_argument);
}

TEST(Report, TextTableMarksFailures) {
    EvalReport r;
    r.results.push_back({1, "m", 99.5, 199, 200, 1000, 7});
    r.results.push_back({2, "m", 40.0, 80, 200, 1000, 7});
    r.provenance["seed"] = "7";
    std::string t = render_text(r);
    EXPECT_NE(t.find("40.0*"), std::string::npos) << t;
    EXPECT_EQ(t.find("99.5*"), std::string::npos) << t;
    EXPECT_NE(t.find("# seed: 7"), std::string::npos) << t;
}

TEST(Harness, SingleTaskAndMultitaskAgreeOnPerfectLearner) {
    std::vector<TaskData> tasks;
    for (int t : {1, 2}) {
        TaskData d;
        d.task = t;
        d.train = questions({{"a"}, {"b"}});
        d.test = questions({{"a"}, {"b"}, {"c"}});
        tasks.push_back(d);
    }
    Learner oracle{"oracle", threshold_trainer(0)};
    EvalReport single = single_task_eval(oracle, tasks, 1, 2);
    EvalReport multi = multitask_eval(oracle, tasks, 1);
    ASSERT_EQ(single.results.size(), 2u);
    ASSERT_EQ(multi.results.size(), 2u);
    for (int t : {1, 2}) {
        EXPECT_DOUBLE_EQ(single.find(t, "oracle")->accuracy, 100.0);
        EXPECT_DOUBLE_EQ(multi.find(t, "oracle")->accuracy, 100.0);
        EXPECT_EQ(multi.find(t, "oracle")->n_train, 4u);
    }
}

TEST(Harness, NgramLearnerWithoutClassesNeverAnswers) {
    Learner l = ngram_learner(NgramConfig{});
    auto train = questions({{"n", "w"}});
    Predictor p = l.train(train);
    EXPECT_EQ(evaluate(p, train, 19).accuracy, 0.0);
}

TEST(Score, PerfectPredictorScoresHundred) {
    auto test = questions({{"a"}, {"b"}});
    EXPECT_DOUBLE_EQ(evaluate([](const QaExample& ex) { return ex.answer; }, test, 1).accuracy, 100.0);
}

TEST(Curve, SingleSizeTrainsOnce) {
    TaskData d;
    d.task = 1;
    d.train = questions(std::vector<std::vector<std::string>>(10, {"a"}));
    d.test = questions({{"a"}});
    int runs = 0;
    Trainer counting = [&](const std::vector<QaExample>& train) {
        ++runs;
        return threshold_trainer(1000)(train);
    };
    LearningCurve c = learning_curve(d, counting, {10});
    EXPECT_EQ(runs, 1);
    EXPECT_EQ(c.points.size(), 1u);
}

TEST(Harness, MultitaskOnOneTaskIsPlainEvaluation) {
    TaskData d;
    d.task = 3;
    d.train = questions({{"a"}});
    d.test = questions({{"a"}, {"b"}});
    Learner l{"const", [](const std::vector<QaExample>&) { return constant({"a"}); }};
    EvalReport r = multitask_eval(l, {d}, 1);
    ASSERT_EQ(r.results.size(), 1u);
    EXPECT_DOUBLE_EQ(r.results[0].accuracy, evaluate(constant({"a"}), d.test, 3).accuracy);
}

TEST(Report, EmptyReportIsHeaderOnly) {
    EXPECT_EQ(render_csv(EvalReport{}), "task_id,task_name,model_id,accuracy,passed,n_train,seed\n");
    std::string t = render_text(EvalReport{});
    EXPECT_FALSE(t.empty());
    EXPECT_EQ(t.find("single-supporting-fact"), std::string::npos);
}

TEST(Report, TwoModelsGiveTwoColumnsAndMeanRow) {
    EvalReport r;
    r.results.push_back({1, "alpha", 100, 200, 200, 1000, 7});
    r.results.push_back({1, "beta", 50, 100, 200, 1000, 7});
    std::string t = render_text(r);
    const std::string header = t.substr(0, t.find('\n'));
    EXPECT_NE(header.find("alpha"), std::string::npos);
    EXPECT_NE(header.find("beta"), std::string::npos);
    EXPECT_NE(t.find("mean"), std::string::npos);
}
