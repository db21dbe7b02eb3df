#include <gtest/gtest.h>

#include <map>
#include <set>

#include "qaworld/lexicon.hpp"
#include "qaworld/tasks.hpp"

using namespace qaworld;

namespace {

std::vector<GroundedStory> stories(int task, std::size_t questions, std::uint64_t seed) {
    Rng rng(seed);
    return generate_stories(task, questions, TaskConfig::defaults(task), rng);
}

std::map<std::string, int> label_counts(const std::vector<GroundedStory>& ss) {
    std::map<std::string, int> out;
    for (const auto& s : ss)
        for (const auto& l : s.lines)
            if (l.is_question()) {
                const auto& a = std::get<QuestionLine>(l.content).answer;
                if (a.size() == 1) ++out[a[0]];
            }
    return out;
}

} // namespace

class EveryTask : public ::testing::TestWithParam<int> {};

TEST_P(EveryTask, SupportingFactsVerify) {
    for (const auto& s : stories(GetParam(), 150, 5)) {
        auto d = verify_supporting_facts(s);
        ASSERT_TRUE(d.empty()) << "line " << d.front().line << ": " << d.front().message;
    }
}

TEST_P(EveryTask, AnswersMatchOracleOverPrefix) {
    for (const auto& s : stories(GetParam(), 100, 9)) {
        std::vector<Event> events;
        for (const auto& l : s.lines) {
            if (!l.is_question()) {
                const auto& st = std::get<StatementLine>(l.content);
                events.insert(events.end(), st.events.begin(), st.events.end());
                continue;
            }
            const auto& q = std::get<QuestionLine>(l.content);
            EXPECT_EQ(answer_query(events, q.query, s.world.entities), q.answer);
            for (int id : q.supporting) EXPECT_LT(id, l.number);
        }
    }
}

TEST_P(EveryTask, SameSeedSameText) {
    const int task = GetParam();
    Rng a(77), b(77);
    auto x = generate_story(task, TaskConfig::defaults(task), a);
    auto y = generate_story(task, TaskConfig::defaults(task), b);
    EXPECT_EQ(x.surface(), y.surface());
}

TEST_P(EveryTask, StatementsMatchRegisteredTemplates) {
    const int task = GetParam();
    for (const auto& s : stories(task, 60, 3))
        for (const auto& l : s.lines)
            if (!l.is_question()) {
                const auto& text = std::get<StatementLine>(l.content).text;
                EXPECT_FALSE(match_statement(text, Lexicon::english(), task).empty()) << text;
            }
}

TEST_P(EveryTask, SingleTokenAnswersExceptListTasks) {
    const int task = GetParam();
    for (const auto& s : stories(task, 100, 4))
        for (const auto& l : s.lines)
            if (l.is_question()) {
                const auto& a = std::get<QuestionLine>(l.content).answer;
                if (task != 8 && task != 19) EXPECT_EQ(a.size(), 1u);
                EXPECT_FALSE(a.empty());
            }
}

TEST_P(EveryTask, DatasetHasExactQuestionCount) {
    const int task = GetParam();
    Rng rng(12);
    EXPECT_EQ(generate_dataset(task, 37, TaskConfig::defaults(task), rng).question_count(), 37u);
}

INSTANTIATE_TEST_SUITE_P(Tasks, EveryTask, ::testing::Range(1, 21));

TEST(TaskSuite, SingleQuestionDataset) {
    Rng rng(1);
    Dataset ds = generate_dataset(1, 1, TaskConfig::defaults(1), rng);
    EXPECT_EQ(ds.question_count(), 1u);
    EXPECT_EQ(ds.stories.size(), 1u);
}

TEST(TaskSuite, TwoThousandQuestionsForTaskTwo) {
    Rng rng(2);
    EXPECT_EQ(generate_dataset(2, 1000, TaskConfig::defaults(2), rng).question_count(), 1000u);
}

TEST(TaskSuite, YesNoTasksAreBalanced) {
    for (int task : {6, 9, 17, 18}) {
        auto counts = label_counts(stories(task, 600, 21));
        const double total = counts["yes"] + counts["no"];
        ASSERT_GT(total, 0);
        EXPECT_GE(counts["yes"] / total, 0.3) << "task " << task;
        EXPECT_GE(counts["no"] / total, 0.3) << "task " << task;
    }
}

TEST(TaskSuite, IndefiniteTaskUsesAllThreeLabels) {
    auto counts = label_counts(stories(10, 400, 8));
    EXPECT_GT(counts["yes"], 0);
    EXPECT_GT(counts["no"], 0);
    EXPECT_GT(counts["maybe"], 0);
}

TEST(TaskSuite, PathQuestionsHaveUniqueTwoStepPaths) {
    for (const auto& s : stories(19, 200, 6)) {
        ExitMap exits;
        for (const auto& l : s.lines) {
            if (!l.is_question()) {
                for (const Event& ev : std::get<StatementLine>(l.content).events)
                    if (auto* x = std::get_if<SetExit>(&*ev.command.state)) {
                        exits[{ev.command.args[0], x->dir}] = x->neighbor;
                        exits[{x->neighbor, opposite(x->dir)}] = ev.command.args[0];
                    }
                continue;
            }
            const auto& q = std::get<QuestionLine>(l.content);
            ASSERT_EQ(q.answer.size(), 2u);
            EntityId from = q.query.args[0], to = q.query.args[1];
            int paths = 0;
            for (Direction d1 : kDirections)
                for (Direction d2 : kDirections) {
                    auto mid = exits.find({from, d1});
                    if (mid == exits.end()) continue;
                    auto end = exits.find({mid->second, d2});
                    paths += end != exits.end() && end->second == to;
                }
            EXPECT_EQ(paths, 1);
            for (Direction d : kDirections) {
                auto direct = exits.find({from, d});
                EXPECT_FALSE(direct != exits.end() && direct->second == to);
            }
            // replaying the answer reaches the target
            EntityId at = from;
            for (const auto& w : q.answer) at = exits.at({at, *parse_direction(w)});
            EXPECT_EQ(at, to);
        }
    }
}

TEST(TaskSuite, TimeSlotsStrictlyOrderedPerActor) {
    for (const auto& s : stories(14, 200, 2)) {
        std::map<EntityId, std::set<int>> seen;
        for (const auto& l : s.lines)
            if (!l.is_question())
                for (const Event& ev : std::get<StatementLine>(l.content).events) {
                    ASSERT_TRUE(ev.slot.has_value());
                    EXPECT_TRUE(seen[ev.command.actor].insert(static_cast<int>(*ev.slot)).second);
                }
    }
}

TEST(TaskSuite, InductionAnswersAreColors) {
    const auto colors = Lexicon::english().ids("color.");
    for (const auto& [label, n] : label_counts(stories(16, 100, 2)))
        EXPECT_NE(std::find(colors.begin(), colors.end(), label), colors.end()) << label;
}

TEST(TaskSuite, DeletedSupportIsDiagnosed) {
    for (int task = 1; task <= 6; ++task) {
        auto ss = stories(task, 30, 13);
        int checked = 0;
        for (auto s : ss)
            for (auto& l : s.lines)
                if (l.is_question()) {
                    auto& q = std::get<QuestionLine>(l.content);
                    auto saved = q.supporting;
                    q.supporting.erase(q.supporting.begin());
                    EXPECT_FALSE(verify_supporting_facts(s).empty()) << "task " << task;
                    q.supporting = saved;
                    ++checked;
                }
        EXPECT_GT(checked, 0);
    }
}

TEST(TaskSuite, EmptyStoryVerifies) {
    GroundedStory s;
    s.task = 1;
    EXPECT_TRUE(verify_supporting_facts(s).empty());
}

TEST(TaskSuite, PronounNeverOpensAStory) {
    for (int task : {11, 13})
        for (const auto& s : stories(task, 200, 3)) {
            const auto& text = std::get<StatementLine>(s.lines.front().content).text;
            for (const auto& m : match_statement(text, Lexicon::english(), task))
                EXPECT_TRUE(m.form != "go.pronoun" && m.form != "go.group") << text;
        }
}

TEST(TaskConfigCheck, RejectsBadValues) {
    TaskConfig c = TaskConfig::defaults(1);
    c.n_actors = 0;
    EXPECT_THROW(c.validate(1), ConfigError);
    c = TaskConfig::defaults(1);
    c.allowed_verbs = {Verb::go, Verb::get};
    EXPECT_THROW(c.validate(1), ConfigError);
    c = TaskConfig::defaults(1);
    c.min_statements = 5;
    c.max_statements = 2;
    EXPECT_THROW(c.validate(1), ConfigError);
    EXPECT_NO_THROW(TaskConfig::defaults(19).validate(19));
    EXPECT_THROW(check_task_id(21), std::invalid_argument);
}

TEST(TaskConfigCheck, VerbSetsFollowTasks) {
    EXPECT_EQ(TaskConfig::defaults(1).allowed_verbs, std::vector<Verb>{Verb::go});
    auto v2 = TaskConfig::defaults(2).allowed_verbs;
    EXPECT_EQ(std::set<Verb>(v2.begin(), v2.end()), (std::set<Verb>{Verb::go, Verb::get, Verb::drop}));
}

TEST(TaskSuite, SingleFactQuestionPointsAtTheMove) {
    for (const auto& s : stories(1, 50, 17))
        for (const auto& l : s.lines)
            if (l.is_question()) {
                const auto& q = std::get<QuestionLine>(l.content);
                ASSERT_EQ(q.supporting.size(), 1u);
                const auto& fact = std::get<StatementLine>(s.lines[static_cast<std::size_t>(q.supporting[0] - 1)].content);
                EXPECT_NE(fact.text.find(q.answer[0]), std::string::npos) << fact.text;
                // the subject of the question is named in the fact
                std::string who = q.text.substr(std::string("Where is ").size());
                who.pop_back();
                EXPECT_EQ(fact.text.rfind(who, 0), 0u) << fact.text << " / " << q.text;
            }
}
