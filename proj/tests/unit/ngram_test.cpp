#include <gtest/gtest.h>

#include "qaworld/dataset.hpp"
#include "qaworld/ngram.hpp"
#include "qaworld/splits.hpp"

using namespace qaworld;

namespace {

QaExample example(std::vector<std::string> mem, std::string q, std::string a) {
    QaExample ex;
    for (const auto& m : mem) ex.memory.push_back(tokenize(m));
    ex.question = tokenize(q);
    ex.answer = {std::move(a)};
    ex.supporting = {0};
    ex.task = 1;
    return ex;
}

} // namespace

TEST(Ngram, OverlapFilterKeepsSharedWordSentences) {
    auto ex = example({"Mary went to the office.", "John got the milk.", "Sandra moved to the garden."},
                      "Where is Mary?", "office");
    EXPECT_EQ(overlapping_sentences(ex, true), std::vector<std::size_t>{0});
}

TEST(Ngram, FeaturesCountStoryAndQuestionGrams) {
    auto ex = example({"Mary went to the office."}, "Where is Mary?", "office");
    NgramConfig cfg;
    cfg.n = 2;
    auto f = featurize(ex, cfg);
    EXPECT_EQ(f.at("s:office"), 1.0);
    EXPECT_EQ(f.count("s:the office"), 1u);
    EXPECT_EQ(f.count("q:is mary"), 1u);
    EXPECT_EQ(f.count("s:went to the"), 0u);
}

TEST(Ngram, ConfigValidation) {
    NgramConfig cfg;
    cfg.n = 0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.epochs = 0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Ngram, EmptyTrainingSetThrows) {
    EXPECT_THROW(NgramModel::train({}, NgramConfig{}), EmptyDatasetError);
}

TEST(Ngram, LearnsSeparableToyProblem) {
    std::vector<QaExample> train;
    for (int i = 0; i < 20; ++i) {
        train.push_back(example({"Mary went to the office."}, "Where is Mary?", "office"));
        train.push_back(example({"Mary went to the garden."}, "Where is Mary?", "garden"));
    }
    NgramModel m = NgramModel::train(train, NgramConfig{});
    EXPECT_EQ(m.predict(train[0]), "office");
    EXPECT_EQ(m.predict(train[1]), "garden");
    EXPECT_DOUBLE_EQ(m.train_accuracy(), 100.0);
}

TEST(Ngram, TextRoundTripPreservesPredictions) {
    SplitSpec spec = default_split_spec(1, 4);
    spec.n_train = 200;
    spec.n_test = 50;
    SplitData d = make_split(spec);
    auto train = extract_examples(d.train), test = extract_examples(d.test);
    NgramModel m = NgramModel::train(train, NgramConfig{});
    NgramModel back = NgramModel::from_text(m.to_text());
    for (const auto& ex : test) EXPECT_EQ(m.predict(ex), back.predict(ex));
    EXPECT_EQ(back.to_text(), m.to_text());
}

TEST(Ngram, SameSeedSameModel) {
    SplitSpec spec = default_split_spec(2, 4);
    spec.n_train = 100;
    auto train = extract_examples(make_split(spec).train);
    EXPECT_EQ(NgramModel::train(train, NgramConfig{}).to_text(), NgramModel::train(train, NgramConfig{}).to_text());
}

TEST(Ngram, SentenceWithoutSharedWordsContributesNothing) {
    auto ex = example({"Sandra moved to the garden."}, "Where is Mary?", "garden");
    NgramConfig cfg;
    cfg.strip_stopwords = true;
    for (const auto& [name, v] : featurize(ex, cfg)) EXPECT_EQ(name.rfind("s:", 0), std::string::npos) << name;
}

TEST(Ngram, SingleClassTrainsConstantPredictor) {
    std::vector<QaExample> train = {example({"Mary went to the office."}, "Where is Mary?", "office"),
                                    example({"John went to the garden."}, "Where is John?", "office")};
    NgramModel m = NgramModel::train(train, NgramConfig{});
    EXPECT_DOUBLE_EQ(m.train_accuracy(), 100.0);
    EXPECT_EQ(m.predict(example({"Fred went to the cellar."}, "Where is Fred?", "cellar")), "office");
}

TEST(Ngram, FilteringHelpsOnSingleSupportingFact) {
    SplitSpec spec = default_split_spec(1, 7);
    SplitData d = make_split(spec);
    auto train = extract_examples(d.train), test = extract_examples(d.test);
    auto accuracy = [&](bool filter) {
        NgramConfig cfg;
        cfg.filter = filter;
        NgramModel m = NgramModel::train(train, cfg);
        int right = 0;
        for (const auto& ex : test) right += m.predict(ex) == ex.answer[0];
        return 100.0 * right / static_cast<double>(test.size());
    };
    const double filtered = accuracy(true);
    EXPECT_GT(filtered, accuracy(false));
    EXPECT_NEAR(filtered, 36.0, 15.0);
}

TEST(Ngram, PredictionIgnoresSentencesOutsideTheFilter) {
    std::vector<QaExample> train;
    for (int i = 0; i < 10; ++i) {
        train.push_back(example({"Mary went to the office."}, "Where is Mary?", "office"));
        train.push_back(example({"Mary went to the garden."}, "Where is Mary?", "garden"));
    }
    NgramModel m = NgramModel::train(train, NgramConfig{});
    auto a = example({"Mary went to the office.", "Sandra journeyed to a kitchen."}, "Where is Mary?", "office");
    auto b = example({"Mary went to the office.", "John travelled to a garden."}, "Where is Mary?", "office");
    EXPECT_EQ(overlapping_sentences(a, false), std::vector<std::size_t>{0});
    EXPECT_EQ(featurize(a, NgramConfig{}), featurize(b, NgramConfig{}));
    EXPECT_EQ(m.predict(a), m.predict(b));
}
