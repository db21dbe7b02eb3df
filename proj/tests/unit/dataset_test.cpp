#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "qaworld/dataset.hpp"
#include "qaworld/splits.hpp"
#include "qaworld/tasks.hpp"

using namespace qaworld;
namespace fs = std::filesystem;

namespace {

StoryLine statement(int n, std::string text) { return StoryLine{n, LineKind::statement, std::move(text), {}, {}}; }
StoryLine question(int n, std::string text, std::vector<std::string> a, std::vector<int> s) {
    return StoryLine{n, LineKind::question, std::move(text), std::move(a), std::move(s)};
}

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("qaworld_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    return p;
}

} // namespace

TEST(Emit, ExactBytes) {
    Dataset ds;
    ds.stories.push_back(Story{{statement(1, "Mary moved to the bathroom."), statement(2, "John went to the hallway."),
                                question(3, "Where is Mary?", {"bathroom"}, {1})}});
    ds.stories.push_back(Story{{statement(1, "Sandra got the milk."), question(2, "What is Sandra carrying?",
                                                                              {"milk", "apple"}, {1})}});
    EXPECT_EQ(emit_babi(ds),
              "1 Mary moved to the bathroom.\n2 John went to the hallway.\n3 Where is Mary?\tbathroom\t1\n"
              "1 Sandra got the milk.\n2 What is Sandra carrying?\tmilk,apple\t1\n");
}

TEST(Emit, EmptyDatasetIsEmptyText) {
    EXPECT_EQ(emit_babi(Dataset{}), "");
    EXPECT_TRUE(parse_babi("").stories.empty());
}

TEST(Parse, RoundTripsGeneratedData) {
    for (int task = 1; task <= kTaskCount; ++task) {
        Rng rng(static_cast<std::uint64_t>(task));
        Dataset ds = generate_dataset(task, 50, TaskConfig::defaults(task), rng);
        std::string text = emit_babi(ds);
        Dataset back = parse_babi(text);
        EXPECT_EQ(back.stories, ds.stories) << "task " << task;
        EXPECT_EQ(emit_babi(back), text);
    }
}

TEST(Parse, MalformedFixturesRejectedAtLine) {
    int seen = 0;
    for (const auto& entry : fs::directory_iterator(fs::path(QAWORLD_FIXTURES) / "malformed")) {
        // name.lineN.txt
        std::string stem = entry.path().stem().string();
        auto dot = stem.rfind(".line");
        ASSERT_NE(dot, std::string::npos) << stem;
        const std::size_t expected = std::stoul(stem.substr(dot + 5));
        try {
            parse_babi(read_file(entry.path()));
            ADD_FAILURE() << stem << " was accepted";
        } catch (const ParseError& e) {
            EXPECT_EQ(e.line, expected) << stem << ": " << e.what();
        }
        ++seen;
    }
    EXPECT_EQ(seen, 10);
}

TEST(Parse, RandomTextNeverCrashes) {
    std::mt19937 gen(7);
    const std::string alphabet = "0123 \t\n,.?abM";
    for (int i = 0; i < 2000; ++i) {
        std::string s;
        std::uniform_int_distribution<std::size_t> len(0, 40), pick(0, alphabet.size() - 1);
        for (std::size_t k = len(gen); k > 0; --k) s += alphabet[pick(gen)];
        try {
            Dataset d = parse_babi(s);
            EXPECT_EQ(emit_babi(d), s);
        } catch (const ParseError& e) {
            EXPECT_GE(e.line, 1u);
        }
    }
}

TEST(Examples, MemoryIsTheStoryPrefix) {
    Dataset ds = parse_babi("1 Mary went to the office.\n2 John got the milk.\n3 Where is Mary?\toffice\t1\n"
                            "4 Mary went to the garden.\n5 Where is Mary?\tgarden\t4\n");
    auto ex = extract_examples(ds);
    ASSERT_EQ(ex.size(), 2u);
    EXPECT_EQ(ex[0].memory.size(), 2u);
    EXPECT_EQ(ex[0].supporting, std::vector<int>{0});
    EXPECT_EQ(ex[1].memory.size(), 3u);
    EXPECT_EQ(ex[1].supporting, std::vector<int>{2});
    EXPECT_EQ(ex[1].question, (std::vector<std::string>{"where", "is", "mary"}));
    EXPECT_EQ(ex[1].answer, std::vector<std::string>{"garden"});
}

TEST(Tokenize, LowercasesAndDropsPunctuation) {
    EXPECT_EQ(tokenize("Where is Mary?"), (std::vector<std::string>{"where", "is", "mary"}));
    EXPECT_EQ(tokenize("The kitchen is north of the hallway."),
              (std::vector<std::string>{"the", "kitchen", "is", "north", "of", "the", "hallway"}));
}

TEST(Digest, KnownVector) {
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Manifest, EmitParseRoundTrip) {
    Manifest m;
    m.fields = {{"task", "3"}, {"seed", "42"}, {"variant", "en"}};
    EXPECT_EQ(Manifest::parse(m.emit()).fields, m.fields);
}

TEST(Splits, FileNames) {
    EXPECT_EQ(split_file_name(1, Split::train), "qa1_single-supporting-fact_train.txt");
}

TEST(Splits, WriteIsDeterministicAndReadable) {
    fs::path a = scratch("a"), b = scratch("b");
    SplitSpec spec = default_split_spec(2, 99);
    spec.n_train = 60;
    spec.n_test = 40;
    Manifest ma = write_split(spec, a), mb = write_split(spec, b);
    EXPECT_EQ(ma.emit(), mb.emit());
    for (Split s : {Split::train, Split::test})
        EXPECT_EQ(read_file(a / "tasks" / split_file_name(2, s)), read_file(b / "tasks" / split_file_name(2, s)));
    Dataset train = read_dataset(a / "tasks" / split_file_name(2, Split::train));
    EXPECT_EQ(train.task, 2);
    EXPECT_EQ(train.split, Split::train);
    EXPECT_EQ(train.question_count(), 60u);
    EXPECT_EQ(read_dataset(a / "tasks" / split_file_name(2, Split::test)).question_count(), 40u);
    SplitSpec back = spec_from_manifest(read_manifest(a / "tasks" / manifest_file_name(2)));
    EXPECT_EQ(back.seed, 99u);
    EXPECT_EQ(back.n_train, 60u);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(Splits, SmallerTrainingSetIsPrefix) {
    SplitSpec small = default_split_spec(1, 5), large = default_split_spec(1, 5);
    small.n_train = 100;
    large.n_train = 300;
    auto ex_small = extract_examples(make_split(small).train);
    auto ex_large = extract_examples(make_split(large).train);
    ASSERT_EQ(ex_small.size(), 100u);
    for (std::size_t i = 0; i < ex_small.size(); ++i) {
        EXPECT_EQ(ex_small[i].question, ex_large[i].question);
        EXPECT_EQ(ex_small[i].memory, ex_large[i].memory);
    }
    EXPECT_EQ(make_split(small).test, make_split(large).test);
}

TEST(Splits, TestVocabularyIsClosedUnderTraining) {
    for (int task = 1; task <= kTaskCount; ++task) {
        SplitSpec spec = default_split_spec(task, 3);
        SplitData d = make_split(spec);
        std::set<std::string> train_words, test_words;
        for (const auto& ex : extract_examples(d.train)) {
            for (const auto& m : ex.memory) train_words.insert(m.begin(), m.end());
            train_words.insert(ex.question.begin(), ex.question.end());
            train_words.insert(ex.answer.begin(), ex.answer.end());
        }
        for (const auto& ex : extract_examples(d.test)) {
            for (const auto& m : ex.memory) test_words.insert(m.begin(), m.end());
            test_words.insert(ex.question.begin(), ex.question.end());
            test_words.insert(ex.answer.begin(), ex.answer.end());
        }
        for (const auto& w : test_words) EXPECT_TRUE(train_words.count(w)) << "task " << task << ": " << w;
    }
}

TEST(Emit, PathAnswerKeepsOrder) {
    Dataset ds;
    ds.stories.push_back(Story{{statement(1, "The kitchen is north of the hallway."),
                                statement(2, "The den is east of the hallway."),
                                question(3, "How do you go from the den to the kitchen?", {"west", "north"}, {1, 2})}});
    EXPECT_NE(emit_babi(ds).find("\twest,north\t1 2\n"), std::string::npos);
}

TEST(Parse, LineOneStartsANewStory) {
    Dataset ds = parse_babi("1 Mary went to the office.\n2 Where is Mary?\toffice\t1\n"
                            "1 John went to the garden.\n2 Where is John?\tgarden\t1\n");
    ASSERT_EQ(ds.stories.size(), 2u);
    EXPECT_EQ(ds.stories[1].lines[0].text, "John went to the garden.");
}

TEST(Parse, QuestionWithoutSupportIsMalformed) {
    try {
        parse_babi("1 Mary went to the office.\n2 Where is Mary?\toffice\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line, 2u);
    }
}

TEST(Splits, DefaultSizesAreOneThousand) {
    fs::path out = scratch("default");
    write_split(default_split_spec(1, 7), out);
    EXPECT_EQ(read_dataset(out / "tasks" / split_file_name(1, Split::train)).question_count(), 1000u);
    EXPECT_EQ(read_dataset(out / "tasks" / split_file_name(1, Split::test)).question_count(), 1000u);
    fs::remove_all(out);
}
