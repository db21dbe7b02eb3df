// qaworld: generate task splits, train and evaluate models, print reports.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "qaworld/eval.hpp"
#include "qaworld/memnn.hpp"
#include "qaworld/ngram.hpp"
#include "qaworld/splits.hpp"
#include "qaworld/tasks.hpp"

namespace fs = std::filesystem;
using namespace qaworld;

namespace {

struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

std::vector<int> parse_tasks(const std::string& spec) {
    std::vector<int> out;
    if (spec == "all") {
        for (int t = 1; t <= kTaskCount; ++t) out.push_back(t);
        return out;
    }
    std::istringstream in(spec);
    std::string item;
    while (std::getline(in, item, ',')) {
        auto dash = item.find('-');
        try {
            if (dash != std::string::npos) {
                int a = std::stoi(item.substr(0, dash)), b = std::stoi(item.substr(dash + 1));
                for (int t = a; t <= b; ++t) out.push_back(t);
            } else {
                out.push_back(std::stoi(item));
            }
        } catch (const std::logic_error&) {
            throw UsageError("bad task list: " + spec);
        }
    }
    for (int t : out)
        if (t < 1 || t > kTaskCount) throw UsageError("task out of range: " + std::to_string(t));
    if (out.empty()) throw UsageError("empty task list");
    return out;
}

Variant parse_variant(const std::string& v) {
    if (v == "en") return Variant::en;
    if (v == "shuffled") return Variant::shuffled;
    throw UsageError("variant must be en or shuffled");
}

struct ModelOptions {
    std::string model = "memnn";
    std::string ext = "am,ng,nl";
    int epochs = -1;
    int dim = 50;
    double lr = -1;  // model default
    std::uint64_t seed = 1;

    void add(CLI::App* app) {
        app->add_option("--model", model, "memnn or ngram")->check(CLI::IsMember({"memnn", "ngram"}));
        app->add_option("--ext", ext, "memnn extensions: subset of am,ng,nl,ml (empty for the k=2 baseline)");
        app->add_option("--epochs", epochs, "training epochs (default 100 for memnn, 20 for ngram)");
        app->add_option("--dim", dim, "embedding dimension");
        app->add_option("--lr", lr, "learning rate (default 0.01, 0.003 for memnn multitask)");
        app->add_option("--model-seed", seed, "seed for initialization and example order");
    }

    MemNNConfig memnn() const {
        MemNNConfig c;
        try {
            c = MemNNConfig::from_extensions(ext);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        c.dim = dim;
        if (lr > 0) c.learning_rate = lr;
        c.seed = seed;
        if (epochs > 0) c.epochs = epochs;
        return c;
    }

    NgramConfig ngram() const {
        NgramConfig c;
        if (lr > 0) c.learning_rate = lr;
        c.seed = seed;
        if (epochs > 0) c.epochs = epochs;
        return c;
    }

    Learner learner() const { return model == "ngram" ? ngram_learner(ngram()) : memnn_learner(memnn()); }
};

fs::path split_path(const fs::path& data, int task, Split split) { return data / "tasks" / split_file_name(task, split); }

void write_report(const EvalReport& report, const fs::path& out, const std::string& stem) {
    write_file(out / (stem + ".csv"), render_csv(report));
    write_file(out / (stem + ".txt"), render_text(report));
    std::cout << render_text(report);
}

void add_manifest_digests(EvalReport& report, const fs::path& data, int task) {
    fs::path mp = data / "tasks" / manifest_file_name(task);
    if (!fs::exists(mp)) return;
    Manifest m = read_manifest(mp);
    report.provenance["qa" + std::to_string(task) + ".manifest.sha256"] = sha256_hex(m.emit());
}

int run(int argc, char** argv) {
    CLI::App app{"Grounded micro-world QA tasks: generation, training and evaluation"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    // generate
    auto* gen = app.add_subcommand("generate", "write train/test splits and a manifest per task");
    std::string gen_tasks = "all", variant = "en";
    std::size_t n_train = 1000, n_test = 1000;
    std::uint64_t seed = 0, shuffle_seed = 0;
    fs::path out;
    gen->add_option("--task", gen_tasks, "task ids: 3, 1-5, 1,2,11 or all");
    gen->add_option("--train", n_train, "training questions per task");
    gen->add_option("--test", n_test, "test questions per task");
    gen->add_option("--seed", seed, "generation seed")->required();
    gen->add_option("--variant", variant, "en or shuffled");
    gen->add_option("--shuffle-seed", shuffle_seed, "word permutation seed for the shuffled variant");
    gen->add_option("--out", out, "output directory")->required();

    // train
    auto* train = app.add_subcommand("train", "train one model on one task");
    ModelOptions mo;
    int task = 1;
    fs::path data;
    train->add_option("--task", task, "task id")->required()->check(CLI::Range(1, kTaskCount));
    train->add_option("--data", data, "directory written by generate")->required();
    train->add_option("--out", out, "directory for the checkpoint and training log")->required();
    mo.add(train);

    // eval
    auto* ev = app.add_subcommand("eval", "score a checkpoint on a task's test split");
    fs::path checkpoint;
    ev->add_option("--task", task, "task id")->required()->check(CLI::Range(1, kTaskCount));
    ev->add_option("--data", data, "directory written by generate")->required();
    ev->add_option("--checkpoint", checkpoint, "model file written by train")->required();
    ev->add_option("--out", out, "directory for the report")->required();

    // curve
    auto* curve = app.add_subcommand("curve", "minimum training size reaching 95% per task");
    std::string curve_tasks = "1";
    std::vector<std::size_t> sizes = kCurveSizes;
    std::uint64_t curve_seed = 0;
    curve->add_option("--task", curve_tasks, "task ids");
    curve->add_option("--sizes", sizes, "training sizes")->delimiter(',');
    curve->add_option("--seed", curve_seed, "generation seed")->required();
    curve->add_option("--out", out, "output directory")->required();
    mo.add(curve);

    // multitask
    auto* multi = app.add_subcommand("multitask", "train one model on all tasks and score each");
    std::string multi_tasks = "all";
    std::uint64_t multi_seed = 0;
    ModelOptions mm;
    multi->add_option("--task", multi_tasks, "task ids");
    multi->add_option("--train", n_train, "training questions per task");
    multi->add_option("--test", n_test, "test questions per task");
    multi->add_option("--seed", multi_seed, "generation seed")->required();
    multi->add_option("--out", out, "output directory")->required();
    mm.add(multi);

    // report
    auto* rep = app.add_subcommand("report", "merge report CSV files into one table");
    std::vector<fs::path> csvs;
    rep->add_option("csv", csvs, "report CSV files")->required()->check(CLI::ExistingFile);
    rep->add_option("--out", out, "also write the merged CSV and table here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    if (gen->parsed()) {
        for (int t : parse_tasks(gen_tasks)) {
            SplitSpec spec = default_split_spec(t, seed);
            spec.n_train = n_train;
            spec.n_test = n_test;
            spec.variant = parse_variant(variant);
            spec.shuffle_seed = shuffle_seed;
            write_split(spec, out);
            std::cout << "wrote " << (out / "tasks" / split_file_name(t, Split::train)).string() << " and test split\n";
        }
    } else if (train->parsed()) {
        Dataset ds = read_dataset(split_path(data, task, Split::train));
        auto examples = extract_examples(ds);
        std::string stem = "qa" + std::to_string(task) + "_" + mo.model;
        if (mo.model == "ngram") {
            NgramModel m = NgramModel::train(examples, mo.ngram());
            write_file(out / (stem + ".model"), m.to_text());
            write_file(out / (stem + "_log.csv"),
                       "epoch,loss,train_acc\n" + std::to_string(mo.ngram().epochs) + ",," +
                           std::to_string(m.train_accuracy()) + "\n");
            std::cout << "train accuracy " << m.train_accuracy() << "\n";
        } else {
            MemNN m(mo.memnn());
            std::ostringstream log;
            log << "epoch,loss,train_acc\n";
            auto stats = m.train(examples, [&](const EpochStats& s) {
                log << s.epoch << ',' << s.loss << ',' << s.train_accuracy << '\n';
            });
            fs::create_directories(out);
            m.save(out / (stem + ".model"));
            write_file(out / (stem + "_log.csv"), log.str());
            if (!stats.empty())
                std::cout << "epochs " << stats.size() << ", final loss " << stats.back().loss << ", train accuracy "
                          << stats.back().train_accuracy << "\n";
        }
    } else if (ev->parsed()) {
        Dataset ds = read_dataset(split_path(data, task, Split::test));
        auto test = extract_examples(ds);
        std::string head;
        {
            std::ifstream in(checkpoint);
            if (!in) throw IoError("cannot open " + checkpoint.string());
            std::getline(in, head);
        }
        EvalReport report;
        if (head.rfind("qaworld-ngram", 0) == 0) {
            NgramModel m = NgramModel::from_text(read_file(checkpoint));
            report.results.push_back(evaluate(
                [&](const QaExample& ex) { return std::vector<std::string>{m.predict(ex)}; }, test, task, "ngram"));
        } else {
            MemNN m = MemNN::load(checkpoint);
            report.results.push_back(
                evaluate([&](const QaExample& ex) { return m.answer(ex); }, test, task, m.config().id()));
        }
        report.provenance["checkpoint.sha256"] = sha256_hex(read_file(checkpoint));
        add_manifest_digests(report, data, task);
        write_report(report, out, "qa" + std::to_string(task) + "_eval");
    } else if (curve->parsed()) {
        Learner learner = mo.learner();
        std::ostringstream csv;
        csv << "task_id,task_name,model_id,n_train,accuracy,seed\n";
        std::ostringstream text;
        for (int t : parse_tasks(curve_tasks)) {
            if (sizes.empty()) throw UsageError("no sizes given");
            TaskData d = make_task_data(t, *std::max_element(sizes.begin(), sizes.end()), 1000, curve_seed);
            LearningCurve c = learning_curve(d, learner.train, sizes);
            for (const auto& p : c.points)
                csv << t << ',' << task_name(t) << ',' << learner.id << ',' << p.n_train << ',' << p.accuracy << ','
                    << curve_seed << '\n';
            text << t << ": " << task_name(t) << "  " << c.label() << (c.unstable ? "  (unstable)" : "") << '\n';
        }
        write_file(out / "curve.csv", csv.str());
        write_file(out / "curve.txt", text.str());
        std::cout << text.str();
    } else if (multi->parsed()) {
        std::vector<TaskData> tasks;
        for (int t : parse_tasks(multi_tasks)) tasks.push_back(make_task_data(t, n_train, n_test, multi_seed));
        if (mm.lr <= 0 && mm.model == "memnn") mm.lr = kMultitaskLearningRate;
        Learner learner = mm.learner();
        learner.id += "/multitask";
        write_report(multitask_eval(learner, tasks, multi_seed), out, "multitask");
    } else if (rep->parsed()) {
        EvalReport merged;
        for (const auto& p : csvs) {
            EvalReport r = parse_csv(read_file(p));
            merged.results.insert(merged.results.end(), r.results.begin(), r.results.end());
        }
        if (!out.empty()) {
            write_file(out / "report.csv", render_csv(merged));
            write_file(out / "report.txt", render_text(merged));
        }
        std::cout << render_text(merged);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
