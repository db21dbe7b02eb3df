#include "qaworld/ngram.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "qaworld/rng.hpp"

namespace qaworld {

namespace {

const std::set<std::string> kStopwords = {"the", "is", "a", "an", "to", "of", "in", "and", "did", "what",
                                          "where", "who", "how", "does", "do", "then", "that", "there"};

void add_ngrams(const std::vector<std::string>& words, int n, const char* tag, SparseFeatures& out) {
    for (std::size_t i = 0; i < words.size(); ++i) {
        std::string gram = tag;
        for (int k = 0; k < n && i + static_cast<std::size_t>(k) < words.size(); ++k) {
            if (k) gram += ' ';
            gram += words[i + static_cast<std::size_t>(k)];
            out[gram] += 1.0;
        }
    }
}

} // namespace

void NgramConfig::validate() const {
    if (n < 1 || n > 3) throw std::invalid_argument("ngram n must be in 1..3");
    if (!(learning_rate > 0)) throw std::invalid_argument("learning rate must be > 0");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
}

std::vector<std::size_t> overlapping_sentences(const QaExample& ex, bool strip_stopwords) {
    std::set<std::string> q;
    for (const auto& w : ex.question)
        if (!strip_stopwords || !kStopwords.count(w)) q.insert(w);
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < ex.memory.size(); ++i)
        for (const auto& w : ex.memory[i])
            if (q.count(w)) {
                out.push_back(i);
                break;
            }
    return out;
}

SparseFeatures featurize(const QaExample& ex, const NgramConfig& cfg) {
    SparseFeatures f;
    add_ngrams(ex.question, cfg.n, "q:", f);
    if (cfg.filter) {
        for (std::size_t i : overlapping_sentences(ex, cfg.strip_stopwords)) add_ngrams(ex.memory[i], cfg.n, "s:", f);
    } else {
        for (const auto& m : ex.memory) add_ngrams(m, cfg.n, "s:", f);
    }
    return f;
}

std::vector<std::pair<int, double>> NgramModel::encode(const QaExample& ex) const {
    std::vector<std::pair<int, double>> out;
    for (const auto& [name, v] : featurize(ex, cfg_)) {
        auto it = feature_ids_.find(name);
        if (it != feature_ids_.end()) out.push_back({it->second, v});
    }
    return out;
}

NgramModel NgramModel::train(const std::vector<QaExample>& examples, const NgramConfig& cfg) {
    cfg.validate();
    NgramModel m;
    m.cfg_ = cfg;
    std::vector<const QaExample*> usable;
    std::map<std::string, int> class_ids;
    for (const QaExample& ex : examples) {
        if (ex.answer.size() != 1) continue;  // list answers are outside the class set
        usable.push_back(&ex);
        if (class_ids.emplace(ex.answer[0], static_cast<int>(m.classes_.size())).second) m.classes_.push_back(ex.answer[0]);
    }
    if (usable.empty()) throw EmptyDatasetError("no single-token answers to train on");
    for (const QaExample* ex : usable)
        for (const auto& [name, v] : featurize(*ex, cfg))
            if (m.feature_ids_.emplace(name, static_cast<int>(m.feature_names_.size())).second)
                m.feature_names_.push_back(name);
    m.weights_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m.classes_.size()),
                                       static_cast<Eigen::Index>(m.feature_names_.size()));

    std::vector<std::vector<std::pair<int, double>>> enc;
    std::vector<int> gold;
    for (const QaExample* ex : usable) {
        enc.push_back(m.encode(*ex));
        gold.push_back(class_ids.at(ex->answer[0]));
    }
    Rng rng(cfg.seed);
    std::vector<std::size_t> order(usable.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const auto n_classes = static_cast<int>(m.classes_.size());
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t i : order) {
            Eigen::VectorXd s = Eigen::VectorXd::Zero(n_classes);
            for (auto [f, v] : enc[i]) s += m.weights_.col(f) * v;
            int y = gold[i], rival = -1;
            for (int c = 0; c < n_classes; ++c)
                if (c != y && (rival < 0 || s[c] > s[rival])) rival = c;
            if (rival < 0 || s[y] - s[rival] >= 1.0) continue;
            for (auto [f, v] : enc[i]) {
                m.weights_(y, f) += cfg.learning_rate * v;
                m.weights_(rival, f) -= cfg.learning_rate * v;
            }
        }
    }
    std::size_t right = 0;
    for (const QaExample* ex : usable) right += m.predict(*ex) == ex->answer[0];
    m.train_accuracy_ = 100.0 * static_cast<double>(right) / static_cast<double>(usable.size());
    return m;
}

std::vector<double> NgramModel::scores(const QaExample& ex) const {
    std::vector<double> out(classes_.size(), 0.0);
    for (auto [f, v] : encode(ex))
        for (std::size_t c = 0; c < classes_.size(); ++c) out[c] += weights_(static_cast<Eigen::Index>(c), f) * v;
    return out;
}

std::string NgramModel::predict(const QaExample& ex) const {
    auto s = scores(ex);
    std::size_t best = 0;
    for (std::size_t c = 1; c < s.size(); ++c)
        if (s[c] > s[best]) best = c;
    return classes_.at(best);
}

std::string NgramModel::to_text() const {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "qaworld-ngram 1\n";
    out << "n\t" << cfg_.n << "\nfilter\t" << cfg_.filter << "\nstrip_stopwords\t" << cfg_.strip_stopwords << "\n";
    out << "classes";
    for (const auto& c : classes_) out << '\t' << c;
    out << '\n';
    for (std::size_t f = 0; f < feature_names_.size(); ++f) {
        out << feature_names_[f];
        for (std::size_t c = 0; c < classes_.size(); ++c)
            out << '\t' << weights_(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(f));
        out << '\n';
    }
    return out.str();
}

NgramModel NgramModel::from_text(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    auto fields = [](const std::string& l) {
        std::vector<std::string> out;
        std::stringstream ss(l);
        std::string item;
        while (std::getline(ss, item, '\t')) out.push_back(item);
        return out;
    };
    auto bad = [](const std::string& why) { return std::invalid_argument("ngram model: " + why); };
    if (!std::getline(in, line) || line != "qaworld-ngram 1") throw bad("missing header");
    NgramModel m;
    for (const char* key : {"n", "filter", "strip_stopwords"}) {
        if (!std::getline(in, line)) throw bad("truncated header");
        auto f = fields(line);
        if (f.size() != 2 || f[0] != key) throw bad(std::string("expected ") + key);
        int v = std::stoi(f[1]);
        if (f[0] == "n") m.cfg_.n = v;
        else if (f[0] == "filter") m.cfg_.filter = v != 0;
        else m.cfg_.strip_stopwords = v != 0;
    }
    if (!std::getline(in, line)) throw bad("missing classes");
    auto cls = fields(line);
    if (cls.empty() || cls[0] != "classes") throw bad("missing classes");
    m.classes_.assign(cls.begin() + 1, cls.end());
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        auto f = fields(line);
        if (f.size() != m.classes_.size() + 1) throw bad("row width mismatch");
        m.feature_ids_[f[0]] = static_cast<int>(m.feature_names_.size());
        m.feature_names_.push_back(f[0]);
        std::vector<double> w;
        for (std::size_t i = 1; i < f.size(); ++i) w.push_back(std::stod(f[i]));
        rows.push_back(std::move(w));
    }
    m.weights_.resize(static_cast<Eigen::Index>(m.classes_.size()), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t f = 0; f < rows.size(); ++f)
        for (std::size_t c = 0; c < m.classes_.size(); ++c)
            m.weights_(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(f)) = rows[f][c];
    return m;
}

} // namespace qaworld
