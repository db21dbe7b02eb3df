#include "qaworld/memnn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "qaworld/rng.hpp"

namespace qaworld {

// Dense gradient buffers plus the columns of the big matrices touched so far.
struct MemNN::Workspace {
    Parameters g;
    std::vector<char> marked_match, marked_response;
    std::vector<int> touched_match, touched_response;

    void touch(Stage stage, int column) {
        auto& marks = stage == Stage::match ? marked_match : marked_response;
        auto& list = stage == Stage::match ? touched_match : touched_response;
        if (!marks[static_cast<std::size_t>(column)]) {
            marks[static_cast<std::size_t>(column)] = 1;
            list.push_back(column);
        }
    }
};

namespace {

Eigen::MatrixXd uniform_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.uniform(-scale, scale);
    return m;
}

std::string join_gram(const std::vector<std::string>& tokens, std::size_t i, std::size_t n) {
    std::string g = tokens[i];
    for (std::size_t k = 1; k < n; ++k) g += ' ' + tokens[i + k];
    return g;
}

std::string_view mode_name(FeatureMode m) {
    switch (m) {
    case FeatureMode::bow: return "bow";
    case FeatureMode::ngram: return "ngram";
    case FeatureMode::multilinear: return "multilinear";
    }
    return "bow";
}

} // namespace

void MemNNConfig::validate() const {
    auto fail = [](const std::string& m) { throw std::invalid_argument("memnn config: " + m); };
    if (dim < 1) fail("dim must be >= 1");
    if (!adaptive && (hops < 1 || hops > 3)) fail("fixed hops must be in 1..3");
    if (adaptive && (max_hops < 1 || max_hops > 10)) fail("max_hops must be in 1..10");
    if (ngram < 1 || ngram > 3) fail("ngram must be in 1..3");
    if (positions < 1) fail("positions must be >= 1");
    if (!(margin > 0)) fail("margin must be > 0");
    if (!(learning_rate > 0)) fail("learning rate must be > 0");
    if (!(init_scale > 0)) fail("init scale must be > 0");
    if (epochs < 0) fail("epochs must be >= 0");
    if (age_buckets < 1 || delta_clamp < 1) fail("time feature sizes must be >= 1");
}

MemNNConfig MemNNConfig::from_extensions(std::string_view extensions) {
    MemNNConfig c;
    std::string s(extensions);
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        if (item == "am") {
            c.adaptive = true;
            c.multiword = true;
        } else if (item == "ng") {
            if (c.features == FeatureMode::multilinear) throw std::invalid_argument("ng and ml are exclusive");
            c.features = FeatureMode::ngram;
        } else if (item == "ml") {
            if (c.features == FeatureMode::ngram) throw std::invalid_argument("ng and ml are exclusive");
            c.features = FeatureMode::multilinear;
        } else if (item == "nl") {
            c.nonlinear = true;
        } else {
            throw std::invalid_argument("unknown extension '" + item + "'");
        }
    }
    return c;
}

std::string MemNNConfig::id() const {
    std::vector<std::string> parts;
    if (adaptive) parts.push_back("am");
    if (features == FeatureMode::ngram) parts.push_back("ng");
    if (nonlinear) parts.push_back("nl");
    if (features == FeatureMode::multilinear) parts.push_back("ml");
    std::string out = "memnn";
    if (!adaptive) out += "-k" + std::to_string(hops);
    if (parts.empty()) return out;
    out += '[';
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? "+" : "") + parts[i];
    return out + ']';
}

void Vocabulary::add_word(const std::string& w) {
    if (word_ids.emplace(w, static_cast<int>(words.size())).second) words.push_back(w);
}

void Vocabulary::add_feature(const std::string& f) {
    if (feature_ids.emplace(f, static_cast<int>(features.size())).second) features.push_back(f);
}

void Vocabulary::add_text(const std::vector<std::string>& tokens, int n) {
    for (const auto& t : tokens) {
        add_word(t);
        add_feature(t);
    }
    for (std::size_t len = 2; len <= static_cast<std::size_t>(n); ++len)
        for (std::size_t i = 0; i + len <= tokens.size(); ++i) add_feature(join_gram(tokens, i, len));
}

void Parameters::for_each(const std::function<void(const std::string&, Eigen::MatrixXd&)>& f) {
    f("match", match);
    f("response", response);
    f("match_w", match_w);
    f("response_w", response_w);
    for (std::size_t j = 0; j < match_p.size(); ++j) f("match_p" + std::to_string(j), match_p[j]);
    for (std::size_t j = 0; j < response_p.size(); ++j) f("response_p" + std::to_string(j), response_p[j]);
    f("age", age);
    f("delta", delta);
}

MemNN::MemNN(MemNNConfig cfg) : cfg_(cfg) { cfg_.validate(); }

void MemNN::initialize(const std::vector<QaExample>& examples) {
    std::vector<const QaExample*> ptrs;
    for (const auto& e : examples) ptrs.push_back(&e);
    initialize(ptrs);
}

void MemNN::initialize(const std::vector<const QaExample*>& examples) {
    vocab_ = {};
    int n = cfg_.features == FeatureMode::ngram ? cfg_.ngram : 1;
    for (const QaExample* ex : examples) {
        for (const auto& m : ex->memory) vocab_.add_text(m, n);
        vocab_.add_text(ex->question, n);
        for (const auto& a : ex->answer) {
            vocab_.add_word(a);
            vocab_.add_feature(a);
        }
    }
    allocate();
}

void MemNN::allocate() {
    word_feature_.clear();
    for (const auto& w : vocab_.words) word_feature_.push_back(vocab_.feature_ids.at(w));
    const Eigen::Index n = cfg_.dim, f = features();
    Rng rng(mix_seed(cfg_.seed, 0x1a2b));
    const double s = cfg_.init_scale;
    params_ = {};
    params_.match = uniform_matrix(rng, n, 3 * f + 1, s);
    params_.response = uniform_matrix(rng, n, 5 * f + 1, s);
    if (cfg_.nonlinear) {
        params_.match_w = uniform_matrix(rng, n, n, s);
        params_.response_w = uniform_matrix(rng, n, n, s);
    }
    if (cfg_.features == FeatureMode::multilinear) {
        for (int j = 0; j < cfg_.positions; ++j) params_.match_p.push_back(uniform_matrix(rng, n, n, s));
        for (int j = 0; j < cfg_.positions; ++j) params_.response_p.push_back(uniform_matrix(rng, n, n, s));
    }
    if (cfg_.time_features) {
        params_.age = Eigen::MatrixXd::Zero(cfg_.age_buckets, 1);
        params_.delta = Eigen::MatrixXd::Zero(2 * cfg_.delta_clamp + 2, 1);
    }
    initialized_ = true;
    word_cache_valid_ = false;
}

EncodedText MemNN::encode_text(const std::vector<std::string>& tokens, bool strict) const {
    EncodedText out;
    const auto l = static_cast<int>(tokens.size());
    for (int i = 0; i < l; ++i) {
        auto it = vocab_.feature_ids.find(tokens[static_cast<std::size_t>(i)]);
        if (it == vocab_.feature_ids.end()) {
            if (strict) throw UnknownTokenError("unknown token '" + tokens[static_cast<std::size_t>(i)] + "'");
            continue;
        }
        int bin = 0;
        if (cfg_.features == FeatureMode::multilinear) bin = ((i + 1) * cfg_.positions + l - 1) / l - 1;
        out.items.push_back({it->second, bin});
    }
    if (cfg_.features == FeatureMode::ngram)
        for (std::size_t len = 2; len <= static_cast<std::size_t>(cfg_.ngram); ++len)
            for (std::size_t i = 0; i + len <= tokens.size(); ++i) {
                auto it = vocab_.feature_ids.find(join_gram(tokens, i, len));
                if (it != vocab_.feature_ids.end()) out.items.push_back({it->second, 0});
            }
    return out;
}

EncodedExample MemNN::encode(const QaExample& ex, bool strict) const {
    EncodedExample out;
    out.question = encode_text(ex.question, strict);
    for (const auto& m : ex.memory) out.memory.push_back(encode_text(m, strict));
    out.supporting = ex.supporting;
    for (const auto& a : ex.answer) {
        auto it = vocab_.word_ids.find(a);
        out.answer.push_back(it == vocab_.word_ids.end() ? -1 : it->second);
    }
    return out;
}

void MemNN::append_facts(Flat& f, const EncodedExample& ex, const std::vector<int>& facts) const {
    // with write-time features the newest fact gets a block of its own
    const int newest = cfg_.time_features && !facts.empty() ? *std::max_element(facts.begin(), facts.end()) : -1;
    for (int i : facts) append(f, ex.memory[static_cast<std::size_t>(i)], i == newest ? 4 : 1);
}

void MemNN::append(Flat& f, const EncodedText& t, int block) const {
    const int base = block * features();
    for (auto [id, bin] : t.items) f.items.push_back({base + id, bin});
}

MemNN::Flat MemNN::single(int column) const { return Flat{{{column, bins() - 1}}}; }

MemNN::Flat MemNN::word_flat(int word) const {
    return single(3 * features() + word_feature_[static_cast<std::size_t>(word)]);
}

MemNN::Embedding MemNN::embed(Stage stage, const Flat& x) const {
    const bool match = stage == Stage::match;
    const Eigen::MatrixXd& u = match ? params_.match : params_.response;
    const Eigen::Index n = cfg_.dim;
    Embedding r;
    Eigen::VectorXd a;
    if (cfg_.features == FeatureMode::multilinear) {
        const auto& p = match ? params_.match_p : params_.response_p;
        r.bins.assign(static_cast<std::size_t>(cfg_.positions), Eigen::VectorXd::Zero(n));
        for (auto [c, b] : x.items) r.bins[static_cast<std::size_t>(b)] += u.col(c);
        a = Eigen::VectorXd::Zero(n);
        for (std::size_t b = 0; b < r.bins.size(); ++b) a.noalias() += p[b] * r.bins[b];
    } else {
        a = Eigen::VectorXd::Zero(n);
        for (auto [c, b] : x.items) a += u.col(c);
    }
    if (cfg_.nonlinear || cfg_.features == FeatureMode::multilinear) r.h = a.array().tanh().matrix();
    else r.h = std::move(a);
    if (cfg_.nonlinear) r.e = ((match ? params_.match_w : params_.response_w) * r.h).array().tanh().matrix();
    else r.e = r.h;
    return r;
}

void MemNN::backprop(Stage stage, const Flat& x, const Embedding& emb, const Eigen::VectorXd& de, Workspace& w) const {
    const bool match = stage == Stage::match;
    Eigen::VectorXd dh;
    if (cfg_.nonlinear) {
        Eigen::VectorXd g = de.cwiseProduct((1.0 - emb.e.array().square()).matrix());
        (match ? w.g.match_w : w.g.response_w).noalias() += g * emb.h.transpose();
        dh.noalias() = (match ? params_.match_w : params_.response_w).transpose() * g;
    } else {
        dh = de;
    }
    Eigen::VectorXd da = dh;
    if (cfg_.nonlinear || cfg_.features == FeatureMode::multilinear)
        da = dh.cwiseProduct((1.0 - emb.h.array().square()).matrix());
    Eigen::MatrixXd& gu = match ? w.g.match : w.g.response;
    if (cfg_.features == FeatureMode::multilinear) {
        const auto& p = match ? params_.match_p : params_.response_p;
        auto& gp = match ? w.g.match_p : w.g.response_p;
        std::vector<Eigen::VectorXd> dbins(emb.bins.size());
        for (std::size_t b = 0; b < emb.bins.size(); ++b) {
            gp[b].noalias() += da * emb.bins[b].transpose();
            dbins[b].noalias() = p[b].transpose() * da;
        }
        for (auto [c, b] : x.items) {
            gu.col(c) += dbins[static_cast<std::size_t>(b)];
            w.touch(stage, c);
        }
    } else {
        for (auto [c, b] : x.items) {
            gu.col(c) += da;
            w.touch(stage, c);
        }
    }
}

int MemNN::age_bucket(int candidate, int n_memory) const {
    return std::min(n_memory - 1 - candidate, cfg_.age_buckets - 1);
}

int MemNN::delta_bucket(int candidate, int last) const {
    if (last < 0) return 0;
    int d = std::clamp(candidate - last, -cfg_.delta_clamp, cfg_.delta_clamp);
    return d + cfg_.delta_clamp + 1;
}

double MemNN::time_score(int candidate, int n_memory, int last) const {
    if (!cfg_.time_features) return 0.0;
    return params_.age(age_bucket(candidate, n_memory), 0) + params_.delta(delta_bucket(candidate, last), 0);
}

const std::vector<MemNN::Embedding>& MemNN::word_embeddings() const {
    if (!word_cache_valid_) {
        word_cache_.clear();
        for (std::size_t w = 0; w < vocab_.words.size(); ++w)
            word_cache_.push_back(embed(Stage::response, word_flat(static_cast<int>(w))));
        word_cache_valid_ = true;
    }
    return word_cache_;
}

double MemNN::loss_impl(const EncodedExample& ex, Workspace* ws, bool* correct) const {
    const int m = static_cast<int>(ex.memory.size());
    if (ex.supporting.empty()) throw MissingSupervisionError("question has no supporting facts");
    for (int s : ex.supporting)
        if (s < 0 || s >= m) throw MissingSupervisionError("supporting fact index out of range");
    const double gamma = cfg_.margin;
    double total = 0.0;
    bool ok = true;

    // ---- match stage ----
    std::vector<std::optional<Embedding>> mem(static_cast<std::size_t>(m));
    std::vector<Flat> mem_flat(static_cast<std::size_t>(m));
    std::vector<Eigen::VectorXd> dmem(static_cast<std::size_t>(m));
    auto memory = [&](int i) -> const Embedding& {
        auto k = static_cast<std::size_t>(i);
        if (!mem[k]) {
            append(mem_flat[k], ex.memory[k], 2);
            mem[k] = embed(Stage::match, mem_flat[k]);
        }
        return *mem[k];
    };
    const Flat null_flat = single(null_memory_column());
    const Embedding null_emb = embed(Stage::match, null_flat);
    Eigen::VectorXd dnull = Eigen::VectorXd::Zero(cfg_.dim);

    std::vector<int> selected;
    std::vector<char> is_selected(static_cast<std::size_t>(m), 0), is_gold(static_cast<std::size_t>(m), 0);
    int gold_left = 0;
    for (int s : ex.supporting)
        if (!is_gold[static_cast<std::size_t>(s)]) {
            is_gold[static_cast<std::size_t>(s)] = 1;
            ++gold_left;
        }

    for (int hop = 0; hop < (cfg_.adaptive ? cfg_.max_hops : cfg_.hops); ++hop) {
        if (!cfg_.adaptive && static_cast<int>(selected.size()) == m) break;
        Flat x;
        append(x, ex.question, 0);
        for (int s : selected) append(x, ex.memory[static_cast<std::size_t>(s)], 1);
        const Embedding xe = embed(Stage::match, x);
        const int last = selected.empty() ? -1 : selected.back();
        std::vector<double> score(static_cast<std::size_t>(m), 0.0);
        for (int i = 0; i < m; ++i)
            if (!is_selected[static_cast<std::size_t>(i)])
                score[static_cast<std::size_t>(i)] = xe.e.dot(memory(i).e) + time_score(i, m, last);
        const double null_score = xe.e.dot(null_emb.e);

        if (gold_left == 0 && !cfg_.adaptive) {
            // extra fixed hop: follow the model's own choice, no loss
            int best = -1;
            for (int i = 0; i < m; ++i)
                if (!is_selected[static_cast<std::size_t>(i)] && (best < 0 || score[static_cast<std::size_t>(i)] > score[static_cast<std::size_t>(best)]))
                    best = i;
            selected.push_back(best);
            is_selected[static_cast<std::size_t>(best)] = 1;
            continue;
        }
        int target = -1;  // -1 is the null memory
        if (gold_left > 0)
            for (int i = 0; i < m; ++i)
                if (is_gold[static_cast<std::size_t>(i)] && !is_selected[static_cast<std::size_t>(i)] &&
                    (target < 0 || score[static_cast<std::size_t>(i)] > score[static_cast<std::size_t>(target)]))
                    target = i;
        const double st = target < 0 ? null_score : score[static_cast<std::size_t>(target)];

        std::vector<std::pair<int, double>> coef;  // candidate, d loss / d score
        double target_coef = 0.0;
        auto consider = [&](int cand, double sc) {
            double v = gamma - st + sc;
            if (sc >= st) ok = false;
            if (v > 0) {
                total += v;
                coef.push_back({cand, 1.0});
                target_coef -= 1.0;
            }
        };
        for (int i = 0; i < m; ++i) {
            auto k = static_cast<std::size_t>(i);
            if (i == target || is_selected[k] || (is_gold[k] && target >= 0)) continue;
            consider(i, score[k]);
        }
        if (cfg_.adaptive && target >= 0) consider(-1, null_score);
        if (ws && !coef.empty()) {
            coef.push_back({target, target_coef});
            Eigen::VectorXd dx = Eigen::VectorXd::Zero(cfg_.dim);
            for (auto [cand, c] : coef) {
                if (cand < 0) {
                    dx += c * null_emb.e;
                    dnull += c * xe.e;
                    continue;
                }
                auto k = static_cast<std::size_t>(cand);
                dx += c * mem[k]->e;
                if (dmem[k].size() == 0) dmem[k] = Eigen::VectorXd::Zero(cfg_.dim);
                dmem[k] += c * xe.e;
                if (cfg_.time_features) {
                    ws->g.age(age_bucket(cand, m), 0) += c;
                    ws->g.delta(delta_bucket(cand, last), 0) += c;
                }
            }
            backprop(Stage::match, x, xe, dx, *ws);
        }
        if (target < 0) break;
        selected.push_back(target);
        is_selected[static_cast<std::size_t>(target)] = 1;
        --gold_left;
    }
    if (ws) {
        for (int i = 0; i < m; ++i) {
            auto k = static_cast<std::size_t>(i);
            if (dmem[k].size()) backprop(Stage::match, mem_flat[k], *mem[k], dmem[k], *ws);
        }
        if (!dnull.isZero(0)) backprop(Stage::match, null_flat, null_emb, dnull, *ws);
    }

    // ---- response stage ----
    std::vector<int> targets;
    if (cfg_.multiword) {
        targets = ex.answer;
        targets.push_back(-1);  // null word ends the response
    } else {
        targets.push_back(ex.answer.empty() ? -1 : ex.answer.front());
    }
    const auto& words = word_embeddings();
    const int nw = static_cast<int>(words.size());
    const Flat null_word = single(null_word_column());
    const Embedding null_word_emb = embed(Stage::response, null_word);
    std::vector<Eigen::VectorXd> dword(static_cast<std::size_t>(nw));
    Eigen::VectorXd dnull_word = Eigen::VectorXd::Zero(cfg_.dim);
    Flat base;
    append(base, ex.question, 0);
    append_facts(base, ex, selected);
    std::vector<int> emitted;
    for (int t : targets) {
        if (t < 0 && !cfg_.multiword) {
            ok = false;  // answer outside the dictionary
            break;
        }
        Flat x = base;
        for (int w : emitted) append(x, EncodedText{{{word_feature_[static_cast<std::size_t>(w)], bins() - 1}}}, 2);
        const Embedding xe = embed(Stage::response, x);
        const double st = t < 0 ? xe.e.dot(null_word_emb.e) : xe.e.dot(words[static_cast<std::size_t>(t)].e);
        std::vector<std::pair<int, double>> coef;
        double target_coef = 0.0;
        auto consider = [&](int cand, double sc) {
            double v = gamma - st + sc;
            if (sc >= st) ok = false;
            if (v > 0) {
                total += v;
                coef.push_back({cand, 1.0});
                target_coef -= 1.0;
            }
        };
        for (int w = 0; w < nw; ++w)
            if (w != t) consider(w, xe.e.dot(words[static_cast<std::size_t>(w)].e));
        if (cfg_.multiword && t >= 0) consider(-1, xe.e.dot(null_word_emb.e));
        if (ws && !coef.empty()) {
            coef.push_back({t, target_coef});
            Eigen::VectorXd dx = Eigen::VectorXd::Zero(cfg_.dim);
            for (auto [cand, c] : coef) {
                if (cand < 0) {
                    dx += c * null_word_emb.e;
                    dnull_word += c * xe.e;
                    continue;
                }
                auto k = static_cast<std::size_t>(cand);
                dx += c * words[k].e;
                if (dword[k].size() == 0) dword[k] = Eigen::VectorXd::Zero(cfg_.dim);
                dword[k] += c * xe.e;
            }
            backprop(Stage::response, x, xe, dx, *ws);
        }
        if (t >= 0) emitted.push_back(t);
    }
    if (ws) {
        for (int w = 0; w < nw; ++w) {
            auto k = static_cast<std::size_t>(w);
            if (dword[k].size()) backprop(Stage::response, word_flat(w), words[k], dword[k], *ws);
        }
        if (!dnull_word.isZero(0)) backprop(Stage::response, null_word, null_word_emb, dnull_word, *ws);
    }
    if (correct) *correct = ok;
    return total;
}

namespace {

Parameters zeros_like(Parameters& p) {
    Parameters g = p;
    g.for_each([](const std::string&, Eigen::MatrixXd& m) { m.setZero(); });
    return g;
}

} // namespace

double MemNN::loss(const EncodedExample& ex, Parameters* grad) const {
    if (!grad) return loss_impl(ex, nullptr, nullptr);
    Workspace ws;
    ws.g = zeros_like(const_cast<Parameters&>(params_));
    ws.marked_match.assign(static_cast<std::size_t>(params_.match.cols()), 0);
    ws.marked_response.assign(static_cast<std::size_t>(params_.response.cols()), 0);
    double l = loss_impl(ex, &ws, nullptr);
    *grad = std::move(ws.g);
    return l;
}

std::vector<EpochStats> MemNN::train(const std::vector<QaExample>& examples,
                                     const std::function<void(const EpochStats&)>& on_epoch) {
    if (examples.empty()) throw std::invalid_argument("no training examples");
    if (!initialized_) initialize(examples);
    std::vector<EncodedExample> enc;
    enc.reserve(examples.size());
    for (const auto& ex : examples) {
        if (ex.supporting.empty()) throw MissingSupervisionError("training question without supporting facts");
        enc.push_back(encode(ex));
    }
    Workspace ws;
    ws.g = zeros_like(params_);
    ws.marked_match.assign(static_cast<std::size_t>(params_.match.cols()), 0);
    ws.marked_response.assign(static_cast<std::size_t>(params_.response.cols()), 0);
    const double lr = cfg_.learning_rate;
    Rng rng(mix_seed(cfg_.seed, 0x0de5));
    std::vector<std::size_t> order(enc.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<EpochStats> log;
    for (int epoch = 1; epoch <= cfg_.epochs; ++epoch) {
        rng.shuffle(order);
        double total = 0.0;
        std::size_t right = 0;
        for (std::size_t i : order) {
            bool ok = false;
            double l = loss_impl(enc[i], &ws, &ok);
            right += ok;
            total += l;
            if (l <= 0) continue;
            for (int c : ws.touched_match) {
                params_.match.col(c) -= lr * ws.g.match.col(c);
                ws.g.match.col(c).setZero();
                ws.marked_match[static_cast<std::size_t>(c)] = 0;
            }
            for (int c : ws.touched_response) {
                params_.response.col(c) -= lr * ws.g.response.col(c);
                ws.g.response.col(c).setZero();
                ws.marked_response[static_cast<std::size_t>(c)] = 0;
            }
            ws.touched_match.clear();
            ws.touched_response.clear();
            auto step = [lr](Eigen::MatrixXd& p, Eigen::MatrixXd& g) {
                if (g.size() == 0) return;
                p -= lr * g;
                g.setZero();
            };
            step(params_.match_w, ws.g.match_w);
            step(params_.response_w, ws.g.response_w);
            for (std::size_t j = 0; j < params_.match_p.size(); ++j) step(params_.match_p[j], ws.g.match_p[j]);
            for (std::size_t j = 0; j < params_.response_p.size(); ++j) step(params_.response_p[j], ws.g.response_p[j]);
            step(params_.age, ws.g.age);
            step(params_.delta, ws.g.delta);
            word_cache_valid_ = false;
        }
        EpochStats s{epoch, total / static_cast<double>(enc.size()),
                     100.0 * static_cast<double>(right) / static_cast<double>(enc.size())};
        log.push_back(s);
        if (on_epoch) on_epoch(s);
        if (total == 0.0) break;
    }
    return log;
}

Prediction MemNN::predict_encoded(const EncodedExample& ex) const {
    const int m = static_cast<int>(ex.memory.size());
    std::vector<Embedding> mem;
    mem.reserve(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        Flat f;
        append(f, ex.memory[static_cast<std::size_t>(i)], 2);
        mem.push_back(embed(Stage::match, f));
    }
    const Embedding null_emb = embed(Stage::match, single(null_memory_column()));
    Prediction out;
    std::vector<char> used(static_cast<std::size_t>(m), 0);
    const int hops = cfg_.adaptive ? cfg_.max_hops : cfg_.hops;
    for (int hop = 0; hop < hops; ++hop) {
        Flat x;
        append(x, ex.question, 0);
        for (int s : out.supporting) append(x, ex.memory[static_cast<std::size_t>(s)], 1);
        const Embedding xe = embed(Stage::match, x);
        const int last = out.supporting.empty() ? -1 : out.supporting.back();
        int best = -1;
        double best_score = 0.0;
        for (int i = 0; i < m; ++i) {
            if (used[static_cast<std::size_t>(i)]) continue;
            double s = xe.e.dot(mem[static_cast<std::size_t>(i)].e) + time_score(i, m, last);
            if (best < 0 || s > best_score) {
                best = i;
                best_score = s;
            }
        }
        if (cfg_.adaptive && (best < 0 || xe.e.dot(null_emb.e) > best_score)) break;
        if (best < 0) break;
        out.supporting.push_back(best);
        used[static_cast<std::size_t>(best)] = 1;
    }

    const auto& words = word_embeddings();
    const Embedding null_word = embed(Stage::response, single(null_word_column()));
    Flat base;
    append(base, ex.question, 0);
    append_facts(base, ex, out.supporting);
    std::vector<int> emitted;
    const int steps = cfg_.multiword ? 10 : 1;
    for (int step = 0; step < steps; ++step) {
        Flat x = base;
        for (int w : emitted) append(x, EncodedText{{{word_feature_[static_cast<std::size_t>(w)], bins() - 1}}}, 2);
        const Embedding xe = embed(Stage::response, x);
        int best = -1;
        double best_score = 0.0;
        for (std::size_t w = 0; w < words.size(); ++w) {
            double s = xe.e.dot(words[w].e);
            if (best < 0 || s > best_score) {
                best = static_cast<int>(w);
                best_score = s;
            }
        }
        if (cfg_.multiword && (best < 0 || xe.e.dot(null_word.e) > best_score)) break;
        if (best < 0) break;
        emitted.push_back(best);
    }
    for (int w : emitted) out.answer.push_back(vocab_.words[static_cast<std::size_t>(w)]);
    return out;
}

Prediction MemNN::predict(const QaExample& ex) const { return predict_encoded(encode(ex)); }

std::vector<int> MemNN::infer_supporting(const QaExample& ex) const { return predict(ex).supporting; }

double MemNN::match_score(const QaExample& ex, const std::vector<int>& selected, int candidate) const {
    EncodedExample e = encode(ex);
    const int m = static_cast<int>(e.memory.size());
    Flat x;
    append(x, e.question, 0);
    for (int s : selected) append(x, e.memory.at(static_cast<std::size_t>(s)), 1);
    const Embedding xe = embed(Stage::match, x);
    if (candidate < 0 || candidate >= m) return xe.e.dot(embed(Stage::match, single(null_memory_column())).e);
    Flat c;
    append(c, e.memory[static_cast<std::size_t>(candidate)], 2);
    return xe.e.dot(embed(Stage::match, c).e) + time_score(candidate, m, selected.empty() ? -1 : selected.back());
}

Eigen::VectorXd MemNN::embed_text(const std::vector<std::string>& tokens, bool match_stage, int block) const {
    Flat x;
    append(x, encode_text(tokens, true), block);
    return embed(match_stage ? Stage::match : Stage::response, x).e;
}

GradientCheck MemNN::gradient_check(const QaExample& ex, double epsilon) {
    if (epsilon < 1e-6 || epsilon > 1e-3) throw std::invalid_argument("epsilon must be in [1e-6, 1e-3]");
    EncodedExample e = encode(ex);
    Parameters grad;
    GradientCheck out;
    out.loss = loss(e, &grad);
    std::map<std::string, Eigen::MatrixXd*> analytic;
    grad.for_each([&](const std::string& name, Eigen::MatrixXd& m) { analytic[name] = &m; });
    params_.for_each([&](const std::string& name, Eigen::MatrixXd& p) {
        const Eigen::MatrixXd& a = *analytic.at(name);
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            const double keep = p.data()[i];
            p.data()[i] = keep + epsilon;
            word_cache_valid_ = false;
            const double up = loss_impl(e, nullptr, nullptr);
            p.data()[i] = keep - epsilon;
            word_cache_valid_ = false;
            const double down = loss_impl(e, nullptr, nullptr);
            p.data()[i] = keep;
            const double numeric = (up - down) / (2 * epsilon);
            const double an = a.data()[i];
            // Below 1e-8 a central difference only measures rounding in the loss.
            const double rel = std::max(std::abs(an), std::abs(numeric)) < 1e-8
                                   ? 0.0
                                   : std::abs(an - numeric) / (std::abs(an) + std::abs(numeric));
            out.max_relative_error = std::max(out.max_relative_error, rel);
            out.max_abs_gradient = std::max(out.max_abs_gradient, std::abs(an));
            ++out.checked;
        }
    });
    word_cache_valid_ = false;
    return out;
}

void MemNN::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
    const MemNNConfig& c = cfg_;
    out << "qaworld-memnn 1\n";
    out << "dim " << c.dim << "\nadaptive " << c.adaptive << "\nhops " << c.hops << "\nmax_hops " << c.max_hops
        << "\nmultiword " << c.multiword << "\nfeatures " << mode_name(c.features) << "\nngram " << c.ngram
        << "\npositions " << c.positions << "\nnonlinear " << c.nonlinear << "\ntime_features " << c.time_features
        << "\nage_buckets " << c.age_buckets << "\ndelta_clamp " << c.delta_clamp << "\nseed " << c.seed << "\n";
    out.precision(17);
    out << "margin " << c.margin << "\nlearning_rate " << c.learning_rate << "\ninit_scale " << c.init_scale
        << "\nepochs " << c.epochs << "\n";
    out << "words " << vocab_.words.size() << "\n";
    for (const auto& w : vocab_.words) out << w << "\n";
    out << "features " << vocab_.features.size() << "\n";
    for (const auto& f : vocab_.features) out << f << "\n";
    out << "parameters\n";
    const_cast<Parameters&>(params_).for_each([&](const std::string& name, Eigen::MatrixXd& m) {
        out << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
        out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
        out << '\n';
    });
    if (!out) throw std::runtime_error(path.string() + ": write failed");
}

MemNN MemNN::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path.string() + ": cannot open for reading");
    auto bad = [&](const std::string& why) { return std::runtime_error(path.string() + ": " + why); };
    std::string line;
    if (!std::getline(in, line) || line != "qaworld-memnn 1") throw bad("not a memnn checkpoint");
    MemNNConfig c;
    std::map<std::string, std::string> kv;
    while (std::getline(in, line)) {
        auto sp = line.find(' ');
        if (sp == std::string::npos) throw bad("malformed header line");
        std::string key = line.substr(0, sp), val = line.substr(sp + 1);
        if (key == "words") {
            kv[key] = val;
            break;
        }
        kv[key] = val;
    }
    c.dim = std::stoi(kv.at("dim"));
    c.adaptive = kv.at("adaptive") == "1";
    c.hops = std::stoi(kv.at("hops"));
    c.max_hops = std::stoi(kv.at("max_hops"));
    c.multiword = kv.at("multiword") == "1";
    const std::string& mode = kv.at("features");
    c.features = mode == "ngram" ? FeatureMode::ngram : mode == "multilinear" ? FeatureMode::multilinear : FeatureMode::bow;
    c.ngram = std::stoi(kv.at("ngram"));
    c.positions = std::stoi(kv.at("positions"));
    c.nonlinear = kv.at("nonlinear") == "1";
    c.time_features = kv.at("time_features") == "1";
    c.age_buckets = std::stoi(kv.at("age_buckets"));
    c.delta_clamp = std::stoi(kv.at("delta_clamp"));
    c.seed = std::stoull(kv.at("seed"));
    c.margin = std::stod(kv.at("margin"));
    c.learning_rate = std::stod(kv.at("learning_rate"));
    c.init_scale = std::stod(kv.at("init_scale"));
    c.epochs = std::stoi(kv.at("epochs"));
    MemNN model(c);
    auto n_words = std::stoul(kv.at("words"));
    for (std::size_t i = 0; i < n_words; ++i) {
        if (!std::getline(in, line)) throw bad("truncated word list");
        model.vocab_.add_word(line);
    }
    if (!std::getline(in, line) || line.rfind("features ", 0) != 0) throw bad("missing feature list");
    auto n_features = std::stoul(line.substr(9));
    for (std::size_t i = 0; i < n_features; ++i) {
        if (!std::getline(in, line)) throw bad("truncated feature list");
        model.vocab_.add_feature(line);
    }
    if (!std::getline(in, line) || line != "parameters") throw bad("missing parameters");
    model.allocate();
    model.params_.for_each([&](const std::string& name, Eigen::MatrixXd& m) {
        std::string header;
        if (!std::getline(in, header)) throw bad("truncated parameters");
        std::istringstream hs(header);
        std::string got;
        Eigen::Index rows = 0, cols = 0;
        hs >> got >> rows >> cols;
        if (got != name || rows != m.rows() || cols != m.cols()) throw bad("parameter block mismatch: " + name);
        in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
        in.get();
        if (!in) throw bad("truncated parameter block " + name);
    });
    return model;
}

} // namespace qaworld
