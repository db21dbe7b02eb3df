#include "qaworld/splits.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <regex>
#include <sstream>

namespace qaworld {

namespace {

std::string verbs_to_string(const std::vector<Verb>& verbs) {
    std::string out;
    for (Verb v : verbs) {
        if (!out.empty()) out += ',';
        out += to_string(v);
    }
    return out;
}

std::vector<Verb> verbs_from_string(const std::string& s) {
    std::vector<Verb> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        bool found = false;
        for (int v = 0; v <= static_cast<int>(Verb::examine); ++v)
            if (to_string(static_cast<Verb>(v)) == item) {
                out.push_back(static_cast<Verb>(v));
                found = true;
            }
        if (!found) throw IoError("manifest: unknown verb '" + item + "'");
    }
    return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& s) {
    try {
        std::size_t used = 0;
        auto v = std::stoull(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::logic_error&) {
        throw IoError("manifest: bad integer for " + key + ": '" + s + "'");
    }
}

} // namespace

SplitSpec default_split_spec(int task, std::uint64_t seed) {
    SplitSpec s;
    s.task = task;
    s.seed = seed;
    s.config = TaskConfig::defaults(task);
    return s;
}

SplitData make_split(const SplitSpec& spec, const Lexicon& lex) {
    TaskConfig cfg = spec.config.allowed_verbs.empty() ? TaskConfig::defaults(spec.task) : spec.config;
    Rng train_rng(mix_seed(spec.seed, static_cast<std::uint64_t>(spec.task) * 2));
    Rng test_rng(mix_seed(spec.seed, static_cast<std::uint64_t>(spec.task) * 2 + 1));
    SplitData out;
    out.train = generate_dataset(spec.task, spec.n_train, cfg, train_rng, lex);
    out.test = generate_dataset(spec.task, spec.n_test, cfg, test_rng, lex);
    out.train.split = Split::train;
    out.test.split = Split::test;
    if (spec.variant == Variant::shuffled) {
        ShuffleMap m(lex.vocabulary(), spec.shuffle_seed);
        out.train = apply_word_shuffle(out.train, m);
        out.test = apply_word_shuffle(out.test, m);
    }
    return out;
}

const std::string& Manifest::at(const std::string& key) const {
    auto it = fields.find(key);
    if (it == fields.end()) throw IoError("manifest: missing key '" + key + "'");
    return it->second;
}

std::string Manifest::emit() const {
    std::string out;
    for (const auto& [k, v] : fields) out += k + "=" + v + "\n";
    return out;
}

Manifest Manifest::parse(std::string_view text) {
    Manifest m;
    std::size_t line_no = 0, pos = 0;
    while (pos < text.size()) {
        ++line_no;
        auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        if (line.empty() || line.front() == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string_view::npos || eq == 0)
            throw IoError("manifest line " + std::to_string(line_no) + ": expected key=value");
        m.fields[std::string(line.substr(0, eq))] = std::string(line.substr(eq + 1));
    }
    return m;
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr))
        throw std::runtime_error("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

std::string split_file_name(int task, Split split) {
    return "qa" + std::to_string(task) + "_" + std::string(task_name(task)) + "_" + std::string(to_string(split)) + ".txt";
}

std::string manifest_file_name(int task) {
    return "qa" + std::to_string(task) + "_" + std::string(task_name(task)) + "_manifest.txt";
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string() + ": cannot open for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError(path.string() + ": read failed");
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError(path.parent_path().string() + ": " + ec.message());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string() + ": cannot open for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError(path.string() + ": write failed");
}

Manifest write_split(const SplitSpec& spec, const std::filesystem::path& out_dir, const Lexicon& lex) {
    TaskConfig cfg = spec.config.allowed_verbs.empty() ? TaskConfig::defaults(spec.task) : spec.config;
    SplitData data = make_split(spec, lex);
    std::string train = emit_babi(data.train), test = emit_babi(data.test);
    auto dir = out_dir / "tasks";
    write_file(dir / split_file_name(spec.task, Split::train), train);
    write_file(dir / split_file_name(spec.task, Split::test), test);

    Manifest m;
    auto& f = m.fields;
    f["format_version"] = std::to_string(kFormatVersion);
    f["task"] = std::to_string(spec.task);
    f["task_name"] = std::string(task_name(spec.task));
    f["seed"] = std::to_string(spec.seed);
    f["variant"] = std::string(to_string(spec.variant));
    f["shuffle_seed"] = std::to_string(spec.shuffle_seed);
    f["lexicon.language"] = lex.language();
    f["lexicon.version"] = lex.first("lexicon.version");
    f["train.file"] = split_file_name(spec.task, Split::train);
    f["train.questions"] = std::to_string(data.train.question_count());
    f["train.sha256"] = sha256_hex(train);
    f["test.file"] = split_file_name(spec.task, Split::test);
    f["test.questions"] = std::to_string(data.test.question_count());
    f["test.sha256"] = sha256_hex(test);
    f["config.n_actors"] = std::to_string(cfg.n_actors);
    f["config.n_locations"] = std::to_string(cfg.n_locations);
    f["config.n_objects"] = std::to_string(cfg.n_objects);
    f["config.min_statements"] = std::to_string(cfg.min_statements);
    f["config.max_statements"] = std::to_string(cfg.max_statements);
    f["config.questions_per_story"] = std::to_string(cfg.questions_per_story);
    f["config.min_gap"] = std::to_string(cfg.min_gap);
    f["config.max_gap"] = std::to_string(cfg.max_gap);
    std::ostringstream rate;
    rate.precision(17);
    rate << cfg.distractor_rate;
    f["config.distractor_rate"] = rate.str();
    f["config.allowed_verbs"] = verbs_to_string(cfg.allowed_verbs);
    write_file(dir / manifest_file_name(spec.task), m.emit());
    return m;
}

SplitSpec spec_from_manifest(const Manifest& m) {
    if (m.at("format_version") != std::to_string(kFormatVersion))
        throw IoError("manifest: unsupported format_version " + m.at("format_version"));
    SplitSpec s;
    s.task = static_cast<int>(to_u64("task", m.at("task")));
    check_task_id(s.task);
    s.seed = to_u64("seed", m.at("seed"));
    const std::string& variant = m.at("variant");
    if (variant == "en") s.variant = Variant::en;
    else if (variant == "shuffled") s.variant = Variant::shuffled;
    else throw IoError("manifest: unknown variant '" + variant + "'");
    s.shuffle_seed = to_u64("shuffle_seed", m.at("shuffle_seed"));
    s.n_train = to_u64("train.questions", m.at("train.questions"));
    s.n_test = to_u64("test.questions", m.at("test.questions"));
    TaskConfig& c = s.config;
    c.n_actors = static_cast<int>(to_u64("config.n_actors", m.at("config.n_actors")));
    c.n_locations = static_cast<int>(to_u64("config.n_locations", m.at("config.n_locations")));
    c.n_objects = static_cast<int>(to_u64("config.n_objects", m.at("config.n_objects")));
    c.min_statements = static_cast<int>(to_u64("config.min_statements", m.at("config.min_statements")));
    c.max_statements = static_cast<int>(to_u64("config.max_statements", m.at("config.max_statements")));
    c.questions_per_story = static_cast<int>(to_u64("config.questions_per_story", m.at("config.questions_per_story")));
    c.min_gap = static_cast<int>(to_u64("config.min_gap", m.at("config.min_gap")));
    c.max_gap = static_cast<int>(to_u64("config.max_gap", m.at("config.max_gap")));
    try {
        c.distractor_rate = std::stod(m.at("config.distractor_rate"));
    } catch (const std::logic_error&) {
        throw IoError("manifest: bad config.distractor_rate");
    }
    c.allowed_verbs = verbs_from_string(m.at("config.allowed_verbs"));
    c.validate(s.task);
    return s;
}

Manifest read_manifest(const std::filesystem::path& path) { return Manifest::parse(read_file(path)); }

Dataset read_dataset(const std::filesystem::path& path) {
    std::string text = read_file(path);
    Dataset ds;
    try {
        ds = parse_babi(text);
    } catch (const ParseError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    static const std::regex layout(R"(qa(\d+)_[a-z-]+_(train|test)\.txt)");
    std::smatch m;
    std::string name = path.filename().string();
    if (std::regex_match(name, m, layout)) {
        ds.task = std::stoi(m[1].str());
        ds.split = m[2].str() == "train" ? Split::train : Split::test;
    }
    return ds;
}

} // namespace qaworld
