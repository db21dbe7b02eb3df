#include "qaworld/lexicon.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace qaworld {

namespace detail {
extern const char kEnglishLexicon[];
}

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::vector<std::string> split_words(std::string_view s) {
    std::vector<std::string> out;
    std::istringstream in{std::string(s)};
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

} // namespace

// ---------------------------------------------------------------------------
// Lexicon

Lexicon Lexicon::parse(std::string_view text) {
    Lexicon lex;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw LexiconError("lexicon line " + std::to_string(line_no) + ": expected key = value");
        std::string key = trim(std::string_view(t).substr(0, eq));
        std::string value = trim(std::string_view(t).substr(eq + 1));
        if (key.empty()) throw LexiconError("lexicon line " + std::to_string(line_no) + ": empty key");
        std::vector<std::string> alts;
        std::size_t start = 0;
        while (true) {
            auto bar = value.find('|', start);
            std::string part = trim(std::string_view(value).substr(start, bar == std::string::npos ? std::string::npos : bar - start));
            if (part.empty())
                throw LexiconError("lexicon line " + std::to_string(line_no) + ": empty alternative");
            alts.push_back(part);
            if (bar == std::string::npos) break;
            start = bar + 1;
        }
        if (!lex.entries_.emplace(key, std::move(alts)).second)
            throw LexiconError("lexicon line " + std::to_string(line_no) + ": duplicate key " + key);
    }
    for (const char* required : {"lexicon.language", "lexicon.version"})
        if (!lex.find(required)) throw LexiconError(std::string("lexicon lacks ") + required);
    return lex;
}

Lexicon Lexicon::from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LexiconError("cannot read lexicon " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

const Lexicon& Lexicon::english() {
    static const Lexicon lex = parse(detail::kEnglishLexicon);
    return lex;
}

const std::vector<std::string>* Lexicon::find(std::string_view key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
}

const std::vector<std::string>& Lexicon::values(std::string_view key) const {
    if (auto* v = find(key)) return *v;
    throw TemplateError("lexicon has no entry " + std::string(key));
}

std::string Lexicon::surface(std::string_view canonical) const {
    std::string c(canonical);
    for (const char* prefix : {"actor.", "location.", "object."})
        if (auto* v = find(prefix + c)) return v->front();
    if (find("species." + c) || find("color." + c) || find("state." + c)) return c;
    throw TemplateError("no surface form for " + c);
}

std::string Lexicon::singular(std::string_view species) const {
    return first("species." + std::string(species));
}

std::string Lexicon::pronoun(std::string_view actor) const {
    const auto& v = values("actor." + std::string(actor));
    if (v.size() < 2) throw TemplateError("no gender for " + std::string(actor));
    return first("pronoun." + v[1]);
}

std::vector<std::string> Lexicon::task_forms(int task) const {
    auto* v = find("task." + std::to_string(task) + ".forms");
    if (!v) return {};
    return split_words(v->front());
}

std::vector<std::string> Lexicon::ids(std::string_view prefix) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries_)
        if (starts_with(k, prefix) && k.size() > prefix.size()) out.push_back(k.substr(prefix.size()));
    return out;
}

std::set<std::string> Lexicon::vocabulary() const {
    std::set<std::string> vocab;
    auto add_phrase = [&](std::string_view phrase) {
        for (std::string w : split_words(phrase)) {
            if (w.front() == '{') {
                auto close = w.find('}');
                w = close == std::string::npos ? "" : w.substr(close + 1);
            }
            while (!w.empty() && (w.back() == '.' || w.back() == '?')) w.pop_back();
            if (!w.empty()) vocab.insert(lower(w));
        }
    };
    for (const auto& [k, v] : entries_) {
        if (starts_with(k, "lexicon.") || starts_with(k, "task.")) continue;
        if (starts_with(k, "actor.")) {
            add_phrase(v.front());
            continue;
        }
        if (starts_with(k, "species.")) add_phrase(k.substr(8));
        for (const auto& alt : v) add_phrase(alt);
    }
    return vocab;
}

// ---------------------------------------------------------------------------
// rendering

namespace {

// Which event shape a statement variant describes.
std::string shape_of_form(const std::string& form) {
    static const std::map<std::string, std::string> go_shapes = {
        {"go.plain", "go"},          {"go.is_in", "go"},          {"go.was_in", "go"},
        {"go.then_named", "go"},     {"go.pronoun", "go.pronoun"}, {"go.conj", "go.conj"},
        {"go.group", "go.group"},    {"go.negated", "go.negated"}, {"go.not_in", "go.negated"},
        {"go.either", "go.either"},  {"go.timed_prefix", "go.timed"}, {"go.timed_suffix", "go.timed"}};
    if (auto it = go_shapes.find(form); it != go_shapes.end()) return it->second;
    return form.substr(0, form.find('.'));
}

struct Filled {
    std::string shape;
    std::map<std::string, std::string> slots;
    std::vector<EntityId> subjects;
};

Filled fill(std::span<const Event> events, const std::vector<Entity>& ents, const Lexicon& lex) {
    if (events.empty()) throw TemplateError("statement without events");
    auto name = [&](EntityId id) -> const std::string& { return ents.at(id).name; };
    auto surf = [&](EntityId id) { return lex.surface(name(id)); };
    const Event& ev = events.front();
    const Command& c = ev.command;
    Filled f;
    if (events.size() == 2) {
        const Event& ev2 = events[1];
        bool both_go = c.verb == Verb::go && ev2.command.verb == Verb::go &&
                       c.args == ev2.command.args && ev2.disclosure.joint;
        if (!both_go) throw TemplateError("only joint movements share a sentence");
        f.shape = ev.disclosure.kind == DisclosureKind::coreferent ? "go.group" : "go.conj";
        f.slots = {{"a", surf(c.actor)}, {"b", surf(ev2.command.actor)}, {"l", surf(c.args[0])}};
        f.subjects = {c.actor, ev2.command.actor};
        return f;
    }
    if (events.size() > 2) throw TemplateError("too many events for one sentence");
    switch (c.verb) {
    case Verb::go:
        f.subjects = {c.actor};
        f.slots = {{"a", surf(c.actor)}, {"l", surf(c.args[0])}};
        switch (ev.disclosure.kind) {
        case DisclosureKind::coreferent:
            f.shape = "go.pronoun";
            f.slots["pron"] = lex.pronoun(name(c.actor));
            break;
        case DisclosureKind::negated_origin:
            f.shape = "go.negated";
            f.slots["l"] = surf(ev.disclosure.other);
            break;
        case DisclosureKind::either:
            f.shape = "go.either";
            f.slots["l2"] = surf(ev.disclosure.other);
            if (ev.disclosure.other_first) std::swap(f.slots["l"], f.slots["l2"]);
            break;
        default:
            f.shape = ev.slot ? "go.timed" : "go";
            if (ev.slot) f.slots["adv"] = lex.first("adverb." + std::string(to_string(*ev.slot)));
            break;
        }
        return f;
    case Verb::get:
    case Verb::drop:
        f.shape = std::string(to_string(c.verb));
        f.slots = {{"a", surf(c.actor)}, {"o", surf(c.args[0])}};
        f.subjects = {c.actor};
        return f;
    case Verb::get_from:
    case Verb::put:
        f.shape = std::string(to_string(c.verb));
        f.slots = {{"a", surf(c.actor)}, {"o", surf(c.args[0])}, {"o2", surf(c.args[1])}};
        f.subjects = {c.actor};
        return f;
    case Verb::give:
        f.shape = "give";
        f.slots = {{"a", surf(c.actor)}, {"o", surf(c.args[0])}, {"b", surf(c.args[1])}};
        f.subjects = {c.actor};
        return f;
    case Verb::set_state: {
        EntityId e = c.args[0];
        f.subjects = {e};
        std::visit(
            [&](const auto& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, SetMental>) {
                    f.shape = "mental";
                    f.slots = {{"a", surf(e)}, {"state", lex.surface(to_string(v.state))}};
                } else if constexpr (std::is_same_v<T, SetExit>) {
                    f.shape = "exit";
                    f.slots = {{"l", surf(e)}, {"l2", surf(v.neighbor)},
                               {"dir", lex.first("compass." + std::string(to_string(v.dir)))}};
                } else if constexpr (std::is_same_v<T, SetType>) {
                    f.shape = "type";
                    f.slots = {{"a", surf(e)}, {"sg", lex.singular(name(v.type))}};
                } else if constexpr (std::is_same_v<T, SetFear>) {
                    f.shape = "fear";
                    f.slots = {{"pl", surf(e)}, {"pl2", surf(v.type)}};
                } else if constexpr (std::is_same_v<T, SetColor>) {
                    f.shape = "color";
                    f.slots = {{"a", surf(e)}, {"color", lex.surface(v.color)}};
                } else if constexpr (std::is_same_v<T, SetGrid>) {
                    if (ev.disclosure.kind != DisclosureKind::relative_to)
                        throw TemplateError("absolute placements have no surface form");
                    f.shape = "place";
                    f.slots = {{"o", surf(e)}, {"o2", surf(ev.disclosure.other)},
                               {"rel", lex.first("relation." + std::string(to_string(ev.disclosure.dir)))}};
                } else if constexpr (std::is_same_v<T, SetSmaller>) {
                    f.shape = "smaller";
                    f.slots = {{"o", surf(e)}, {"o2", surf(v.other)}};
                }
            },
            *c.state);
        return f;
    }
    default: break;
    }
    throw TemplateError("no statement shape for verb " + std::string(to_string(c.verb)));
}

std::string capitalize(std::string s) {
    if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    return s;
}

std::string substitute(const std::string& tmpl, const std::map<std::string, std::string>& slots) {
    std::string out;
    for (std::size_t i = 0; i < tmpl.size(); ++i) {
        if (tmpl[i] != '{') {
            out += tmpl[i];
            continue;
        }
        auto close = tmpl.find('}', i);
        if (close == std::string::npos) throw TemplateError("unterminated slot in " + tmpl);
        std::string slot = tmpl.substr(i + 1, close - i - 1);
        auto it = slots.find(slot);
        if (it == slots.end()) throw TemplateError("unfilled slot {" + slot + "} in " + tmpl);
        out += it->second;
        i = close;
    }
    return out;
}

std::set<EntityId> as_set(const std::vector<EntityId>& v) { return {v.begin(), v.end()}; }

} // namespace

std::string render_statement(std::span<const Event> events, const std::vector<Entity>& ents,
                             const Lexicon& lex, RenderContext& ctx, Rng& rng) {
    Filled f = fill(events, ents, lex);
    if (f.shape == "go.pronoun" || f.shape == "go.group") {
        if (ctx.previous_subjects.empty() || as_set(ctx.previous_subjects) != as_set(f.subjects))
            throw TemplateError("pronoun does not refer to the previous subject");
        if (f.shape == "go.group" && f.subjects.size() < 2)
            throw TemplateError("group pronoun needs two referents");
        if (f.shape == "go.group") f.slots["group"] = lex.first("pronoun.group");
    }
    std::vector<std::string> options;
    for (const std::string& form : lex.task_forms(ctx.task)) {
        if (shape_of_form(form) != f.shape) continue;
        const std::string& t = lex.first("statement." + form);
        if (t.find("{then}") != std::string::npos && ctx.previous_subjects.empty()) continue;
        options.push_back(form);
    }
    if (options.empty())
        throw TemplateError("task " + std::to_string(ctx.task) + " has no template for " + f.shape);
    const std::string& form = options[rng.below(options.size())];
    const std::string& tmpl = lex.first("statement." + form);
    for (const char* verb : {"go", "get", "drop", "give"})
        if (tmpl.find("{" + std::string(verb) + "}") != std::string::npos)
            f.slots[verb] = rng.pick(lex.values(std::string("verb.") + verb));
    if (tmpl.find("{then}") != std::string::npos) f.slots["then"] = rng.pick(lex.values("connective"));
    ctx.previous_subjects = f.subjects;
    return capitalize(substitute(tmpl, f.slots));
}

std::string render_question(const Query& q, const std::vector<Entity>& ents, const Lexicon& lex) {
    auto surf = [&](std::size_t i) { return lex.surface(ents.at(q.args.at(i)).name); };
    auto mention = [&](std::size_t i) {
        const Entity& e = ents.at(q.args.at(i));
        return e.kind == EntityKind::actor ? surf(i) : "the " + surf(i);
    };
    std::string key = "question." + std::string(to_string(q.kind));
    std::map<std::string, std::string> slots;
    switch (q.kind) {
    case QueryKind::where_is: slots = {{"x", mention(0)}}; break;
    case QueryKind::where_was_before: slots = {{"x", mention(0)}, {"l", surf(1)}}; break;
    case QueryKind::who_gave_to: slots = {{"o", surf(0)}, {"b", surf(1)}}; break;
    case QueryKind::who_received_from: slots = {{"a", surf(0)}, {"o", surf(1)}}; break;
    case QueryKind::object_given: slots = {{"a", surf(0)}, {"b", surf(1)}}; break;
    case QueryKind::is_at: slots = {{"a", surf(0)}, {"l", surf(1)}}; break;
    case QueryKind::count_holding:
    case QueryKind::list_holding:
    case QueryKind::afraid_of:
    case QueryKind::attribute_of:
    case QueryKind::where_go_next: slots = {{"a", surf(0)}}; break;
    case QueryKind::what_relation:
        slots = {{"l", surf(0)}, {"dir", lex.first("compass." + std::string(to_string(q.dir)))}};
        if (q.inverse) key += ".inverse";
        break;
    case QueryKind::positional_yesno:
        slots = {{"o", surf(0)}, {"o2", surf(1)},
                 {"rel", lex.first("relation." + std::string(to_string(q.dir)))}};
        break;
    case QueryKind::size_yesno: slots = {{"o", surf(0)}, {"o2", surf(1)}}; break;
    case QueryKind::path_between: slots = {{"l", surf(0)}, {"l2", surf(1)}}; break;
    case QueryKind::why_action: {
        const Entity& target = ents.at(q.args.at(1));
        if (target.kind == EntityKind::location) {
            key += ".go";
            slots = {{"a", surf(0)}, {"l", surf(1)}};
        } else {
            key += ".get";
            slots = {{"a", surf(0)}, {"o", surf(1)}};
        }
        break;
    }
    }
    return capitalize(substitute(lex.first(key), slots));
}

// ---------------------------------------------------------------------------
// template matching

namespace {

using Phrase = std::vector<std::string>;

std::vector<Phrase> phrases(const std::vector<std::string>& surfaces) {
    std::vector<Phrase> out;
    for (const auto& s : surfaces) out.push_back(split_words(lower(s)));
    return out;
}

std::map<std::string, std::vector<Phrase>> slot_vocabulary(const Lexicon& lex) {
    std::map<std::string, std::vector<Phrase>> v;
    std::vector<std::string> actors, locations, objects, species, singulars, colors, states, rels, dirs, advs;
    for (const auto& id : lex.ids("actor.")) actors.push_back(lex.surface(id));
    for (const auto& id : lex.ids("location.")) locations.push_back(lex.surface(id));
    for (const auto& id : lex.ids("object.")) objects.push_back(lex.surface(id));
    for (const auto& id : lex.ids("species.")) {
        species.push_back(id);
        singulars.push_back(lex.singular(id));
    }
    for (const auto& id : lex.ids("color.")) colors.push_back(lex.first("color." + id));
    for (const auto& id : lex.ids("state.")) states.push_back(lex.first("state." + id));
    for (const auto& id : lex.ids("relation.")) rels.push_back(lex.first("relation." + id));
    for (const auto& id : lex.ids("compass.")) dirs.push_back(lex.first("compass." + id));
    for (const auto& id : lex.ids("adverb.")) advs.push_back(lex.first("adverb." + id));
    v["a"] = v["b"] = phrases(actors);
    v["l"] = v["l2"] = phrases(locations);
    v["o"] = v["o2"] = phrases(objects);
    v["pl"] = v["pl2"] = phrases(species);
    v["sg"] = phrases(singulars);
    v["color"] = phrases(colors);
    v["state"] = phrases(states);
    v["rel"] = phrases(rels);
    v["dir"] = phrases(dirs);
    v["adv"] = phrases(advs);
    v["pron"] = phrases({lex.first("pronoun.m"), lex.first("pronoun.f")});
    v["group"] = phrases({lex.first("pronoun.group")});
    v["then"] = phrases(lex.values("connective"));
    for (const char* verb : {"go", "get", "drop", "give"})
        v[verb] = phrases(lex.values(std::string("verb.") + verb));
    return v;
}

void match_from(const std::vector<std::string>& pattern, std::size_t pi, const std::vector<std::string>& words,
                std::size_t wi, const std::map<std::string, std::vector<Phrase>>& vocab,
                std::map<std::string, std::string>& bound, const std::string& form,
                std::vector<TemplateMatch>& out) {
    if (pi == pattern.size()) {
        if (wi == words.size()) out.push_back({form, bound});
        return;
    }
    const std::string& p = pattern[pi];
    if (p.front() != '{') {
        if (wi < words.size() && words[wi] == p) match_from(pattern, pi + 1, words, wi + 1, vocab, bound, form, out);
        return;
    }
    std::string slot = p.substr(1, p.size() - 2);
    auto it = vocab.find(slot);
    if (it == vocab.end()) return;
    for (const Phrase& ph : it->second) {
        if (wi + ph.size() > words.size() || !std::equal(ph.begin(), ph.end(), words.begin() + wi)) continue;
        std::string joined;
        for (const auto& w : ph) joined += (joined.empty() ? "" : " ") + w;
        bound[slot] = joined;
        match_from(pattern, pi + 1, words, wi + ph.size(), vocab, bound, form, out);
        bound.erase(slot);
    }
}

} // namespace

std::vector<TemplateMatch> match_statement(std::string_view text, const Lexicon& lex, int task) {
    std::string t = lower(std::string(text));
    if (t.empty() || t.back() != '.') return {};
    t.pop_back();
    const auto words = split_words(t);
    const auto vocab = slot_vocabulary(lex);
    std::vector<TemplateMatch> out;
    for (const std::string& form : lex.task_forms(task)) {
        std::string tmpl = lower(lex.first("statement." + form));
        if (!tmpl.empty() && tmpl.back() == '.') tmpl.pop_back();
        std::map<std::string, std::string> bound;
        match_from(split_words(tmpl), 0, words, 0, vocab, bound, form, out);
    }
    return out;
}

// ---------------------------------------------------------------------------
// shuffled variant

ShuffleMap::ShuffleMap(const std::set<std::string>& vocabulary, std::uint64_t seed) {
    if (seed == 0) {
        for (const auto& w : vocabulary) forward_[w] = w;
        return;
    }
    Rng rng(mix_seed(seed, 0x5eedf00d));
    std::set<std::string> used;
    for (const auto& w : vocabulary) {
        std::string r;
        for (int attempt = 0;; ++attempt) {
            r.assign(w.size(), 'a');
            for (char& c : r) c = static_cast<char>('a' + rng.below(26));
            if (!used.count(r)) break;
            if (attempt > 10000) throw std::runtime_error("cannot find a fresh replacement for " + w);
        }
        used.insert(r);
        forward_[w] = r;
    }
}

ShuffleMap::ShuffleMap(std::unordered_map<std::string, std::string> pairs) : forward_(std::move(pairs)) {
    std::set<std::string> images;
    for (const auto& [k, v] : forward_)
        if (!images.insert(v).second) throw std::invalid_argument("shuffle map is not injective at " + k);
}

ShuffleMap ShuffleMap::inverse() const {
    ShuffleMap inv;
    for (const auto& [k, v] : forward_) inv.forward_[v] = k;
    return inv;
}

const std::string& ShuffleMap::map(const std::string& word) const {
    auto it = forward_.find(word);
    if (it == forward_.end()) throw std::out_of_range("word outside the shuffle vocabulary: " + word);
    return it->second;
}

namespace {

std::string shuffle_word(std::string_view word, const ShuffleMap& m) {
    std::string low = lower(std::string(word));
    std::string out = m.map(low);
    for (std::size_t i = 0; i < word.size() && i < out.size(); ++i)
        if (std::isupper(static_cast<unsigned char>(word[i])))
            out[i] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[i])));
    return out;
}

} // namespace

std::string shuffle_text(std::string_view text, const ShuffleMap& m) {
    std::string out;
    std::size_t i = 0;
    while (i < text.size()) {
        if (std::isalpha(static_cast<unsigned char>(text[i]))) {
            std::size_t j = i;
            while (j < text.size() && std::isalpha(static_cast<unsigned char>(text[j]))) ++j;
            out += shuffle_word(text.substr(i, j - i), m);
            i = j;
        } else {
            out += text[i++];
        }
    }
    return out;
}

Dataset apply_word_shuffle(const Dataset& ds, const ShuffleMap& m) {
    Dataset out = ds;
    out.variant = Variant::shuffled;
    for (Story& s : out.stories)
        for (StoryLine& l : s.lines) {
            l.text = shuffle_text(l.text, m);
            for (auto& a : l.answers) a = shuffle_text(a, m);
        }
    return out;
}

Dataset apply_word_shuffle(const Dataset& ds, std::uint64_t seed, const Lexicon& lex) {
    return apply_word_shuffle(ds, ShuffleMap(lex.vocabulary(), seed));
}

} // namespace qaworld
