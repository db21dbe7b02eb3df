#include "qaworld/tasks.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <map>
#include <set>

namespace qaworld {

namespace {

constexpr std::array<std::string_view, kTaskCount> kTaskNames = {
    "single-supporting-fact", "two-supporting-facts", "three-supporting-facts",
    "two-arg-relations",      "three-arg-relations",  "yes-no-questions",
    "counting",               "lists-sets",           "simple-negation",
    "indefinite-knowledge",   "basic-coreference",    "conjunction",
    "compound-coreference",   "time-reasoning",       "basic-deduction",
    "basic-induction",        "positional-reasoning", "size-reasoning",
    "path-finding",           "agents-motivations"};

const std::vector<std::string> kActors = {"mary", "john", "daniel", "sandra"};
const std::vector<std::string> kGiveActors = {"fred", "bill", "jeff", "mary"};
const std::vector<std::string> kTimeActors = {"julie", "bill", "fred", "mary"};
const std::vector<std::string> kRooms = {"bathroom", "hallway", "office", "kitchen", "garden", "bedroom"};
const std::vector<std::string> kTimePlaces = {"park", "school", "cinema", "kitchen", "office", "bedroom"};
const std::vector<std::string> kObjects = {"football", "apple", "milk"};
const std::vector<std::string> kNeedItems = {"apple", "milk", "pajamas", "football"};
const std::vector<std::string> kFearSpecies = {"sheep", "wolves", "cats", "mice"};
const std::vector<std::string> kFearIndividuals = {"gertrude", "winona", "jessica", "emily"};
const std::vector<std::string> kColorSpecies = {"swans", "lions", "frogs", "rhinos"};
const std::vector<std::string> kColorIndividuals = {"lily", "bernhard", "greg", "julius", "brian"};
const std::vector<std::string> kColors = {"white", "gray", "yellow", "green"};
const std::vector<std::string> kShapes = {"triangle", "red_square", "blue_square",
                                          "red_sphere", "pink_rectangle", "yellow_square"};
const std::vector<std::string> kSizeObjects = {"suitcase", "box", "chest", "container", "chocolate", "cupboard"};

std::vector<Verb> task_verbs(int task) {
    switch (task) {
    case 1: case 9: case 10: case 11: case 12: case 13: case 14: return {Verb::go};
    case 2: case 3: case 6: return {Verb::go, Verb::get, Verb::drop};
    case 5: case 7: case 8: return {Verb::go, Verb::get, Verb::drop, Verb::give};
    case 20: return {Verb::go, Verb::get, Verb::drop, Verb::set_state};
    default: return {Verb::set_state};
    }
}

// Acceptable supporting-set sizes for tasks with minimal support.
std::vector<std::size_t> support_sizes(int task) {
    switch (task) {
    case 2: return {2};
    case 3: return {3};
    case 11: case 13: case 17: case 18: case 20: return {1, 2};
    case 14: case 15: return {2};
    case 16: return {3};
    case 19: return {2};
    default: return {1};
    }
}

// Assigns compass/vertical exits so every pair of locations is adjacent.
bool assign_complete(std::vector<std::pair<int, int>>& edges, std::size_t k, std::map<std::pair<int, Direction>, int>& used,
                     std::vector<Direction>& chosen) {
    if (k == edges.size()) return true;
    auto [a, b] = edges[k];
    for (Direction d : kDirections) {
        if (used.count({a, d}) || used.count({b, opposite(d)})) continue;
        used[{a, d}] = b;
        used[{b, opposite(d)}] = a;
        chosen[k] = d;
        if (assign_complete(edges, k + 1, used, chosen)) return true;
        used.erase({a, d});
        used.erase({b, opposite(d)});
    }
    return false;
}

void connect_complete(WorldState& s, const std::vector<EntityId>& locs) {
    static std::map<std::size_t, std::vector<Direction>> cache;
    std::vector<std::pair<int, int>> edges;
    for (std::size_t i = 0; i < locs.size(); ++i)
        for (std::size_t j = i + 1; j < locs.size(); ++j) edges.push_back({static_cast<int>(i), static_cast<int>(j)});
    auto it = cache.find(locs.size());
    if (it == cache.end()) {
        std::map<std::pair<int, Direction>, int> used;
        std::vector<Direction> chosen(edges.size());
        if (!assign_complete(edges, 0, used, chosen)) throw GenerationError("cannot connect every location pair");
        it = cache.emplace(locs.size(), chosen).first;
    }
    for (std::size_t k = 0; k < edges.size(); ++k) s.connect(locs[edges[k].first], it->second[k], locs[edges[k].second]);
}

constexpr double kEasyQuestion = 0.05;
constexpr std::size_t kRivals = 2;

struct Scene {
    Scene(int task, const TaskConfig& cfg, const Lexicon& lex, Rng& rng)
        : task(task), cfg(cfg), lex(lex), rng(rng) {
        story.task = task;
        ctx.task = task;
    }

    int task;
    const TaskConfig& cfg;
    const Lexicon& lex;
    Rng& rng;
    WorldState state;
    GroundedStory story;
    RenderContext ctx;
    std::vector<EntityId> actors, main_actors, locations, objects;
    EntityId distractor = kNoEntity;
    std::set<std::string> asked;  // question text with its supporting lines
    std::string wanted;           // label a patient question waits for

    int next_line() const { return static_cast<int>(story.lines.size()) + 1; }

    std::vector<EntityId> add_all(EntityKind kind, const std::vector<std::string>& names, int n) {
        std::vector<EntityId> ids;
        for (int i = 0; i < n; ++i) ids.push_back(state.add(kind, names.at(i)));
        return ids;
    }

    void place_randomly(const std::vector<EntityId>& things) {
        for (EntityId t : things) state.position[t] = Position::at(rng.pick(locations));
    }

    // Standard house: fully connected rooms, actors and objects scattered.
    void build_house(const std::vector<std::string>& actor_pool, const std::vector<std::string>& room_pool) {
        locations = add_all(EntityKind::location, room_pool, cfg.n_locations);
        actors = add_all(EntityKind::actor, actor_pool, cfg.n_actors);
        objects = add_all(EntityKind::object, kObjects, cfg.n_objects);
        connect_complete(state, locations);
        place_randomly(actors);
        place_randomly(objects);
        main_actors = actors;
        if (cfg.distractor_rate > 0 && actors.size() >= 2) {
            distractor = actors.back();
            main_actors.pop_back();
        }
    }

    EntityId pick_actor() {
        if (distractor != kNoEntity && rng.chance(cfg.distractor_rate)) return distractor;
        return rng.pick(main_actors);
    }

    struct Act {
        Command cmd;
        Disclosure disclosure = {};
    };

    // Applies the commands, renders one statement, returns its line number.
    int say(const std::vector<Act>& acts, std::optional<TimeSlot> slot = std::nullopt) {
        StatementLine st;
        for (const Act& a : acts) {
            auto [next, ev] = apply_command(state, a.cmd, a.disclosure, slot);
            state = std::move(next);
            st.events.push_back(std::move(ev));
        }
        return narrate(std::move(st));
    }

    int narrate(StatementLine st) {
        st.text = render_statement(st.events, state.entities, lex, ctx, rng);
        int n = next_line();
        story.lines.push_back({n, std::move(st)});
        return n;
    }

    std::vector<int> statement_lines() const {
        std::vector<int> out;
        for (const auto& l : story.lines)
            if (!l.is_question()) out.push_back(l.number);
        return out;
    }

    std::vector<Event> events_of(const std::vector<int>& lines) const {
        std::vector<Event> evs;
        for (int n : lines) {
            const auto& st = std::get<StatementLine>(story.lines[n - 1].content);
            evs.insert(evs.end(), st.events.begin(), st.events.end());
        }
        return evs;
    }

    std::optional<Answer> oracle(const Query& q, const std::vector<int>& lines) const {
        return try_answer_query(events_of(lines), q, state.entities);
    }

    std::optional<Answer> oracle(const Query& q) const { return oracle(q, statement_lines()); }

    // Statements whose events change what `actor` holds.
    std::vector<int> holding_lines(EntityId actor) const {
        std::vector<int> out;
        for (const auto& l : story.lines) {
            if (l.is_question()) continue;
            for (const Event& ev : std::get<StatementLine>(l.content).events) {
                const Command& c = ev.command;
                bool mine = c.actor == actor && (c.verb == Verb::get || c.verb == Verb::get_from ||
                                                  c.verb == Verb::drop || c.verb == Verb::put || c.verb == Verb::give);
                bool received = c.verb == Verb::give && c.args.at(1) == actor;
                if (mine || received) {
                    out.push_back(l.number);
                    break;
                }
            }
        }
        return out;
    }

    // Drops statements oldest first while the answer stays derivable.
    std::vector<int> minimal_support(const Query& q, const Answer& answer) const {
        std::vector<int> kept = statement_lines();
        for (std::size_t i = 0; i < kept.size();) {
            std::vector<int> trial = kept;
            trial.erase(trial.begin() + static_cast<long>(i));
            auto a = oracle(q, trial);
            if (a && *a == answer) kept = std::move(trial);
            else ++i;
        }
        return kept;
    }

    bool ask(const Query& q) {
        std::string text = render_question(q, state.entities, lex);
        auto answer = oracle(q);
        if (!answer) return false;
        std::vector<int> support;
        if (task == 7 || task == 8) {
            support = holding_lines(q.args.at(0));
            if (support.empty()) return false;
        } else {
            support = minimal_support(q, *answer);
            auto sizes = support_sizes(task);
            if (std::find(sizes.begin(), sizes.end(), support.size()) == sizes.end()) return false;
            for (std::size_t i = 0; i < support.size(); ++i) {
                std::vector<int> trial = support;
                trial.erase(trial.begin() + static_cast<long>(i));
                auto a = oracle(q, trial);
                if (a && *a == *answer) return false;
            }
        }
        // the same question may come back once its answer rests on new facts
        std::string key = text;
        for (int l : support) key += " " + std::to_string(l);
        if (!asked.insert(key).second) return false;
        story.lines.push_back({next_line(), QuestionLine{std::move(text), q, *answer, std::move(support)}});
        return true;
    }

    // Picks a query whose oracle answer has the wanted label, if any.
    // With `patient` set, a label is drawn once and waited for until some
    // question has it; otherwise an impossible label is replaced.
    bool ask_labelled(std::vector<Query> candidates, const std::vector<std::string>& labels,
                      bool patient = false) {
        std::map<std::string, std::vector<Query>> by_label;
        for (const Query& q : candidates) {
            auto a = oracle(q);
            if (a && a->size() == 1) by_label[a->front()].push_back(q);
        }
        std::vector<std::string> order = labels;
        rng.shuffle(order);
        if (patient) {
            if (wanted.empty()) wanted = order.front();
            order = {wanted};
        }
        for (const std::string& label : order) {
            auto& qs = by_label[label];
            prefer_confusable(qs);
            for (const Query& q : qs)
                if (ask(q)) {
                    wanted.clear();
                    return true;
                }
            // only fall back to another label when the wanted one is impossible
            if (!qs.empty()) return false;
        }
        return false;
    }

    // A question is confusable when the statements sharing a word with it
    // name some other answer of the same category (location, actor, mood...).
    bool confusable(const Query& q, const Answer& answer) const {
        if (answer.size() != 1) return true;
        auto category = [&](const std::string& w) -> int {
            for (const Entity& e : state.entities)
                if (e.name == w) return static_cast<int>(e.kind);
            if (parse_mental_state(w)) return 10;
            if (std::find(kColors.begin(), kColors.end(), w) != kColors.end()) return 11;
            return -1;
        };
        auto words = tokenize(render_question(q, state.entities, lex));
        std::set<std::string> qwords(words.begin(), words.end());
        std::vector<const StatementLine*> near;
        for (const auto& l : story.lines) {
            if (l.is_question()) continue;
            const auto& st = std::get<StatementLine>(l.content);
            auto sw = tokenize(st.text);
            if (std::any_of(sw.begin(), sw.end(), [&](const std::string& w) { return qwords.count(w) > 0; }))
                near.push_back(&st);
        }
        if (q.kind == QueryKind::where_go_next || q.kind == QueryKind::why_action) {
            // the cue is a mood, so a rival mood is what misleads
            std::set<MentalState> moods;
            for (const StatementLine* st : near)
                for (const Event& ev : st->events)
                    if (ev.command.state)
                        if (auto* m = std::get_if<SetMental>(&*ev.command.state)) moods.insert(m->state);
            return moods.size() >= 2;
        }
        const int want = category(answer[0]);
        if (want < 0) return true;
        auto names_of = [&](const Event& ev) {
            std::vector<std::string> names;
            auto add = [&](EntityId e) {
                if (e != kNoEntity && e < state.entities.size()) names.push_back(state.name(e));
            };
            add(ev.command.actor);
            for (EntityId e : ev.command.args) add(e);
            add(ev.disclosure.other);
            if (ev.command.state) {
                if (auto* m = std::get_if<SetMental>(&*ev.command.state)) names.emplace_back(to_string(m->state));
                if (auto* c = std::get_if<SetColor>(&*ev.command.state)) names.push_back(c->color);
                if (auto* x = std::get_if<SetExit>(&*ev.command.state)) add(x->neighbor);
                if (auto* t = std::get_if<SetType>(&*ev.command.state)) add(t->type);
                if (auto* f = std::get_if<SetFear>(&*ev.command.state)) add(f->type);
            }
            std::vector<std::string> out;
            for (auto& n : names)
                if (n != answer[0] && !qwords.count(n) && category(n) == want) out.push_back(std::move(n));
            return out;
        };
        std::set<std::string> rivals, possible;
        for (const auto& l : story.lines)
            if (!l.is_question())
                for (const Event& ev : std::get<StatementLine>(l.content).events)
                    for (auto& n : names_of(ev)) possible.insert(std::move(n));
        for (const StatementLine* st : near)
            for (const Event& ev : st->events)
                for (auto& n : names_of(ev)) rivals.insert(std::move(n));
        // a story may not hold enough rivals at all
        return rivals.size() >= std::min<std::size_t>(kRivals, possible.size());
    }

    // Confusable questions first; the rest only occasionally.
    void prefer_confusable(std::vector<Query>& qs) {
        rng.shuffle(qs);
        std::vector<Query> hard, easy;
        for (const Query& q : qs) {
            auto a = oracle(q);
            if (!a) continue;
            (confusable(q, *a) ? hard : easy).push_back(q);
        }
        if (rng.chance(kEasyQuestion)) hard.insert(hard.end(), easy.begin(), easy.end());
        qs = std::move(hard);
    }

    bool ask_any(std::vector<Query> candidates) {
        prefer_confusable(candidates);
        for (const Query& q : candidates)
            if (ask(q)) return true;
        return false;
    }

    std::optional<Command> try_command(EntityId actor, std::vector<Verb> verbs) {
        try {
            return random_valid_command(state, actor, rng, verbs);
        } catch (const NoValidAction&) {
            return std::nullopt;
        }
    }

    std::vector<EntityId> free_here(EntityId actor) const {
        std::vector<EntityId> out;
        for (EntityId o : objects)
            if (state.position[o] == Position::at(state.location_of(actor))) out.push_back(o);
        return out;
    }

    std::vector<EntityId> company(EntityId actor) const {
        std::vector<EntityId> out;
        for (EntityId a : actors)
            if (a != actor && state.location_of(a) == state.location_of(actor)) out.push_back(a);
        return out;
    }
};

Query where_is(EntityId e) { return {QueryKind::where_is, {e}}; }

enum class StepResult { ok, failed, done };

// Alternates statements and questions until the story is long enough.
void event_loop(Scene& s, const std::function<StepResult()>& step, const std::function<bool()>& question,
                bool finish = false) {
    const TaskConfig& cfg = s.cfg;
    int target = s.rng.range(cfg.min_statements, cfg.max_statements);
    int gap = s.rng.range(cfg.min_gap, cfg.max_gap);
    int since = 0, asked = 0, statements = 0, failures = 0;
    while (asked < cfg.questions_per_story) {
        if (statements >= target && asked > 0) break;
        if (statements >= target + 10) break;
        StepResult r = step();
        if (r == StepResult::done) break;
        if (r == StepResult::failed) {
            if (++failures > 50) throw GenerationError("no progress in scene");
            continue;
        }
        ++statements;
        ++since;
        if (since >= gap && question()) {
            ++asked;
            since = 0;
            gap = s.rng.range(cfg.min_gap, cfg.max_gap);
        }
    }
    // declarative stories ask their remaining questions at the end
    while (finish && asked < cfg.questions_per_story && question()) ++asked;
    if (asked == 0) throw GenerationError("story has no answerable question");
}

// Steps over a pre-planned statement queue.
std::function<StepResult()> planned(Scene& s, std::vector<std::function<void()>>& plan) {
    return [&s, &plan, i = std::size_t{0}]() mutable {
        (void)s;
        if (i >= plan.size()) return StepResult::done;
        plan[i++]();
        return StepResult::ok;
    };
}

// --- movement-and-object tasks ---------------------------------------------

StepResult move_step(Scene& s, EntityId a, Disclosure d = {}) {
    auto cmd = s.try_command(a, {Verb::go});
    if (!cmd) return StepResult::failed;
    s.say({{*cmd, d}});
    return StepResult::ok;
}

StepResult object_step(Scene& s, double p_drop, double p_get) {
    EntityId a = s.pick_actor();
    auto held = s.state.held_by(a);
    auto here = s.free_here(a);
    double r = s.rng.unit();
    if (!held.empty() && r < p_drop) {
        s.say({{Command{a, Verb::drop, {s.rng.pick(held)}, std::nullopt}}});
        return StepResult::ok;
    }
    if (!here.empty() && r < p_drop + p_get) {
        s.say({{Command{a, Verb::get, {s.rng.pick(here)}, std::nullopt}}});
        return StepResult::ok;
    }
    return move_step(s, a);
}

StepResult exchange_step(Scene& s) {
    EntityId a = s.pick_actor();
    auto held = s.state.held_by(a);
    auto others = s.company(a);
    auto here = s.free_here(a);
    double r = s.rng.unit();
    if (!held.empty() && !others.empty() && r < 0.6) {
        s.say({{Command{a, Verb::give, {s.rng.pick(held), s.rng.pick(others)}, std::nullopt}}});
        return StepResult::ok;
    }
    if (!held.empty() && r < 0.7) {
        s.say({{Command{a, Verb::drop, {s.rng.pick(held)}, std::nullopt}}});
        return StepResult::ok;
    }
    if (!here.empty() && r < 0.85) {
        s.say({{Command{a, Verb::get, {s.rng.pick(here)}, std::nullopt}}});
        return StepResult::ok;
    }
    if (!held.empty() && s.rng.chance(0.6)) {
        // carry the object towards someone else
        std::vector<EntityId> targets;
        for (EntityId b : s.actors)
            if (b != a) targets.push_back(s.state.location_of(b));
        EntityId to = s.rng.pick(targets);
        if (to != s.state.location_of(a)) {
            s.say({{Command{a, Verb::go, {to}, std::nullopt}}});
            return StepResult::ok;
        }
    }
    return move_step(s, a);
}

void script_where(Scene& s) {  // task 1
    s.build_house(kActors, kRooms);
    event_loop(
        s, [&] { return move_step(s, s.pick_actor()); },
        [&] {
            std::vector<Query> qs;
            for (EntityId a : s.main_actors) qs.push_back(where_is(a));
            return s.ask_any(qs);
        });
}

void script_objects(Scene& s, bool before) {  // tasks 2 and 3
    s.build_house(kActors, kRooms);
    event_loop(
        s, [&] { return before ? object_step(s, 0.1, 0.35) : object_step(s, 0.2, 0.4); },
        [&] {
            std::vector<Query> qs;
            for (EntityId o : s.objects) {
                if (!before) {
                    qs.push_back(where_is(o));
                    continue;
                }
                for (EntityId l : s.locations) qs.push_back({QueryKind::where_was_before, {o, l}});
            }
            return s.ask_any(qs);
        });
}

void script_relations(Scene& s) {  // task 4
    s.locations = s.add_all(EntityKind::location, kRooms, s.cfg.n_locations);
    auto rooms = s.locations;
    s.rng.shuffle(rooms);
    EntityId center = rooms[0], a = rooms[1], b = rooms[2];
    Direction d = s.rng.pick(std::vector<Direction>{Direction::north, Direction::south, Direction::east, Direction::west});
    // a lies d of center, center lies d of b: both facts use the same words
    std::vector<std::function<void()>> plan = {
        [&] { s.say({{Command{kNoEntity, Verb::set_state, {center}, StateValue{SetExit{d, a}}}}}); },
        [&] { s.say({{Command{kNoEntity, Verb::set_state, {b}, StateValue{SetExit{d, center}}}}}); },
    };
    s.rng.shuffle(plan);
    event_loop(s, planned(s, plan), [&] {
        if (s.statement_lines().size() < plan.size()) return false;
        std::vector<Query> qs;
        // the outer rooms are named once each, so only questions about the
        // middle room turn on word order
        for (EntityId l : {center})
            for (Direction dir : {d, opposite(d)})
                for (bool inv : {false, true}) qs.push_back({QueryKind::what_relation, {l}, dir, inv});
        return s.ask_any(qs);
    }, true);
}

void script_giving(Scene& s) {  // task 5
    s.build_house(kGiveActors, kRooms);
    event_loop(s, [&] { return exchange_step(s); }, [&] {
        int gives = 0;
        for (const Event& ev : s.events_of(s.statement_lines())) gives += ev.command.verb == Verb::give;
        if (gives < 2) return false;
        std::vector<Query> qs;
        for (EntityId a : s.actors)
            for (EntityId b : s.actors) {
                if (a == b) continue;
                qs.push_back({QueryKind::object_given, {a, b}});
                for (EntityId o : s.objects) {
                    qs.push_back({QueryKind::who_gave_to, {o, b}});
                    qs.push_back({QueryKind::who_received_from, {a, o}});
                }
            }
        return s.ask_any(qs);
    });
}

std::vector<Query> is_at_queries(const Scene& s) {
    std::vector<Query> qs;
    for (EntityId a : s.main_actors)
        for (EntityId l : s.locations) qs.push_back({QueryKind::is_at, {a, l}});
    return qs;
}

void script_yes_no(Scene& s) {  // task 6
    s.build_house(kActors, kRooms);
    event_loop(s, [&] { return object_step(s, 0.1, 0.15); },
               [&] { return s.ask_labelled(is_at_queries(s), {"yes", "no"}); });
}

StepResult holding_step(Scene& s) {
    EntityId a = s.pick_actor();
    auto held = s.state.held_by(a);
    auto others = s.company(a);
    auto here = s.free_here(a);
    double r = s.rng.unit();
    if (!held.empty() && r < 0.2) {
        s.say({{Command{a, Verb::drop, {s.rng.pick(held)}, std::nullopt}}});
        return StepResult::ok;
    }
    if (!held.empty() && !others.empty() && r < 0.35) {
        s.say({{Command{a, Verb::give, {s.rng.pick(held), s.rng.pick(others)}, std::nullopt}}});
        return StepResult::ok;
    }
    if (!here.empty() && r < 0.75) {
        s.say({{Command{a, Verb::get, {s.rng.pick(here)}, std::nullopt}}});
        return StepResult::ok;
    }
    return move_step(s, a);
}

void script_holding(Scene& s, bool list) {  // tasks 7 and 8
    s.build_house(kActors, kRooms);
    event_loop(s, [&] { return holding_step(s); }, [&] {
        std::vector<Query> qs;
        for (EntityId a : s.actors)
            if (!s.holding_lines(a).empty())
                qs.push_back({list ? QueryKind::list_holding : QueryKind::count_holding, {a}});
        if (!list) return s.ask_labelled(qs, {"none", "one", "two"}, true);
        return s.ask_any(qs);
    });
}

void script_negation(Scene& s) {  // task 9
    s.build_house(kActors, kRooms);
    event_loop(
        s,
        [&] {
            EntityId a = s.pick_actor();
            Disclosure d;
            if (s.rng.chance(0.35)) d = {DisclosureKind::negated_origin, s.state.location_of(a)};
            return move_step(s, a, d);
        },
        [&] { return s.ask_labelled(is_at_queries(s), {"yes", "no"}); });
}

void script_indefinite(Scene& s) {  // task 10
    s.build_house(kActors, kRooms);
    event_loop(
        s,
        [&] {
            EntityId a = s.pick_actor();
            auto cmd = s.try_command(a, {Verb::go});
            if (!cmd) return StepResult::failed;
            Disclosure d;
            if (s.rng.chance(0.4)) {
                std::vector<EntityId> alts;
                for (EntityId l : s.locations)
                    if (l != cmd->args[0]) alts.push_back(l);
                d = {DisclosureKind::either, s.rng.pick(alts), Direction::north, s.rng.chance(0.5)};
            }
            s.say({{*cmd, d}});
            return StepResult::ok;
        },
        [&] { return s.ask_labelled(is_at_queries(s), {"yes", "no", "maybe"}); });
}

void script_coreference(Scene& s) {  // task 11
    s.build_house(kActors, kRooms);
    bool last_named = false;
    EntityId last = kNoEntity;
    event_loop(
        s,
        [&] {
            if (last_named && s.rng.chance(0.5)) {
                last_named = false;
                return move_step(s, last, {DisclosureKind::coreferent});
            }
            last = s.pick_actor();
            last_named = true;
            return move_step(s, last);
        },
        [&] {
            std::vector<Query> qs;
            for (EntityId a : s.main_actors) qs.push_back(where_is(a));
            return s.ask_any(qs);
        });
}

// Two actors move together; both must be able to make the move.
StepResult joint_move(Scene& s, EntityId a, EntityId b, bool pronoun) {
    std::vector<EntityId> dests;
    for (EntityId l : s.locations) {
        Command ca{a, Verb::go, {l}, std::nullopt}, cb{b, Verb::go, {l}, std::nullopt};
        if (!validate_command(s.state, ca) && !validate_command(s.state, cb)) dests.push_back(l);
    }
    if (dests.empty()) return StepResult::failed;
    EntityId l = s.rng.pick(dests);
    DisclosureKind k = pronoun ? DisclosureKind::coreferent : DisclosureKind::stated;
    Disclosure first{k}, second{k};
    second.joint = true;
    s.say({{Command{a, Verb::go, {l}, std::nullopt}, first}, {Command{b, Verb::go, {l}, std::nullopt}, second}});
    return StepResult::ok;
}

std::pair<EntityId, EntityId> random_pair(Scene& s) {
    auto pool = s.actors;
    s.rng.shuffle(pool);
    return {pool[0], pool[1]};
}

void script_conjunction(Scene& s) {  // task 12
    s.build_house(kActors, kRooms);
    event_loop(
        s,
        [&] {
            if (s.rng.chance(0.7)) {
                auto [a, b] = random_pair(s);
                return joint_move(s, a, b, false);
            }
            return move_step(s, s.pick_actor());
        },
        [&] {
            std::vector<Query> qs;
            for (EntityId a : s.main_actors) qs.push_back(where_is(a));
            return s.ask_any(qs);
        });
}

void script_group_coreference(Scene& s) {  // task 13
    s.build_house(kActors, kRooms);
    std::optional<std::pair<EntityId, EntityId>> last_conj;
    event_loop(
        s,
        [&] {
            if (last_conj && s.rng.chance(0.6)) {
                auto [a, b] = *last_conj;
                last_conj.reset();
                return joint_move(s, a, b, true);
            }
            auto [a, b] = random_pair(s);
            StepResult r = joint_move(s, a, b, false);
            if (r == StepResult::ok) last_conj = std::make_pair(a, b);
            return r;
        },
        [&] {
            std::vector<Query> qs;
            for (EntityId a : s.main_actors) qs.push_back(where_is(a));
            return s.ask_any(qs);
        });
}

void script_time(Scene& s) {  // task 14
    s.build_house(kTimeActors, kTimePlaces);
    // Simulate in slot order, narrate in a shuffled order.
    auto people = s.actors;
    s.rng.shuffle(people);
    people.resize(std::min<std::size_t>(2, people.size()));
    std::map<EntityId, std::vector<int>> slots;
    for (EntityId p : people) {
        std::vector<int> all = {0, 1, 2, 3};
        s.rng.shuffle(all);
        all.resize(static_cast<std::size_t>(s.rng.range(3, 4)));
        std::sort(all.begin(), all.end());
        slots[p] = all;
    }
    std::vector<StatementLine> pending;
    for (int slot = 0; slot < 4; ++slot)
        for (EntityId p : people) {
            if (std::find(slots[p].begin(), slots[p].end(), slot) == slots[p].end()) continue;
            auto cmd = s.try_command(p, {Verb::go});
            if (!cmd) throw GenerationError("no move available");
            auto [next, ev] = apply_command(s.state, *cmd, {}, static_cast<TimeSlot>(slot));
            s.state = std::move(next);
            pending.push_back({"", {std::move(ev)}});
        }
    s.rng.shuffle(pending);
    std::vector<std::function<void()>> plan;
    for (auto& st : pending) plan.push_back([&s, &st] { s.narrate(st); });
    event_loop(s, planned(s, plan), [&] {
        std::vector<Query> qs;
        for (EntityId p : people)
            for (EntityId l : s.locations) qs.push_back({QueryKind::where_was_before, {p, l}});
        return s.ask_any(qs);
    }, true);
}

void script_deduction(Scene& s) {  // task 15
    EntityId field = s.state.add(EntityKind::location, "field");
    s.locations = {field};
    std::vector<EntityId> species, animals;
    for (const auto& n : kFearSpecies) {
        species.push_back(s.state.add(EntityKind::object, n));
        s.state.position.back() = Position::at(field);
    }
    for (const auto& n : kFearIndividuals) {
        animals.push_back(s.state.add(EntityKind::actor, n));
        s.state.position.back() = Position::at(field);
    }
    std::vector<std::function<void()>> plan;
    for (EntityId sp : species) {
        std::vector<EntityId> others;
        for (EntityId o : species)
            if (o != sp) others.push_back(o);
        EntityId feared = s.rng.pick(others);
        plan.push_back([&s, sp, feared] {
            s.say({{Command{kNoEntity, Verb::set_state, {sp}, StateValue{SetFear{feared}}}}});
        });
    }
    for (EntityId a : animals) {
        EntityId sp = s.rng.pick(species);
        plan.push_back([&s, a, sp] { s.say({{Command{kNoEntity, Verb::set_state, {a}, StateValue{SetType{sp}}}}}); });
    }
    s.rng.shuffle(plan);
    event_loop(s, planned(s, plan), [&] {
        std::vector<Query> qs;
        for (EntityId a : animals) qs.push_back({QueryKind::afraid_of, {a}});
        return s.ask_any(qs);
    }, true);
}

void script_induction(Scene& s) {  // task 16
    EntityId field = s.state.add(EntityKind::location, "field");
    s.locations = {field};
    std::vector<EntityId> species, animals;
    for (const auto& n : kColorSpecies) {
        species.push_back(s.state.add(EntityKind::object, n));
        s.state.position.back() = Position::at(field);
    }
    for (const auto& n : kColorIndividuals) {
        animals.push_back(s.state.add(EntityKind::actor, n));
        s.state.position.back() = Position::at(field);
    }
    s.rng.shuffle(animals);
    s.rng.shuffle(species);
    // animals[0] is queried, animals[1] shares its species, the rest differ
    std::vector<std::function<void()>> plan;
    for (std::size_t i = 0; i < animals.size(); ++i) {
        EntityId a = animals[i];
        EntityId sp = species[i == 0 ? 0 : i - 1];
        plan.push_back([&s, a, sp] { s.say({{Command{kNoEntity, Verb::set_state, {a}, StateValue{SetType{sp}}}}}); });
        if (i == 0) continue;
        std::string color = s.rng.pick(kColors);
        plan.push_back([&s, a, color] { s.say({{Command{kNoEntity, Verb::set_state, {a}, StateValue{SetColor{color}}}}}); });
    }
    s.rng.shuffle(plan);
    EntityId target = animals[0];
    event_loop(s, planned(s, plan), [&] {
        if (s.statement_lines().size() < plan.size()) return false;
        return s.ask({QueryKind::attribute_of, {target}});
    }, true);
}

GridPoint step_towards(GridPoint p, Direction d) {
    switch (d) {
    case Direction::east: ++p.x; break;
    case Direction::west: --p.x; break;
    case Direction::north:
    case Direction::above: ++p.y; break;
    case Direction::south:
    case Direction::below: --p.y; break;
    }
    return p;
}

void script_positions(Scene& s) {  // task 17
    EntityId table = s.state.add(EntityKind::location, "table");
    s.locations = {table};
    std::vector<EntityId> shapes;
    for (const auto& n : kShapes) {
        shapes.push_back(s.state.add(EntityKind::object, n));
        s.state.position.back() = Position::at(table);
    }
    s.rng.shuffle(shapes);
    EntityId root = shapes[0], first = shapes[1], second = shapes[2];
    s.state.entities[root].props.grid = GridPoint{0, 0};
    const std::vector<Direction> rels = {Direction::east, Direction::west, Direction::above, Direction::below};
    Direction d1 = s.rng.pick(rels);
    GridPoint p1 = step_towards({0, 0}, d1);
    EntityId ref = s.rng.chance(0.5) ? root : first;
    GridPoint ref_at = ref == root ? GridPoint{0, 0} : p1;
    Direction d2 = s.rng.pick(rels);
    GridPoint p2 = step_towards(ref_at, d2);
    if (p2 == GridPoint{0, 0} || p2 == p1) throw GenerationError("shapes overlap");
    std::vector<std::function<void()>> plan = {
        [&] {
            s.say({{Command{kNoEntity, Verb::set_state, {first}, StateValue{SetGrid{p1}}},
                    Disclosure{DisclosureKind::relative_to, root, d1}}});
        },
        [&] {
            s.say({{Command{kNoEntity, Verb::set_state, {second}, StateValue{SetGrid{p2}}},
                    Disclosure{DisclosureKind::relative_to, ref, d2}}});
        },
    };
    event_loop(s, planned(s, plan), [&] {
        if (s.statement_lines().size() < plan.size()) return false;
        std::vector<Query> qs;
        for (EntityId a : {root, first, second})
            for (EntityId b : {root, first, second})
                if (a != b)
                    for (Direction d : rels) qs.push_back({QueryKind::positional_yesno, {a, b}, d});
        return s.ask_labelled(qs, {"yes", "no"});
    }, true);
}

void script_sizes(Scene& s) {  // task 18
    EntityId room = s.state.add(EntityKind::location, "storeroom");
    s.locations = {room};
    std::vector<EntityId> things;
    for (const auto& n : kSizeObjects) {
        things.push_back(s.state.add(EntityKind::object, n));
        s.state.position.back() = Position::at(room);
    }
    s.rng.shuffle(things);
    for (std::size_t i = 0; i < things.size(); ++i) s.state.entities[things[i]].props.size_rank = static_cast<int>(i);
    std::vector<EntityId> chosen(things.begin(), things.begin() + s.rng.range(3, 5));
    std::vector<std::function<void()>> plan;
    for (std::size_t i = 0; i + 1 < chosen.size(); ++i) {
        EntityId small = chosen[i], big = chosen[i + 1];
        plan.push_back([&s, small, big] {
            s.say({{Command{kNoEntity, Verb::set_state, {small}, StateValue{SetSmaller{big}}}}});
        });
    }
    s.rng.shuffle(plan);
    event_loop(s, planned(s, plan), [&] {
        if (s.statement_lines().size() < plan.size()) return false;
        std::vector<Query> qs;
        for (EntityId a : chosen)
            for (EntityId b : chosen)
                if (a != b) qs.push_back({QueryKind::size_yesno, {a, b}});
        return s.ask_labelled(qs, {"yes", "no"});
    }, true);
}

void script_paths(Scene& s) {  // task 19
    s.locations = s.add_all(EntityKind::location, kRooms, s.cfg.n_locations);
    auto rooms = s.locations;
    s.rng.shuffle(rooms);
    const std::size_t n = std::min<std::size_t>(5, rooms.size());
    std::map<std::pair<int, int>, EntityId> cell;
    std::map<EntityId, std::pair<int, int>> where;
    cell[{0, 0}] = rooms[0];
    where[rooms[0]] = {0, 0};
    const std::array<std::pair<int, int>, 4> steps = {{{0, 1}, {0, -1}, {1, 0}, {-1, 0}}};
    const std::array<Direction, 4> step_dirs = {Direction::north, Direction::south, Direction::east, Direction::west};
    for (std::size_t k = 1; k < n; ++k) {
        std::vector<std::pair<int, int>> frontier;
        for (const auto& [c, id] : cell)
            for (auto [dx, dy] : steps) {
                std::pair<int, int> nc{c.first + dx, c.second + dy};
                if (!cell.count(nc) && std::find(frontier.begin(), frontier.end(), nc) == frontier.end())
                    frontier.push_back(nc);
            }
        std::sort(frontier.begin(), frontier.end());
        auto c = s.rng.pick(frontier);
        cell[c] = rooms[k];
        where[rooms[k]] = c;
    }
    std::vector<std::function<void()>> plan;
    for (const auto& [c, id] : cell)
        for (std::size_t si : {0u, 2u}) {  // north and east neighbours
            std::pair<int, int> nc{c.first + steps[si].first, c.second + steps[si].second};
            auto it = cell.find(nc);
            if (it == cell.end()) continue;
            EntityId from = id, to = it->second;
            Direction d = step_dirs[si];
            s.state.connect(from, d, to);
            if (s.rng.chance(0.5)) {
                std::swap(from, to);
                d = opposite(d);
            }
            plan.push_back([&s, from, to, d] {
                s.say({{Command{kNoEntity, Verb::set_state, {from}, StateValue{SetExit{d, to}}}}});
            });
        }
    s.rng.shuffle(plan);
    event_loop(s, planned(s, plan), [&] {
        if (s.statement_lines().size() < plan.size()) return false;
        std::vector<Query> qs;
        for (EntityId a : rooms)
            for (EntityId b : rooms) {
                if (a == b || !where.count(a) || !where.count(b)) continue;
                auto path = bfs_path(s.state.exits, a, b);
                if (!path || path->size() != 2) continue;
                int middles = 0;
                for (EntityId m : rooms) {
                    bool ab = false, mb = false;
                    for (Direction d : kDirections) {
                        if (s.state.exit(a, d) == m) ab = true;
                        if (s.state.exit(m, d) == b) mb = true;
                    }
                    middles += ab && mb;
                }
                if (middles == 1) qs.push_back({QueryKind::path_between, {a, b}});
            }
        return s.ask_any(qs);
    }, true);
}

void script_motivation(Scene& s) {  // task 20
    s.locations = s.add_all(EntityKind::location, kRooms, s.cfg.n_locations);
    s.actors = s.add_all(EntityKind::actor, kActors, s.cfg.n_actors);
    s.objects = s.add_all(EntityKind::object, kNeedItems, s.cfg.n_objects);
    connect_complete(s.state, s.locations);
    s.place_randomly(s.actors);
    for (EntityId o : s.objects) {
        MentalState need = MentalState::none;
        for (int m = 1; m <= 4; ++m)
            if (need_item(static_cast<MentalState>(m)) == s.state.name(o)) need = static_cast<MentalState>(m);
        auto home = s.state.find(need_target(need));
        s.state.position[o] = Position::at(home ? *home : s.locations.front());
    }
    for (EntityId a : s.actors) s.state.actor_rules[a] = Rule::satisfy_needs;
    s.main_actors = s.actors;

    // (actor, location or item) -> whether the latest such action followed the rule
    std::map<std::pair<EntityId, EntityId>, bool> motivated;
    auto step = [&] {
        EntityId a = s.rng.pick(s.actors);
        auto cmd = rule_command(s.state, a);
        if (cmd && s.rng.chance(0.6)) {
            s.say({{*cmd}});
            motivated[{a, cmd->args[0]}] = true;
            return StepResult::ok;
        }
        auto held = s.state.held_by(a);
        double r = s.rng.unit();
        if (!held.empty() && r < 0.3) {
            s.say({{Command{a, Verb::drop, {s.rng.pick(held)}, std::nullopt}}});
            return StepResult::ok;
        }
        if (r < 0.85) {
            MentalState cur = s.state.entity(a).props.mental;
            std::vector<MentalState> moods;
            for (int m = 1; m <= 4; ++m)
                if (static_cast<MentalState>(m) != cur) moods.push_back(static_cast<MentalState>(m));
            MentalState m = s.rng.pick(moods);
            s.say({{Command{kNoEntity, Verb::set_state, {a}, StateValue{SetMental{m}}}}});
            return StepResult::ok;
        }
        cmd = s.try_command(a, {Verb::go});
        if (!cmd) return StepResult::failed;
        s.say({{*cmd}});
        motivated[{a, cmd->args[0]}] = false;
        return StepResult::ok;
    };
    event_loop(s, step, [&] {
        std::vector<Query> qs;
        for (EntityId a : s.actors)
            if (rule_command(s.state, a)) qs.push_back({QueryKind::where_go_next, {a}});
        for (const auto& [key, rule] : motivated)
            if (rule) qs.push_back({QueryKind::why_action, {key.first, key.second}});
        return s.ask_any(qs);
    });
}

void run_script(Scene& s) {
    switch (s.task) {
    case 1: script_where(s); break;
    case 2: script_objects(s, false); break;
    case 3: script_objects(s, true); break;
    case 4: script_relations(s); break;
    case 5: script_giving(s); break;
    case 6: script_yes_no(s); break;
    case 7: script_holding(s, false); break;
    case 8: script_holding(s, true); break;
    case 9: script_negation(s); break;
    case 10: script_indefinite(s); break;
    case 11: script_coreference(s); break;
    case 12: script_conjunction(s); break;
    case 13: script_group_coreference(s); break;
    case 14: script_time(s); break;
    case 15: script_deduction(s); break;
    case 16: script_induction(s); break;
    case 17: script_positions(s); break;
    case 18: script_sizes(s); break;
    case 19: script_paths(s); break;
    case 20: script_motivation(s); break;
    }
}

} // namespace

std::string_view task_name(int task) {
    check_task_id(task);
    return kTaskNames[static_cast<std::size_t>(task - 1)];
}

void check_task_id(int task) {
    if (task < 1 || task > kTaskCount) throw ConfigError("task id must be in 1..20, got " + std::to_string(task));
}

TaskConfig TaskConfig::defaults(int task) {
    check_task_id(task);
    TaskConfig c;
    c.allowed_verbs = task_verbs(task);
    switch (task) {
    case 1: case 2: case 3: case 6: case 9: case 10: case 11: case 12: case 13: c.distractor_rate = 0.3; break;
    default: c.distractor_rate = 0.0; break;
    }
    switch (task) {
    case 4: case 16: case 19: c.questions_per_story = 1; break;
    case 14: c.questions_per_story = 2; break;
    case 15: case 17: c.questions_per_story = 4; break;
    case 18: c.questions_per_story = 3; break;
    case 20: c.n_objects = 4; break;
    default: break;
    }
    return c;
}

void TaskConfig::validate(int task) const {
    check_task_id(task);
    auto fail = [&](const std::string& m) { throw ConfigError("task " + std::to_string(task) + ": " + m); };
    if (n_actors < 1 || n_actors > 4) fail("n_actors must be in 1..4");
    if ((task == 5 || task == 12 || task == 13) && n_actors < 2) fail("task needs at least two actors");
    if (n_locations < 3 || n_locations > 6) fail("n_locations must be in 3..6");
    if (task == 19 && n_locations < 5) fail("path finding needs 5 locations");
    if (task == 20 && n_locations < 6) fail("motivations need all 6 locations");
    int max_objects = task == 20 ? 4 : 3;
    if (n_objects < 1 || n_objects > max_objects) fail("n_objects out of range");
    if (min_statements < 1 || max_statements < min_statements) fail("bad statements_per_story range");
    if (questions_per_story < 1) fail("questions_per_story must be >= 1");
    if (min_gap < 1 || max_gap < min_gap) fail("bad question gap range");
    if (distractor_rate < 0.0 || distractor_rate >= 1.0) fail("distractor_rate must be in [0, 1)");
    auto verbs = task_verbs(task);
    std::set<Verb> want(verbs.begin(), verbs.end());
    std::set<Verb> have(allowed_verbs.begin(), allowed_verbs.end());
    if (want != have) fail("allowed_verbs does not match the task");
}

std::size_t GroundedStory::question_count() const {
    return static_cast<std::size_t>(std::count_if(lines.begin(), lines.end(), [](const GroundedLine& l) { return l.is_question(); }));
}

Story GroundedStory::surface() const {
    Story s;
    for (const GroundedLine& l : lines) {
        StoryLine out;
        out.number = l.number;
        if (auto* st = std::get_if<StatementLine>(&l.content)) {
            out.kind = LineKind::statement;
            out.text = st->text;
        } else {
            const auto& q = std::get<QuestionLine>(l.content);
            out.kind = LineKind::question;
            out.text = q.text;
            out.answers = q.answer;
            out.supporting = q.supporting;
        }
        s.lines.push_back(std::move(out));
    }
    return s;
}

GroundedStory generate_story(int task, const TaskConfig& cfg, Rng& rng, const Lexicon& lex) {
    cfg.validate(task);
    for (int attempt = 0; attempt < 100; ++attempt) {
        Scene scene(task, cfg, lex, rng);
        try {
            run_script(scene);
        } catch (const GenerationError&) {
            continue;
        } catch (const NoValidAction&) {
            continue;
        }
        scene.story.world = std::move(scene.state);
        return std::move(scene.story);
    }
    throw GenerationError("task " + std::to_string(task) + ": constraints unsatisfied after 100 attempts");
}

std::vector<GroundedStory> generate_stories(int task, std::size_t n_questions, const TaskConfig& cfg, Rng& rng,
                                            const Lexicon& lex) {
    if (n_questions < 1) throw ConfigError("n_questions must be >= 1");
    std::vector<GroundedStory> out;
    std::size_t have = 0;
    while (have < n_questions) {
        GroundedStory s = generate_story(task, cfg, rng, lex);
        std::size_t q = s.question_count();
        if (have + q > n_questions) {
            std::size_t keep = n_questions - have, seen = 0;
            std::size_t cut = 0;
            for (; cut < s.lines.size(); ++cut) {
                if (s.lines[cut].is_question() && ++seen == keep) break;
            }
            s.lines.resize(cut + 1);
            q = keep;
        }
        have += q;
        out.push_back(std::move(s));
    }
    return out;
}

Dataset generate_dataset(int task, std::size_t n_questions, const TaskConfig& cfg, Rng& rng, const Lexicon& lex) {
    Dataset ds;
    ds.task = task;
    for (const GroundedStory& s : generate_stories(task, n_questions, cfg, rng, lex)) ds.stories.push_back(s.surface());
    return ds;
}

bool minimal_support_task(int task) {
    return !(task == 7 || task == 8 || task == 17 || task == 18 || task == 19);
}

std::vector<Diagnostic> verify_supporting_facts(const GroundedStory& story) {
    std::vector<Diagnostic> out;
    const auto& names = story.world.entities;
    auto events_of = [&](const std::vector<int>& lines) {
        std::vector<Event> evs;
        for (int n : lines) {
            if (n < 1 || n > static_cast<int>(story.lines.size())) continue;
            if (auto* st = std::get_if<StatementLine>(&story.lines[n - 1].content))
                evs.insert(evs.end(), st->events.begin(), st->events.end());
        }
        return evs;
    };
    std::vector<int> prefix;
    for (const GroundedLine& l : story.lines) {
        auto* q = std::get_if<QuestionLine>(&l.content);
        if (!q) {
            prefix.push_back(l.number);
            continue;
        }
        auto report = [&](const std::string& m) { out.push_back({l.number, m}); };
        if (q->supporting.empty()) report("no supporting facts");
        bool ordered = true;
        for (std::size_t i = 0; i < q->supporting.size(); ++i) {
            int n = q->supporting[i];
            if (n < 1 || n >= l.number || story.lines[n - 1].is_question() || (i && n <= q->supporting[i - 1]))
                ordered = false;
        }
        if (!ordered) {
            report("supporting ids must be ascending earlier statements");
            continue;
        }
        auto full = try_answer_query(events_of(prefix), q->query, names);
        if (!full || *full != q->answer) report("answer differs from the oracle on the full prefix");
        auto sub = try_answer_query(events_of(q->supporting), q->query, names);
        if (!sub || *sub != q->answer) report("answer not derivable from the supporting facts");
        if (!minimal_support_task(story.task)) continue;
        for (std::size_t i = 0; i < q->supporting.size(); ++i) {
            std::vector<int> less = q->supporting;
            less.erase(less.begin() + static_cast<long>(i));
            auto a = try_answer_query(events_of(less), q->query, names);
            if (a && *a == q->answer) report("supporting fact " + std::to_string(q->supporting[i]) + " is redundant");
        }
    }
    return out;
}

} // namespace qaworld
