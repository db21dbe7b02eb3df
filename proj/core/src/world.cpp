#include "qaworld/world.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <set>
#include <sstream>

namespace qaworld {

Direction opposite(Direction d) {
    switch (d) {
    case Direction::north: return Direction::south;
    case Direction::south: return Direction::north;
    case Direction::east: return Direction::west;
    case Direction::west: return Direction::east;
    case Direction::above: return Direction::below;
    case Direction::below: return Direction::above;
    }
    return d;
}

std::string_view to_string(Direction d) {
    static constexpr std::array<std::string_view, 6> names = {"north", "south", "east",
                                                               "west",  "above", "below"};
    return names[static_cast<int>(d)];
}

std::optional<Direction> parse_direction(std::string_view s) {
    for (Direction d : kDirections)
        if (to_string(d) == s) return d;
    return std::nullopt;
}

std::string_view to_string(MentalState m) {
    static constexpr std::array<std::string_view, 5> names = {"none", "hungry", "thirsty",
                                                              "tired", "bored"};
    return names[static_cast<int>(m)];
}

std::optional<MentalState> parse_mental_state(std::string_view s) {
    for (int i = 0; i < 5; ++i)
        if (to_string(static_cast<MentalState>(i)) == s) return static_cast<MentalState>(i);
    return std::nullopt;
}

std::string_view to_string(TimeSlot t) {
    static constexpr std::array<std::string_view, 4> names = {"yesterday", "morning",
                                                              "afternoon", "evening"};
    return names[static_cast<int>(t)];
}

std::string_view to_string(Verb v) {
    static constexpr std::array<std::string_view, 10> names = {
        "go", "get", "get_from", "put", "give", "drop", "set_state", "look", "inventory", "examine"};
    return names[static_cast<int>(v)];
}

std::string_view to_string(ViolationCode c) {
    static constexpr std::array<std::string_view, 6> names = {
        "already_held", "not_connected", "not_holding", "bad_container", "bad_arity",
        "unknown_entity"};
    return names[static_cast<int>(c)];
}

std::string_view to_string(QueryKind k) {
    static constexpr std::array<std::string_view, 16> names = {
        "where_is",       "where_was_before", "who_gave_to",
        "who_received_from", "object_given",  "is_at",           "count_holding",
        "list_holding",   "what_relation",    "afraid_of",       "attribute_of",
        "positional_yesno", "size_yesno",     "path_between",    "why_action",
        "where_go_next"};
    return names[static_cast<int>(k)];
}

std::string_view need_target(MentalState m) {
    switch (m) {
    case MentalState::hungry:
    case MentalState::thirsty: return "kitchen";
    case MentalState::tired: return "bedroom";
    case MentalState::bored: return "garden";
    case MentalState::none: break;
    }
    return {};
}

std::string_view need_item(MentalState m) {
    switch (m) {
    case MentalState::hungry: return "apple";
    case MentalState::thirsty: return "milk";
    case MentalState::tired: return "pajamas";
    case MentalState::bored: return "football";
    case MentalState::none: break;
    }
    return {};
}

std::string_view count_word(std::size_t n) {
    static constexpr std::array<std::string_view, 10> words = {
        "none", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine"};
    return n < words.size() ? words[n] : std::string_view("many");
}

// ---------------------------------------------------------------------------
// WorldState

EntityId WorldState::add(EntityKind kind, std::string name, Properties props) {
    if (find(name)) throw std::invalid_argument("duplicate entity name: " + name);
    EntityId id = static_cast<EntityId>(entities.size());
    entities.push_back(Entity{id, kind, std::move(name), std::move(props)});
    position.push_back(Position{});
    return id;
}

void WorldState::connect(EntityId from, Direction d, EntityId to) {
    exits[{from, d}] = to;
    exits[{to, opposite(d)}] = from;
}

std::optional<EntityId> WorldState::find(std::string_view n) const {
    for (const Entity& e : entities)
        if (e.name == n) return e.id;
    return std::nullopt;
}

std::vector<EntityId> WorldState::all(EntityKind kind) const {
    std::vector<EntityId> out;
    for (const Entity& e : entities)
        if (e.kind == kind) out.push_back(e.id);
    return out;
}

std::optional<EntityId> WorldState::exit(EntityId loc, Direction d) const {
    auto it = exits.find({loc, d});
    if (it == exits.end()) return std::nullopt;
    return it->second;
}

EntityId WorldState::location_of(EntityId id) const {
    if (!contains(id)) return kNoEntity;
    if (entities[id].kind == EntityKind::location) return id;
    for (int guard = 0; guard < 8; ++guard) {
        const Position& p = position[id];
        if (p.kind == Position::Kind::none) return kNoEntity;
        if (p.kind == Position::Kind::at) return p.ref;
        id = p.ref;
    }
    return kNoEntity;
}

std::vector<EntityId> WorldState::held_by(EntityId actor) const {
    std::vector<EntityId> out;
    for (EntityId i = 0; i < position.size(); ++i)
        if (position[i] == Position::held_by(actor)) out.push_back(i);
    return out;
}

std::vector<std::string> check_invariants(const WorldState& s) {
    std::vector<std::string> problems;
    auto kind_of = [&](EntityId id) { return s.entities[id].kind; };
    if (s.position.size() != s.entities.size()) problems.push_back("position table size");
    std::set<std::string> names;
    for (const Entity& e : s.entities) {
        if (!names.insert(e.name).second) problems.push_back("duplicate name " + e.name);
        if (e.id >= s.position.size()) continue;
        const Position& p = s.position[e.id];
        bool ref_ok = p.kind == Position::Kind::none || s.contains(p.ref);
        if (!ref_ok) {
            problems.push_back(e.name + ": dangling position");
            continue;
        }
        switch (e.kind) {
        case EntityKind::location:
            if (p.kind != Position::Kind::none) problems.push_back(e.name + ": location has a position");
            break;
        case EntityKind::actor:
            if (p.kind != Position::Kind::at || kind_of(p.ref) != EntityKind::location)
                problems.push_back(e.name + ": actor not at exactly one location");
            break;
        case EntityKind::object:
            if (p.kind == Position::Kind::none) {
                problems.push_back(e.name + ": object has no position");
            } else if (p.kind == Position::Kind::at && kind_of(p.ref) != EntityKind::location) {
                problems.push_back(e.name + ": object at a non-location");
            } else if (p.kind == Position::Kind::held_by && kind_of(p.ref) != EntityKind::actor) {
                problems.push_back(e.name + ": held by a non-actor");
            } else if (p.kind == Position::Kind::inside) {
                const Entity& box = s.entities[p.ref];
                if (!box.props.container || s.position[p.ref].kind == Position::Kind::inside)
                    problems.push_back(e.name + ": bad container");
            }
            break;
        }
    }
    for (const auto& [key, to] : s.exits) {
        auto back = s.exits.find({to, opposite(key.second)});
        if (back == s.exits.end() || back->second != key.first)
            problems.push_back("asymmetric exit from " + s.name(key.first));
    }
    if (s.clock != static_cast<int>(s.history.size())) problems.push_back("clock != history length");
    return problems;
}

// ---------------------------------------------------------------------------
// validation

namespace {

ConstraintViolation violation(ViolationCode code, std::string msg) {
    return ConstraintViolation{code, std::move(msg)};
}

std::size_t expected_arity(Verb v) {
    switch (v) {
    case Verb::look:
    case Verb::inventory: return 0;
    case Verb::get_from:
    case Verb::put:
    case Verb::give: return 2;
    default: return 1;
    }
}

bool reachable_by(const WorldState& s, EntityId actor, EntityId thing) {
    if (s.position[thing] == Position::held_by(actor)) return true;
    return s.position[thing].kind == Position::Kind::at &&
           s.position[thing].ref == s.location_of(actor);
}

std::optional<ConstraintViolation> check_state_value(const WorldState& s, EntityId e,
                                                     const StateValue& value) {
    const EntityKind kind = s.entity(e).kind;
    if (auto* m = std::get_if<SetMental>(&value)) {
        if (kind != EntityKind::actor) return violation(ViolationCode::bad_arity, "mental state on non-actor");
        (void)m;
    } else if (auto* x = std::get_if<SetExit>(&value)) {
        if (!s.contains(x->neighbor)) return violation(ViolationCode::unknown_entity, "unknown exit target");
        if (kind != EntityKind::location || s.entity(x->neighbor).kind != EntityKind::location ||
            x->neighbor == e)
            return violation(ViolationCode::bad_arity, "exits join two distinct locations");
        auto fwd = s.exit(e, x->dir);
        auto back = s.exit(x->neighbor, opposite(x->dir));
        if ((fwd && *fwd != x->neighbor) || (back && *back != e))
            return violation(ViolationCode::not_connected, "exit slot already leads elsewhere");
    } else if (auto* t = std::get_if<SetType>(&value)) {
        if (!s.contains(t->type)) return violation(ViolationCode::unknown_entity, "unknown type");
        if (t->type == e) return violation(ViolationCode::bad_arity, "entity cannot be its own type");
    } else if (auto* f = std::get_if<SetFear>(&value)) {
        if (!s.contains(f->type)) return violation(ViolationCode::unknown_entity, "unknown fear target");
    } else if (auto* c = std::get_if<SetColor>(&value)) {
        if (c->color.empty()) return violation(ViolationCode::bad_arity, "empty color");
    } else if (auto* sm = std::get_if<SetSmaller>(&value)) {
        if (!s.contains(sm->other)) return violation(ViolationCode::unknown_entity, "unknown size partner");
        const auto& a = s.entity(e).props.size_rank;
        const auto& b = s.entity(sm->other).props.size_rank;
        if (sm->other == e || !a || !b || *a >= *b)
            return violation(ViolationCode::bad_arity, "size relation contradicts size ranks");
    }
    return std::nullopt;
}

} // namespace

std::optional<ConstraintViolation> validate_command(const WorldState& s, const Command& cmd) {
    using VC = ViolationCode;
    // arity
    if (cmd.args.size() != expected_arity(cmd.verb))
        return violation(VC::bad_arity, std::string(to_string(cmd.verb)) + " takes " +
                                            std::to_string(expected_arity(cmd.verb)) + " argument(s)");
    if ((cmd.verb == Verb::set_state) != cmd.state.has_value())
        return violation(VC::bad_arity, "state value only accompanies set_state");
    if (cmd.actor == kNoEntity && cmd.verb != Verb::set_state)
        return violation(VC::bad_arity, "command needs an actor");
    // existence
    if (cmd.actor != kNoEntity && !s.contains(cmd.actor))
        return violation(VC::unknown_entity, "unknown actor");
    for (EntityId a : cmd.args)
        if (!s.contains(a)) return violation(VC::unknown_entity, "unknown argument");
    // argument kinds
    auto kind = [&](EntityId id) { return s.entity(id).kind; };
    if (cmd.actor != kNoEntity && kind(cmd.actor) != EntityKind::actor)
        return violation(VC::bad_arity, "subject is not an actor");
    auto need = [&](std::size_t i, EntityKind k) { return kind(cmd.args[i]) == k; };
    switch (cmd.verb) {
    case Verb::go:
        if (!need(0, EntityKind::location)) return violation(VC::bad_arity, "go needs a location");
        break;
    case Verb::get:
    case Verb::drop:
        if (!need(0, EntityKind::object)) return violation(VC::bad_arity, "expected an object");
        break;
    case Verb::get_from:
    case Verb::put:
        if (!need(0, EntityKind::object) || !need(1, EntityKind::object))
            return violation(VC::bad_arity, "expected two objects");
        break;
    case Verb::give:
        if (!need(0, EntityKind::object) || !need(1, EntityKind::actor))
            return violation(VC::bad_arity, "give needs an object and an actor");
        if (cmd.args[1] == cmd.actor) return violation(VC::bad_arity, "cannot give to oneself");
        break;
    default: break;
    }
    // verb-specific
    const EntityId here = cmd.actor == kNoEntity ? kNoEntity : s.location_of(cmd.actor);
    switch (cmd.verb) {
    case Verb::go: {
        for (Direction d : kDirections)
            if (s.exit(here, d) == cmd.args[0]) return std::nullopt;
        return violation(VC::not_connected, "no exit from " + s.name(here) + " to " + s.name(cmd.args[0]));
    }
    case Verb::get: {
        const Position& p = s.position[cmd.args[0]];
        if (p.kind == Position::Kind::held_by) return violation(VC::already_held, s.name(cmd.args[0]) + " is already held");
        if (p.kind == Position::Kind::inside) return violation(VC::bad_container, s.name(cmd.args[0]) + " is inside a container");
        if (p.ref != here) return violation(VC::not_connected, s.name(cmd.args[0]) + " is elsewhere");
        return std::nullopt;
    }
    case Verb::get_from: {
        EntityId obj = cmd.args[0], box = cmd.args[1];
        if (!s.entity(box).props.container) return violation(VC::bad_container, s.name(box) + " is not a container");
        if (s.position[obj].kind == Position::Kind::held_by) return violation(VC::already_held, s.name(obj) + " is already held");
        if (s.position[obj] != Position::inside(box)) return violation(VC::bad_container, s.name(obj) + " is not in " + s.name(box));
        if (!reachable_by(s, cmd.actor, box)) return violation(VC::not_connected, s.name(box) + " is out of reach");
        return std::nullopt;
    }
    case Verb::put: {
        EntityId obj = cmd.args[0], box = cmd.args[1];
        if (s.position[obj] != Position::held_by(cmd.actor)) return violation(VC::not_holding, "not holding " + s.name(obj));
        if (!s.entity(box).props.container || obj == box || s.entity(obj).props.container ||
            s.position[box].kind == Position::Kind::inside)
            return violation(VC::bad_container, "cannot put " + s.name(obj) + " in " + s.name(box));
        if (!reachable_by(s, cmd.actor, box)) return violation(VC::not_connected, s.name(box) + " is out of reach");
        return std::nullopt;
    }
    case Verb::give: {
        if (s.position[cmd.args[0]] != Position::held_by(cmd.actor))
            return violation(VC::not_holding, "not holding " + s.name(cmd.args[0]));
        if (s.location_of(cmd.args[1]) != here) return violation(VC::not_connected, s.name(cmd.args[1]) + " is elsewhere");
        return std::nullopt;
    }
    case Verb::drop:
        if (s.position[cmd.args[0]] != Position::held_by(cmd.actor))
            return violation(VC::not_holding, "not holding " + s.name(cmd.args[0]));
        return std::nullopt;
    case Verb::examine:
        if (s.location_of(cmd.args[0]) != here) return violation(VC::not_connected, s.name(cmd.args[0]) + " is elsewhere");
        return std::nullopt;
    case Verb::set_state:
        return check_state_value(s, cmd.args[0], *cmd.state);
    case Verb::look:
    case Verb::inventory: return std::nullopt;
    }
    return std::nullopt;
}

std::pair<WorldState, Event> apply_command(const WorldState& s, const Command& cmd,
                                           Disclosure disclosure, std::optional<TimeSlot> slot) {
    if (auto v = validate_command(s, cmd))
        throw std::invalid_argument("invalid command (" + std::string(to_string(v->code)) + "): " + v->message);
    WorldState next = s;
    Delta delta;
    auto move = [&](EntityId e, Position p) {
        delta.positions.push_back({e, next.position[e], p});
        next.position[e] = p;
    };
    switch (cmd.verb) {
    case Verb::go: move(cmd.actor, Position::at(cmd.args[0])); break;
    case Verb::get:
    case Verb::get_from: move(cmd.args[0], Position::held_by(cmd.actor)); break;
    case Verb::put: move(cmd.args[0], Position::inside(cmd.args[1])); break;
    case Verb::give: move(cmd.args[0], Position::held_by(cmd.args[1])); break;
    case Verb::drop: move(cmd.args[0], Position::at(s.location_of(cmd.actor))); break;
    case Verb::set_state: {
        EntityId e = cmd.args[0];
        Properties before = next.entities[e].props;
        Properties& p = next.entities[e].props;
        std::visit(
            [&](const auto& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, SetMental>) p.mental = v.state;
                else if constexpr (std::is_same_v<T, SetType>) p.type_label = v.type;
                else if constexpr (std::is_same_v<T, SetFear>) p.fear_target = v.type;
                else if constexpr (std::is_same_v<T, SetColor>) p.color = v.color;
                else if constexpr (std::is_same_v<T, SetGrid>) p.grid = v.at;
                else if constexpr (std::is_same_v<T, SetSmaller>) {
                    if (std::find(p.smaller_than.begin(), p.smaller_than.end(), v.other) == p.smaller_than.end())
                        p.smaller_than.push_back(v.other);
                } else if constexpr (std::is_same_v<T, SetExit>) {
                    auto set_exit = [&](EntityId from, Direction d, EntityId to) {
                        EntityId old = next.exit(from, d).value_or(kNoEntity);
                        delta.exits.push_back({from, d, old, to});
                        next.exits[{from, d}] = to;
                    };
                    set_exit(e, v.dir, v.neighbor);
                    set_exit(v.neighbor, opposite(v.dir), e);
                }
            },
            *cmd.state);
        if (!std::holds_alternative<SetExit>(*cmd.state))
            delta.properties.push_back({e, before, p});
        break;
    }
    case Verb::look:
    case Verb::inventory:
    case Verb::examine: break;
    }
    Event ev{s.clock, cmd, std::move(delta), disclosure, slot};
    next.clock += 1;
    next.history.push_back(ev);
    return {std::move(next), std::move(ev)};
}

WorldState replay(const WorldState& initial, std::span<const Event> history) {
    WorldState s = initial;
    for (const Event& ev : history) {
        for (const auto& c : ev.delta.positions) s.position.at(c.entity) = c.after;
        for (const auto& c : ev.delta.properties) s.entities.at(c.entity).props = c.after;
        for (const auto& c : ev.delta.exits) {
            if (c.after == kNoEntity) s.exits.erase({c.from, c.dir});
            else s.exits[{c.from, c.dir}] = c.after;
        }
        s.clock += 1;
        s.history.push_back(ev);
    }
    return s;
}

// ---------------------------------------------------------------------------
// paths and behaviour

std::optional<std::vector<Direction>> bfs_path(const ExitMap& exits, EntityId from, EntityId to) {
    if (from == to) return std::vector<Direction>{};
    std::map<EntityId, std::pair<EntityId, Direction>> parent;
    std::deque<EntityId> frontier{from};
    parent[from] = {kNoEntity, Direction::north};
    while (!frontier.empty()) {
        EntityId cur = frontier.front();
        frontier.pop_front();
        for (Direction d : kDirections) {
            auto it = exits.find({cur, d});
            if (it == exits.end() || parent.count(it->second)) continue;
            parent[it->second] = {cur, d};
            if (it->second == to) {
                std::vector<Direction> path;
                for (EntityId at = to; at != from; at = parent[at].first) path.push_back(parent[at].second);
                std::reverse(path.begin(), path.end());
                return path;
            }
            frontier.push_back(it->second);
        }
    }
    return std::nullopt;
}

std::vector<Direction> shortest_path(const WorldState& s, EntityId from, EntityId to) {
    if (!s.contains(from) || !s.contains(to)) throw std::invalid_argument("unknown location");
    auto path = bfs_path(s.exits, from, to);
    if (!path) throw Unreachable(s.name(to) + " is unreachable from " + s.name(from));
    return *path;
}

std::optional<Command> rule_command(const WorldState& s, EntityId actor) {
    auto rule = s.actor_rules.find(actor);
    if (rule == s.actor_rules.end() || rule->second != Rule::satisfy_needs) return std::nullopt;
    MentalState need = s.entity(actor).props.mental;
    if (need == MentalState::none) return std::nullopt;
    auto target = s.find(need_target(need));
    if (!target) return std::nullopt;
    EntityId here = s.location_of(actor);
    if (here != *target) {
        auto path = bfs_path(s.exits, here, *target);
        if (!path || path->empty()) return std::nullopt;
        return Command{actor, Verb::go, {*s.exit(here, path->front())}, std::nullopt};
    }
    auto item = s.find(need_item(need));
    if (item && s.position[*item] == Position::at(here))
        return Command{actor, Verb::get, {*item}, std::nullopt};
    return std::nullopt;
}

Command random_valid_command(const WorldState& s, EntityId actor, Rng& rng, std::span<const Verb> allowed) {
    if (allowed.empty()) throw std::invalid_argument("allowed verb set is empty");
    if (!s.contains(actor)) throw std::invalid_argument("unknown actor");
    if (auto cmd = rule_command(s, actor)) return *cmd;
    std::vector<Command> options;
    auto offer = [&](Command c) {
        if (!validate_command(s, c)) options.push_back(std::move(c));
    };
    const auto objects = s.all(EntityKind::object);
    for (Verb v : allowed) {
        switch (v) {
        case Verb::go:
            for (EntityId l : s.all(EntityKind::location)) offer({actor, v, {l}, std::nullopt});
            break;
        case Verb::get:
        case Verb::drop:
            for (EntityId o : objects) offer({actor, v, {o}, std::nullopt});
            break;
        case Verb::get_from:
        case Verb::put:
            for (EntityId o : objects)
                for (EntityId c : objects) offer({actor, v, {o, c}, std::nullopt});
            break;
        case Verb::give:
            for (EntityId o : objects)
                for (EntityId b : s.all(EntityKind::actor)) offer({actor, v, {o, b}, std::nullopt});
            break;
        case Verb::set_state:
            for (int m = 1; m <= 4; ++m)
                offer({actor, v, {actor}, StateValue{SetMental{static_cast<MentalState>(m)}}});
            break;
        case Verb::look:
        case Verb::inventory: offer({actor, v, {}, std::nullopt}); break;
        case Verb::examine:
            for (const Entity& e : s.entities) offer({actor, v, {e.id}, std::nullopt});
            break;
        }
    }
    if (options.empty()) throw NoValidAction("no valid action for " + s.name(actor));
    return options[rng.below(options.size())];
}

// ---------------------------------------------------------------------------
// oracle

namespace {

struct Belief {
    enum class Kind : std::uint8_t { unknown, exact, negated, either } kind = Kind::unknown;
    EntityId a = kNoEntity;
    EntityId b = kNoEntity;
};

struct Give {
    EntityId giver, object, recipient;
};

// Folds the disclosed content of an event list, in order.
class Reader {
public:
    Reader(std::span<const Event> events, const std::vector<Entity>& names)
        : events_(events), names_(names), resolved_(events.size(), -1) {}

    const std::vector<Entity>& names() const { return names_; }
    std::span<const Event> events() const { return events_; }

    bool resolved(std::size_t i) {
        if (resolved_[i] >= 0) return resolved_[i] == 1;
        bool ok = true;
        const Event& ev = events_[i];
        if (ev.disclosure.kind == DisclosureKind::coreferent) {
            ok = false;
            std::size_t start = statement_start(i);
            if (start > 0) {
                std::size_t prev = statement_start(start - 1);
                for (std::size_t j = prev; j < start; ++j)
                    if (events_[j].command.actor == ev.command.actor && resolved(j)) ok = true;
            }
        }
        resolved_[i] = ok ? 1 : 0;
        return ok;
    }

    EntityId subject(std::size_t i) { return resolved(i) ? events_[i].command.actor : kNoEntity; }

    void run(std::size_t upto, const std::function<void(std::size_t)>& after_each = {}) {
        for (std::size_t i = 0; i < upto; ++i) {
            step(i);
            if (after_each) after_each(i);
        }
    }

    // Location of an entity as far as the reader can tell.
    EntityId locate(EntityId e, int depth = 0) const {
        if (depth > 8 || e >= names_.size()) return kNoEntity;
        if (names_[e].kind == EntityKind::location) return e;
        if (names_[e].kind == EntityKind::actor) {
            auto it = actor_.find(e);
            return it != actor_.end() && it->second.kind == Belief::Kind::exact ? it->second.a : kNoEntity;
        }
        auto it = object_.find(e);
        if (it == object_.end()) return kNoEntity;
        if (it->second.kind == Position::Kind::at) return it->second.ref;
        if (it->second.kind == Position::Kind::none) return kNoEntity;
        return locate(it->second.ref, depth + 1);
    }

    Belief belief(EntityId actor) const {
        auto it = actor_.find(actor);
        return it == actor_.end() ? Belief{} : it->second;
    }

    std::map<EntityId, std::vector<EntityId>> holdings;
    std::vector<Give> gives;
    ExitMap exits;
    std::map<EntityId, EntityId> type_of, fears;
    std::map<EntityId, std::string> color;
    std::map<EntityId, std::pair<EntityId, Direction>> placed;
    std::vector<std::pair<EntityId, EntityId>> smaller;
    std::vector<std::pair<std::size_t, MentalState>> moods_of_index;  // event index, state

private:
    std::size_t statement_start(std::size_t i) const {
        while (i > 0 && events_[i].disclosure.joint) --i;
        return i;
    }

    void take(EntityId who, EntityId obj) {
        auto& h = holdings[who];
        if (std::find(h.begin(), h.end(), obj) == h.end()) h.push_back(obj);
    }
    void release(EntityId who, EntityId obj) {
        auto& h = holdings[who];
        h.erase(std::remove(h.begin(), h.end(), obj), h.end());
    }

    void step(std::size_t i) {
        const Event& ev = events_[i];
        const Command& c = ev.command;
        const EntityId who = subject(i);
        switch (c.verb) {
        case Verb::go: {
            if (who == kNoEntity) {
                actor_[c.actor] = Belief{};
                break;
            }
            Belief b;
            switch (ev.disclosure.kind) {
            case DisclosureKind::negated_origin:
                b = {Belief::Kind::negated, ev.disclosure.other, kNoEntity};
                break;
            case DisclosureKind::either:
                b = {Belief::Kind::either, c.args[0], ev.disclosure.other};
                break;
            default: b = {Belief::Kind::exact, c.args[0], kNoEntity}; break;
            }
            actor_[who] = b;
            break;
        }
        case Verb::get:
        case Verb::get_from:
            if (who == kNoEntity) {
                object_[c.args[0]] = Position{};
                break;
            }
            object_[c.args[0]] = Position::held_by(who);
            take(who, c.args[0]);
            break;
        case Verb::drop: {
            if (who == kNoEntity) {
                object_[c.args[0]] = Position{};
                break;
            }
            EntityId where = locate(who);
            object_[c.args[0]] = where == kNoEntity ? Position{} : Position::at(where);
            release(who, c.args[0]);
            break;
        }
        case Verb::put:
            object_[c.args[0]] = Position::inside(c.args[1]);
            if (who != kNoEntity) release(who, c.args[0]);
            break;
        case Verb::give:
            object_[c.args[0]] = Position::held_by(c.args[1]);
            if (who == kNoEntity) break;
            release(who, c.args[0]);
            take(c.args[1], c.args[0]);
            gives.push_back({who, c.args[0], c.args[1]});
            break;
        case Verb::set_state: {
            EntityId e = c.args[0];
            std::visit(
                [&](const auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, SetMental>) moods_of_index.push_back({i, v.state});
                    else if constexpr (std::is_same_v<T, SetType>) type_of[e] = v.type;
                    else if constexpr (std::is_same_v<T, SetFear>) fears[e] = v.type;
                    else if constexpr (std::is_same_v<T, SetColor>) color[e] = v.color;
                    else if constexpr (std::is_same_v<T, SetSmaller>) smaller.push_back({e, v.other});
                    else if constexpr (std::is_same_v<T, SetExit>) {
                        exits[{e, v.dir}] = v.neighbor;
                        exits[{v.neighbor, opposite(v.dir)}] = e;
                    } else if constexpr (std::is_same_v<T, SetGrid>) {
                        if (ev.disclosure.kind == DisclosureKind::relative_to)
                            placed[e] = {ev.disclosure.other, ev.disclosure.dir};
                    }
                },
                *c.state);
            break;
        }
        default: break;
        }
    }

    std::span<const Event> events_;
    const std::vector<Entity>& names_;
    std::vector<int> resolved_;
    std::map<EntityId, Belief> actor_;
    std::map<EntityId, Position> object_;
};

// Grid coordinates relative to the root of a placement chain.
std::pair<EntityId, GridPoint> placement_coords(const Reader& r, EntityId e) {
    GridPoint p{};
    for (int guard = 0; guard < 64; ++guard) {
        auto it = r.placed.find(e);
        if (it == r.placed.end()) return {e, p};
        switch (it->second.second) {
        case Direction::east: p.x += 1; break;
        case Direction::west: p.x -= 1; break;
        case Direction::above:
        case Direction::north: p.y += 1; break;
        case Direction::below:
        case Direction::south: p.y -= 1; break;
        }
        e = it->second.first;
    }
    return {kNoEntity, p};
}

bool smaller_path(const Reader& r, EntityId a, EntityId b) {
    std::set<EntityId> seen{a};
    std::vector<EntityId> stack{a};
    while (!stack.empty()) {
        EntityId cur = stack.back();
        stack.pop_back();
        for (const auto& [x, y] : r.smaller) {
            if (x != cur || seen.count(y)) continue;
            if (y == b) return true;
            seen.insert(y);
            stack.push_back(y);
        }
    }
    return false;
}

std::vector<EntityId> location_trace(Reader& r, EntityId e) {
    auto evs = r.events();
    // Slot-annotated moves are ordered by slot, not by narration order.
    std::vector<std::pair<int, EntityId>> slotted;
    bool any_slot = false;
    for (std::size_t i = 0; i < evs.size(); ++i) {
        const Event& ev = evs[i];
        if (ev.command.verb == Verb::go && ev.slot && r.subject(i) == e) {
            any_slot = true;
            slotted.push_back({static_cast<int>(*ev.slot), ev.command.args[0]});
        }
    }
    std::vector<EntityId> trace;
    if (any_slot) {
        std::stable_sort(slotted.begin(), slotted.end(),
                         [](const auto& x, const auto& y) { return x.first < y.first; });
        for (std::size_t i = 0; i < slotted.size(); ++i) {
            if (i > 0 && slotted[i].first == slotted[i - 1].first) return {};  // ambiguous order
            trace.push_back(slotted[i].second);
        }
        return trace;
    }
    r.run(evs.size(), [&](std::size_t) {
        EntityId loc = r.locate(e);
        if (loc != kNoEntity && (trace.empty() || trace.back() != loc)) trace.push_back(loc);
    });
    return trace;
}

} // namespace

std::optional<Answer> try_answer_query(std::span<const Event> history, const Query& q,
                                       const std::vector<Entity>& names) {
    Reader r(history, names);
    auto arg = [&](std::size_t i) { return q.args.at(i); };
    auto name = [&](EntityId e) { return names.at(e).name; };
    auto single = [](std::string_view s) { return Answer{std::string(s)}; };
    auto yes_no = [&](bool b) { return single(b ? "yes" : "no"); };

    if (q.kind == QueryKind::where_was_before) {
        auto trace = location_trace(r, arg(0));
        if (std::count(trace.begin(), trace.end(), arg(1)) != 1) return std::nullopt;
        std::size_t at = std::find(trace.begin(), trace.end(), arg(1)) - trace.begin();
        if (at == 0) return std::nullopt;
        return single(name(trace[at - 1]));
    }

    r.run(history.size());
    switch (q.kind) {
    case QueryKind::where_is: {
        EntityId loc = r.locate(arg(0));
        if (loc == kNoEntity) return std::nullopt;
        return single(name(loc));
    }
    case QueryKind::is_at: {
        Belief b = r.belief(arg(0));
        switch (b.kind) {
        case Belief::Kind::exact: return yes_no(b.a == arg(1));
        case Belief::Kind::negated:
            if (b.a == arg(1)) return single("no");
            return std::nullopt;
        case Belief::Kind::either:
            if (b.a == arg(1) || b.b == arg(1)) return single("maybe");
            return single("no");
        case Belief::Kind::unknown: return std::nullopt;
        }
        return std::nullopt;
    }
    case QueryKind::who_gave_to:
    case QueryKind::who_received_from:
    case QueryKind::object_given: {
        for (auto it = r.gives.rbegin(); it != r.gives.rend(); ++it) {
            if (q.kind == QueryKind::who_gave_to && it->object == arg(0) && it->recipient == arg(1))
                return single(name(it->giver));
            if (q.kind == QueryKind::who_received_from && it->giver == arg(0) && it->object == arg(1))
                return single(name(it->recipient));
            if (q.kind == QueryKind::object_given && it->giver == arg(0) && it->recipient == arg(1))
                return single(name(it->object));
        }
        return std::nullopt;
    }
    case QueryKind::count_holding: return single(count_word(r.holdings[arg(0)].size()));
    case QueryKind::list_holding: {
        const auto& h = r.holdings[arg(0)];
        if (h.empty()) return single("nothing");
        Answer out;
        for (EntityId o : h) out.push_back(name(o));
        return out;
    }
    case QueryKind::what_relation: {
        Direction d = q.inverse ? opposite(q.dir) : q.dir;
        auto it = r.exits.find({arg(0), d});
        if (it == r.exits.end()) return std::nullopt;
        return single(name(it->second));
    }
    case QueryKind::path_between: {
        auto path = bfs_path(r.exits, arg(0), arg(1));
        if (!path || path->empty()) return std::nullopt;
        Answer out;
        for (Direction d : *path) out.emplace_back(to_string(d));
        return out;
    }
    case QueryKind::afraid_of: {
        auto t = r.type_of.find(arg(0));
        if (t == r.type_of.end()) return std::nullopt;
        auto f = r.fears.find(t->second);
        if (f == r.fears.end()) return std::nullopt;
        return single(name(f->second));
    }
    case QueryKind::attribute_of: {
        if (auto own = r.color.find(arg(0)); own != r.color.end()) return single(own->second);
        auto t = r.type_of.find(arg(0));
        if (t == r.type_of.end()) return std::nullopt;
        std::set<std::string> seen;
        for (const auto& [e, type] : r.type_of) {
            if (e == arg(0) || type != t->second) continue;
            if (auto c = r.color.find(e); c != r.color.end()) seen.insert(c->second);
        }
        if (seen.size() != 1) return std::nullopt;
        return single(*seen.begin());
    }
    case QueryKind::positional_yesno: {
        auto [ra, a] = placement_coords(r, arg(0));
        auto [rb, b] = placement_coords(r, arg(1));
        if (ra == kNoEntity || ra != rb) return std::nullopt;
        switch (q.dir) {
        case Direction::east: return yes_no(a.x > b.x);
        case Direction::west: return yes_no(a.x < b.x);
        case Direction::north:
        case Direction::above: return yes_no(a.y > b.y);
        case Direction::south:
        case Direction::below: return yes_no(a.y < b.y);
        }
        return std::nullopt;
    }
    case QueryKind::size_yesno: {
        if (smaller_path(r, arg(0), arg(1))) return single("yes");
        if (smaller_path(r, arg(1), arg(0))) return single("no");
        return std::nullopt;
    }
    case QueryKind::why_action: {
        std::optional<std::size_t> action;
        for (std::size_t i = history.size(); i-- > 0;) {
            const Command& c = history[i].command;
            if ((c.verb == Verb::go || c.verb == Verb::get) && r.subject(i) == arg(0) &&
                c.args[0] == arg(1)) {
                action = i;
                break;
            }
        }
        if (!action) return std::nullopt;
        std::optional<MentalState> mood;
        for (const auto& [i, m] : r.moods_of_index)
            if (i < *action && history[i].command.args[0] == arg(0)) mood = m;
        if (!mood || *mood == MentalState::none) return std::nullopt;
        return single(to_string(*mood));
    }
    case QueryKind::where_go_next: {
        std::optional<MentalState> mood;
        for (const auto& [i, m] : r.moods_of_index)
            if (history[i].command.args[0] == arg(0)) mood = m;
        if (!mood || *mood == MentalState::none) return std::nullopt;
        return single(need_target(*mood));
    }
    default: break;
    }
    return std::nullopt;
}

Answer answer_query(std::span<const Event> history, const Query& q, const std::vector<Entity>& names) {
    auto a = try_answer_query(history, q, names);
    if (!a) throw Unanswerable(std::string(to_string(q.kind)) + " is not determined by the history");
    return *a;
}

std::string debug_dump(const WorldState& s) {
    static constexpr std::array<std::string_view, 3> kinds = {"actor", "location", "object"};
    std::ostringstream out;
    for (const Entity& e : s.entities) {
        out << e.id << ' ' << kinds[static_cast<int>(e.kind)] << ' ' << e.name;
        const Position& p = s.position[e.id];
        switch (p.kind) {
        case Position::Kind::at: out << " at=" << s.name(p.ref); break;
        case Position::Kind::held_by: out << " held_by=" << s.name(p.ref); break;
        case Position::Kind::inside: out << " inside=" << s.name(p.ref); break;
        case Position::Kind::none: break;
        }
        const Properties& pr = e.props;
        if (!pr.color.empty()) out << " color=" << pr.color;
        if (pr.size_rank) out << " size=" << *pr.size_rank;
        if (pr.edible) out << " edible";
        if (pr.container) out << " container";
        if (pr.mental != MentalState::none) out << " mental=" << to_string(pr.mental);
        if (pr.type_label != kNoEntity) out << " type=" << s.name(pr.type_label);
        if (pr.fear_target != kNoEntity) out << " fears=" << s.name(pr.fear_target);
        if (pr.grid) out << " grid=" << pr.grid->x << ',' << pr.grid->y;
        for (EntityId o : pr.smaller_than) out << " smaller_than=" << s.name(o);
        for (Direction d : kDirections)
            if (auto x = s.exit(e.id, d)) out << ' ' << to_string(d) << '=' << s.name(*x);
        if (auto r = s.actor_rules.find(e.id); r != s.actor_rules.end() && r->second != Rule::none)
            out << " rule=satisfy_needs";
        out << '\n';
    }
    return out.str();
}

} // namespace qaworld
