#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "qaworld/rng.hpp"

namespace qaworld {

using EntityId = std::uint32_t;
inline constexpr EntityId kNoEntity = 0xffffffffu;

enum class EntityKind : std::uint8_t { actor, location, object };

enum class Direction : std::uint8_t { north, south, east, west, above, below };
inline constexpr std::array<Direction, 6> kDirections = {
    Direction::north, Direction::south, Direction::east,
    Direction::west,  Direction::above, Direction::below};

Direction opposite(Direction d);
std::string_view to_string(Direction d);
std::optional<Direction> parse_direction(std::string_view s);

enum class MentalState : std::uint8_t { none, hungry, thirsty, tired, bored };
std::string_view to_string(MentalState m);
std::optional<MentalState> parse_mental_state(std::string_view s);

// Ordered time slots for stories that narrate events out of order.
enum class TimeSlot : std::uint8_t { yesterday, morning, afternoon, evening };
std::string_view to_string(TimeSlot t);

enum class Rule : std::uint8_t { none, satisfy_needs };

struct GridPoint {
    int x = 0;
    int y = 0;
    bool operator==(const GridPoint&) const = default;
};

struct Properties {
    std::string color;  // empty when unset
    std::optional<int> size_rank;
    bool edible = false;
    bool container = false;
    MentalState mental = MentalState::none;
    EntityId type_label = kNoEntity;
    EntityId fear_target = kNoEntity;
    std::optional<GridPoint> grid;
    std::vector<EntityId> smaller_than;
    bool operator==(const Properties&) const = default;
};

struct Entity {
    EntityId id = kNoEntity;
    EntityKind kind = EntityKind::object;
    std::string name;
    Properties props;
    bool operator==(const Entity&) const = default;
};

struct Position {
    enum class Kind : std::uint8_t { none, at, held_by, inside };
    Kind kind = Kind::none;
    EntityId ref = kNoEntity;
    bool operator==(const Position&) const = default;

    static Position at(EntityId loc) { return {Kind::at, loc}; }
    static Position held_by(EntityId who) { return {Kind::held_by, who}; }
    static Position inside(EntityId box) { return {Kind::inside, box}; }
};

enum class Verb : std::uint8_t {
    go, get, get_from, put, give, drop, set_state, look, inventory, examine
};
std::string_view to_string(Verb v);

struct SetMental {
    MentalState state;
    bool operator==(const SetMental&) const = default;
};
// exit(entity, dir) = neighbor, and the reverse exit.
struct SetExit {
    Direction dir;
    EntityId neighbor;
    bool operator==(const SetExit&) const = default;
};
struct SetType {
    EntityId type;
    bool operator==(const SetType&) const = default;
};
struct SetFear {
    EntityId type;
    bool operator==(const SetFear&) const = default;
};
struct SetColor {
    std::string color;
    bool operator==(const SetColor&) const = default;
};
struct SetGrid {
    GridPoint at;
    bool operator==(const SetGrid&) const = default;
};
// entity is strictly smaller than other.
struct SetSmaller {
    EntityId other;
    bool operator==(const SetSmaller&) const = default;
};
using StateValue =
    std::variant<SetMental, SetExit, SetType, SetFear, SetColor, SetGrid, SetSmaller>;

// set_state may be issued without an actor; such commands narrate facts.
struct Command {
    EntityId actor = kNoEntity;
    Verb verb = Verb::look;
    std::vector<EntityId> args;
    std::optional<StateValue> state;
    bool operator==(const Command&) const = default;
};

// How much of an event the narrating statement reveals.
enum class DisclosureKind : std::uint8_t {
    stated,          // fully, naming the actor
    negated_origin,  // "X is no longer in <origin>"
    either,          // "X is either in <a> or <b>"
    coreferent,      // subject given by a pronoun
    relative_to,     // placement relative to a reference entity
};

struct Disclosure {
    DisclosureKind kind = DisclosureKind::stated;
    EntityId other = kNoEntity;  // origin, alternative location, or reference
    Direction dir = Direction::north;
    bool other_first = false;  // either: alternative is mentioned first
    bool joint = false;        // shares a sentence with the previous event
    bool operator==(const Disclosure&) const = default;
};

struct PositionChange {
    EntityId entity;
    Position before;
    Position after;
    bool operator==(const PositionChange&) const = default;
};
struct PropertyChange {
    EntityId entity;
    Properties before;
    Properties after;
    bool operator==(const PropertyChange&) const = default;
};
struct ExitChange {
    EntityId from;
    Direction dir;
    EntityId before;
    EntityId after;
    bool operator==(const ExitChange&) const = default;
};
struct Delta {
    std::vector<PositionChange> positions;
    std::vector<PropertyChange> properties;
    std::vector<ExitChange> exits;
    bool operator==(const Delta&) const = default;
};

struct Event {
    int time = 0;
    Command command;
    Delta delta;
    Disclosure disclosure;
    std::optional<TimeSlot> slot;
    bool operator==(const Event&) const = default;
};

enum class ViolationCode : std::uint8_t {
    already_held, not_connected, not_holding, bad_container, bad_arity, unknown_entity
};
std::string_view to_string(ViolationCode c);

struct ConstraintViolation {
    ViolationCode code;
    std::string message;
};

using ExitMap = std::map<std::pair<EntityId, Direction>, EntityId>;

// Complete ground truth. Treated as a value: operations return new states.
struct WorldState {
    std::vector<Entity> entities;    // indexed by id
    std::vector<Position> position;  // indexed by id; locations stay Kind::none
    ExitMap exits;
    std::map<EntityId, Rule> actor_rules;
    int clock = 0;
    std::vector<Event> history;

    bool operator==(const WorldState&) const = default;

    // Construction helpers, for building an initial state.
    EntityId add(EntityKind kind, std::string name, Properties props = {});
    void connect(EntityId from, Direction d, EntityId to);

    bool contains(EntityId id) const { return id < entities.size(); }
    const Entity& entity(EntityId id) const { return entities.at(id); }
    const std::string& name(EntityId id) const { return entities.at(id).name; }
    std::optional<EntityId> find(std::string_view name) const;
    std::vector<EntityId> all(EntityKind kind) const;
    std::optional<EntityId> exit(EntityId loc, Direction d) const;
    // Location reached by following holders and containers; kNoEntity if none.
    EntityId location_of(EntityId id) const;
    std::vector<EntityId> held_by(EntityId actor) const;
};

// Returns the empty list when the state satisfies every structural invariant.
std::vector<std::string> check_invariants(const WorldState& state);

// Check order: arity, existence, argument kinds (reported as bad_arity),
// then verb-specific preconditions.
std::optional<ConstraintViolation> validate_command(const WorldState& state, const Command& cmd);

// Throws std::invalid_argument when cmd does not validate.
std::pair<WorldState, Event> apply_command(const WorldState& state, const Command& cmd,
                                           Disclosure disclosure = {},
                                           std::optional<TimeSlot> slot = std::nullopt);

WorldState replay(const WorldState& initial, std::span<const Event> history);

struct NoValidAction : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::optional<Command> rule_command(const WorldState& state, EntityId actor);

Command random_valid_command(const WorldState& state, EntityId actor, Rng& rng,
                             std::span<const Verb> allowed);

struct Unreachable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Breadth-first search; ties resolved in kDirections order.
std::optional<std::vector<Direction>> bfs_path(const ExitMap& exits, EntityId from, EntityId to);
std::vector<Direction> shortest_path(const WorldState& state, EntityId from, EntityId to);

// Need -> target location name and the item sought there.
std::string_view need_target(MentalState m);
std::string_view need_item(MentalState m);

enum class QueryKind : std::uint8_t {
    where_is, where_was_before, who_gave_to, who_received_from,
    object_given, is_at, count_holding, list_holding, what_relation, afraid_of,
    attribute_of, positional_yesno, size_yesno, path_between, why_action, where_go_next
};
std::string_view to_string(QueryKind k);

// Argument conventions:
//   where_is(e), where_was_before(e, loc), who_gave_to(obj, recipient),
//   who_received_from(giver, obj), object_given(giver, recipient), is_at(actor, loc),
//   count_holding(actor), list_holding(actor), what_relation(loc) with dir
//   (inverse: "what is loc dir of"), afraid_of(e), attribute_of(e),
//   positional_yesno(a, b) with dir in {east, west, above, below},
//   size_yesno(a, b) "does a fit in b", path_between(from, to),
//   why_action(actor, location or object), where_go_next(actor).
struct Query {
    QueryKind kind = QueryKind::where_is;
    std::vector<EntityId> args;
    Direction dir = Direction::north;
    bool inverse = false;
    bool operator==(const Query&) const = default;
};

using Answer = std::vector<std::string>;

struct Unanswerable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string_view count_word(std::size_t n);

// Answers from what the events disclose, using `names` to spell entities.
std::optional<Answer> try_answer_query(std::span<const Event> history, const Query& q,
                                       const std::vector<Entity>& names);
Answer answer_query(std::span<const Event> history, const Query& q,
                    const std::vector<Entity>& names);

// One entity per line, sorted by id.
std::string debug_dump(const WorldState& state);

} // namespace qaworld
