#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tommy/rng.hpp"

namespace tommy::env {

enum class Facing : int { north = 0, east = 1, south = 2, west = 3 };
enum class Action : int { turn_left = 0, turn_right = 1, move_forward = 2, pickup = 3 };
enum class ObjKind : int { key = 0, ball = 1, box = 2, goal = 3 };
enum class Viewer : int { actor = 0, observer = 1 };

constexpr int kNumActions = 4;
constexpr int kNumColors = 4;  // red, green, blue, yellow

const char* action_name(Action a);
const char* kind_name(ObjKind k);
const char* color_name(int c);

struct Pos {
  int x = 0, y = 0;
  bool operator==(const Pos&) const = default;
  auto operator<=>(const Pos&) const = default;
};

struct Object {
  ObjKind kind = ObjKind::key;
  int color = 0;
  Pos pos;
  bool operator==(const Object&) const = default;
};

struct Room {
  int x0 = 0, y0 = 0, w = 0, h = 0;
  bool contains(Pos p) const {
    return p.x >= x0 && p.x < x0 + w && p.y >= y0 && p.y < y0 + h;
  }
  bool operator==(const Room&) const = default;
};

struct ObjectSpec {
  ObjKind kind = ObjKind::key;
  int color = 0;
  int room = 0;
  int max_local_x = -1;             // restrict to leftmost columns when >= 0
  std::optional<Pos> fixed_pos;     // exact placement, mostly for tests
};

struct WorldConfig {
  int n_rooms = 3;
  int room_size = 5;  // interior cells per side, odd so doorways center
  std::vector<ObjectSpec> objects;
};

// Rooms chained left to right, one-cell doorway centered in each shared
// wall. The lit room is always the room the actor is in; a doorway cell
// counts as belonging to the room on its left.
struct GridWorld {
  int width = 0, height = 0;
  int room_size = 5;
  std::vector<Room> rooms;
  std::vector<Pos> doorways;  // doorway i sits between rooms i and i+1
  std::vector<Object> objects;
  std::vector<Object> inventory;
  Pos actor;
  Facing facing = Facing::east;
  int lit_room = 0;
  uint64_t rng_seed = 0;
  int step_count = 0;

  bool in_bounds(Pos p) const {
    return p.x >= 0 && p.x < width && p.y >= 0 && p.y < height;
  }
  bool is_wall(Pos p) const;
  int room_of(Pos p) const;  // -1 for walls / outside
  const Object* object_at(Pos p) const;
  bool is_walkable(Pos p) const;  // in-bounds, not wall, not blocked by object
  Pos ahead() const;

  bool operator==(const GridWorld&) const = default;
};

Pos forward_of(Facing f);
Pos right_of(Facing f);

// Geometry-only world (no objects, no actor placement) for encoders.
GridWorld make_layout(int n_rooms, int room_size = 5);

GridWorld reset(const WorldConfig& config, uint64_t seed);

void step(GridWorld& world, Action action);

struct Observation {
  Viewer viewer = Viewer::observer;
  std::vector<Pos> visible;      // cells the viewer can currently see
  std::vector<Object> objects;   // objects on those cells
  Pos actor_pos;
  Facing actor_facing = Facing::east;
  int lit_room = 0;
};

// fov (3 or 5) applies to the actor viewer only: a fov x fov square in
// front of the actor, own cell on the rear edge, clipped to the current
// room. The observer sees every cell of the lit room.
Observation observe(const GridWorld& world, Viewer viewer, int fov = 3);

struct SwapEvent {
  int room = 0;
  std::vector<std::pair<Pos, Pos>> pairs;
  int trigger_step = 0;
};

// Exchanges object positions. The target room must be unlit unless the
// scenario explicitly allows an observed swap.
void apply_swap(GridWorld& world, const SwapEvent& event, bool allow_lit = false);

void to_json(nlohmann::json& j, const GridWorld& w);
void from_json(const nlohmann::json& j, GridWorld& w);

}  // namespace tommy::env
