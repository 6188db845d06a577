#include "tommy/env.hpp"

#include <algorithm>

#include "tommy/error.hpp"

namespace tommy::env {

const char* action_name(Action a) {
  switch (a) {
    case Action::turn_left: return "turn-left";
    case Action::turn_right: return "turn-right";
    case Action::move_forward: return "move-forward";
    case Action::pickup: return "pickup";
  }
  return "?";
}

const char* kind_name(ObjKind k) {
  switch (k) {
    case ObjKind::key: return "key";
    case ObjKind::ball: return "ball";
    case ObjKind::box: return "box";
    case ObjKind::goal: return "goal";
  }
  return "?";
}

const char* color_name(int c) {
  static const char* names[] = {"red", "green", "blue", "yellow"};
  return (c >= 0 && c < kNumColors) ? names[c] : "?";
}

Pos forward_of(Facing f) {
  switch (f) {
    case Facing::north: return {0, -1};
    case Facing::east: return {1, 0};
    case Facing::south: return {0, 1};
    case Facing::west: return {-1, 0};
  }
  return {0, 0};
}

Pos right_of(Facing f) {
  Pos fw = forward_of(f);
  return {-fw.y, fw.x};
}

bool GridWorld::is_wall(Pos p) const {
  if (!in_bounds(p)) return false;
  if (room_of(p) >= 0) return false;
  return true;
}

int GridWorld::room_of(Pos p) const {
  if (!in_bounds(p)) return -1;
  for (size_t i = 0; i < rooms.size(); ++i)
    if (rooms[i].contains(p)) return static_cast<int>(i);
  for (size_t i = 0; i < doorways.size(); ++i)
    if (doorways[i] == p) return static_cast<int>(i);  // left neighbour
  return -1;
}

const Object* GridWorld::object_at(Pos p) const {
  for (const Object& o : objects)
    if (o.pos == p) return &o;
  return nullptr;
}

bool GridWorld::is_walkable(Pos p) const {
  if (!in_bounds(p) || room_of(p) < 0) return false;
  const Object* o = object_at(p);
  if (o && o->kind != ObjKind::goal) return false;  // goal tiles are enterable
  return true;
}

Pos GridWorld::ahead() const {
  Pos fw = forward_of(facing);
  return {actor.x + fw.x, actor.y + fw.y};
}

GridWorld make_layout(int n_rooms, int room_size) {
  if (n_rooms < 1)
    throw Error(ErrorKind::config, "world needs at least 1 room, got " +
                                       std::to_string(n_rooms));
  if (room_size < 3 || room_size % 2 == 0)
    throw Error(ErrorKind::config,
                "room_size must be odd and >= 3, got " +
                    std::to_string(room_size));
  GridWorld w;
  w.room_size = room_size;
  w.width = n_rooms * (room_size + 1) + 1;
  w.height = room_size + 2;
  for (int i = 0; i < n_rooms; ++i)
    w.rooms.push_back({1 + i * (room_size + 1), 1, room_size, room_size});
  for (int i = 0; i + 1 < n_rooms; ++i)
    w.doorways.push_back({(room_size + 1) * (i + 1), 1 + room_size / 2});
  return w;
}

namespace {

// Everything the actor may need to reach must be reachable: all free
// interior cells, and at least one free neighbour of every object.
bool layout_connected(const GridWorld& w) {
  std::vector<char> seen(static_cast<size_t>(w.width * w.height), 0);
  std::vector<Pos> frontier{w.actor};
  seen[static_cast<size_t>(w.actor.y * w.width + w.actor.x)] = 1;
  while (!frontier.empty()) {
    std::vector<Pos> next;
    for (Pos p : frontier)
      for (Pos d : {Pos{0, -1}, Pos{1, 0}, Pos{0, 1}, Pos{-1, 0}}) {
        Pos n{p.x + d.x, p.y + d.y};
        if (!w.is_walkable(n)) continue;
        char& flag = seen[static_cast<size_t>(n.y * w.width + n.x)];
        if (flag) continue;
        flag = 1;
        next.push_back(n);
      }
    frontier = std::move(next);
  }
  for (int y = 0; y < w.height; ++y)
    for (int x = 0; x < w.width; ++x) {
      Pos p{x, y};
      if (w.is_walkable(p) && !seen[static_cast<size_t>(y * w.width + x)])
        return false;
    }
  for (const Object& o : w.objects) {
    bool ok = false;
    for (Pos d : {Pos{0, -1}, Pos{1, 0}, Pos{0, 1}, Pos{-1, 0}}) {
      Pos n{o.pos.x + d.x, o.pos.y + d.y};
      if (w.in_bounds(n) && seen[static_cast<size_t>(n.y * w.width + n.x)])
        ok = true;
    }
    if (!ok) return false;
  }
  return true;
}

GridWorld place_once(const WorldConfig& config, uint64_t seed) {
  GridWorld w = make_layout(config.n_rooms, config.room_size);
  w.rng_seed = seed;
  Rng rng(seed);

  for (const ObjectSpec& spec : config.objects) {
    if (spec.room < 0 || spec.room >= config.n_rooms)
      throw Error(ErrorKind::config,
                  "object room index " + std::to_string(spec.room) +
                      " out of range for " + std::to_string(config.n_rooms) +
                      " rooms");
    if (spec.color < 0 || spec.color >= kNumColors)
      throw Error(ErrorKind::config,
                  "object color " + std::to_string(spec.color) +
                      " outside palette");
    const Room& room = w.rooms[static_cast<size_t>(spec.room)];
    Pos chosen;
    if (spec.fixed_pos) {
      chosen = *spec.fixed_pos;
      if (!room.contains(chosen) || w.object_at(chosen))
        throw Error(ErrorKind::config, "fixed object position unusable");
    } else {
      // blocking objects stay off doorway-adjacent cells so every room
      // remains enterable
      std::vector<Pos> reserved;
      if (spec.kind != ObjKind::goal)
        for (Pos d : w.doorways) {
          reserved.push_back({d.x - 1, d.y});
          reserved.push_back({d.x + 1, d.y});
        }
      std::vector<Pos> candidates;
      for (int y = room.y0; y < room.y0 + room.h; ++y)
        for (int x = room.x0; x < room.x0 + room.w; ++x) {
          if (spec.max_local_x >= 0 && x - room.x0 > spec.max_local_x) continue;
          Pos p{x, y};
          if (w.object_at(p)) continue;
          if (std::find(reserved.begin(), reserved.end(), p) != reserved.end())
            continue;
          candidates.push_back(p);
        }
      if (candidates.empty())
        throw Error(ErrorKind::config, "no free cell for object placement");
      chosen = candidates[static_cast<size_t>(
          uniform_int(rng, 0, static_cast<int>(candidates.size()) - 1))];
    }
    w.objects.push_back({spec.kind, spec.color, chosen});
  }

  // Actor starts on a free cell of the first room.
  const Room& first = w.rooms[0];
  std::vector<Pos> starts;
  for (int y = first.y0; y < first.y0 + first.h; ++y)
    for (int x = first.x0; x < first.x0 + first.w; ++x) {
      Pos p{x, y};
      if (!w.object_at(p)) starts.push_back(p);
    }
  if (starts.empty())
    throw Error(ErrorKind::config, "no free cell for actor start");
  w.actor = starts[static_cast<size_t>(
      uniform_int(rng, 0, static_cast<int>(starts.size()) - 1))];
  w.facing = static_cast<Facing>(uniform_int(rng, 0, 3));
  w.lit_room = 0;
  w.step_count = 0;
  return w;
}

}  // namespace

GridWorld reset(const WorldConfig& config, uint64_t seed) {
  for (uint64_t attempt = 0; attempt < 50; ++attempt) {
    GridWorld w = place_once(config, attempt == 0 ? seed
                                                  : mix_seed(seed, attempt));
    w.rng_seed = seed;
    if (layout_connected(w)) return w;
  }
  throw Error(ErrorKind::config,
              "could not place objects into a connected layout");
}

void step(GridWorld& w, Action action) {
  switch (action) {
    case Action::turn_left:
      w.facing = static_cast<Facing>((static_cast<int>(w.facing) + 3) % 4);
      break;
    case Action::turn_right:
      w.facing = static_cast<Facing>((static_cast<int>(w.facing) + 1) % 4);
      break;
    case Action::move_forward: {
      Pos target = w.ahead();
      if (w.is_walkable(target)) {
        w.actor = target;
        int room = w.room_of(target);
        if (room >= 0 && room != w.lit_room) w.lit_room = room;
      }
      break;
    }
    case Action::pickup: {
      Pos target = w.ahead();
      const Object* o = w.object_at(target);
      if (o && o->kind != ObjKind::goal) {
        w.inventory.push_back(*o);
        w.objects.erase(
            std::find_if(w.objects.begin(), w.objects.end(),
                         [&](const Object& c) { return c.pos == target; }));
      }
      break;
    }
  }
  w.step_count += 1;
}

Observation observe(const GridWorld& w, Viewer viewer, int fov) {
  Observation obs;
  obs.viewer = viewer;
  obs.actor_pos = w.actor;
  obs.actor_facing = w.facing;
  obs.lit_room = w.lit_room;

  if (viewer == Viewer::observer) {
    for (int y = 0; y < w.height; ++y)
      for (int x = 0; x < w.width; ++x) {
        Pos p{x, y};
        if (w.room_of(p) == w.lit_room) obs.visible.push_back(p);
      }
  } else {
    if (fov != 3 && fov != 5)
      throw Error(ErrorKind::config,
                  "actor fov must be 3 or 5, got " + std::to_string(fov));
    // FOV square extends forward from the actor's cell (own cell on the
    // rear edge) and never penetrates walls into another room.
    int half = fov / 2;
    int actor_room = w.room_of(w.actor);
    Pos fw = forward_of(w.facing);
    Pos rt = right_of(w.facing);
    for (int d = 0; d < fov; ++d)
      for (int l = -half; l <= half; ++l) {
        Pos p{w.actor.x + d * fw.x + l * rt.x, w.actor.y + d * fw.y + l * rt.y};
        if (w.room_of(p) == actor_room) obs.visible.push_back(p);
      }
  }

  for (const Object& o : w.objects)
    if (std::find(obs.visible.begin(), obs.visible.end(), o.pos) !=
        obs.visible.end())
      obs.objects.push_back(o);
  return obs;
}

void apply_swap(GridWorld& w, const SwapEvent& event, bool allow_lit) {
  if (event.room < 0 || event.room >= static_cast<int>(w.rooms.size()))
    throw Error(ErrorKind::config, "swap room index out of range");
  if (!allow_lit && event.room == w.lit_room)
    throw Error(ErrorKind::state,
                "swap applied to the lit room without allow_lit");
  for (const auto& [a, b] : event.pairs) {
    Object* oa = nullptr;
    Object* ob = nullptr;
    for (Object& o : w.objects) {
      if (o.pos == a) oa = &o;
      if (o.pos == b) ob = &o;
    }
    if (!oa || !ob)
      throw Error(ErrorKind::state, "swap positions do not both hold objects");
    if (oa == ob) continue;  // identity swap
    std::swap(oa->pos, ob->pos);
  }
}

void to_json(nlohmann::json& j, const GridWorld& w) {
  nlohmann::json objs = nlohmann::json::array();
  for (const Object& o : w.objects)
    objs.push_back({{"kind", static_cast<int>(o.kind)},
                    {"color", o.color},
                    {"x", o.pos.x},
                    {"y", o.pos.y}});
  nlohmann::json inv = nlohmann::json::array();
  for (const Object& o : w.inventory)
    inv.push_back({{"kind", static_cast<int>(o.kind)},
                   {"color", o.color},
                   {"x", o.pos.x},
                   {"y", o.pos.y}});
  j = {{"width", w.width},
       {"height", w.height},
       {"room_size", w.room_size},
       {"n_rooms", static_cast<int>(w.rooms.size())},
       {"objects", objs},
       {"inventory", inv},
       {"actor", {w.actor.x, w.actor.y}},
       {"facing", static_cast<int>(w.facing)},
       {"lit_room", w.lit_room},
       {"rng_seed", w.rng_seed},
       {"step_count", w.step_count}};
}

void from_json(const nlohmann::json& j, GridWorld& w) {
  w = make_layout(j.at("n_rooms").get<int>(), j.at("room_size").get<int>());
  for (const auto& o : j.at("objects"))
    w.objects.push_back({static_cast<ObjKind>(o.at("kind").get<int>()),
                         o.at("color").get<int>(),
                         {o.at("x").get<int>(), o.at("y").get<int>()}});
  for (const auto& o : j.at("inventory"))
    w.inventory.push_back({static_cast<ObjKind>(o.at("kind").get<int>()),
                           o.at("color").get<int>(),
                           {o.at("x").get<int>(), o.at("y").get<int>()}});
  w.actor = {j.at("actor")[0].get<int>(), j.at("actor")[1].get<int>()};
  w.facing = static_cast<Facing>(j.at("facing").get<int>());
  w.lit_room = j.at("lit_room").get<int>();
  w.rng_seed = j.at("rng_seed").get<uint64_t>();
  w.step_count = j.at("step_count").get<int>();
}

}  // namespace tommy::env
