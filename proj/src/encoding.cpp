#include "tommy/encoding.hpp"

#include <map>

#include "tommy/error.hpp"

namespace tommy {

int object_channel(env::ObjKind kind, int color) {
  if (color < 0 || color >= env::kNumColors)
    throw Error(ErrorKind::index, "object color out of palette");
  switch (kind) {
    case env::ObjKind::key: return color;
    case env::ObjKind::ball: return env::kNumColors + color;
    case env::ObjKind::box: return 2 * env::kNumColors + color;
    case env::ObjKind::goal: return kObjChannels - 1;
  }
  throw Error(ErrorKind::index, "bad object kind");
}

void to_json(nlohmann::json& j, const CompactObs& o) {
  nlohmann::json objs = nlohmann::json::array();
  for (const env::Object& ob : o.objects)
    objs.push_back({static_cast<int>(ob.kind), ob.color, ob.pos.x, ob.pos.y});
  j = {{"p", {o.pose.x, o.pose.y, o.facing}}, {"l", o.lit}, {"o", objs}};
}

void from_json(const nlohmann::json& j, CompactObs& o) {
  o.pose = {j.at("p")[0].get<int>(), j.at("p")[1].get<int>()};
  o.facing = j.at("p")[2].get<int>();
  o.lit = j.at("l").get<int>();
  o.objects.clear();
  for (const auto& ob : j.at("o"))
    o.objects.push_back({static_cast<env::ObjKind>(ob[0].get<int>()),
                         ob[1].get<int>(),
                         {ob[2].get<int>(), ob[3].get<int>()}});
}

namespace {

struct LayoutMasks {
  std::vector<int> wall_cells;
  std::vector<std::vector<int>> room_cells;  // per room, canvas cell ids
};

const LayoutMasks& layout_masks(int n_rooms) {
  static std::map<int, LayoutMasks> cache;
  auto it = cache.find(n_rooms);
  if (it != cache.end()) return it->second;
  env::GridWorld layout = env::make_layout(n_rooms, kRoomSize);
  LayoutMasks m;
  m.room_cells.resize(static_cast<size_t>(n_rooms));
  for (int y = 0; y < layout.height; ++y)
    for (int x = 0; x < layout.width; ++x) {
      env::Pos p{x, y};
      int r = layout.room_of(p);
      if (r >= 0)
        m.room_cells[static_cast<size_t>(r)].push_back(cell_id(p));
      else
        m.wall_cells.push_back(cell_id(p));
    }
  return cache.emplace(n_rooms, std::move(m)).first->second;
}

}  // namespace

Tensor encode_state(int n_rooms, const CompactObs& obs) {
  if (n_rooms < 1 || n_rooms > kMaxRooms)
    throw Error(ErrorKind::config, "n_rooms outside canvas range");
  const LayoutMasks& masks = layout_masks(n_rooms);
  Tensor t = Tensor::zeros({kStateDim});
  auto& v = t.values();
  auto put = [&](int channel, int cell) {
    v[static_cast<size_t>(channel * kCells + cell)] = 1.0;
  };
  for (int c : masks.wall_cells) put(kWallChannel, c);
  if (obs.lit < 0 || obs.lit >= n_rooms)
    throw Error(ErrorKind::index, "lit room out of range");
  for (int c : masks.room_cells[static_cast<size_t>(obs.lit)])
    put(kLitChannel, c);
  for (const env::Object& o : obs.objects)
    put(object_channel(o.kind, o.color), cell_id(o.pos));
  put(kActorChannel, cell_id(obs.pose));
  if (obs.facing < 0 || obs.facing > 3)
    throw Error(ErrorKind::index, "facing out of range");
  put(kFacingChannel + obs.facing, cell_id(obs.pose));
  return t;
}

Tensor encode_action(int action) {
  if (action < 0 || action >= env::kNumActions)
    throw Error(ErrorKind::index, "action out of range");
  Tensor t = Tensor::zeros({env::kNumActions});
  t.values()[static_cast<size_t>(action)] = 1.0;
  return t;
}

std::vector<env::Object> decode_objects(const Tensor& state) {
  std::vector<env::Object> out;
  const auto& v = state.values();
  auto scan = [&](env::ObjKind kind, int color) {
    int ch = object_channel(kind, color);
    for (int c = 0; c < kCells; ++c)
      if (v[static_cast<size_t>(ch * kCells + c)] != 0.0)
        out.push_back({kind, color, cell_pos(c)});
  };
  for (int col = 0; col < env::kNumColors; ++col) {
    scan(env::ObjKind::key, col);
    scan(env::ObjKind::ball, col);
    scan(env::ObjKind::box, col);
  }
  scan(env::ObjKind::goal, 0);
  return out;
}

CompactObs compact_from(const env::Observation& obs) {
  CompactObs c;
  c.pose = obs.actor_pos;
  c.facing = static_cast<int>(obs.actor_facing);
  c.lit = obs.lit_room;
  c.objects = obs.objects;
  return c;
}

}  // namespace tommy
