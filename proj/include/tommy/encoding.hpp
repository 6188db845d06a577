#pragma once

#include <vector>

#include <json.hpp>

#include "tommy/env.hpp"
#include "tommy/tensor.hpp"

namespace tommy {

// Observer-side state encoding. Worlds of up to five rooms share one fixed
// canvas so a model trained on three rooms runs unchanged on five.
constexpr int kRoomSize = 5;
constexpr int kMaxRooms = 5;
constexpr int kCanvasW = kMaxRooms * (kRoomSize + 1) + 1;  // 31
constexpr int kCanvasH = kRoomSize + 2;                    // 7
constexpr int kCells = kCanvasW * kCanvasH;                // 217

// channel map: (kind,color) object planes, then walls, actor, facing, lit
constexpr int kObjChannels = 3 * env::kNumColors + 1;  // key/ball/box x colors, goal
constexpr int kWallChannel = kObjChannels;             // 13
constexpr int kActorChannel = kWallChannel + 1;        // 14
constexpr int kFacingChannel = kActorChannel + 1;      // 15..18
constexpr int kLitChannel = kFacingChannel + 4;        // 19
constexpr int kChannels = kLitChannel + 1;             // 20
constexpr int kStateDim = kChannels * kCells;          // 4340

inline int cell_id(env::Pos p) { return p.y * kCanvasW + p.x; }
inline env::Pos cell_pos(int id) { return {id % kCanvasW, id / kCanvasW}; }

int object_channel(env::ObjKind kind, int color);

// One observation as the observer stores it: pose, lit room, and the
// objects visible that step (plus any explicitly revealed ones).
struct CompactObs {
  env::Pos pose;
  int facing = 0;
  int lit = 0;
  std::vector<env::Object> objects;

  bool operator==(const CompactObs&) const = default;
};

void to_json(nlohmann::json& j, const CompactObs& o);
void from_json(const nlohmann::json& j, CompactObs& o);

Tensor encode_state(int n_rooms, const CompactObs& obs);
Tensor encode_action(int action);

// Reads the object planes back out; test oracle for the encoding.
std::vector<env::Object> decode_objects(const Tensor& state);

CompactObs compact_from(const env::Observation& obs);

}  // namespace tommy
