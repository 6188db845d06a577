#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "tommy/env.hpp"
#include "tommy/rng.hpp"

namespace tommy::actor {

struct ActorConfig {
  int preference_color = 0;
  int fov = 3;
  uint64_t seed = 0;
};

enum class IntentKind : int { find = 0, go_to = 1, pickup = 2 };

struct Objective {
  enum class Mode { observe, pickup, reach };
  Mode mode = Mode::pickup;
  env::ObjKind kind = env::ObjKind::ball;
  int color = 0;
};

// Positions the actor has seen objects at, keyed by (kind, color). A belief
// persists until the believed cell re-enters the FOV without the object.
class Belief {
 public:
  std::optional<env::Pos> position_of(env::ObjKind kind, int color) const;
  void update(const env::Observation& fov_view);
  size_t known_count() const { return believed_.size(); }

 private:
  std::map<std::pair<int, int>, env::Pos> believed_;
};

// Scripted searcher: hypothesises positions in the current room, walks to
// verify, and advances along the room chain once a room is fully seen.
class HypoActor {
 public:
  HypoActor(const ActorConfig& cfg, std::vector<Objective> goals);

  // One decision per world step; nullopt once the goal stack is empty.
  std::optional<env::Action> decide(const env::GridWorld& world);

  const Belief& belief() const { return belief_; }
  IntentKind intention() const { return intention_; }
  const ActorConfig& config() const { return cfg_; }
  std::optional<env::Pos> hypothesis() const { return hypothesis_; }
  size_t goals_left() const { return goals_.size(); }

  // Uniform draw over free, unvisited cells of a room; resets the visited
  // set when the room is exhausted. Exposed for direct testing.
  static std::optional<env::Pos> hypothesize(Rng& rng,
                                             const env::GridWorld& world,
                                             int room,
                                             std::set<env::Pos>& visited);

 private:
  bool objective_done(const env::GridWorld& w) const;
  void mark_seen(const env::Observation& obs, const env::GridWorld& w);
  bool room_exhausted(const env::GridWorld& w, int room) const;
  std::optional<env::Action> run_find(const env::GridWorld& w,
                                      const env::Observation& obs);
  void reset_search();

  ActorConfig cfg_;
  Rng rng_;
  Belief belief_;
  std::vector<Objective> goals_;  // front is active
  IntentKind intention_ = IntentKind::find;

  // search state for the active objective
  std::map<int, std::set<env::Pos>> checked_;
  std::optional<env::Pos> hypothesis_;
  std::optional<int> transit_room_;
};

// Next step of a BFS shortest path (N,E,S,W expansion order) from the
// actor's pose to a target cell, as a primitive action. Turns use the
// shortest rotation, preferring turn-left on 180s. stand_on selects whether
// the path ends on the target or on a free neighbour facing it.
struct PathDecision {
  enum class Status { arrived, step, unreachable };
  Status status = Status::unreachable;
  env::Action action = env::Action::turn_left;
};

PathDecision path_to(const env::GridWorld& w, env::Pos target, bool stand_on);

}  // namespace tommy::actor
