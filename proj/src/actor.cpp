#include "tommy/actor.hpp"

#include <algorithm>
#include <deque>
#include <functional>

#include "tommy/error.hpp"

namespace tommy::actor {

using env::Action;
using env::Facing;
using env::GridWorld;
using env::Observation;
using env::ObjKind;
using env::Pos;

std::optional<Pos> Belief::position_of(ObjKind kind, int color) const {
  auto it = believed_.find({static_cast<int>(kind), color});
  if (it == believed_.end()) return std::nullopt;
  return it->second;
}

void Belief::update(const Observation& fov_view) {
  for (const env::Object& o : fov_view.objects)
    believed_[{static_cast<int>(o.kind), o.color}] = o.pos;

  for (auto it = believed_.begin(); it != believed_.end();) {
    Pos p = it->second;
    bool in_view = std::find(fov_view.visible.begin(), fov_view.visible.end(),
                             p) != fov_view.visible.end();
    bool still_there = false;
    if (in_view) {
      for (const env::Object& o : fov_view.objects)
        if (o.pos == p && static_cast<int>(o.kind) == it->first.first &&
            o.color == it->first.second) {
          still_there = true;
          break;
        }
    }
    if (in_view && !still_there)
      it = believed_.erase(it);
    else
      ++it;
  }
}

namespace {

Facing facing_towards(Pos from, Pos to) {
  if (to.x > from.x) return Facing::east;
  if (to.x < from.x) return Facing::west;
  if (to.y > from.y) return Facing::south;
  return Facing::north;
}

Action turn_towards(Facing current, Facing desired) {
  int delta = (static_cast<int>(desired) - static_cast<int>(current) + 4) % 4;
  return delta == 1 ? Action::turn_right : Action::turn_left;
}

// Shortest path over walkable cells; N,E,S,W expansion keeps trajectories
// reproducible. Returns the full cell sequence including the start.
std::optional<std::vector<Pos>> bfs_path(
    const GridWorld& w, Pos start, const std::function<bool(Pos)>& is_dest) {
  if (is_dest(start)) return std::vector<Pos>{start};
  std::vector<int> parent(static_cast<size_t>(w.width * w.height), -1);
  auto idx = [&](Pos p) { return p.y * w.width + p.x; };
  std::deque<Pos> queue{start};
  parent[static_cast<size_t>(idx(start))] = idx(start);
  const Pos dirs[4] = {{0, -1}, {1, 0}, {0, 1}, {-1, 0}};
  while (!queue.empty()) {
    Pos p = queue.front();
    queue.pop_front();
    for (const Pos& d : dirs) {
      Pos n{p.x + d.x, p.y + d.y};
      if (!w.in_bounds(n) || parent[static_cast<size_t>(idx(n))] != -1)
        continue;
      if (!w.is_walkable(n)) continue;
      parent[static_cast<size_t>(idx(n))] = idx(p);
      if (is_dest(n)) {
        std::vector<Pos> path{n};
        Pos cur = n;
        while (!(cur == start)) {
          int pi = parent[static_cast<size_t>(idx(cur))];
          cur = {pi % w.width, pi / w.width};
          path.push_back(cur);
        }
        std::reverse(path.begin(), path.end());
        return path;
      }
      queue.push_back(n);
    }
  }
  return std::nullopt;
}

Action action_along(const GridWorld& w, Pos next) {
  if (next == w.ahead()) return Action::move_forward;
  return turn_towards(w.facing, facing_towards(w.actor, next));
}

}  // namespace

PathDecision path_to(const GridWorld& w, Pos target, bool stand_on) {
  auto adjacent = [&](Pos p) {
    return std::abs(p.x - target.x) + std::abs(p.y - target.y) == 1;
  };
  if (stand_on) {
    if (w.actor == target) return {PathDecision::Status::arrived, Action::turn_left};
  } else if (adjacent(w.actor)) {
    if (w.ahead() == target)
      return {PathDecision::Status::arrived, Action::turn_left};
    return {PathDecision::Status::step,
            turn_towards(w.facing, facing_towards(w.actor, target))};
  }
  std::function<bool(Pos)> is_dest;
  if (stand_on)
    is_dest = [&](Pos p) { return p == target; };
  else
    is_dest = [&](Pos p) { return adjacent(p) && w.is_walkable(p); };
  auto path = bfs_path(w, w.actor, is_dest);
  if (!path || path->size() < 2)
    return {PathDecision::Status::unreachable, Action::turn_left};
  return {PathDecision::Status::step, action_along(w, (*path)[1])};
}

std::optional<Pos> HypoActor::hypothesize(Rng& rng, const GridWorld& world,
                                          int room,
                                          std::set<Pos>& visited) {
  if (room < 0 || room >= static_cast<int>(world.rooms.size()))
    throw Error(ErrorKind::index, "hypothesize: bad room index");
  const env::Room& r = world.rooms[static_cast<size_t>(room)];
  auto collect = [&](bool skip_visited) {
    std::vector<Pos> cells;
    for (int y = r.y0; y < r.y0 + r.h; ++y)
      for (int x = r.x0; x < r.x0 + r.w; ++x) {
        Pos p{x, y};
        if (!world.is_walkable(p)) continue;
        if (skip_visited && visited.count(p)) continue;
        cells.push_back(p);
      }
    return cells;
  };
  std::vector<Pos> cells = collect(true);
  if (cells.empty()) {
    visited.clear();  // re-search; guards termination
    cells = collect(true);
  }
  if (cells.empty()) return std::nullopt;  // room has no free cell at all
  Pos chosen = cells[static_cast<size_t>(
      uniform_int(rng, 0, static_cast<int>(cells.size()) - 1))];
  visited.insert(chosen);
  return chosen;
}

HypoActor::HypoActor(const ActorConfig& cfg, std::vector<Objective> goals)
    : cfg_(cfg), rng_(mix_seed(cfg.seed, 0x61637472)), goals_(std::move(goals)) {
  if (cfg.fov != 3 && cfg.fov != 5)
    throw Error(ErrorKind::config, "actor fov must be 3 or 5");
}

void HypoActor::reset_search() {
  checked_.clear();
  hypothesis_.reset();
  transit_room_.reset();
}

void HypoActor::mark_seen(const Observation& obs, const GridWorld& w) {
  for (Pos p : obs.visible) {
    int r = w.room_of(p);
    if (r >= 0) checked_[r].insert(p);
  }
}

bool HypoActor::room_exhausted(const GridWorld& w, int room) const {
  auto it = checked_.find(room);
  if (it == checked_.end()) return false;
  const env::Room& r = w.rooms[static_cast<size_t>(room)];
  for (int y = r.y0; y < r.y0 + r.h; ++y)
    for (int x = r.x0; x < r.x0 + r.w; ++x)
      if (!it->second.count({x, y})) return false;
  return true;
}

bool HypoActor::objective_done(const GridWorld& w) const {
  if (goals_.empty()) return false;
  const Objective& g = goals_.front();
  switch (g.mode) {
    case Objective::Mode::observe:
      return belief_.position_of(g.kind, g.color).has_value();
    case Objective::Mode::pickup:
      for (const env::Object& o : w.inventory)
        if (o.kind == g.kind && o.color == g.color) return true;
      return false;
    case Objective::Mode::reach:
      for (const env::Object& o : w.objects)
        if (o.kind == g.kind && o.color == g.color && o.pos == w.actor)
          return true;
      return false;
  }
  return false;
}

std::optional<Action> HypoActor::run_find(const GridWorld& w,
                                          const Observation& obs) {
  int cur = w.room_of(w.actor);
  if (transit_room_ && cur == *transit_room_) transit_room_.reset();

  // A hypothesis is verified the moment its cell enters the FOV.
  if (hypothesis_ &&
      std::find(obs.visible.begin(), obs.visible.end(), *hypothesis_) !=
          obs.visible.end())
    hypothesis_.reset();

  std::set<int> transit_blocked;
  for (int attempt = 0; attempt < 16; ++attempt) {
    if (transit_room_) {
      int dest_room = *transit_room_;
      auto path = bfs_path(w, w.actor, [&](Pos p) {
        return w.rooms[static_cast<size_t>(dest_room)].contains(p) &&
               w.is_walkable(p);
      });
      if (path && path->size() >= 2) return action_along(w, (*path)[1]);
      transit_blocked.insert(dest_room);
      transit_room_.reset();
    }
    if (!hypothesis_) {
      std::set<Pos> tried = checked_[cur];
      std::vector<Pos> unseen_free;
      const env::Room& r = w.rooms[static_cast<size_t>(cur)];
      for (int y = r.y0; y < r.y0 + r.h; ++y)
        for (int x = r.x0; x < r.x0 + r.w; ++x) {
          Pos p{x, y};
          if (w.is_walkable(p) && !tried.count(p)) unseen_free.push_back(p);
        }
      if (unseen_free.empty()) {
        if (room_exhausted(w, cur)) {
          // advance to the nearest not-yet-exhausted room; rightward on ties
          int best = -1, best_dist = 1 << 20;
          for (int i = 0; i < static_cast<int>(w.rooms.size()); ++i) {
            if (i == cur || room_exhausted(w, i) || transit_blocked.count(i))
              continue;
            int dist = std::abs(i - cur);
            if (dist < best_dist || (dist == best_dist && i > best)) {
              best = i;
              best_dist = dist;
            }
          }
          if (best >= 0) {
            transit_room_ = best;
            continue;
          }
          checked_.clear();  // searched everywhere; start over
          continue;
        }
        // free cells all seen; go look straight at the unseen occupied cells
        std::optional<Pos> unseen_obj;
        for (int y = r.y0; y < r.y0 + r.h && !unseen_obj; ++y)
          for (int x = r.x0; x < r.x0 + r.w; ++x) {
            Pos p{x, y};
            if (!tried.count(p) && !w.is_walkable(p)) {
              unseen_obj = p;
              break;
            }
          }
        if (unseen_obj) {
          PathDecision pd = path_to(w, *unseen_obj, false);
          if (pd.status == PathDecision::Status::step) return pd.action;
          checked_[cur].insert(*unseen_obj);  // facing it or boxed in
          continue;
        }
        std::set<Pos> none;
        hypothesis_ = hypothesize(rng_, w, cur, none);
      } else {
        std::set<Pos> draw_set = checked_[cur];  // draws stay off the FOV log
        hypothesis_ = hypothesize(rng_, w, cur, draw_set);
      }
      if (!hypothesis_) return Action::turn_left;  // degenerate room
    }
    PathDecision pd = path_to(w, *hypothesis_, true);
    if (pd.status == PathDecision::Status::step) return pd.action;
    // arrived or unreachable: rule the cell out and redraw
    checked_[cur].insert(*hypothesis_);
    hypothesis_.reset();
  }
  return Action::turn_left;  // bounded fallback; episode cap handles the rest
}

std::optional<Action> HypoActor::decide(const GridWorld& w) {
  Observation obs = env::observe(w, env::Viewer::actor, cfg_.fov);
  belief_.update(obs);
  mark_seen(obs, w);

  while (!goals_.empty() && objective_done(w)) {
    goals_.erase(goals_.begin());
    reset_search();
  }
  if (goals_.empty()) {
    intention_ = IntentKind::find;
    return std::nullopt;
  }

  const Objective& goal = goals_.front();
  auto believed = belief_.position_of(goal.kind, goal.color);
  if (believed) {
    if (goal.mode == Objective::Mode::pickup && w.ahead() == *believed) {
      intention_ = IntentKind::pickup;
      return Action::pickup;
    }
    intention_ = IntentKind::go_to;
    bool stand_on = goal.mode != Objective::Mode::pickup;
    PathDecision pd = path_to(w, *believed, stand_on);
    if (pd.status == PathDecision::Status::step) return pd.action;
    // arrived is consumed by objective_done on the next call; unreachable
    // targets fall back to hypothesis-driven search
    if (pd.status == PathDecision::Status::arrived) return Action::turn_left;
  }
  intention_ = IntentKind::find;
  return run_find(w, obs);
}

}  // namespace tommy::actor
