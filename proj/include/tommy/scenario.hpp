#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "tommy/actor.hpp"
#include "tommy/encoding.hpp"
#include "tommy/env.hpp"

namespace tommy {

// One observed step: what the observer saw before the action, the action,
// and bookkeeping labels from the rollout.
struct StepRecord {
  CompactObs obs;
  int action = 0;
  int room = 0;
  int intent = -1;  // hypo-actor intention; -1 where not logged

  bool operator==(const StepRecord&) const = default;
};

struct TrajRecord {
  int n_rooms = 3;
  std::vector<StepRecord> steps;
  int pickup_step = -1;

  bool operator==(const TrajRecord&) const = default;
};

struct SrTarget {
  double gamma = 0.5;
  std::vector<double> dist;  // over canvas cells, sums to 1

  bool operator==(const SrTarget&) const = default;
};

struct EpisodeRecord {
  std::string scenario;  // "preference" | "false_belief"
  int actor_pref = 0;
  int actor_fov = 3;
  uint64_t actor_seed = 0;
  int n_rooms = 3;

  std::vector<TrajRecord> past;
  TrajRecord current;  // steps 0 .. t_q-1
  CompactObs query_obs;
  int t_q = 1;

  int label_pref = 0;
  int label_intent = 0;
  int label_action = 0;
  std::vector<SrTarget> sr;

  bool swap = false;
  std::map<std::string, int> stages;
  env::Pos believed_target_pos;  // target-key belief at t_q (false belief)
  env::Pos true_target_pos;
  bool has_belief_meta = false;
  int episode_len = 0;

  bool operator==(const EpisodeRecord&) const = default;
};

// Normalized discounted occupancy over future states; weight gamma^i on the
// i-th entry of `cells`.
std::vector<double> empirical_sr(const std::vector<int>& cells, double gamma,
                                 int state_space_size);

struct GenOptions {
  int n_past = 8;
  int step_cap = 400;
  int retry_limit = 100;
  std::vector<double> gammas{0.5, 0.9, 0.99};
  bool observer_sees_swap = false;
};

EpisodeRecord generate_preference_episode(int n_rooms,
                                          const actor::ActorConfig& cfg,
                                          uint64_t seed,
                                          const GenOptions& opt = {});

EpisodeRecord generate_false_belief_episode(bool swap, uint64_t seed,
                                            const GenOptions& opt = {});

struct DatasetOptions {
  std::string scenario = "preference";  // or "false-belief"
  int episodes = 100;
  int n_rooms = 3;
  uint64_t seed = 0;
  double swap_ratio = 0.5;
  GenOptions gen;
};

// Episode `index` of the dataset `opt` describes; independent across
// indices, so callers may shard generation freely.
EpisodeRecord generate_episode_at(const DatasetOptions& opt, int index);

std::vector<EpisodeRecord> generate_dataset(const DatasetOptions& opt);

void to_json(nlohmann::json& j, const EpisodeRecord& r);
void from_json(const nlohmann::json& j, EpisodeRecord& r);

// JSON Lines, one record per line, schema tag on every line.
void write_dataset(const std::string& path,
                   const std::vector<EpisodeRecord>& records);
std::vector<EpisodeRecord> read_dataset(const std::string& path);

// Full rollout of one scripted episode, for tests and ground-truth checks.
struct Rollout {
  std::vector<StepRecord> steps;
  std::vector<env::Pos> pose_trace;  // length steps+1
  int pickup_step = -1;
  bool completed = false;
  env::GridWorld final_world;
};

struct RolloutHooks {
  // after decide, before the world advances; the freshly built step record
  std::function<void(const env::GridWorld&, const actor::HypoActor&,
                     const StepRecord&, int)>
      on_step;
  // after the world advanced to what step index `next` will observe; may
  // mutate the world (swap events happen here)
  std::function<void(env::GridWorld&, const actor::HypoActor&, int next)>
      between_steps;
};

Rollout roll_episode(env::GridWorld world, actor::HypoActor& actor,
                     int step_cap, const RolloutHooks& hooks = {});

}  // namespace tommy
