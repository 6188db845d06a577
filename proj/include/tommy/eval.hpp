#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "tommy/model.hpp"
#include "tommy/scenario.hpp"

namespace tommy {

// JSD(p,q) = H((p+q)/2) - (H(p)+H(q))/2 in nats, with 0 log 0 = 0.
double js_divergence(const std::vector<double>& p, const std::vector<double>& q);

constexpr int kActionGroups = 3;  // turn, move-forward, pickup
int action_group(int action);
const char* action_group_name(int group);

struct EvalRow {
  int room_at_tq = 0;
  bool pref_ok = false;
  bool intent_ok = false;
  int group = 0;          // group of the true next action
  bool group_ok = false;  // predicted action falls in the same group
  std::vector<double> jsd;  // per gamma

  // attention summaries (tommy only)
  bool has_attention = false;
  double mem_room0_mass = 0;   // mean per-slot attention mass, room-0 slots
  double mem_other_mass = 0;   // same for all other rooms
  double alpha_keybox = 0;     // refocus mass on key-room + box-room events
  double alpha_distractor = 0; // refocus mass on ball-room events
};

struct EvalResult {
  std::string model_id;
  std::vector<double> gammas;
  std::vector<EvalRow> rows;
};

EvalResult evaluate_model(const Net& net, const std::vector<EpisodeRecord>& data);

struct RoomBucket {
  int room = 0;
  int n = 0;  // summed over seeds
  double mean = 0, stdev = 0;
};

struct GroupBucket {
  int group = 0;
  int n = 0;
  double mean = 0, stdev = 0;
};

struct GammaBucket {
  double gamma = 0;
  double mean = 0, stdev = 0;
};

// Mean/std across seeds (one EvalResult per seed run).
struct MetricsReport {
  std::string model_id;
  std::string condition;
  int n_seeds = 0;
  int n_episodes = 0;
  std::vector<RoomBucket> pref_by_room;
  double pref_mean = 0, pref_std = 0;
  double intent_mean = 0, intent_std = 0;
  std::vector<GroupBucket> action_groups;
  std::vector<GammaBucket> sr_jsd;
};

MetricsReport aggregate(const std::vector<EvalResult>& per_seed,
                        const std::string& condition);

void to_json(nlohmann::json& j, const MetricsReport& r);

// spec-level helpers over a single evaluation
std::vector<RoomBucket> accuracy_by_room(const EvalResult& result);
std::vector<GroupBucket> accuracy_by_action_group(const EvalResult& result);
std::vector<GammaBucket> false_belief_eval(const EvalResult& result);

struct AttentionDump {
  // memory side: weights over every (past trajectory, step) slot
  std::vector<MemorySlot> slots;
  std::vector<int> slot_rooms;
  std::vector<int> past_pickup_steps;               // per past trajectory
  std::vector<int> query_times;                     // selected, ranked order
  std::vector<std::vector<double>> raw_cos;         // [query][slot]
  std::vector<std::vector<double>> weights;         // [query][slot]
  // current-trajectory side
  std::vector<double> select_cos;                   // cosine(z, h_t) per step
  std::vector<int> cur_rooms;                       // room per current step
  std::vector<double> alpha;                        // per selected query
  int cur_pickup_step = -1;
};

AttentionDump dump_attention(const Net& net, const EpisodeRecord& record);

void write_attention_csv(const AttentionDump& dump, const std::string& dir);
void write_attention_svg(const AttentionDump& dump, const std::string& dir);

}  // namespace tommy
