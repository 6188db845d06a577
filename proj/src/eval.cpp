#include "tommy/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "tommy/error.hpp"
#include "tommy/svg.hpp"

namespace tommy {

namespace {
double entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

int argmax(const std::vector<double>& v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size());
  return {mean, std::sqrt(var)};
}
}  // namespace

double js_divergence(const std::vector<double>& p,
                     const std::vector<double>& q) {
  if (p.size() != q.size())
    throw Error(ErrorKind::dimension, "JSD over different supports");
  double sp = 0.0, sq = 0.0;
  for (double v : p) sp += v;
  for (double v : q) sq += v;
  if (std::abs(sp - 1.0) > 1e-6 || std::abs(sq - 1.0) > 1e-6)
    throw Error(ErrorKind::numeric,
                "JSD inputs must be normalized; sums are " +
                    std::to_string(sp) + " and " + std::to_string(sq));
  std::vector<double> m(p.size());
  for (size_t i = 0; i < p.size(); ++i) m[i] = 0.5 * (p[i] + q[i]);
  return entropy(m) - 0.5 * (entropy(p) + entropy(q));
}

int action_group(int action) {
  switch (action) {
    case 0:
    case 1: return 0;  // turn-left / turn-right
    case 2: return 1;  // move-forward
    case 3: return 2;  // pickup
  }
  throw Error(ErrorKind::index, "bad action id");
}

const char* action_group_name(int group) {
  static const char* names[] = {"turn", "move-forward", "pickup"};
  return (group >= 0 && group < kActionGroups) ? names[group] : "?";
}

EvalResult evaluate_model(const Net& net,
                          const std::vector<EpisodeRecord>& data) {
  EvalResult result;
  result.gammas = net.config().gammas;
  result.model_id = net.config().kind == ModelKind::tomnet ? "tomnet"
                    : net.config().value_mode == ValueMode::forward_backward
                        ? "bi-tommy"
                        : "tommy";
  for (const EpisodeRecord& rec : data) {
    EpisodeTensors ep = materialize(rec);
    ForwardTrace trace = net.forward(ep);
    EvalRow row;
    row.room_at_tq = rec.current.steps.empty()
                         ? 0
                         : rec.current.steps.back().room;
    // room at the query time itself: take it from the query observation
    {
      env::GridWorld layout = env::make_layout(rec.n_rooms, kRoomSize);
      int r = layout.room_of(rec.query_obs.pose);
      if (r >= 0) row.room_at_tq = r;
    }
    row.pref_ok = argmax(trace.out.pref_logits.values()) == rec.label_pref;
    row.intent_ok = argmax(trace.out.intent_logits.values()) == rec.label_intent;
    row.group = action_group(rec.label_action);
    row.group_ok =
        action_group(argmax(trace.out.action_logits.values())) == row.group;
    for (size_t g = 0; g < trace.out.sr_dist.size(); ++g)
      row.jsd.push_back(
          js_divergence(trace.out.sr_dist[g].values(), rec.sr[g].dist));

    if (net.config().kind == ModelKind::tommy && !trace.attn.empty()) {
      row.has_attention = true;
      size_t n_slots = trace.memory.slots.size();
      std::vector<double> mass(n_slots, 0.0);
      for (const Tensor& attn : trace.attn)
        for (size_t s = 0; s < n_slots; ++s)
          mass[s] += attn.at(static_cast<int>(s));
      for (double& m : mass) m /= static_cast<double>(trace.attn.size());
      double room0 = 0, other = 0;
      int n0 = 0, nother = 0;
      for (size_t s = 0; s < n_slots; ++s) {
        const MemorySlot& slot = trace.memory.slots[s];
        int room = rec.past[static_cast<size_t>(slot.traj)]
                       .steps[static_cast<size_t>(slot.t)]
                       .room;
        if (room == 0) {
          room0 += mass[s];
          ++n0;
        } else {
          other += mass[s];
          ++nother;
        }
      }
      row.mem_room0_mass = n0 ? room0 / n0 : 0.0;
      row.mem_other_mass = nother ? other / nother : 0.0;
      for (size_t m = 0; m < trace.selected.size(); ++m) {
        int t = trace.selected[m];
        int room = rec.current.steps[static_cast<size_t>(t)].room;
        double a = trace.alpha.at(static_cast<int>(m));
        if (room == 1)
          row.alpha_distractor += a;
        else
          row.alpha_keybox += a;
      }
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

std::vector<RoomBucket> accuracy_by_room(const EvalResult& result) {
  std::map<int, std::pair<int, int>> tally;  // room -> (n, correct)
  for (const EvalRow& row : result.rows) {
    auto& [n, c] = tally[row.room_at_tq];
    ++n;
    if (row.pref_ok) ++c;
  }
  std::vector<RoomBucket> out;
  for (const auto& [room, nc] : tally)
    out.push_back({room, nc.first,
                   static_cast<double>(nc.second) / nc.first, 0.0});
  return out;
}

std::vector<GroupBucket> accuracy_by_action_group(const EvalResult& result) {
  std::map<int, std::pair<int, int>> tally;
  for (const EvalRow& row : result.rows) {
    auto& [n, c] = tally[row.group];
    ++n;
    if (row.group_ok) ++c;
  }
  std::vector<GroupBucket> out;
  for (const auto& [group, nc] : tally)
    out.push_back({group, nc.first,
                   static_cast<double>(nc.second) / nc.first, 0.0});
  return out;
}

std::vector<GammaBucket> false_belief_eval(const EvalResult& result) {
  std::vector<GammaBucket> out;
  for (size_t g = 0; g < result.gammas.size(); ++g) {
    std::vector<double> vals;
    for (const EvalRow& row : result.rows) vals.push_back(row.jsd[g]);
    auto [mean, stdev] = mean_std(vals);
    out.push_back({result.gammas[g], mean, stdev});
  }
  return out;
}

MetricsReport aggregate(const std::vector<EvalResult>& per_seed,
                        const std::string& condition) {
  if (per_seed.empty())
    throw Error(ErrorKind::state, "aggregate of zero evaluation runs");
  MetricsReport rep;
  rep.model_id = per_seed[0].model_id;
  rep.condition = condition;
  rep.n_seeds = static_cast<int>(per_seed.size());
  rep.n_episodes = static_cast<int>(per_seed[0].rows.size());

  std::map<int, std::vector<double>> room_acc;
  std::map<int, int> room_n;
  std::map<int, std::vector<double>> group_acc;
  std::map<int, int> group_n;
  std::vector<double> pref_accs, intent_accs;
  size_t n_gammas = per_seed[0].gammas.size();
  std::vector<std::vector<double>> jsd_means(n_gammas);

  for (const EvalResult& run : per_seed) {
    for (const RoomBucket& b : accuracy_by_room(run)) {
      room_acc[b.room].push_back(b.mean);
      room_n[b.room] += b.n;
    }
    for (const GroupBucket& b : accuracy_by_action_group(run)) {
      group_acc[b.group].push_back(b.mean);
      group_n[b.group] += b.n;
    }
    double pref = 0, intent = 0;
    for (const EvalRow& row : run.rows) {
      pref += row.pref_ok ? 1 : 0;
      intent += row.intent_ok ? 1 : 0;
    }
    pref_accs.push_back(pref / static_cast<double>(run.rows.size()));
    intent_accs.push_back(intent / static_cast<double>(run.rows.size()));
    for (const GammaBucket& b : false_belief_eval(run))
      for (size_t g = 0; g < n_gammas; ++g)
        if (run.gammas[g] == b.gamma) jsd_means[g].push_back(b.mean);
  }

  for (const auto& [room, accs] : room_acc) {
    auto [mean, stdev] = mean_std(accs);
    rep.pref_by_room.push_back({room, room_n[room], mean, stdev});
  }
  for (const auto& [group, accs] : group_acc) {
    auto [mean, stdev] = mean_std(accs);
    rep.action_groups.push_back({group, group_n[group], mean, stdev});
  }
  std::tie(rep.pref_mean, rep.pref_std) = mean_std(pref_accs);
  std::tie(rep.intent_mean, rep.intent_std) = mean_std(intent_accs);
  for (size_t g = 0; g < n_gammas; ++g) {
    auto [mean, stdev] = mean_std(jsd_means[g]);
    rep.sr_jsd.push_back({per_seed[0].gammas[g], mean, stdev});
  }
  return rep;
}

void to_json(nlohmann::json& j, const MetricsReport& r) {
  nlohmann::json rooms = nlohmann::json::array();
  for (const RoomBucket& b : r.pref_by_room)
    rooms.push_back(
        {{"room", b.room}, {"n", b.n}, {"mean", b.mean}, {"std", b.stdev}});
  nlohmann::json groups = nlohmann::json::array();
  for (const GroupBucket& b : r.action_groups)
    groups.push_back({{"group", action_group_name(b.group)},
                      {"n", b.n},
                      {"mean", b.mean},
                      {"std", b.stdev}});
  nlohmann::json jsd = nlohmann::json::array();
  for (const GammaBucket& b : r.sr_jsd)
    jsd.push_back({{"gamma", b.gamma}, {"mean", b.mean}, {"std", b.stdev}});
  j = {{"schema", "tommy-report-v1"},
       {"model", r.model_id},
       {"condition", r.condition},
       {"n_seeds", r.n_seeds},
       {"n_episodes", r.n_episodes},
       {"preference",
        {{"rooms", rooms}, {"mean", r.pref_mean}, {"std", r.pref_std}}},
       {"intention", {{"mean", r.intent_mean}, {"std", r.intent_std}}},
       {"actions", {{"groups", groups}}},
       {"sr_jsd", jsd}};
}

AttentionDump dump_attention(const Net& net, const EpisodeRecord& record) {
  if (net.config().kind != ModelKind::tommy)
    throw Error(ErrorKind::config, "attention dump needs a tommy model");
  EpisodeTensors ep = materialize(record);
  ForwardTrace trace = net.forward(ep);
  AttentionDump dump;
  dump.slots = trace.memory.slots;
  for (const MemorySlot& slot : trace.memory.slots)
    dump.slot_rooms.push_back(record.past[static_cast<size_t>(slot.traj)]
                                  .steps[static_cast<size_t>(slot.t)]
                                  .room);
  for (const TrajRecord& t : record.past)
    dump.past_pickup_steps.push_back(t.pickup_step);
  dump.query_times = trace.selected;
  for (size_t m = 0; m < trace.selected.size(); ++m) {
    const Tensor& q =
        trace.h_cur[static_cast<size_t>(trace.selected[m])];
    std::vector<double> cos, w;
    for (size_t s = 0; s < trace.memory.keys.size(); ++s) {
      cos.push_back(cosine_value(q.values(), trace.memory.keys[s].values()));
      w.push_back(trace.attn[m].at(static_cast<int>(s)));
    }
    dump.raw_cos.push_back(std::move(cos));
    dump.weights.push_back(std::move(w));
  }
  for (const Tensor& h : trace.h_cur)
    dump.select_cos.push_back(cosine_value(trace.z.values(), h.values()));
  for (const StepRecord& s : record.current.steps)
    dump.cur_rooms.push_back(s.room);
  for (int i = 0; i < trace.alpha.size(); ++i)
    dump.alpha.push_back(trace.alpha.at(i));
  dump.cur_pickup_step = record.current.pickup_step;
  return dump;
}

void write_attention_csv(const AttentionDump& dump, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create directory: " + dir);
  {
    std::ofstream out(dir + "/memory_attention.csv");
    if (!out) throw Error(ErrorKind::io, "cannot write memory_attention.csv");
    out << "query_rank,query_time,slot,traj,traj_time,slot_room,raw_cosine,weight\n";
    for (size_t m = 0; m < dump.query_times.size(); ++m)
      for (size_t s = 0; s < dump.slots.size(); ++s)
        out << m << "," << dump.query_times[m] << "," << s << ","
            << dump.slots[s].traj << "," << dump.slots[s].t << ","
            << dump.slot_rooms[s] << "," << dump.raw_cos[m][s] << ","
            << dump.weights[m][s] << "\n";
  }
  {
    std::ofstream out(dir + "/current_attention.csv");
    if (!out) throw Error(ErrorKind::io, "cannot write current_attention.csv");
    out << "t,room,select_cosine,selected_rank,alpha\n";
    for (size_t t = 0; t < dump.select_cos.size(); ++t) {
      int rank = -1;
      double alpha = 0.0;
      for (size_t m = 0; m < dump.query_times.size(); ++m)
        if (dump.query_times[m] == static_cast<int>(t)) {
          rank = static_cast<int>(m);
          alpha = dump.alpha[m];
        }
      out << t << "," << dump.cur_rooms[t] << "," << dump.select_cos[t] << ","
          << rank << "," << alpha << "\n";
    }
  }
}

void write_attention_svg(const AttentionDump& dump, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create directory: " + dir);
  svg::write_file(dir + "/memory_attention.svg",
                  svg::render_memory_attention(dump));
  svg::write_file(dir + "/current_attention.svg",
                  svg::render_current_attention(dump));
}

}  // namespace tommy
