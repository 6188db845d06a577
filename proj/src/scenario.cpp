#include "tommy/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "tommy/error.hpp"

namespace tommy {

using actor::ActorConfig;
using actor::HypoActor;
using actor::Objective;
using env::GridWorld;
using env::ObjKind;
using env::Pos;

std::vector<double> empirical_sr(const std::vector<int>& cells, double gamma,
                                 int state_space_size) {
  if (cells.empty())
    throw Error(ErrorKind::state, "empirical SR of an empty state list");
  if (!(gamma > 0.0 && gamma < 1.0))
    throw Error(ErrorKind::config,
                "SR discount must lie in (0,1), got " + std::to_string(gamma));
  std::vector<double> dist(static_cast<size_t>(state_space_size), 0.0);
  double w = 1.0, z = 0.0;
  for (int cell : cells) {
    if (cell < 0 || cell >= state_space_size)
      throw Error(ErrorKind::index, "SR state id out of range");
    dist[static_cast<size_t>(cell)] += w;
    z += w;
    w *= gamma;
  }
  for (double& d : dist) d /= z;
  return dist;
}

Rollout roll_episode(GridWorld world, HypoActor& actor, int step_cap,
                     const RolloutHooks& hooks) {
  Rollout r;
  r.pose_trace.push_back(world.actor);
  for (int t = 0; t < step_cap; ++t) {
    env::Observation obs = env::observe(world, env::Viewer::observer);
    auto action = actor.decide(world);
    if (!action) {
      r.completed = true;
      break;
    }
    StepRecord step;
    step.obs = compact_from(obs);
    step.action = static_cast<int>(*action);
    step.room = world.room_of(world.actor);
    step.intent = static_cast<int>(actor.intention());
    if (hooks.on_step) hooks.on_step(world, actor, step, t);
    r.steps.push_back(step);
    size_t n_before = world.objects.size();
    env::step(world, *action);
    if (world.objects.size() < n_before && r.pickup_step < 0)
      r.pickup_step = t;
    r.pose_trace.push_back(world.actor);
    if (hooks.between_steps) hooks.between_steps(world, actor, t + 1);
  }
  r.final_world = world;
  return r;
}

namespace {

TrajRecord to_traj(const Rollout& roll, int n_rooms) {
  TrajRecord t;
  t.n_rooms = n_rooms;
  t.steps = roll.steps;
  t.pickup_step = roll.pickup_step;
  return t;
}

std::vector<SrTarget> sr_targets(const std::vector<Pos>& pose_trace, int from,
                                 const std::vector<double>& gammas) {
  std::vector<int> cells;
  for (size_t i = static_cast<size_t>(from); i < pose_trace.size(); ++i)
    cells.push_back(cell_id(pose_trace[i]));
  std::vector<SrTarget> out;
  for (double g : gammas) out.push_back({g, empirical_sr(cells, g, kCells)});
  return out;
}

env::WorldConfig preference_world(int n_rooms, int pref_color, Rng& rng) {
  env::WorldConfig cfg;
  cfg.n_rooms = n_rooms;
  cfg.room_size = kRoomSize;
  for (int c = 0; c < env::kNumColors; ++c)
    cfg.objects.push_back({ObjKind::ball, c, 0});
  for (int room = 1; room + 1 < n_rooms; ++room) {
    // two distractor balls per middle room, never the preferred colour
    std::vector<int> colors;
    for (int c = 0; c < env::kNumColors; ++c)
      if (c != pref_color) colors.push_back(c);
    std::shuffle(colors.begin(), colors.end(), rng);
    cfg.objects.push_back({ObjKind::ball, colors[0], room});
    cfg.objects.push_back({ObjKind::ball, colors[1], room});
  }
  cfg.objects.push_back({ObjKind::goal, 0, n_rooms - 1});
  return cfg;
}

Rollout roll_preference(int n_rooms, const ActorConfig& cfg, uint64_t seed) {
  Rng rng(mix_seed(seed, 0x707265));
  env::WorldConfig world_cfg =
      preference_world(n_rooms, cfg.preference_color, rng);
  GridWorld world = env::reset(world_cfg, mix_seed(seed, 0x776f726c));
  std::vector<Objective> goals{
      {Objective::Mode::pickup, ObjKind::ball, cfg.preference_color},
      {Objective::Mode::reach, ObjKind::goal, 0}};
  ActorConfig acfg = cfg;
  acfg.seed = mix_seed(seed, 0x616374);
  HypoActor actor(acfg, goals);
  return roll_episode(world, actor, 400);
}

}  // namespace

EpisodeRecord generate_preference_episode(int n_rooms, const ActorConfig& cfg,
                                          uint64_t seed,
                                          const GenOptions& opt) {
  if (n_rooms < 2)
    throw Error(ErrorKind::config, "preference scenario needs >= 2 rooms");
  for (int attempt = 0; attempt < opt.retry_limit; ++attempt) {
    uint64_t s = mix_seed(seed, static_cast<uint64_t>(attempt));
    Rollout cur = roll_preference(n_rooms, cfg, mix_seed(s, 1));
    if (!cur.completed || static_cast<int>(cur.steps.size()) < 3) continue;

    std::vector<TrajRecord> past;
    bool past_ok = true;
    for (int j = 0; j < opt.n_past; ++j) {
      Rollout r = roll_preference(3, cfg, mix_seed(s, 100 + j));
      if (!r.completed || r.steps.empty()) {
        past_ok = false;
        break;
      }
      past.push_back(to_traj(r, 3));
    }
    if (!past_ok) continue;

    // query time uniform over rooms, then uniform inside the room
    int total = static_cast<int>(cur.steps.size());
    std::map<int, std::vector<int>> by_room;
    for (int t = 1; t < total; ++t) by_room[cur.steps[t].room].push_back(t);
    if (by_room.empty()) continue;
    Rng rng(mix_seed(s, 2));
    std::vector<int> rooms;
    for (const auto& [room, ts] : by_room) rooms.push_back(room);
    int room = rooms[static_cast<size_t>(
        uniform_int(rng, 0, static_cast<int>(rooms.size()) - 1))];
    const auto& ts = by_room[room];
    int t_q = ts[static_cast<size_t>(
        uniform_int(rng, 0, static_cast<int>(ts.size()) - 1))];

    EpisodeRecord rec;
    rec.scenario = "preference";
    rec.actor_pref = cfg.preference_color;
    rec.actor_fov = cfg.fov;
    rec.actor_seed = s;
    rec.n_rooms = n_rooms;
    rec.past = std::move(past);
    rec.current.n_rooms = n_rooms;
    rec.current.steps.assign(cur.steps.begin(), cur.steps.begin() + t_q);
    rec.current.pickup_step = cur.pickup_step < t_q ? cur.pickup_step : -1;
    rec.query_obs = cur.steps[static_cast<size_t>(t_q)].obs;
    rec.t_q = t_q;
    rec.label_pref = cfg.preference_color;
    rec.label_intent = cur.steps[static_cast<size_t>(t_q)].intent;
    rec.label_action = cur.steps[static_cast<size_t>(t_q)].action;
    rec.sr = sr_targets(cur.pose_trace, t_q, opt.gammas);
    rec.episode_len = total;
    return rec;
  }
  throw Error(ErrorKind::state,
              "failed to generate a preference episode after " +
                  std::to_string(opt.retry_limit) + " attempts");
}

namespace {

struct FbLayout {
  env::WorldConfig world;
  std::vector<int> key_colors;
  int target_color = 0;
  int swap_partner = 0;
};

FbLayout false_belief_world(Rng& rng) {
  FbLayout l;
  std::vector<int> colors{0, 1, 2, 3};
  std::shuffle(colors.begin(), colors.end(), rng);
  l.key_colors = {colors[0], colors[1], colors[2]};
  int target_idx = uniform_int(rng, 0, 2);
  l.target_color = l.key_colors[static_cast<size_t>(target_idx)];
  // swap with the farthest key so the swapped positions stay two rows
  // apart and the stale approach cannot reveal the target early
  int partner_idx = target_idx == 1 ? (uniform_int(rng, 0, 1) ? 2 : 0)
                                    : (target_idx == 0 ? 2 : 0);
  l.swap_partner = l.key_colors[static_cast<size_t>(partner_idx)];

  l.world.n_rooms = 3;
  l.world.room_size = kRoomSize;
  // keys on the far wall column, rows 1/3/5; the doorway FOV cannot reach
  // them at t_q and swapped neighbourhoods never touch
  for (int i = 0; i < 3; ++i)
    l.world.objects.push_back({ObjKind::key, l.key_colors[static_cast<size_t>(i)],
                               0, -1, env::Pos{1, 1 + 2 * i}});
  std::shuffle(colors.begin(), colors.end(), rng);
  l.world.objects.push_back({ObjKind::ball, colors[0], 1});
  l.world.objects.push_back({ObjKind::ball, colors[1], 1});
  l.world.objects.push_back({ObjKind::box, l.target_color, 2});
  return l;
}

struct FbTrace {
  Rollout roll;
  int stage2 = -1, stage3 = -1, stage4 = -1, stage5 = -1;
  int stage6 = -1, stage7 = -1;
  Pos believed_at_tq, true_at_tq;
  bool belief_seen = false;
  std::vector<env::Object> swap_view;  // key room right after the swap
};

FbTrace roll_false_belief(const FbLayout& layout, const ActorConfig& acfg,
                          uint64_t world_seed, bool swap) {
  GridWorld world = env::reset(layout.world, world_seed);
  std::vector<Objective> goals{
      {Objective::Mode::observe, ObjKind::box, layout.target_color},
      {Objective::Mode::pickup, ObjKind::key, layout.target_color}};
  HypoActor actor(acfg, goals);

  FbTrace trace;
  RolloutHooks hooks;
  hooks.on_step = [&](const GridWorld& w, const HypoActor& a,
                      const StepRecord& step, int t) {
    if (trace.stage2 < 0 && step.room == 1) trace.stage2 = t;
    if (trace.stage3 < 0 &&
        a.belief().position_of(ObjKind::box, layout.target_color))
      trace.stage3 = t;
    if (trace.stage5 < 0 && trace.stage3 >= 0 && step.room == 0) {
      trace.stage5 = t;
      auto believed =
          a.belief().position_of(ObjKind::key, layout.target_color);
      if (believed) {
        trace.believed_at_tq = *believed;
        trace.belief_seen = true;
      }
      for (const env::Object& o : w.objects)
        if (o.kind == ObjKind::key && o.color == layout.target_color)
          trace.true_at_tq = o.pos;
    }
    if (trace.stage5 >= 0 && t > trace.stage5) {
      auto believed =
          a.belief().position_of(ObjKind::key, layout.target_color);
      if (trace.stage6 < 0 && !believed) trace.stage6 = t;
      if (trace.stage6 >= 0 && trace.stage7 < 0 && believed) trace.stage7 = t;
    }
  };
  hooks.between_steps = [&](GridWorld& w, const HypoActor& a, int next) {
    if (!swap || trace.stage4 >= 0 || trace.stage3 < 0) return;
    if (w.room_of(w.actor) != 1 || w.lit_room == 0) return;
    Pos target_pos, partner_pos;
    bool ok = false, ok2 = false;
    for (const env::Object& o : w.objects) {
      if (o.kind == ObjKind::key && o.color == layout.target_color) {
        target_pos = o.pos;
        ok = true;
      }
      if (o.kind == ObjKind::key && o.color == layout.swap_partner) {
        partner_pos = o.pos;
        ok2 = true;
      }
    }
    if (!ok || !ok2) return;
    env::apply_swap(w, {0, {{target_pos, partner_pos}}, next});
    trace.stage4 = next;
    for (const env::Object& o : w.objects)
      if (w.room_of(o.pos) == 0) trace.swap_view.push_back(o);
  };
  trace.roll = roll_episode(world, actor, 400, hooks);
  return trace;
}

}  // namespace

EpisodeRecord generate_false_belief_episode(bool swap, uint64_t seed,
                                            const GenOptions& opt) {
  for (int attempt = 0; attempt < opt.retry_limit; ++attempt) {
    uint64_t s = mix_seed(seed, 0xfb00 + static_cast<uint64_t>(attempt));
    Rng rng(mix_seed(s, 3));
    FbLayout layout = false_belief_world(rng);
    ActorConfig acfg;
    acfg.preference_color = 0;
    // a 5x5 FOV sees the whole room from the doorway, which would erase
    // the false belief one step after t_q; the demand needs the narrow view
    acfg.fov = 3;
    acfg.seed = mix_seed(s, 4);

    FbTrace cur = roll_false_belief(layout, acfg, mix_seed(s, 5), swap);
    int total = static_cast<int>(cur.roll.steps.size());
    bool ok = cur.roll.completed && cur.stage2 >= 0 && cur.stage3 >= 0 &&
              cur.stage5 >= 1 && cur.stage5 < total - 1 && cur.belief_seen &&
              (!swap || cur.stage4 >= 0);
    if (!ok) continue;

    std::vector<TrajRecord> past;
    bool past_ok = true;
    for (int j = 0; j < opt.n_past; ++j) {
      Rng prng(mix_seed(s, 600 + static_cast<uint64_t>(j)));
      FbLayout pl = false_belief_world(prng);
      ActorConfig pcfg = acfg;
      pcfg.seed = mix_seed(s, 700 + static_cast<uint64_t>(j));
      FbTrace r = roll_false_belief(pl, pcfg, mix_seed(s, 800 + static_cast<uint64_t>(j)),
                                    /*swap=*/false);
      if (!r.roll.completed || r.roll.steps.empty()) {
        past_ok = false;
        break;
      }
      past.push_back(to_traj(r.roll, 3));
    }
    if (!past_ok) continue;

    int t_q = cur.stage5;
    EpisodeRecord rec;
    rec.scenario = "false_belief";
    rec.actor_pref = layout.target_color;
    rec.actor_fov = acfg.fov;
    rec.actor_seed = s;
    rec.n_rooms = 3;
    rec.past = std::move(past);
    rec.current.n_rooms = 3;
    rec.current.steps.assign(cur.roll.steps.begin(),
                             cur.roll.steps.begin() + t_q);
    rec.current.pickup_step =
        cur.roll.pickup_step < t_q ? cur.roll.pickup_step : -1;
    if (opt.observer_sees_swap && swap && cur.stage4 >= 0 &&
        cur.stage4 < t_q) {
      auto& objs =
          rec.current.steps[static_cast<size_t>(cur.stage4)].obs.objects;
      objs.insert(objs.end(), cur.swap_view.begin(), cur.swap_view.end());
    }
    rec.query_obs = cur.roll.steps[static_cast<size_t>(t_q)].obs;
    rec.t_q = t_q;
    rec.label_pref = layout.target_color;
    rec.label_intent = cur.roll.steps[static_cast<size_t>(t_q)].intent;
    rec.label_action = cur.roll.steps[static_cast<size_t>(t_q)].action;
    rec.sr = sr_targets(cur.roll.pose_trace, t_q, opt.gammas);
    rec.swap = swap;
    rec.stages = {{"stage2", cur.stage2}, {"stage3", cur.stage3},
                  {"stage4", cur.stage4}, {"stage5", cur.stage5},
                  {"stage6", cur.stage6}, {"stage7", cur.stage7},
                  {"stage8", cur.roll.pickup_step}};
    rec.believed_target_pos = cur.believed_at_tq;
    rec.true_target_pos = cur.true_at_tq;
    rec.has_belief_meta = true;
    rec.episode_len = total;
    return rec;
  }
  throw Error(ErrorKind::state,
              "failed to generate a false-belief episode after " +
                  std::to_string(opt.retry_limit) + " attempts");
}

EpisodeRecord generate_episode_at(const DatasetOptions& opt, int index) {
  uint64_t s = mix_seed(opt.seed, static_cast<uint64_t>(index));
  if (opt.scenario == "preference") {
    Rng rng(mix_seed(s, 9));
    ActorConfig cfg;
    cfg.preference_color = index % env::kNumColors;
    cfg.fov = uniform_int(rng, 0, 1) ? 5 : 3;
    return generate_preference_episode(opt.n_rooms, cfg, s, opt.gen);
  }
  if (opt.scenario == "false-belief" || opt.scenario == "false_belief") {
    bool swap = static_cast<int>(std::floor((index + 1) * opt.swap_ratio)) >
                static_cast<int>(std::floor(index * opt.swap_ratio));
    return generate_false_belief_episode(swap, s, opt.gen);
  }
  throw Error(ErrorKind::config, "unknown scenario: " + opt.scenario);
}

std::vector<EpisodeRecord> generate_dataset(const DatasetOptions& opt) {
  if (opt.episodes < 1)
    throw Error(ErrorKind::config, "dataset needs at least one episode");
  std::vector<EpisodeRecord> out;
  out.reserve(static_cast<size_t>(opt.episodes));
  for (int i = 0; i < opt.episodes; ++i)
    out.push_back(generate_episode_at(opt, i));
  return out;
}

// ---- serialization -----------------------------------------------------------

namespace {
constexpr const char* kSchema = "tommy-episodes-v1";

nlohmann::json step_to_json(const StepRecord& s) {
  nlohmann::json j;
  to_json(j["o"], s.obs);
  j["a"] = s.action;
  j["r"] = s.room;
  j["i"] = s.intent;
  return j;
}

StepRecord step_from_json(const nlohmann::json& j) {
  StepRecord s;
  from_json(j.at("o"), s.obs);
  s.action = j.at("a").get<int>();
  s.room = j.at("r").get<int>();
  s.intent = j.at("i").get<int>();
  return s;
}

nlohmann::json traj_to_json(const TrajRecord& t) {
  nlohmann::json steps = nlohmann::json::array();
  for (const StepRecord& s : t.steps) steps.push_back(step_to_json(s));
  return {{"n", t.n_rooms}, {"p", t.pickup_step}, {"s", steps}};
}

TrajRecord traj_from_json(const nlohmann::json& j) {
  TrajRecord t;
  t.n_rooms = j.at("n").get<int>();
  t.pickup_step = j.at("p").get<int>();
  for (const auto& s : j.at("s")) t.steps.push_back(step_from_json(s));
  return t;
}
}  // namespace

void to_json(nlohmann::json& j, const EpisodeRecord& r) {
  nlohmann::json past = nlohmann::json::array();
  for (const TrajRecord& t : r.past) past.push_back(traj_to_json(t));
  nlohmann::json sr = nlohmann::json::array();
  for (const SrTarget& t : r.sr) {
    nlohmann::json cells = nlohmann::json::array();
    for (int c = 0; c < static_cast<int>(t.dist.size()); ++c)
      if (t.dist[static_cast<size_t>(c)] != 0.0)
        cells.push_back({c, t.dist[static_cast<size_t>(c)]});
    sr.push_back({{"gamma", t.gamma}, {"cells", cells}, {"n", t.dist.size()}});
  }
  nlohmann::json query;
  to_json(query["obs"], r.query_obs);
  query["t"] = r.t_q;
  j = {{"schema", kSchema},
       {"scenario", r.scenario},
       {"actor",
        {{"pref", r.actor_pref}, {"fov", r.actor_fov}, {"seed", r.actor_seed}}},
       {"n_rooms", r.n_rooms},
       {"past", past},
       {"current", traj_to_json(r.current)},
       {"query", query},
       {"labels",
        {{"pref", r.label_pref},
         {"intent", r.label_intent},
         {"action", r.label_action},
         {"sr", sr}}},
       {"meta",
        {{"swap", r.swap},
         {"stages", r.stages},
         {"len", r.episode_len},
         {"belief",
          r.has_belief_meta
              ? nlohmann::json({r.believed_target_pos.x, r.believed_target_pos.y,
                                r.true_target_pos.x, r.true_target_pos.y})
              : nlohmann::json()}}}};
}

void from_json(const nlohmann::json& j, EpisodeRecord& r) {
  if (!j.contains("schema") || j.at("schema").get<std::string>() != kSchema)
    throw Error(ErrorKind::schema,
                std::string("unsupported episode schema; expected ") + kSchema);
  r.scenario = j.at("scenario").get<std::string>();
  r.actor_pref = j.at("actor").at("pref").get<int>();
  r.actor_fov = j.at("actor").at("fov").get<int>();
  r.actor_seed = j.at("actor").at("seed").get<uint64_t>();
  r.n_rooms = j.at("n_rooms").get<int>();
  r.past.clear();
  for (const auto& t : j.at("past")) r.past.push_back(traj_from_json(t));
  r.current = traj_from_json(j.at("current"));
  from_json(j.at("query").at("obs"), r.query_obs);
  r.t_q = j.at("query").at("t").get<int>();
  const auto& labels = j.at("labels");
  r.label_pref = labels.at("pref").get<int>();
  r.label_intent = labels.at("intent").get<int>();
  r.label_action = labels.at("action").get<int>();
  r.sr.clear();
  for (const auto& t : labels.at("sr")) {
    SrTarget target;
    target.gamma = t.at("gamma").get<double>();
    target.dist.assign(t.at("n").get<size_t>(), 0.0);
    for (const auto& c : t.at("cells"))
      target.dist[c[0].get<size_t>()] = c[1].get<double>();
    r.sr.push_back(std::move(target));
  }
  const auto& meta = j.at("meta");
  r.swap = meta.at("swap").get<bool>();
  r.stages = meta.at("stages").get<std::map<std::string, int>>();
  r.episode_len = meta.at("len").get<int>();
  if (meta.contains("belief") && !meta.at("belief").is_null()) {
    const auto& b = meta.at("belief");
    r.believed_target_pos = {b[0].get<int>(), b[1].get<int>()};
    r.true_target_pos = {b[2].get<int>(), b[3].get<int>()};
    r.has_belief_meta = true;
  } else {
    r.has_belief_meta = false;
  }
}

void write_dataset(const std::string& path,
                   const std::vector<EpisodeRecord>& records) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot open dataset for write: " + path);
  for (const EpisodeRecord& r : records) {
    nlohmann::json j;
    to_json(j, r);
    out << j.dump() << "\n";
  }
  if (!out) throw Error(ErrorKind::io, "dataset write failed: " + path);
}

std::vector<EpisodeRecord> read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open dataset: " + path);
  std::vector<EpisodeRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::parse, path + ":" + std::to_string(line_no) +
                                        ": bad JSON line (" + e.what() + ")");
    }
    try {
      EpisodeRecord r;
      from_json(j, r);
      out.push_back(std::move(r));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::schema) throw;
      throw Error(ErrorKind::parse, path + ":" + std::to_string(line_no) +
                                        ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::parse, path + ":" + std::to_string(line_no) +
                                        ": malformed record (" + e.what() +
                                        ")");
    }
  }
  return out;
}

}  // namespace tommy
