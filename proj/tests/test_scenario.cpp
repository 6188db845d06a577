#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "tommy/encoding.hpp"
#include "tommy/error.hpp"
#include "tommy/scenario.hpp"

using namespace tommy;
using namespace tommy::env;

TEST_CASE("empirical SR: single state and direct-summation cases") {
  auto single = empirical_sr({7}, 0.9, 10);
  CHECK(single[7] == doctest::Approx(1.0));

  // states [A,B,A] with gamma 0.5: weights 1, 0.5, 0.25
  auto sr = empirical_sr({0, 1, 0}, 0.5, 2);
  CHECK(sr[0] == doctest::Approx(5.0 / 7.0).epsilon(1e-12));
  CHECK(sr[1] == doctest::Approx(2.0 / 7.0).epsilon(1e-12));

  CHECK_THROWS_AS(empirical_sr({}, 0.5, 4), Error);
  CHECK_THROWS_AS(empirical_sr({0}, 0.0, 4), Error);
  CHECK_THROWS_AS(empirical_sr({0}, 1.0, 4), Error);
}

TEST_CASE("empirical SR: larger gamma favours later-visited states") {
  std::vector<int> trace{0, 1, 2, 3, 4, 5};
  auto lo = empirical_sr(trace, 0.5, 6);
  auto hi = empirical_sr(trace, 0.99, 6);
  // relative mass hi/lo grows strictly with visit order, so the last state
  // always gains and the first always loses
  for (int s = 1; s < 6; ++s)
    CHECK(hi[static_cast<size_t>(s)] * lo[static_cast<size_t>(s - 1)] >
          hi[static_cast<size_t>(s - 1)] * lo[static_cast<size_t>(s)]);
  CHECK(hi[5] > lo[5]);
  CHECK(hi[0] < lo[0]);
  double zs = 0;
  for (double v : hi) zs += v;
  CHECK(zs == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("empirical SR normalizes on 1000 random traces") {
  Rng rng(3);
  for (int it = 0; it < 1000; ++it) {
    std::vector<int> cells;
    int len = uniform_int(rng, 1, 60);
    for (int i = 0; i < len; ++i) cells.push_back(uniform_int(rng, 0, 99));
    auto sr = empirical_sr(cells, uniform_real(rng, 0.05, 0.99), 100);
    double total = 0;
    for (double v : sr) {
      CHECK(v >= 0.0);
      total += v;
    }
    CHECK(std::abs(total - 1.0) <= 1e-9);
  }
}

TEST_CASE("state encoding masks rooms outside the lit one") {
  WorldConfig cfg;
  cfg.n_rooms = 3;
  cfg.objects.push_back({ObjKind::ball, 2, 0});
  cfg.objects.push_back({ObjKind::ball, 1, 1});
  cfg.objects.push_back({ObjKind::goal, 0, 2});
  GridWorld w = reset(cfg, 5);
  CompactObs obs = compact_from(observe(w, Viewer::observer));
  Tensor enc = encode_state(3, obs);

  // only the lit-room ball is in the object planes
  auto objects = decode_objects(enc);
  REQUIRE(objects.size() == 1);
  CHECK(objects[0].kind == ObjKind::ball);
  CHECK(objects[0].color == 2);
  CHECK(w.rooms[0].contains(objects[0].pos));

  // determinism
  Tensor enc2 = encode_state(3, obs);
  CHECK(enc.values() == enc2.values());

  // visible set round-trips exactly
  std::set<std::tuple<int, int, int, int>> in, out;
  for (const Object& o : obs.objects)
    in.insert({static_cast<int>(o.kind), o.color, o.pos.x, o.pos.y});
  for (const Object& o : objects)
    out.insert({static_cast<int>(o.kind), o.color, o.pos.x, o.pos.y});
  CHECK(in == out);

  // lit mask marks exactly the lit room's cells
  const auto& v = enc.values();
  for (int y = 0; y < w.height; ++y)
    for (int x = 0; x < w.width; ++x) {
      double lit = v[static_cast<size_t>(kLitChannel * kCells + cell_id({x, y}))];
      CHECK(lit == (w.room_of({x, y}) == w.lit_room ? 1.0 : 0.0));
    }
}

TEST_CASE("preference episodes carry consistent labels") {
  GenOptions opt;
  opt.n_past = 2;
  for (uint64_t seed = 0; seed < 40; ++seed) {
    actor::ActorConfig cfg;
    cfg.preference_color = static_cast<int>(seed % 4);
    cfg.fov = seed % 2 ? 5 : 3;
    EpisodeRecord rec = generate_preference_episode(3, cfg, seed, opt);
    CHECK(rec.label_pref == cfg.preference_color);
    CHECK(rec.t_q == static_cast<int>(rec.current.steps.size()));
    CHECK(rec.t_q >= 1);
    CHECK(rec.label_action >= 0);
    CHECK(rec.label_action < 4);
    CHECK(rec.label_intent >= 0);
    CHECK(rec.label_intent < 3);
    CHECK(rec.past.size() == 2);
    for (const TrajRecord& t : rec.past) {
      CHECK(t.n_rooms == 3);
      CHECK(!t.steps.empty());
      CHECK(t.pickup_step >= 0);  // every past run picks its ball
    }
    REQUIRE(rec.sr.size() == 3);
    for (const SrTarget& t : rec.sr) {
      double total = 0;
      for (double p : t.dist) total += p;
      CHECK(std::abs(total - 1.0) <= 1e-9);
    }
    // room metadata aligns with the step list
    GridWorld layout = make_layout(3, kRoomSize);
    for (const StepRecord& s : rec.current.steps)
      CHECK(layout.room_of(s.obs.pose) == s.room);
  }
}

TEST_CASE("five-room condition keeps past trajectories in three rooms") {
  actor::ActorConfig cfg;
  cfg.preference_color = 2;
  GenOptions opt;
  opt.n_past = 3;
  EpisodeRecord rec = generate_preference_episode(5, cfg, 11, opt);
  CHECK(rec.n_rooms == 5);
  CHECK(rec.current.n_rooms == 5);
  for (const TrajRecord& t : rec.past) CHECK(t.n_rooms == 3);
}

TEST_CASE("false-belief episodes set the stages in order") {
  GenOptions opt;
  opt.n_past = 2;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    EpisodeRecord rec = generate_false_belief_episode(seed % 2 == 0, seed, opt);
    CHECK(rec.scenario == "false_belief");
    int s2 = rec.stages.at("stage2");
    int s3 = rec.stages.at("stage3");
    int s5 = rec.stages.at("stage5");
    CHECK(s2 > 0);
    CHECK(s3 > s2);  // goal revealed after entering the ball room
    CHECK(s5 > s3);  // back in the key room after the box reveal
    CHECK(rec.t_q == s5);
    if (rec.swap) {
      int s4 = rec.stages.at("stage4");
      CHECK(s4 > s3);
      CHECK(s4 <= s5);
    } else {
      CHECK(rec.stages.at("stage4") == -1);
    }
    CHECK(rec.stages.at("stage8") > s5);  // key picked up after the query
    CHECK(rec.label_pref == rec.actor_pref);
  }
}

TEST_CASE("false-belief ground truth: swap falsifies the belief at t_q") {
  GenOptions opt;
  opt.n_past = 1;
  int swap_mismatch = 0, clean_match = 0;
  const int n = 250;
  for (uint64_t seed = 0; seed < n; ++seed) {
    EpisodeRecord with_swap = generate_false_belief_episode(true, seed, opt);
    REQUIRE(with_swap.has_belief_meta);
    if (!(with_swap.believed_target_pos == with_swap.true_target_pos))
      ++swap_mismatch;
    EpisodeRecord no_swap = generate_false_belief_episode(false, seed + 50000, opt);
    REQUIRE(no_swap.has_belief_meta);
    if (no_swap.believed_target_pos == no_swap.true_target_pos) ++clean_match;
  }
  CHECK(swap_mismatch == n);
  CHECK(clean_match == n);
}

TEST_CASE("swap concentrates early SR mass toward the stale position") {
  // continue the scripted actor: with a false belief its first navigation
  // target is the believed cell, so the short-horizon SR leans there
  GenOptions opt;
  opt.n_past = 1;
  int lean_stale = 0;
  const int n = 40;
  for (uint64_t seed = 0; seed < n; ++seed) {
    EpisodeRecord rec = generate_false_belief_episode(true, seed * 3 + 1, opt);
    const SrTarget& sharp = rec.sr[0];  // gamma 0.5, shortest horizon
    // discounted mass in the key-room half nearer each position; the entry
    // corridor (east half) is shared by both legs and stays out of it
    int yb = rec.believed_target_pos.y, yt = rec.true_target_pos.y;
    double stale_mass = 0, fresh_mass = 0;
    for (int y = 1; y <= 5; ++y)
      for (int x = 1; x <= 3; ++x) {
        double m = sharp.dist[static_cast<size_t>(cell_id({x, y}))];
        if (std::abs(y - yb) < std::abs(y - yt)) stale_mass += m;
        if (std::abs(y - yt) < std::abs(y - yb)) fresh_mass += m;
      }
    if (stale_mass >= fresh_mass) ++lean_stale;
  }
  CHECK(lean_stale >= n * 3 / 4);
}

TEST_CASE("dataset writes one line per record and round-trips") {
  DatasetOptions opt;
  opt.scenario = "false-belief";
  opt.episodes = 6;
  opt.seed = 77;
  opt.gen.n_past = 1;
  std::vector<EpisodeRecord> records = generate_dataset(opt);
  const std::string path = "/tmp/tommy_ds_test.jsonl";
  write_dataset(path, records);

  std::ifstream in(path);
  int lines = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++lines;
  CHECK(lines == 6);

  std::vector<EpisodeRecord> back = read_dataset(path);
  REQUIRE(back.size() == records.size());
  for (size_t i = 0; i < back.size(); ++i) CHECK(back[i] == records[i]);

  // swap balance is exact for ratio 0.5
  int swaps = 0;
  for (const EpisodeRecord& r : records) swaps += r.swap ? 1 : 0;
  CHECK(swaps == 3);
}

TEST_CASE("dataset reader reports the first bad line") {
  const std::string path = "/tmp/tommy_ds_bad.jsonl";
  {
    DatasetOptions opt;
    opt.scenario = "preference";
    opt.episodes = 1;
    opt.gen.n_past = 1;
    write_dataset(path, generate_dataset(opt));
    std::ofstream app(path, std::ios::app);
    app << "{\"truncated\": \n";
  }
  try {
    read_dataset(path);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::parse);
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
}

TEST_CASE("dataset reader refuses unknown schema versions") {
  const std::string path = "/tmp/tommy_ds_schema.jsonl";
  {
    std::ofstream out(path);
    out << "{\"schema\": \"tommy-episodes-v999\"}\n";
  }
  try {
    read_dataset(path);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::schema);
    CHECK(std::string(e.what()).find("tommy-episodes-v1") != std::string::npos);
  }
}

TEST_CASE("intention labels match the actor's logged state at every step") {
  // the rollout hook receives the actor; recorded intents must equal what
  // the actor reports at that step
  WorldConfig cfg;
  cfg.n_rooms = 3;
  for (int c = 0; c < 4; ++c) cfg.objects.push_back({ObjKind::ball, c, 0});
  cfg.objects.push_back({ObjKind::goal, 0, 2});
  GridWorld w = reset(cfg, 123);
  actor::ActorConfig acfg;
  acfg.preference_color = 1;
  acfg.seed = 9;
  actor::HypoActor actor(acfg, {{actor::Objective::Mode::pickup, ObjKind::ball, 1},
                                {actor::Objective::Mode::reach, ObjKind::goal, 0}});
  RolloutHooks hooks;
  int checked = 0;
  hooks.on_step = [&](const GridWorld&, const actor::HypoActor& a,
                      const StepRecord& s, int) {
    CHECK(s.intent == static_cast<int>(a.intention()));
    ++checked;
  };
  Rollout roll = roll_episode(w, actor, 400, hooks);
  CHECK(roll.completed);
  CHECK(checked == static_cast<int>(roll.steps.size()));
}
