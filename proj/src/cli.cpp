#include "tommy/cli.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "tommy/error.hpp"
#include "tommy/eval.hpp"
#include "tommy/log.hpp"
#include "tommy/model.hpp"
#include "tommy/scenario.hpp"
#include "tommy/svg.hpp"
#include "tommy/train.hpp"

namespace tommy::cli {

namespace {

struct GenerateArgs {
  std::string scenario = "preference";
  int episodes = 100;
  int rooms = 3;
  uint64_t seed = 0;
  std::string out;
  double swap_ratio = 0.5;
  int n_past = 8;
  bool observer_sees_swap = false;
  int jobs = 1;
};

int cmd_generate(const GenerateArgs& a, const Logger& log) {
  DatasetOptions opt;
  opt.scenario = a.scenario;
  opt.episodes = a.episodes;
  opt.n_rooms = a.rooms;
  opt.seed = a.seed;
  opt.swap_ratio = a.swap_ratio;
  opt.gen.n_past = a.n_past;
  opt.gen.observer_sees_swap = a.observer_sees_swap;

  opt.episodes = a.episodes;
  std::vector<EpisodeRecord> records;
  if (a.jobs <= 1) {
    records = generate_dataset(opt);
  } else {
    // episodes are independent by seed; shard and reassemble in order
    records.resize(static_cast<size_t>(a.episodes));
    std::vector<std::thread> workers;
    std::atomic<int> next{0};
    std::vector<std::string> failures(static_cast<size_t>(a.jobs));
    for (int w = 0; w < a.jobs; ++w)
      workers.emplace_back([&, w]() {
        try {
          for (int i = next.fetch_add(1); i < a.episodes; i = next.fetch_add(1))
            records[static_cast<size_t>(i)] = generate_episode_at(opt, i);
        } catch (const std::exception& e) {
          failures[static_cast<size_t>(w)] = e.what();
        }
      });
    for (auto& t : workers) t.join();
    for (const std::string& f : failures)
      if (!f.empty()) throw Error(ErrorKind::state, f);
  }
  write_dataset(a.out, records);
  log.info("wrote %d episodes to %s", a.episodes, a.out.c_str());
  return 0;
}

struct TrainArgs {
  std::string config_path;
  std::string data;
  std::string out;
  // overrides
  std::string model;
  int epochs = -1;
  int batch = -1;
  double lr = -1;
  int64_t seed = -1;
  int aem = -1;  // -1 unset, else 0/1
};

int cmd_train(const TrainArgs& a, const Logger& log) {
  TrainConfig cfg;
  if (!a.config_path.empty()) cfg = load_train_config(a.config_path);
  if (!a.model.empty()) cfg.model = a.model;
  if (a.epochs > 0) cfg.epochs = a.epochs;
  if (a.batch > 0) cfg.batch = a.batch;
  if (a.lr > 0) cfg.lr = a.lr;
  if (a.seed >= 0) cfg.seed = static_cast<uint64_t>(a.seed);
  if (a.aem >= 0) cfg.aem = a.aem != 0;
  if (cfg.model != "tommy" && cfg.model != "bi-tommy" && cfg.model != "tomnet")
    throw Error(ErrorKind::config, "unknown model: " + cfg.model);

  log.info("resolved config:\n%s", cfg.resolved().c_str());
  std::vector<EpisodeRecord> data = read_dataset(a.data);
  log.info("dataset: %zu episodes from %s", data.size(), a.data.c_str());
  TrainResult result = train(cfg, data, a.out, log);
  log.info("checkpoint: %s", result.checkpoint_dir.c_str());
  return 0;
}

struct EvalArgs {
  std::vector<std::string> ckpts;
  std::string data;
  std::string report;
  std::string condition;
};

int cmd_eval(const EvalArgs& a, const Logger& log) {
  std::vector<EpisodeRecord> data = read_dataset(a.data);
  std::vector<EvalResult> runs;
  for (const std::string& ckpt : a.ckpts) {
    Net net = load_model(ckpt);
    runs.push_back(evaluate_model(net, data));
    log.info("evaluated %s on %zu episodes", ckpt.c_str(), data.size());
  }
  MetricsReport rep =
      aggregate(runs, a.condition.empty() ? a.data : a.condition);
  nlohmann::json j;
  to_json(j, rep);
  std::ofstream out(a.report);
  if (!out) throw Error(ErrorKind::io, "cannot write report: " + a.report);
  out << j.dump(2) << "\n";
  log.info("report: %s", a.report.c_str());
  return 0;
}

struct DumpArgs {
  std::string ckpt;
  std::string data;
  int episode_id = 0;
  std::string out;
};

int cmd_dump_attention(const DumpArgs& a, const Logger& log) {
  Net net = load_model(a.ckpt);
  std::vector<EpisodeRecord> data = read_dataset(a.data);
  if (a.episode_id < 0 || a.episode_id >= static_cast<int>(data.size()))
    throw Error(ErrorKind::index,
                "episode id " + std::to_string(a.episode_id) +
                    " out of range; dataset has " +
                    std::to_string(data.size()) + " episodes");
  AttentionDump dump =
      dump_attention(net, data[static_cast<size_t>(a.episode_id)]);
  write_attention_csv(dump, a.out);
  write_attention_svg(dump, a.out);
  log.info("attention dump for episode %d in %s", a.episode_id, a.out.c_str());
  return 0;
}

struct PlotArgs {
  std::vector<std::string> reports;
  std::string world;
  std::string out;
};

MetricsReport report_from_json(const nlohmann::json& j) {
  if (!j.contains("schema") ||
      j.at("schema").get<std::string>() != "tommy-report-v1")
    throw Error(ErrorKind::schema, "not a tommy-report-v1 report");
  MetricsReport r;
  r.model_id = j.at("model").get<std::string>();
  r.condition = j.at("condition").get<std::string>();
  r.n_seeds = j.at("n_seeds").get<int>();
  r.n_episodes = j.at("n_episodes").get<int>();
  for (const auto& b : j.at("preference").at("rooms"))
    r.pref_by_room.push_back({b.at("room").get<int>(), b.at("n").get<int>(),
                              b.at("mean").get<double>(),
                              b.at("std").get<double>()});
  r.pref_mean = j.at("preference").at("mean").get<double>();
  r.pref_std = j.at("preference").at("std").get<double>();
  r.intent_mean = j.at("intention").at("mean").get<double>();
  r.intent_std = j.at("intention").at("std").get<double>();
  for (const auto& b : j.at("actions").at("groups")) {
    std::string name = b.at("group").get<std::string>();
    int g = name == "turn" ? 0 : name == "move-forward" ? 1 : 2;
    r.action_groups.push_back({g, b.at("n").get<int>(),
                               b.at("mean").get<double>(),
                               b.at("std").get<double>()});
  }
  for (const auto& b : j.at("sr_jsd"))
    r.sr_jsd.push_back({b.at("gamma").get<double>(), b.at("mean").get<double>(),
                        b.at("std").get<double>()});
  return r;
}

int cmd_plot(const PlotArgs& a, const Logger& log) {
  std::error_code ec;
  std::filesystem::create_directories(a.out, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create directory: " + a.out);
  if (!a.world.empty()) {
    std::ifstream in(a.world);
    if (!in) throw Error(ErrorKind::io, "cannot open world snapshot: " + a.world);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::parse, "bad world snapshot: " + std::string(e.what()));
    }
    env::GridWorld w;
    env::from_json(j, w);
    svg::write_file(a.out + "/world.svg", svg::render_world(w));
    log.info("world rendering: %s/world.svg", a.out.c_str());
  }
  if (!a.reports.empty()) {
    std::vector<MetricsReport> reports;
    for (const std::string& path : a.reports) {
      std::ifstream in(path);
      if (!in) throw Error(ErrorKind::io, "cannot open report: " + path);
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::parse,
                    path + ": bad report JSON (" + e.what() + ")");
      }
      reports.push_back(report_from_json(j));
    }
    svg::write_file(a.out + "/pref_by_room.svg",
                    svg::render_pref_by_room(reports));
    svg::write_file(a.out + "/action_groups.svg",
                    svg::render_action_groups(reports));
    svg::write_file(a.out + "/sr_jsd.svg", svg::render_sr_jsd(reports));
    log.info("plots written to %s", a.out.c_str());
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"memory-augmented theory-of-mind observer"};
  app.require_subcommand(1);
  app.fallthrough();
  int verbosity = 1;
  app.add_option("-v,--verbosity", verbosity, "0=quiet, 1=info, 2=debug");

  GenerateArgs gen;
  CLI::App* g = app.add_subcommand("generate", "generate an episode dataset");
  g->add_option("--scenario", gen.scenario, "preference | false-belief")
      ->check(CLI::IsMember({"preference", "false-belief"}));
  g->add_option("--episodes", gen.episodes, "episode count")
      ->check(CLI::PositiveNumber);
  g->add_option("--rooms", gen.rooms, "rooms in the current trajectory")
      ->check(CLI::IsMember({3, 5}));
  g->add_option("--seed", gen.seed, "master seed");
  g->add_option("--out", gen.out, "output .jsonl path")->required();
  g->add_option("--swap-ratio", gen.swap_ratio,
                "fraction of swap episodes (false-belief)");
  g->add_option("--n-past", gen.n_past, "past trajectories per episode");
  g->add_flag("--observer-sees-swap", gen.observer_sees_swap,
              "reveal the swap moment to the observer");
  g->add_option("--jobs", gen.jobs, "parallel generation threads");

  TrainArgs tr;
  CLI::App* t = app.add_subcommand("train", "train a model on a dataset");
  t->add_option("--config", tr.config_path, "key = value config file");
  t->add_option("--data", tr.data, "training .jsonl")->required();
  t->add_option("--out", tr.out, "run output directory")->required();
  t->add_option("--model", tr.model, "tommy | bi-tommy | tomnet");
  t->add_option("--epochs", tr.epochs, "override epochs");
  t->add_option("--batch", tr.batch, "override batch size");
  t->add_option("--lr", tr.lr, "override learning rate");
  t->add_option("--seed", tr.seed, "override seed");
  t->add_option("--aem", tr.aem, "override AEM balancing (0/1)");

  EvalArgs ev;
  CLI::App* e = app.add_subcommand("eval", "evaluate checkpoints");
  e->add_option("--ckpt", ev.ckpts, "checkpoint directory (repeatable)")
      ->required();
  e->add_option("--data", ev.data, "evaluation .jsonl")->required();
  e->add_option("--report", ev.report, "output report JSON")->required();
  e->add_option("--condition", ev.condition, "condition label for the report");

  DumpArgs du;
  CLI::App* d = app.add_subcommand("dump-attention",
                                   "dump attention weights for one episode");
  d->add_option("--ckpt", du.ckpt, "checkpoint directory")->required();
  d->add_option("--data", du.data, "episode .jsonl")->required();
  d->add_option("--episode-id", du.episode_id, "episode index");
  d->add_option("--out", du.out, "output directory")->required();

  PlotArgs pl;
  CLI::App* p = app.add_subcommand("plot", "render reports or world snapshots");
  p->add_option("--report", pl.reports, "report JSON (repeatable)");
  p->add_option("--world", pl.world, "world snapshot JSON");
  p->add_option("--out", pl.out, "output directory")->required();

  std::vector<std::string> argv = args;
  std::string prog = "tommy";
  std::vector<char*> ptrs;
  ptrs.push_back(prog.data());
  for (std::string& s : argv) ptrs.push_back(s.data());
  try {
    app.parse(static_cast<int>(ptrs.size()), ptrs.data());
  } catch (const CLI::ParseError& err) {
    int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  Logger log(static_cast<LogLevel>(verbosity));
  try {
    if (g->parsed()) return cmd_generate(gen, log);
    if (t->parsed()) return cmd_train(tr, log);
    if (e->parsed()) return cmd_eval(ev, log);
    if (d->parsed()) return cmd_dump_attention(du, log);
    if (p->parsed()) return cmd_plot(pl, log);
  } catch (const Error& err) {
    log.error("category=%s %s", error_kind_name(err.kind()), err.what());
    switch (err.kind()) {
      case ErrorKind::io:
      case ErrorKind::parse: return 3;
      case ErrorKind::numeric: return 4;
      default: return 2;
    }
  } catch (const std::exception& err) {
    log.error("category=internal %s", err.what());
    return 2;
  }
  return 2;
}

}  // namespace tommy::cli
