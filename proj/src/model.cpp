#include "tommy/model.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "tommy/error.hpp"

namespace tommy {

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = {{"kind", c.kind == ModelKind::tommy ? "tommy" : "tomnet"},
       {"value_mode",
        c.value_mode == ValueMode::forward ? "forward" : "forward_backward"},
       {"state_dim", c.state_dim},
       {"action_dim", c.action_dim},
       {"hidden", c.hidden},
       {"char_dim", c.char_dim},
       {"z_dim", c.z_dim},
       {"mlp_hidden", c.mlp_hidden},
       {"beta", c.beta},
       {"top_m", c.top_m},
       {"n_pref", c.n_pref},
       {"n_intent", c.n_intent},
       {"sr_cells", c.sr_cells},
       {"gammas", c.gammas},
       {"param_seed", c.param_seed}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "tommy")
    c.kind = ModelKind::tommy;
  else if (kind == "tomnet")
    c.kind = ModelKind::tomnet;
  else
    throw Error(ErrorKind::config, "unknown model kind: " + kind);
  std::string vm = j.at("value_mode").get<std::string>();
  if (vm == "forward")
    c.value_mode = ValueMode::forward;
  else if (vm == "forward_backward")
    c.value_mode = ValueMode::forward_backward;
  else
    throw Error(ErrorKind::config, "unknown value mode: " + vm);
  c.state_dim = j.at("state_dim").get<int>();
  c.action_dim = j.at("action_dim").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.char_dim = j.at("char_dim").get<int>();
  c.z_dim = j.at("z_dim").get<int>();
  c.mlp_hidden = j.at("mlp_hidden").get<int>();
  c.beta = j.at("beta").get<double>();
  c.top_m = j.at("top_m").get<int>();
  c.n_pref = j.at("n_pref").get<int>();
  c.n_intent = j.at("n_intent").get<int>();
  c.sr_cells = j.at("sr_cells").get<int>();
  c.gammas = j.at("gammas").get<std::vector<double>>();
  c.param_seed = j.at("param_seed").get<uint64_t>();
}

EpisodeTensors materialize(const EpisodeRecord& record) {
  EpisodeTensors ep;
  for (const TrajRecord& traj : record.past) {
    std::vector<Tensor> xs, as;
    for (const StepRecord& s : traj.steps) {
      xs.push_back(encode_state(traj.n_rooms, s.obs));
      as.push_back(encode_action(s.action));
    }
    ep.past_x.push_back(std::move(xs));
    ep.past_a.push_back(std::move(as));
  }
  for (const StepRecord& s : record.current.steps) {
    ep.cur_x.push_back(encode_state(record.current.n_rooms, s.obs));
    ep.cur_a.push_back(encode_action(s.action));
  }
  ep.query_x = encode_state(record.current.n_rooms, record.query_obs);
  return ep;
}

Net::Net(const ModelConfig& cfg) : cfg_(cfg), params_(cfg.param_seed) {
  if (cfg.beta <= 0.0)
    throw Error(ErrorKind::temperature, "attention temperature must be > 0");
  if (cfg.top_m < 1)
    throw Error(ErrorKind::config, "top_m must be >= 1");
  fwd_lstm_ = make_lstm(params_, "char_fwd", {cfg.state_dim, cfg.action_dim},
                        cfg.hidden);
  bool need_bwd = cfg.kind == ModelKind::tommy &&
                  cfg.value_mode == ValueMode::forward_backward;
  if (need_bwd)
    bwd_lstm_ = make_lstm(params_, "char_bwd", {cfg.state_dim, cfg.action_dim},
                          cfg.hidden);
  mental_lstm_ = make_lstm(
      params_, "mental", {cfg.char_dim, cfg.state_dim, cfg.action_dim},
      cfg.hidden);
  char_mlp_ = make_mlp(params_, "char_mlp", cfg.hidden, cfg.mlp_hidden,
                       cfg.char_dim);
  z_mlp_ = make_mlp(params_, "z_mlp", cfg.state_dim, cfg.mlp_hidden, cfg.z_dim);
  if (cfg.kind == ModelKind::tommy)
    refocus_mlp_ = make_mlp(params_, "refocus", cfg.z_dim + cfg.hidden,
                            cfg.mlp_hidden, 1);
  int pdim = cfg.posterior_dim();
  pref_head_ = make_mlp(params_, "head_pref", pdim, cfg.mlp_hidden, cfg.n_pref);
  intent_head_ =
      make_mlp(params_, "head_intent", pdim, cfg.mlp_hidden, cfg.n_intent);
  action_head_ =
      make_mlp(params_, "head_action", pdim, cfg.mlp_hidden, cfg.action_dim);
  double k1 = 1.0 / std::sqrt(static_cast<double>(pdim));
  double k2 = 1.0 / std::sqrt(static_cast<double>(cfg.mlp_hidden));
  sr_w1_ = params_.create_uniform("sr_trunk.w", {pdim, cfg.mlp_hidden}, -k1, k1);
  sr_b1_ = params_.create_uniform("sr_trunk.b", {cfg.mlp_hidden}, -k1, k1);
  for (size_t g = 0; g < cfg.gammas.size(); ++g) {
    sr_w2_.push_back(params_.create_uniform(
        "sr_out" + std::to_string(g) + ".w", {cfg.mlp_hidden, cfg.sr_cells},
        -k2, k2));
    sr_b2_.push_back(params_.create_uniform(
        "sr_out" + std::to_string(g) + ".b", {cfg.sr_cells}, -k2, k2));
  }
}

PastEncoding Net::encode_past(
    const std::vector<std::vector<Tensor>>& past_x,
    const std::vector<std::vector<Tensor>>& past_a) const {
  if (past_x.empty())
    throw Error(ErrorKind::state, "no past trajectories to encode");
  if (past_x.size() != past_a.size())
    throw Error(ErrorKind::dimension, "past state/action trajectory mismatch");
  PastEncoding enc;
  bool need_bwd = cfg_.kind == ModelKind::tommy &&
                  cfg_.value_mode == ValueMode::forward_backward;
  std::vector<Tensor> char_terms;
  for (size_t j = 0; j < past_x.size(); ++j) {
    const auto& xs = past_x[j];
    const auto& as = past_a[j];
    if (xs.empty() || xs.size() != as.size())
      throw Error(ErrorKind::state, "past trajectory " + std::to_string(j) +
                                        " is empty or inconsistent");
    std::vector<Tensor> fwd;
    LstmState st = lstm_zero_state(cfg_.hidden);
    for (size_t t = 0; t < xs.size(); ++t) {
      st = lstm_step(fwd_lstm_, {xs[t], as[t]}, st);
      fwd.push_back(st.h);
    }
    if (need_bwd) {
      std::vector<Tensor> bwd(xs.size());
      LstmState bst = lstm_zero_state(cfg_.hidden);
      for (size_t t = xs.size(); t-- > 0;) {
        bst = lstm_step(bwd_lstm_, {xs[t], as[t]}, bst);
        bwd[t] = bst.h;
      }
      enc.bwd.push_back(std::move(bwd));
    }
    char_terms.push_back(relu(mlp_apply(char_mlp_, fwd.back())));
    enc.fwd.push_back(std::move(fwd));
  }
  enc.e_char = scale(add_n(char_terms),
                     1.0 / static_cast<double>(char_terms.size()));
  return enc;
}

Memory Net::build_memory(const PastEncoding& enc) const {
  Memory mem;
  bool bi = cfg_.value_mode == ValueMode::forward_backward;
  for (size_t j = 0; j < enc.fwd.size(); ++j)
    for (size_t t = 0; t < enc.fwd[j].size(); ++t) {
      mem.keys.push_back(enc.fwd[j][t]);
      if (bi)
        mem.values.push_back(concat({enc.fwd[j][t], enc.bwd[j][t]}));
      else
        mem.values.push_back(enc.fwd[j][t]);
      mem.slots.push_back({static_cast<int>(j), static_cast<int>(t)});
    }
  return mem;
}

std::vector<Tensor> Net::encode_current(const std::vector<Tensor>& cur_x,
                                        const std::vector<Tensor>& cur_a,
                                        const Tensor& e_char) const {
  if (cur_x.empty())
    throw Error(ErrorKind::state,
                "current trajectory has no completed step before the query");
  if (cur_x.size() != cur_a.size())
    throw Error(ErrorKind::dimension, "current state/action count mismatch");
  std::vector<Tensor> hs;
  LstmState st = lstm_zero_state(cfg_.hidden);
  for (size_t t = 0; t < cur_x.size(); ++t) {
    st = lstm_step(mental_lstm_, {e_char, cur_x[t], cur_a[t]}, st);
    hs.push_back(st.h);
  }
  return hs;
}

Tensor Net::state_embedding(const Tensor& query_x) const {
  return mlp_apply(z_mlp_, query_x);
}

std::vector<int> Net::select_queries(const std::vector<Tensor>& h,
                                     const Tensor& z, int top_m) {
  if (h.empty())
    throw Error(ErrorKind::state, "no hidden states to select queries from");
  if (top_m < 1) throw Error(ErrorKind::config, "top_m must be >= 1");
  std::vector<std::pair<double, int>> ranked;
  for (size_t t = 0; t < h.size(); ++t)
    ranked.emplace_back(cosine_value(z.values(), h[t].values()),
                        static_cast<int>(t));
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;  // ties toward earlier steps
  });
  int n = std::min<int>(top_m, static_cast<int>(ranked.size()));
  std::vector<int> out;
  for (int i = 0; i < n; ++i) out.push_back(ranked[static_cast<size_t>(i)].second);
  return out;
}

std::pair<Tensor, Tensor> Net::memory_read(const Tensor& query,
                                           const Memory& memory) const {
  if (memory.keys.empty())
    throw Error(ErrorKind::state, "memory read from an empty memory");
  std::vector<Tensor> cos;
  cos.reserve(memory.keys.size());
  for (const Tensor& k : memory.keys) cos.push_back(cosine_sim(query, k));
  Tensor attn = softmax_temp(concat(cos), cfg_.beta);
  Tensor vbar = weighted_sum(attn, memory.values);
  return {vbar, attn};
}

Tensor Net::refocus(const Tensor& z, const std::vector<Tensor>& queries) const {
  if (queries.empty())
    throw Error(ErrorKind::state, "refocus needs at least one query");
  std::vector<Tensor> deltas;
  for (const Tensor& q : queries)
    deltas.push_back(mlp_apply(refocus_mlp_, {z, q}));
  return softmax_temp(concat(deltas), cfg_.beta);
}

std::pair<Tensor, Tensor> Net::mental_posterior(
    const std::vector<Tensor>& vbars, const std::vector<Tensor>& queries,
    const Tensor& alpha, const Tensor& h_last, const Tensor& e_char,
    const Tensor& z) const {
  if (vbars.size() != queries.size() ||
      static_cast<int>(vbars.size()) != alpha.size())
    throw Error(ErrorKind::dimension, "mental posterior arity mismatch");
  std::vector<Tensor> events;
  for (size_t m = 0; m < vbars.size(); ++m)
    events.push_back(concat({vbars[m], queries[m]}));
  Tensor e_mental = scale(weighted_sum(alpha, events),
                          1.0 / static_cast<double>(events.size()));
  Tensor e_p = concat({e_mental, h_last, e_char, z});
  return {e_mental, e_p};
}

HeadOutputs Net::predict(const Tensor& e_p) const {
  if (e_p.size() != cfg_.posterior_dim())
    throw Error(ErrorKind::dimension,
                "posterior size " + std::to_string(e_p.size()) +
                    " != expected " + std::to_string(cfg_.posterior_dim()));
  HeadOutputs out;
  out.pref_logits = mlp_apply(pref_head_, e_p);
  out.intent_logits = mlp_apply(intent_head_, e_p);
  out.action_logits = mlp_apply(action_head_, e_p);
  Tensor trunk = relu(affine(sr_w1_, sr_b1_, {e_p}));
  for (size_t g = 0; g < cfg_.gammas.size(); ++g) {
    Tensor logits = affine(sr_w2_[g], sr_b2_[g], {trunk});
    out.sr_dist.push_back(softmax_temp(logits, 1.0));
    out.sr_logits.push_back(std::move(logits));
  }
  return out;
}

ForwardTrace Net::forward(const EpisodeTensors& ep) const {
  ForwardTrace trace;
  PastEncoding enc = encode_past(ep.past_x, ep.past_a);
  trace.e_char = enc.e_char;
  trace.h_cur = encode_current(ep.cur_x, ep.cur_a, enc.e_char);
  trace.z = state_embedding(ep.query_x);
  Tensor h_last = trace.h_cur.back();

  if (cfg_.kind == ModelKind::tomnet) {
    trace.e_p = concat({h_last, enc.e_char, trace.z});
    trace.out = predict(trace.e_p);
    return trace;
  }

  trace.memory = build_memory(enc);
  trace.selected = select_queries(trace.h_cur, trace.z, cfg_.top_m);
  std::vector<Tensor> queries;
  for (int t : trace.selected) {
    queries.push_back(trace.h_cur[static_cast<size_t>(t)]);
    trace.select_cos.push_back(
        cosine_value(trace.z.values(), trace.h_cur[static_cast<size_t>(t)].values()));
  }
  for (const Tensor& q : queries) {
    auto [vbar, attn] = memory_read(q, trace.memory);
    trace.vbar.push_back(vbar);
    trace.attn.push_back(attn);
  }
  trace.alpha = refocus(trace.z, queries);
  auto [e_mental, e_p] = mental_posterior(trace.vbar, queries, trace.alpha,
                                          h_last, enc.e_char, trace.z);
  trace.e_mental = e_mental;
  trace.e_p = e_p;
  trace.out = predict(e_p);
  return trace;
}

void save_model(const Net& net, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create directory: " + dir);
  nlohmann::json j;
  to_json(j, net.config());
  std::ofstream meta(dir + "/model.json");
  if (!meta) throw Error(ErrorKind::io, "cannot write model.json in " + dir);
  meta << j.dump(2) << "\n";
  net.params().save(dir + "/params.bin");
}

Net load_model(const std::string& dir) {
  std::ifstream meta(dir + "/model.json");
  if (!meta)
    throw Error(ErrorKind::io, "cannot open " + dir + "/model.json");
  nlohmann::json j;
  try {
    meta >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, "bad model.json: " + std::string(e.what()));
  }
  ModelConfig cfg;
  from_json(j, cfg);
  Net net(cfg);
  net.params().load(dir + "/params.bin");
  return net;
}

}  // namespace tommy
