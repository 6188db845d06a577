#include "tommy/train.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tommy/error.hpp"

namespace tommy {

Labels labels_of(const EpisodeRecord& rec) {
  Labels l;
  l.pref = rec.label_pref;
  l.intent = rec.label_intent;
  l.action = rec.label_action;
  l.sr = &rec.sr;
  return l;
}

std::pair<Tensor, LossBreakdown> combined_loss(const HeadOutputs& out,
                                               const Labels& labels,
                                               const LossMask& mask) {
  if (!labels.sr)
    throw Error(ErrorKind::state, "missing SR labels for combined loss");
  std::vector<Tensor> terms;
  LossBreakdown bd;
  if (mask.pref) {
    Tensor t = nll_loss(out.pref_logits, labels.pref);
    bd.pref = t.item();
    terms.push_back(t);
  }
  if (mask.intent) {
    Tensor t = nll_loss(out.intent_logits, labels.intent);
    bd.intent = t.item();
    terms.push_back(t);
  }
  if (mask.action) {
    Tensor t = nll_loss(out.action_logits, labels.action);
    bd.action = t.item();
    terms.push_back(t);
  }
  if (mask.sr) {
    if (labels.sr->size() != out.sr_logits.size())
      throw Error(ErrorKind::state, "SR label count != SR head count");
    std::vector<Tensor> sr_terms;
    for (size_t g = 0; g < out.sr_logits.size(); ++g)
      sr_terms.push_back(
          cross_entropy_logits(out.sr_logits[g], (*labels.sr)[g].dist));
    Tensor t = add_n(sr_terms);
    bd.sr = t.item();
    terms.push_back(t);
  }
  Tensor total = add_n(terms);
  bd.total = bd.pref + bd.intent + bd.action + bd.sr;
  return {total, bd};
}

AemBuffer::AemBuffer(int n_classes, int capacity_per_class)
    : queues_(static_cast<size_t>(n_classes)), capacity_(capacity_per_class) {
  if (n_classes < 1 || capacity_per_class < 1)
    throw Error(ErrorKind::config, "bad AEM buffer dimensions");
}

void AemBuffer::push(int example, int action_class) {
  if (action_class < 0 || action_class >= static_cast<int>(queues_.size()))
    throw Error(ErrorKind::index, "AEM action class out of range");
  auto& q = queues_[static_cast<size_t>(action_class)];
  q.push_back(example);
  if (static_cast<int>(q.size()) > capacity_) q.pop_front();  // FIFO evict
}

std::vector<int> AemBuffer::sample(Rng& rng, int batch_size) const {
  std::vector<int> nonempty;
  for (size_t c = 0; c < queues_.size(); ++c)
    if (!queues_[c].empty()) nonempty.push_back(static_cast<int>(c));
  if (nonempty.empty())
    throw Error(ErrorKind::state, "AEM sample from an empty buffer");
  std::vector<int> out;
  out.reserve(static_cast<size_t>(batch_size));
  for (int i = 0; i < batch_size; ++i) {
    int c = nonempty[static_cast<size_t>(
        uniform_int(rng, 0, static_cast<int>(nonempty.size()) - 1))];
    const auto& q = queues_[static_cast<size_t>(c)];
    out.push_back(q[static_cast<size_t>(
        uniform_int(rng, 0, static_cast<int>(q.size()) - 1))]);
  }
  return out;
}

int AemBuffer::size(int action_class) const {
  return static_cast<int>(queues_[static_cast<size_t>(action_class)].size());
}

// ---- config ------------------------------------------------------------------

std::string TrainConfig::resolved() const {
  std::ostringstream os;
  os << "model = " << model << "\n";
  os << "hidden = " << hidden << "\n";
  os << "char_dim = " << char_dim << "\n";
  os << "z_dim = " << z_dim << "\n";
  os << "mlp_hidden = " << mlp_hidden << "\n";
  os << "beta = " << beta << "\n";
  os << "top_m = " << top_m << "\n";
  os << "optimizer = " << optimizer << "\n";
  os << "lr = " << lr << "\n";
  os << "momentum = " << momentum << "\n";
  os << "grad_clip = " << grad_clip << "\n";
  os << "batch = " << batch << "\n";
  os << "epochs = " << epochs << "\n";
  os << "aem = " << (aem ? "true" : "false") << "\n";
  os << "aem_capacity = " << aem_capacity << "\n";
  os << "sr_gammas = ";
  for (size_t i = 0; i < gammas.size(); ++i)
    os << (i ? "," : "") << gammas[i];
  os << "\n";
  os << "seed = " << seed << "\n";
  return os.str();
}

namespace {
bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error(ErrorKind::config, "bad boolean for " + key + ": " + v);
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}
}  // namespace

TrainConfig parse_train_config(const std::string& text) {
  TrainConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string stripped = trim(line.substr(0, line.find('#')));
    if (stripped.empty()) continue;
    size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::config, "config line " + std::to_string(line_no) +
                                         ": expected key = value");
    std::string key = trim(stripped.substr(0, eq));
    std::string val = trim(stripped.substr(eq + 1));
    try {
      if (key == "model") cfg.model = val;
      else if (key == "hidden") cfg.hidden = std::stoi(val);
      else if (key == "char_dim") cfg.char_dim = std::stoi(val);
      else if (key == "z_dim") cfg.z_dim = std::stoi(val);
      else if (key == "mlp_hidden") cfg.mlp_hidden = std::stoi(val);
      else if (key == "beta") cfg.beta = std::stod(val);
      else if (key == "top_m") cfg.top_m = std::stoi(val);
      else if (key == "optimizer") cfg.optimizer = val;
      else if (key == "lr") cfg.lr = std::stod(val);
      else if (key == "momentum") cfg.momentum = std::stod(val);
      else if (key == "grad_clip") cfg.grad_clip = std::stod(val);
      else if (key == "batch") cfg.batch = std::stoi(val);
      else if (key == "epochs") cfg.epochs = std::stoi(val);
      else if (key == "aem") cfg.aem = parse_bool(val, key);
      else if (key == "aem_capacity") cfg.aem_capacity = std::stoi(val);
      else if (key == "seed") cfg.seed = std::stoull(val);
      else if (key == "sr_gammas") {
        cfg.gammas.clear();
        std::istringstream vs(val);
        std::string part;
        while (std::getline(vs, part, ',')) cfg.gammas.push_back(std::stod(part));
      } else {
        throw Error(ErrorKind::config, "unknown config key: " + key);
      }
    } catch (const std::invalid_argument&) {
      throw Error(ErrorKind::config, "bad value for " + key + ": " + val);
    }
  }
  if (cfg.model != "tommy" && cfg.model != "bi-tommy" && cfg.model != "tomnet")
    throw Error(ErrorKind::config, "unknown model: " + cfg.model);
  if (cfg.optimizer != "adam" && cfg.optimizer != "sgd")
    throw Error(ErrorKind::config, "unknown optimizer: " + cfg.optimizer);
  if (cfg.lr <= 0 || cfg.batch < 1 || cfg.epochs < 1)
    throw Error(ErrorKind::config, "lr, batch and epochs must be positive");
  for (double g : cfg.gammas)
    if (!(g > 0.0 && g < 1.0))
      throw Error(ErrorKind::config, "sr_gammas must lie in (0,1)");
  return cfg;
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_train_config(ss.str());
}

ModelConfig model_config_from(const TrainConfig& cfg) {
  ModelConfig m;
  m.kind = cfg.model == "tomnet" ? ModelKind::tomnet : ModelKind::tommy;
  m.value_mode = cfg.model == "bi-tommy" ? ValueMode::forward_backward
                                         : ValueMode::forward;
  m.hidden = cfg.hidden;
  m.char_dim = cfg.char_dim;
  m.z_dim = cfg.z_dim;
  m.mlp_hidden = cfg.mlp_hidden;
  m.beta = cfg.beta;
  m.top_m = cfg.top_m;
  m.gammas = cfg.gammas;
  m.param_seed = mix_seed(cfg.seed, 0x6d6f64);
  return m;
}

// ---- optimizers ----------------------------------------------------------------

namespace {

class SgdMomentum : public Optimizer {
 public:
  SgdMomentum(double lr, double momentum) : lr_(lr), mu_(momentum) {}
  void step(ParameterSet& params) override {
    for (const auto& [name, t] : params) {
      auto& vel = state_[name];
      vel.resize(t.values().size(), 0.0);
      Tensor& tt = const_cast<Tensor&>(t);
      const auto& g = tt.grad();
      auto& v = tt.values();
      for (size_t i = 0; i < v.size(); ++i) {
        vel[i] = mu_ * vel[i] + g[i];
        v[i] -= lr_ * vel[i];
      }
    }
  }

 private:
  double lr_, mu_;
  std::map<std::string, std::vector<double>> state_;
};

class Adam : public Optimizer {
 public:
  explicit Adam(double lr) : lr_(lr) {}
  void step(ParameterSet& params) override {
    ++t_;
    double bc1 = 1.0 - std::pow(b1_, t_);
    double bc2 = 1.0 - std::pow(b2_, t_);
    for (const auto& [name, t] : params) {
      auto& st = state_[name];
      st.m.resize(t.values().size(), 0.0);
      st.v.resize(t.values().size(), 0.0);
      Tensor& tt = const_cast<Tensor&>(t);
      const auto& g = tt.grad();
      auto& val = tt.values();
      for (size_t i = 0; i < val.size(); ++i) {
        st.m[i] = b1_ * st.m[i] + (1 - b1_) * g[i];
        st.v[i] = b2_ * st.v[i] + (1 - b2_) * g[i] * g[i];
        double mh = st.m[i] / bc1;
        double vh = st.v[i] / bc2;
        val[i] -= lr_ * mh / (std::sqrt(vh) + eps_);
      }
    }
  }

 private:
  struct State {
    std::vector<double> m, v;
  };
  double lr_;
  double b1_ = 0.9, b2_ = 0.999, eps_ = 1e-8;
  int t_ = 0;
  std::map<std::string, State> state_;
};

}  // namespace

std::unique_ptr<Optimizer> make_optimizer(const TrainConfig& cfg) {
  if (cfg.optimizer == "sgd")
    return std::make_unique<SgdMomentum>(cfg.lr, cfg.momentum);
  return std::make_unique<Adam>(cfg.lr);
}

// ---- training loop -------------------------------------------------------------

namespace {

void check_finite(double v, int epoch, int batch, const char* component) {
  if (!std::isfinite(v))
    throw Error(ErrorKind::numeric,
                std::string("non-finite ") + component + " loss at epoch " +
                    std::to_string(epoch) + ", batch " + std::to_string(batch));
}

void backprop_example(const Net& net, const EpisodeRecord& rec,
                      const LossMask& mask, double scale_factor,
                      LossBreakdown* bd_out, int epoch, int batch_idx) {
  EpisodeTensors ep = materialize(rec);
  Tape tape;
  Tape::Scope scope(tape);
  ForwardTrace trace = net.forward(ep);
  auto [loss, bd] = combined_loss(trace.out, labels_of(rec), mask);
  check_finite(bd.total, epoch, batch_idx, "total");
  check_finite(bd.pref, epoch, batch_idx, "pref");
  check_finite(bd.intent, epoch, batch_idx, "intent");
  check_finite(bd.action, epoch, batch_idx, "action");
  check_finite(bd.sr, epoch, batch_idx, "sr");
  Tensor scaled = scale(loss, scale_factor);
  tape.backward(scaled);
  if (bd_out) *bd_out = bd;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const std::vector<EpisodeRecord>& data,
                  const std::string& out_dir, const Logger& log, Net* prebuilt) {
  if (data.empty()) throw Error(ErrorKind::config, "training dataset is empty");

  Net local_net(model_config_from(cfg));
  Net& net = prebuilt ? *prebuilt : local_net;

  Rng rng(mix_seed(cfg.seed, 0x747261696e));
  AemBuffer aem(env::kNumActions, cfg.aem_capacity);
  for (size_t i = 0; i < data.size(); ++i)
    aem.push(static_cast<int>(i), data[i].label_action);

  auto optimizer = make_optimizer(cfg);
  std::vector<int> order(data.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  TrainResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    LossBreakdown epoch_mean;
    int n_batches = 0;
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(cfg.batch)) {
      size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch));
      int bsz = static_cast<int>(end - start);
      net.params().zero_grads();

      LossMask stream_mask;
      stream_mask.action = !cfg.aem;  // balanced stream owns the action head
      LossBreakdown batch_mean;
      for (size_t i = start; i < end; ++i) {
        LossBreakdown bd;
        backprop_example(net, data[static_cast<size_t>(order[i])], stream_mask,
                         1.0 / bsz, &bd, epoch, n_batches);
        batch_mean.pref += bd.pref / bsz;
        batch_mean.intent += bd.intent / bsz;
        batch_mean.sr += bd.sr / bsz;
        if (!cfg.aem) batch_mean.action += bd.action / bsz;
      }
      if (cfg.aem) {
        LossMask aem_mask{false, false, true, false};
        std::vector<int> picks = aem.sample(rng, bsz);
        for (int idx : picks) {
          LossBreakdown bd;
          backprop_example(net, data[static_cast<size_t>(idx)], aem_mask,
                           1.0 / bsz, &bd, epoch, n_batches);
          batch_mean.action += bd.action / bsz;
        }
      }
      batch_mean.total = batch_mean.pref + batch_mean.intent +
                         batch_mean.action + batch_mean.sr;

      if (cfg.grad_clip > 0) {
        double norm = net.params().grad_norm();
        if (norm > cfg.grad_clip)
          net.params().scale_grads(cfg.grad_clip / norm);
      }
      optimizer->step(net.params());

      epoch_mean.pref += batch_mean.pref;
      epoch_mean.intent += batch_mean.intent;
      epoch_mean.action += batch_mean.action;
      epoch_mean.sr += batch_mean.sr;
      ++n_batches;
    }
    epoch_mean.pref /= n_batches;
    epoch_mean.intent /= n_batches;
    epoch_mean.action /= n_batches;
    epoch_mean.sr /= n_batches;
    epoch_mean.total =
        epoch_mean.pref + epoch_mean.intent + epoch_mean.action + epoch_mean.sr;
    result.curve.push_back(epoch_mean);
    log.info("epoch=%d pref=%.4f intent=%.4f action=%.4f sr=%.4f total=%.4f",
             epoch, epoch_mean.pref, epoch_mean.intent, epoch_mean.action,
             epoch_mean.sr, epoch_mean.total);
  }

  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorKind::io, "cannot create run directory: " + out_dir);
    result.checkpoint_dir = out_dir + "/final";
    save_model(net, result.checkpoint_dir);
    std::ofstream csv(out_dir + "/loss.csv");
    if (!csv) throw Error(ErrorKind::io, "cannot write loss.csv in " + out_dir);
    csv << "epoch,pref,intent,action,sr,total\n";
    for (size_t e = 0; e < result.curve.size(); ++e) {
      const LossBreakdown& b = result.curve[e];
      csv << e << "," << b.pref << "," << b.intent << "," << b.action << ","
          << b.sr << "," << b.total << "\n";
    }
    std::ofstream conf(out_dir + "/config.txt");
    conf << cfg.resolved();
  }
  return result;
}

}  // namespace tommy
