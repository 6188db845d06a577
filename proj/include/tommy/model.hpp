#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "tommy/nn.hpp"
#include "tommy/params.hpp"
#include "tommy/scenario.hpp"
#include "tommy/tensor.hpp"

namespace tommy {

enum class ValueMode : int { forward = 0, forward_backward = 1 };
enum class ModelKind : int { tommy = 0, tomnet = 1 };

struct ModelConfig {
  ModelKind kind = ModelKind::tommy;
  ValueMode value_mode = ValueMode::forward;
  int state_dim = kStateDim;
  int action_dim = env::kNumActions;
  int hidden = 64;
  int char_dim = 32;
  int z_dim = 32;
  int mlp_hidden = 64;
  double beta = 0.1;
  int top_m = 10;
  int n_pref = env::kNumColors;
  int n_intent = 3;
  int sr_cells = kCells;
  std::vector<double> gammas{0.5, 0.9, 0.99};
  uint64_t param_seed = 1;

  int value_dim() const {
    return value_mode == ValueMode::forward ? hidden : 2 * hidden;
  }
  int mental_dim() const { return value_dim() + hidden; }
  int posterior_dim() const {
    int base = hidden + char_dim + z_dim;
    return kind == ModelKind::tommy ? mental_dim() + base : base;
  }
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

// Constant input tensors for one episode record.
struct EpisodeTensors {
  std::vector<std::vector<Tensor>> past_x;  // [traj][step] state encodings
  std::vector<std::vector<Tensor>> past_a;  // [traj][step] one-hot actions
  std::vector<Tensor> cur_x, cur_a;         // completed current steps
  Tensor query_x;                           // state at the query time
};

EpisodeTensors materialize(const EpisodeRecord& record);

struct MemorySlot {
  int traj = 0;
  int t = 0;
};

struct PastEncoding {
  std::vector<std::vector<Tensor>> fwd;  // per traj, per step
  std::vector<std::vector<Tensor>> bwd;
  Tensor e_char;
};

struct Memory {
  std::vector<Tensor> keys;
  std::vector<Tensor> values;
  std::vector<MemorySlot> slots;
};

struct HeadOutputs {
  Tensor pref_logits;
  Tensor intent_logits;
  Tensor action_logits;
  std::vector<Tensor> sr_logits;  // per gamma
  std::vector<Tensor> sr_dist;    // softmax of the above
};

struct ForwardTrace {
  Tensor e_char;
  Memory memory;
  std::vector<Tensor> h_cur;        // h_q^t for each completed step
  Tensor z;                         // current-state embedding
  std::vector<int> selected;        // query step indices, selection order
  std::vector<double> select_cos;   // cosine(z, h_t) of the selected steps
  std::vector<Tensor> attn;         // per query: weights over memory slots
  std::vector<Tensor> vbar;         // per query: retrieved value
  Tensor alpha;                     // re-focus weights over queries
  Tensor e_mental;
  Tensor e_p;
  HeadOutputs out;
};

class Net {
 public:
  explicit Net(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

  ForwardTrace forward(const EpisodeTensors& ep) const;

  // the pipeline pieces, exposed so each contract is testable on its own
  PastEncoding encode_past(const std::vector<std::vector<Tensor>>& past_x,
                           const std::vector<std::vector<Tensor>>& past_a) const;
  Memory build_memory(const PastEncoding& enc) const;
  std::vector<Tensor> encode_current(const std::vector<Tensor>& cur_x,
                                     const std::vector<Tensor>& cur_a,
                                     const Tensor& e_char) const;
  Tensor state_embedding(const Tensor& query_x) const;
  static std::vector<int> select_queries(const std::vector<Tensor>& h,
                                         const Tensor& z, int top_m);
  std::pair<Tensor, Tensor> memory_read(const Tensor& query,
                                        const Memory& memory) const;
  Tensor refocus(const Tensor& z, const std::vector<Tensor>& queries) const;
  std::pair<Tensor, Tensor> mental_posterior(
      const std::vector<Tensor>& vbars, const std::vector<Tensor>& queries,
      const Tensor& alpha, const Tensor& h_last, const Tensor& e_char,
      const Tensor& z) const;
  HeadOutputs predict(const Tensor& e_p) const;

 private:
  ModelConfig cfg_;
  ParameterSet params_;
  LstmCell fwd_lstm_, bwd_lstm_, mental_lstm_;
  Mlp char_mlp_, z_mlp_, refocus_mlp_;
  Mlp pref_head_, intent_head_, action_head_;
  Tensor sr_w1_, sr_b1_;            // shared SR trunk
  std::vector<Tensor> sr_w2_, sr_b2_;  // per-gamma output layers
};

// Checkpoint directory layout: params.bin + model.json.
void save_model(const Net& net, const std::string& dir);
Net load_model(const std::string& dir);

}  // namespace tommy
