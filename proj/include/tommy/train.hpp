#pragma once

#include <deque>
#include <map>
#include <string>
#include <vector>

#include "tommy/log.hpp"
#include "tommy/model.hpp"
#include "tommy/scenario.hpp"

namespace tommy {

struct LossBreakdown {
  double pref = 0, intent = 0, action = 0, sr = 0, total = 0;
};

struct Labels {
  int pref = 0;
  int intent = 0;
  int action = 0;
  const std::vector<SrTarget>* sr = nullptr;
};

// Builds the four loss terms from one forward trace; total is their sum in
// pref, intent, action, sr order. `use` masks components (AEM trains the
// action head on its own balanced stream).
struct LossMask {
  bool pref = true, intent = true, action = true, sr = true;
};

std::pair<Tensor, LossBreakdown> combined_loss(const HeadOutputs& out,
                                               const Labels& labels,
                                               const LossMask& mask = {});

Labels labels_of(const EpisodeRecord& rec);

// Per-action-class FIFO queues; sampling draws classes uniformly among the
// nonempty ones, then uniformly within the class.
class AemBuffer {
 public:
  explicit AemBuffer(int n_classes, int capacity_per_class = 4096);
  void push(int example, int action_class);
  std::vector<int> sample(Rng& rng, int batch_size) const;
  int size(int action_class) const;

 private:
  std::vector<std::deque<int>> queues_;
  int capacity_;
};

struct TrainConfig {
  std::string model = "tommy";  // tommy | bi-tommy | tomnet
  int hidden = 64;
  int char_dim = 32;
  int z_dim = 32;
  int mlp_hidden = 64;
  double beta = 0.1;
  int top_m = 10;

  std::string optimizer = "adam";  // adam | sgd
  double lr = 1e-3;
  double momentum = 0.9;
  double grad_clip = 5.0;
  int batch = 8;
  int epochs = 6;
  bool aem = true;
  int aem_capacity = 4096;
  std::vector<double> gammas{0.5, 0.9, 0.99};
  uint64_t seed = 1;

  std::string resolved() const;
};

// key = value lines, '#' comments; unknown keys are rejected.
TrainConfig parse_train_config(const std::string& text);
TrainConfig load_train_config(const std::string& path);

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(ParameterSet& params) = 0;
};

std::unique_ptr<Optimizer> make_optimizer(const TrainConfig& cfg);

ModelConfig model_config_from(const TrainConfig& cfg);

struct TrainResult {
  std::vector<LossBreakdown> curve;  // per epoch means
  std::string checkpoint_dir;
};

// Seeded, deterministic. Writes <out_dir>/final/{params.bin,model.json},
// <out_dir>/loss.csv and <out_dir>/config.txt when out_dir is nonempty.
TrainResult train(const TrainConfig& cfg, const std::vector<EpisodeRecord>& data,
                  const std::string& out_dir, const Logger& log,
                  Net* prebuilt = nullptr);

}  // namespace tommy
