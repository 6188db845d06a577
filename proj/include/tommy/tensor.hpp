#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "tommy/error.hpp"

namespace tommy {

using Shape = std::vector<int>;

int shape_size(const Shape& s);
std::string shape_str(const Shape& s);

struct TensorImpl {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated iff requires_grad
  bool requires_grad = false;
};

// Shared-storage handle over a dense row-major double buffer. Copies alias.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  int size() const { return static_cast<int>(impl_->value.size()); }
  int dim(int i) const { return impl_->shape[static_cast<size_t>(i)]; }
  int rank() const { return static_cast<int>(impl_->shape.size()); }

  bool requires_grad() const { return impl_ && impl_->requires_grad; }
  void set_requires_grad(bool rg);

  const std::vector<double>& values() const { return impl_->value; }
  std::vector<double>& values() { return impl_->value; }
  const std::vector<double>& grad() const;
  std::vector<double>& grad();
  void zero_grad();

  double item() const;         // scalar tensors only
  double at(int i) const { return impl_->value[static_cast<size_t>(i)]; }

  TensorImpl* raw() const { return impl_.get(); }

 private:
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<TensorImpl> impl_;
};

// Ordered record of executed ops. backward() replays it in exact reverse
// execution order, accumulating into .grad of every requires_grad tensor.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  class Scope {
   public:
    explicit Scope(Tape& t);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Tape* prev_;
  };

  static Tape* active();

  void record(std::function<void()> backward_fn) {
    nodes_.push_back(std::move(backward_fn));
  }
  void backward(const Tensor& loss);
  size_t size() const { return nodes_.size(); }

 private:
  std::vector<std::function<void()>> nodes_;
};

// ---- ops ------------------------------------------------------------------

// {m,k} x {k,n} -> {m,n}, or {m,k} x {k} -> {m}.
Tensor matmul(const Tensor& a, const Tensor& b);

// b + sum_i W[rows of segment i] . x_i, with W stored {in_total, out} so a
// segment's rows are contiguous. Gradients are skipped for constant segments
// and zero input entries are skipped, which is what makes sparse grid
// encodings cheap.
Tensor affine(const Tensor& w, const Tensor& b,
              const std::vector<Tensor>& inputs);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor add_n(const std::vector<Tensor>& xs);
Tensor concat(const std::vector<Tensor>& xs);        // 1-D
Tensor slice(const Tensor& a, int start, int len);   // 1-D
Tensor sum(const Tensor& a);
Tensor dot(const Tensor& a, const Tensor& b);

Tensor sigmoid(const Tensor& a);
Tensor tanh_t(const Tensor& a);
Tensor relu(const Tensor& a);

// out_i = exp(x_i/beta) / sum_j exp(x_j/beta), max-subtracted.
Tensor softmax_temp(const Tensor& x, double beta);

// a.b / (|a||b| + 1e-12); returns a scalar tensor. Zero vectors give 0.
Tensor cosine_sim(const Tensor& a, const Tensor& b);

// -log softmax(logits)[target]
Tensor nll_loss(const Tensor& logits, int target);

// sum_i t_i (logsumexp(x) - x_i) for a fixed target distribution t.
Tensor cross_entropy_logits(const Tensor& logits,
                            const std::vector<double>& target);

// sum_i w_i * items_i for same-shape items; w is {n}.
Tensor weighted_sum(const Tensor& w, const std::vector<Tensor>& items);

double cosine_value(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace tommy
