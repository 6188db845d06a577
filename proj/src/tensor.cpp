#include "tommy/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tommy {

namespace {

thread_local Tape* g_active_tape = nullptr;

void check(bool ok, ErrorKind kind, const std::string& msg) {
  if (!ok) throw Error(kind, msg);
}

bool grads_wanted(std::initializer_list<const Tensor*> inputs) {
  if (!g_active_tape) return false;
  for (const Tensor* t : inputs)
    if (t->defined() && t->requires_grad()) return true;
  return false;
}

bool grads_wanted(const std::vector<Tensor>& inputs) {
  if (!g_active_tape) return false;
  for (const Tensor& t : inputs)
    if (t.defined() && t.requires_grad()) return true;
  return false;
}

}  // namespace

int shape_size(const Shape& s) {
  int n = 1;
  for (int d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << "]";
  return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  for (int d : shape)
    check(d > 0, ErrorKind::dimension,
          "tensor dims must be positive, got " + shape_str(shape));
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->value.assign(static_cast<size_t>(shape_size(impl->shape)), 0.0);
  impl->requires_grad = requires_grad;
  if (requires_grad) impl->grad.assign(impl->value.size(), 0.0);
  return Tensor(std::move(impl));
}

Tensor Tensor::from(Shape shape, std::vector<double> values,
                    bool requires_grad) {
  check(static_cast<int>(values.size()) == shape_size(shape),
        ErrorKind::dimension,
        "value count does not match shape " + shape_str(shape));
  Tensor t = zeros(std::move(shape), requires_grad);
  t.impl_->value = std::move(values);
  return t;
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return from({1}, {v}, requires_grad);
}

void Tensor::set_requires_grad(bool rg) {
  impl_->requires_grad = rg;
  if (rg)
    impl_->grad.assign(impl_->value.size(), 0.0);
  else
    impl_->grad.clear();
}

const std::vector<double>& Tensor::grad() const {
  check(requires_grad(), ErrorKind::state, "grad on non-grad tensor");
  return impl_->grad;
}

std::vector<double>& Tensor::grad() {
  check(requires_grad(), ErrorKind::state, "grad on non-grad tensor");
  return impl_->grad;
}

void Tensor::zero_grad() {
  if (requires_grad()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

double Tensor::item() const {
  check(size() == 1, ErrorKind::dimension,
        "item() on non-scalar tensor " + shape_str(shape()));
  return impl_->value[0];
}

Tape::Scope::Scope(Tape& t) : prev_(g_active_tape) { g_active_tape = &t; }
Tape::Scope::~Scope() { g_active_tape = prev_; }
Tape* Tape::active() { return g_active_tape; }

void Tape::backward(const Tensor& loss) {
  check(loss.defined() && loss.size() == 1, ErrorKind::dimension,
        "backward requires a scalar loss, got " +
            (loss.defined() ? shape_str(loss.shape()) : std::string("null")));
  check(loss.requires_grad(), ErrorKind::state,
        "loss is not connected to the tape");
  Tensor seed = loss;  // handles share storage
  seed.grad()[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
}

// ---- op helpers -------------------------------------------------------------

namespace {

Tensor make_output(Shape shape, bool rg) {
  Tensor out = Tensor::zeros(std::move(shape), false);
  if (rg) out.set_requires_grad(true);
  return out;
}

using Fn1 = double (*)(double);

Tensor unary_op(const Tensor& a, std::vector<double> out_vals,
                std::function<void(const std::vector<double>&,
                                   std::vector<double>&)> accum_da) {
  bool rg = grads_wanted({&a});
  Tensor out = make_output(a.shape(), rg);
  out.values() = std::move(out_vals);
  if (rg) {
    Tensor ac = a, oc = out;
    Tape::active()->record([ac, oc, accum_da]() mutable {
      if (ac.requires_grad()) accum_da(oc.grad(), ac.grad());
    });
  }
  return out;
}

}  // namespace

// ---- matmul ----------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  check(a.rank() == 2, ErrorKind::dimension,
        "matmul lhs must be rank 2, got " + shape_str(a.shape()));
  check(b.rank() == 2 || b.rank() == 1, ErrorKind::dimension,
        "matmul rhs must be rank 1 or 2, got " + shape_str(b.shape()));
  int m = a.dim(0), k = a.dim(1);
  bool vec = b.rank() == 1;
  int kb = b.dim(0);
  int n = vec ? 1 : b.dim(1);
  check(k == kb, ErrorKind::dimension,
        "matmul inner dimension mismatch: " + shape_str(a.shape()) + " x " +
            shape_str(b.shape()));

  bool rg = grads_wanted({&a, &b});
  Tensor out = make_output(vec ? Shape{m} : Shape{m, n}, rg);
  const auto& av = a.values();
  const auto& bv = b.values();
  auto& ov = out.values();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int t = 0; t < k; ++t) acc += av[i * k + t] * bv[t * n + j];
      ov[i * n + j] = acc;
    }

  if (rg) {
    Tensor ac = a, bc = b, oc = out;
    Tape::active()->record([ac, bc, oc, m, n, k]() mutable {
      const auto& g = oc.grad();
      if (ac.requires_grad()) {
        auto& da = ac.grad();
        const auto& bv = bc.values();
        for (int i = 0; i < m; ++i)
          for (int t = 0; t < k; ++t) {
            double acc = 0.0;
            for (int j = 0; j < n; ++j) acc += g[i * n + j] * bv[t * n + j];
            da[i * k + t] += acc;
          }
      }
      if (bc.requires_grad()) {
        auto& db = bc.grad();
        const auto& av = ac.values();
        for (int t = 0; t < k; ++t)
          for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int i = 0; i < m; ++i) acc += av[i * k + t] * g[i * n + j];
            db[t * n + j] += acc;
          }
      }
    });
  }
  return out;
}

// ---- affine ------------------------------------------------------------------

Tensor affine(const Tensor& w, const Tensor& b,
              const std::vector<Tensor>& inputs) {
  check(w.rank() == 2, ErrorKind::dimension, "affine weight must be rank 2");
  int in_total = w.dim(0), out_dim = w.dim(1);
  check(b.defined() && b.rank() == 1 && b.dim(0) == out_dim,
        ErrorKind::dimension, "affine bias shape mismatch");
  int got = 0;
  for (const Tensor& x : inputs) {
    check(x.rank() == 1, ErrorKind::dimension, "affine inputs must be rank 1");
    got += x.dim(0);
  }
  check(got == in_total, ErrorKind::dimension,
        "affine input rows " + std::to_string(got) + " != weight rows " +
            std::to_string(in_total));

  bool rg = g_active_tape &&
            (w.requires_grad() || b.requires_grad() || grads_wanted(inputs));
  Tensor out = make_output({out_dim}, rg);
  auto& ov = out.values();
  ov = b.values();
  const auto& wv = w.values();
  int row = 0;
  for (const Tensor& x : inputs) {
    const auto& xv = x.values();
    for (int j = 0; j < x.dim(0); ++j, ++row) {
      double xj = xv[static_cast<size_t>(j)];
      if (xj == 0.0) continue;
      const double* wrow = wv.data() + static_cast<size_t>(row) * out_dim;
      for (int o = 0; o < out_dim; ++o) ov[static_cast<size_t>(o)] += xj * wrow[o];
    }
  }

  if (rg) {
    Tensor wc = w, bc = b, oc = out;
    std::vector<Tensor> xs = inputs;
    Tape::active()->record([wc, bc, oc, xs, out_dim]() mutable {
      const auto& g = oc.grad();
      if (bc.requires_grad()) {
        auto& db = bc.grad();
        for (int o = 0; o < out_dim; ++o) db[static_cast<size_t>(o)] += g[static_cast<size_t>(o)];
      }
      int row = 0;
      const auto& wv = wc.values();
      for (Tensor& x : xs) {
        const auto& xv = x.values();
        int n = x.dim(0);
        if (wc.requires_grad()) {
          auto& dw = wc.grad();
          for (int j = 0; j < n; ++j) {
            double xj = xv[static_cast<size_t>(j)];
            if (xj == 0.0) continue;
            double* drow = dw.data() + static_cast<size_t>(row + j) * out_dim;
            for (int o = 0; o < out_dim; ++o) drow[o] += xj * g[static_cast<size_t>(o)];
          }
        }
        if (x.requires_grad()) {
          auto& dx = x.grad();
          for (int j = 0; j < n; ++j) {
            const double* wrow = wv.data() + static_cast<size_t>(row + j) * out_dim;
            double acc = 0.0;
            for (int o = 0; o < out_dim; ++o) acc += wrow[o] * g[static_cast<size_t>(o)];
            dx[static_cast<size_t>(j)] += acc;
          }
        }
        row += n;
      }
    });
  }
  return out;
}

// ---- elementwise -------------------------------------------------------------

namespace {
void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  check(a.shape() == b.shape(), ErrorKind::dimension,
        std::string(op) + " shape mismatch: " + shape_str(a.shape()) + " vs " +
            shape_str(b.shape()));
}
}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape("add", a, b);
  bool rg = grads_wanted({&a, &b});
  Tensor out = make_output(a.shape(), rg);
  auto& ov = out.values();
  for (int i = 0; i < a.size(); ++i) ov[i] = a.at(i) + b.at(i);
  if (rg) {
    Tensor ac = a, bc = b, oc = out;
    Tape::active()->record([ac, bc, oc]() mutable {
      const auto& g = oc.grad();
      if (ac.requires_grad()) {
        auto& da = ac.grad();
        for (size_t i = 0; i < g.size(); ++i) da[i] += g[i];
      }
      if (bc.requires_grad()) {
        auto& db = bc.grad();
        for (size_t i = 0; i < g.size(); ++i) db[i] += g[i];
      }
    });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape("sub", a, b);
  bool rg = grads_wanted({&a, &b});
  Tensor out = make_output(a.shape(), rg);
  auto& ov = out.values();
  for (int i = 0; i < a.size(); ++i) ov[i] = a.at(i) - b.at(i);
  if (rg) {
    Tensor ac = a, bc = b, oc = out;
    Tape::active()->record([ac, bc, oc]() mutable {
      const auto& g = oc.grad();
      if (ac.requires_grad()) {
        auto& da = ac.grad();
        for (size_t i = 0; i < g.size(); ++i) da[i] += g[i];
      }
      if (bc.requires_grad()) {
        auto& db = bc.grad();
        for (size_t i = 0; i < g.size(); ++i) db[i] -= g[i];
      }
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape("mul", a, b);
  bool rg = grads_wanted({&a, &b});
  Tensor out = make_output(a.shape(), rg);
  auto& ov = out.values();
  for (int i = 0; i < a.size(); ++i) ov[i] = a.at(i) * b.at(i);
  if (rg) {
    Tensor ac = a, bc = b, oc = out;
    Tape::active()->record([ac, bc, oc]() mutable {
      const auto& g = oc.grad();
      if (ac.requires_grad()) {
        auto& da = ac.grad();
        const auto& bv = bc.values();
        for (size_t i = 0; i < g.size(); ++i) da[i] += g[i] * bv[i];
      }
      if (bc.requires_grad()) {
        auto& db = bc.grad();
        const auto& av = ac.values();
        for (size_t i = 0; i < g.size(); ++i) db[i] += g[i] * av[i];
      }
    });
  }
  return out;
}

Tensor scale(const Tensor& a, double c) {
  bool rg = grads_wanted({&a});
  Tensor out = make_output(a.shape(), rg);
  auto& ov = out.values();
  for (int i = 0; i < a.size(); ++i) ov[i] = a.at(i) * c;
  if (rg) {
    Tensor ac = a, oc = out;
    Tape::active()->record([ac, oc, c]() mutable {
      if (!ac.requires_grad()) return;
      const auto& g = oc.grad();
      auto& da = ac.grad();
      for (size_t i = 0; i < g.size(); ++i) da[i] += g[i] * c;
    });
  }
  return out;
}

Tensor add_n(const std::vector<Tensor>& xs) {
  check(!xs.empty(), ErrorKind::dimension, "add_n of empty list");
  for (const Tensor& x : xs) check_same_shape("add_n", xs[0], x);
  bool rg = grads_wanted(xs);
  Tensor out = make_output(xs[0].shape(), rg);
  auto& ov = out.values();
  for (const Tensor& x : xs)
    for (int i = 0; i < x.size(); ++i) ov[i] += x.at(i);
  if (rg) {
    std::vector<Tensor> xc = xs;
    Tensor oc = out;
    Tape::active()->record([xc, oc]() mutable {
      const auto& g = oc.grad();
      for (Tensor& x : xc) {
        if (!x.requires_grad()) continue;
        auto& dx = x.grad();
        for (size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
      }
    });
  }
  return out;
}

Tensor concat(const std::vector<Tensor>& xs) {
  check(!xs.empty(), ErrorKind::dimension, "concat of empty list");
  int n = 0;
  for (const Tensor& x : xs) {
    check(x.rank() == 1, ErrorKind::dimension, "concat expects rank-1 tensors");
    n += x.dim(0);
  }
  bool rg = grads_wanted(xs);
  Tensor out = make_output({n}, rg);
  auto& ov = out.values();
  int off = 0;
  for (const Tensor& x : xs) {
    const auto& xv = x.values();
    std::copy(xv.begin(), xv.end(), ov.begin() + off);
    off += x.dim(0);
  }
  if (rg) {
    std::vector<Tensor> xc = xs;
    Tensor oc = out;
    Tape::active()->record([xc, oc]() mutable {
      const auto& g = oc.grad();
      int off = 0;
      for (Tensor& x : xc) {
        int len = x.dim(0);
        if (x.requires_grad()) {
          auto& dx = x.grad();
          for (int i = 0; i < len; ++i) dx[i] += g[off + i];
        }
        off += len;
      }
    });
  }
  return out;
}

Tensor slice(const Tensor& a, int start, int len) {
  check(a.rank() == 1, ErrorKind::dimension, "slice expects rank-1 tensor");
  check(start >= 0 && len > 0 && start + len <= a.dim(0), ErrorKind::index,
        "slice [" + std::to_string(start) + "," + std::to_string(start + len) +
            ") out of range for " + shape_str(a.shape()));
  bool rg = grads_wanted({&a});
  Tensor out = make_output({len}, rg);
  auto& ov = out.values();
  const auto& av = a.values();
  std::copy(av.begin() + start, av.begin() + start + len, ov.begin());
  if (rg) {
    Tensor ac = a, oc = out;
    Tape::active()->record([ac, oc, start, len]() mutable {
      if (!ac.requires_grad()) return;
      const auto& g = oc.grad();
      auto& da = ac.grad();
      for (int i = 0; i < len; ++i) da[start + i] += g[i];
    });
  }
  return out;
}

Tensor sum(const Tensor& a) {
  bool rg = grads_wanted({&a});
  Tensor out = make_output({1}, rg);
  double acc = 0.0;
  for (int i = 0; i < a.size(); ++i) acc += a.at(i);
  out.values()[0] = acc;
  if (rg) {
    Tensor ac = a, oc = out;
    Tape::active()->record([ac, oc]() mutable {
      if (!ac.requires_grad()) return;
      double g = oc.grad()[0];
      auto& da = ac.grad();
      for (size_t i = 0; i < da.size(); ++i) da[i] += g;
    });
  }
  return out;
}

Tensor dot(const Tensor& a, const Tensor& b) {
  check_same_shape("dot", a, b);
  bool rg = grads_wanted({&a, &b});
  Tensor out = make_output({1}, rg);
  double acc = 0.0;
  for (int i = 0; i < a.size(); ++i) acc += a.at(i) * b.at(i);
  out.values()[0] = acc;
  if (rg) {
    Tensor ac = a, bc = b, oc = out;
    Tape::active()->record([ac, bc, oc]() mutable {
      double g = oc.grad()[0];
      if (ac.requires_grad()) {
        auto& da = ac.grad();
        const auto& bv = bc.values();
        for (size_t i = 0; i < da.size(); ++i) da[i] += g * bv[i];
      }
      if (bc.requires_grad()) {
        auto& db = bc.grad();
        const auto& av = ac.values();
        for (size_t i = 0; i < db.size(); ++i) db[i] += g * av[i];
      }
    });
  }
  return out;
}

Tensor sigmoid(const Tensor& a) {
  std::vector<double> out(a.values().size());
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = 1.0 / (1.0 + std::exp(-a.values()[i]));
  std::vector<double> saved = out;
  return unary_op(a, std::move(out),
                  [saved](const std::vector<double>& g, std::vector<double>& da) {
                    for (size_t i = 0; i < g.size(); ++i)
                      da[i] += g[i] * saved[i] * (1.0 - saved[i]);
                  });
}

Tensor tanh_t(const Tensor& a) {
  std::vector<double> out(a.values().size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(a.values()[i]);
  std::vector<double> saved = out;
  return unary_op(a, std::move(out),
                  [saved](const std::vector<double>& g, std::vector<double>& da) {
                    for (size_t i = 0; i < g.size(); ++i)
                      da[i] += g[i] * (1.0 - saved[i] * saved[i]);
                  });
}

Tensor relu(const Tensor& a) {
  std::vector<double> out(a.values().size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0, a.values()[i]);
  std::vector<double> saved = a.values();
  return unary_op(a, std::move(out),
                  [saved](const std::vector<double>& g, std::vector<double>& da) {
                    for (size_t i = 0; i < g.size(); ++i)
                      if (saved[i] > 0.0) da[i] += g[i];
                  });
}

// ---- softmax / losses --------------------------------------------------------

Tensor softmax_temp(const Tensor& x, double beta) {
  check(beta > 0.0, ErrorKind::temperature,
        "softmax temperature must be positive, got " + std::to_string(beta));
  check(x.rank() == 1 && x.dim(0) >= 1, ErrorKind::dimension,
        "softmax expects a nonempty vector");
  int n = x.dim(0);
  bool rg = grads_wanted({&x});
  Tensor out = make_output({n}, rg);
  const auto& xv = x.values();
  auto& ov = out.values();
  double mx = xv[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, xv[i]);
  double z = 0.0;
  for (int i = 0; i < n; ++i) {
    ov[i] = std::exp((xv[i] - mx) / beta);
    z += ov[i];
  }
  for (int i = 0; i < n; ++i) ov[i] /= z;
  if (rg) {
    Tensor xc = x, oc = out;
    Tape::active()->record([xc, oc, beta, n]() mutable {
      if (!xc.requires_grad()) return;
      const auto& g = oc.grad();
      const auto& y = oc.values();
      auto& dx = xc.grad();
      double gy = 0.0;
      for (int i = 0; i < n; ++i) gy += g[i] * y[i];
      for (int i = 0; i < n; ++i) dx[i] += y[i] * (g[i] - gy) / beta;
    });
  }
  return out;
}

double cosine_value(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / (std::sqrt(aa) * std::sqrt(bb) + 1e-12);
}

Tensor cosine_sim(const Tensor& a, const Tensor& b) {
  check(a.rank() == 1 && b.rank() == 1 && a.dim(0) == b.dim(0),
        ErrorKind::dimension,
        "cosine length mismatch: " + shape_str(a.shape()) + " vs " +
            shape_str(b.shape()));
  bool rg = grads_wanted({&a, &b});
  Tensor out = make_output({1}, rg);
  out.values()[0] = cosine_value(a.values(), b.values());
  if (rg) {
    Tensor ac = a, bc = b, oc = out;
    Tape::active()->record([ac, bc, oc]() mutable {
      double g = oc.grad()[0];
      double cos = oc.values()[0];
      const auto& av = ac.values();
      const auto& bv = bc.values();
      double aa = 0.0, bb = 0.0;
      for (size_t i = 0; i < av.size(); ++i) {
        aa += av[i] * av[i];
        bb += bv[i] * bv[i];
      }
      double na = std::sqrt(aa), nb = std::sqrt(bb);
      double denom = na * nb + 1e-12;
      if (ac.requires_grad()) {
        auto& da = ac.grad();
        double s = cos / (aa + 1e-12);
        for (size_t i = 0; i < av.size(); ++i)
          da[i] += g * (bv[i] / denom - s * av[i]);
      }
      if (bc.requires_grad()) {
        auto& db = bc.grad();
        double s = cos / (bb + 1e-12);
        for (size_t i = 0; i < bv.size(); ++i)
          db[i] += g * (av[i] / denom - s * bv[i]);
      }
    });
  }
  return out;
}

namespace {
double logsumexp(const std::vector<double>& x) {
  double mx = x[0];
  for (double v : x) mx = std::max(mx, v);
  double s = 0.0;
  for (double v : x) s += std::exp(v - mx);
  return mx + std::log(s);
}
}  // namespace

Tensor nll_loss(const Tensor& logits, int target) {
  check(logits.rank() == 1, ErrorKind::dimension, "nll_loss expects a vector");
  int n = logits.dim(0);
  check(target >= 0 && target < n, ErrorKind::index,
        "nll_loss target " + std::to_string(target) + " out of range [0," +
            std::to_string(n) + ")");
  bool rg = grads_wanted({&logits});
  Tensor out = make_output({1}, rg);
  double lse = logsumexp(logits.values());
  out.values()[0] = lse - logits.at(target);
  if (rg) {
    Tensor lc = logits, oc = out;
    Tape::active()->record([lc, oc, target, lse, n]() mutable {
      if (!lc.requires_grad()) return;
      double g = oc.grad()[0];
      auto& dl = lc.grad();
      const auto& lv = lc.values();
      for (int i = 0; i < n; ++i) {
        double p = std::exp(lv[i] - lse);
        dl[i] += g * (p - (i == target ? 1.0 : 0.0));
      }
    });
  }
  return out;
}

Tensor cross_entropy_logits(const Tensor& logits,
                            const std::vector<double>& target) {
  check(logits.rank() == 1, ErrorKind::dimension,
        "cross_entropy expects a vector");
  int n = logits.dim(0);
  check(static_cast<int>(target.size()) == n, ErrorKind::dimension,
        "cross_entropy target size mismatch");
  bool rg = grads_wanted({&logits});
  Tensor out = make_output({1}, rg);
  double lse = logsumexp(logits.values());
  double tsum = 0.0, tx = 0.0;
  for (int i = 0; i < n; ++i) {
    tsum += target[i];
    tx += target[i] * logits.at(i);
  }
  out.values()[0] = tsum * lse - tx;
  if (rg) {
    Tensor lc = logits, oc = out;
    std::vector<double> t = target;
    Tape::active()->record([lc, oc, t, lse, tsum, n]() mutable {
      if (!lc.requires_grad()) return;
      double g = oc.grad()[0];
      auto& dl = lc.grad();
      const auto& lv = lc.values();
      for (int i = 0; i < n; ++i)
        dl[i] += g * (tsum * std::exp(lv[i] - lse) - t[i]);
    });
  }
  return out;
}

Tensor weighted_sum(const Tensor& w, const std::vector<Tensor>& items) {
  check(w.rank() == 1, ErrorKind::dimension, "weighted_sum weights not rank 1");
  check(static_cast<int>(items.size()) == w.dim(0), ErrorKind::dimension,
        "weighted_sum item count mismatch");
  check(!items.empty(), ErrorKind::dimension, "weighted_sum of empty list");
  for (const Tensor& t : items) check_same_shape("weighted_sum", items[0], t);
  bool rg = g_active_tape && (w.requires_grad() || grads_wanted(items));
  Tensor out = make_output(items[0].shape(), rg);
  auto& ov = out.values();
  for (size_t m = 0; m < items.size(); ++m) {
    double wm = w.at(static_cast<int>(m));
    const auto& xv = items[m].values();
    for (size_t i = 0; i < ov.size(); ++i) ov[i] += wm * xv[i];
  }
  if (rg) {
    Tensor wc = w, oc = out;
    std::vector<Tensor> xc = items;
    Tape::active()->record([wc, oc, xc]() mutable {
      const auto& g = oc.grad();
      for (size_t m = 0; m < xc.size(); ++m) {
        if (wc.requires_grad()) {
          double acc = 0.0;
          const auto& xv = xc[m].values();
          for (size_t i = 0; i < g.size(); ++i) acc += g[i] * xv[i];
          wc.grad()[m] += acc;
        }
        if (xc[m].requires_grad()) {
          double wm = wc.values()[m];
          auto& dx = xc[m].grad();
          for (size_t i = 0; i < g.size(); ++i) dx[i] += wm * g[i];
        }
      }
    });
  }
  return out;
}

}  // namespace tommy
