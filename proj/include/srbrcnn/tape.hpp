#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "srbrcnn/tensor.hpp"

namespace srbrcnn {

// Handle into a Tape.
struct Var {
  size_t idx = 0;
};

// Reverse-mode tape. Every primitive records its output value and a closure
// that propagates the output adjoint to the input adjoints; backward() visits
// the closures in exact reverse order of recording. Parameter leaves reference
// external storage and flush their adjoints into an external sink tensor, so
// gradients accumulate across tapes (one tape per instance, single-owner).
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  size_t size() const { return nodes_.size(); }

  const Tensor& value(Var v) const {
    const Node& n = nodes_[v.idx];
    return n.external ? *n.external : n.storage;
  }
  Tensor& grad(Var v) { return nodes_[v.idx].grad; }
  const Tensor& grad(Var v) const { return nodes_[v.idx].grad; }

  // Owned leaf with no adjoint consumers outside the tape.
  Var constant(Tensor t) {
    return push(std::move(t), nullptr, nullptr);
  }

  // Leaf referencing external parameter storage. `sink`, when non-null,
  // receives the accumulated adjoint during backward().
  Var param(const Tensor& w, Tensor* sink) {
    Var v = push(Tensor{}, &w, nullptr);
    if (sink != nullptr) {
      nodes_[v.idx].backward = [v, sink](Tape& t) {
        sink->add_scaled(t.grad(v), 1.0);
      };
    }
    return v;
  }

  // y = W x + b
  Var affine(Var x, Var W, Var b) {
    const Tensor& wv = value(W);
    const Tensor& xv = value(x);
    const Tensor& bv = value(b);
    if (wv.rank() != 2 || xv.size() != wv.cols() || bv.size() != wv.rows())
      throw std::invalid_argument(strf("affine: W %s, x %s, b %s are not conformable",
                                       wv.shape_str().c_str(), xv.shape_str().c_str(),
                                       bv.shape_str().c_str()));
    Tensor y = Tensor::zeros({wv.rows()});
    for (size_t r = 0; r < wv.rows(); ++r) {
      double acc = bv.at(r);
      for (size_t c = 0; c < wv.cols(); ++c) acc += wv.at(r, c) * xv.at(c);
      y.at(r) = acc;
    }
    Var out = push(std::move(y), nullptr, [x, W, b](Tape& t, Var self) {
      const Tensor& g = t.grad(self);
      const Tensor& wv = t.value(W);
      const Tensor& xv = t.value(x);
      Tensor& gw = t.grad(W);
      Tensor& gx = t.grad(x);
      Tensor& gb = t.grad(b);
      for (size_t r = 0; r < wv.rows(); ++r) {
        gb.at(r) += g.at(r);
        for (size_t c = 0; c < wv.cols(); ++c) {
          gw.at(r, c) += g.at(r) * xv.at(c);
          gx.at(c) += g.at(r) * wv.at(r, c);
        }
      }
    });
    return out;
  }

  // y = W x
  Var matvec(Var W, Var x) {
    const Tensor& wv = value(W);
    const Tensor& xv = value(x);
    if (wv.rank() != 2 || xv.size() != wv.cols())
      throw std::invalid_argument(strf("matvec: W %s does not match x %s",
                                       wv.shape_str().c_str(), xv.shape_str().c_str()));
    Tensor y = Tensor::zeros({wv.rows()});
    for (size_t r = 0; r < wv.rows(); ++r) {
      double acc = 0.0;
      for (size_t c = 0; c < wv.cols(); ++c) acc += wv.at(r, c) * xv.at(c);
      y.at(r) = acc;
    }
    return push(std::move(y), nullptr, [W, x](Tape& t, Var self) {
      const Tensor& g = t.grad(self);
      const Tensor& wv = t.value(W);
      const Tensor& xv = t.value(x);
      Tensor& gw = t.grad(W);
      Tensor& gx = t.grad(x);
      for (size_t r = 0; r < wv.rows(); ++r)
        for (size_t c = 0; c < wv.cols(); ++c) {
          gw.at(r, c) += g.at(r) * xv.at(c);
          gx.at(c) += g.at(r) * wv.at(r, c);
        }
    });
  }

  // Elementwise sum of equally shaped inputs.
  Var sum(std::span<const Var> xs) {
    if (xs.empty()) throw std::invalid_argument("sum: empty input list");
    Tensor y = value(xs[0]);
    for (size_t i = 1; i < xs.size(); ++i) {
      const Tensor& xv = value(xs[i]);
      if (!xv.same_shape(y))
        throw std::invalid_argument(strf("sum: shape %s does not match %s",
                                         xv.shape_str().c_str(), y.shape_str().c_str()));
      y.add_scaled(xv, 1.0);
    }
    std::vector<Var> in(xs.begin(), xs.end());
    return push(std::move(y), nullptr, [in](Tape& t, Var self) {
      const Tensor& g = t.grad(self);
      for (Var x : in) t.grad(x).add_scaled(g, 1.0);
    });
  }

  Var add(Var a, Var b) {
    Var xs[2] = {a, b};
    return sum(xs);
  }

  // Elementwise product.
  Var mul(Var a, Var b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (!av.same_shape(bv))
      throw std::invalid_argument(strf("mul: shape %s does not match %s",
                                       av.shape_str().c_str(), bv.shape_str().c_str()));
    Tensor y = av;
    for (size_t i = 0; i < y.size(); ++i) y.at(i) *= bv.at(i);
    return push(std::move(y), nullptr, [a, b](Tape& t, Var self) {
      const Tensor& g = t.grad(self);
      const Tensor& av = t.value(a);
      const Tensor& bv = t.value(b);
      Tensor& ga = t.grad(a);
      Tensor& gb = t.grad(b);
      for (size_t i = 0; i < g.size(); ++i) {
        ga.at(i) += g.at(i) * bv.at(i);
        gb.at(i) += g.at(i) * av.at(i);
      }
    });
  }

  // Elementwise y = f(x); df receives (x, y) so activations can reuse the
  // forward value.
  using MapFn = double (*)(double);
  using MapDf = double (*)(double x, double y);
  Var map(Var x, MapFn f, MapDf df) {
    Tensor y = value(x);
    for (double& v : y.data) v = f(v);
    return push(std::move(y), nullptr, [x, df](Tape& t, Var self) {
      const Tensor& g = t.grad(self);
      const Tensor& xv = t.value(x);
      const Tensor& yv = t.value(self);
      Tensor& gx = t.grad(x);
      for (size_t i = 0; i < g.size(); ++i) gx.at(i) += g.at(i) * df(xv.at(i), yv.at(i));
    });
  }

  Var sigmoid(Var x) {
    return map(
        x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
        [](double, double y) { return y * (1.0 - y); });
  }

  Var tanh(Var x) {
    return map(
        x, [](double v) { return std::tanh(v); },
        [](double, double y) { return 1.0 - y * y; });
  }

  Var concat(std::span<const Var> xs) {
    if (xs.empty()) throw std::invalid_argument("concat: empty input list");
    size_t n = 0;
    for (Var x : xs) n += value(x).size();
    Tensor y = Tensor::zeros({n});
    size_t off = 0;
    for (Var x : xs) {
      const Tensor& xv = value(x);
      std::copy(xv.data.begin(), xv.data.end(), y.data.begin() + off);
      off += xv.size();
    }
    std::vector<Var> in(xs.begin(), xs.end());
    return push(std::move(y), nullptr, [in](Tape& t, Var self) {
      const Tensor& g = t.grad(self);
      size_t off = 0;
      for (Var x : in) {
        Tensor& gx = t.grad(x);
        for (size_t i = 0; i < gx.size(); ++i) gx.at(i) += g.at(off + i);
        off += gx.size();
      }
    });
  }

  Var concat(Var a, Var b) {
    Var xs[2] = {a, b};
    return concat(xs);
  }
  Var concat(Var a, Var b, Var c) {
    Var xs[3] = {a, b, c};
    return concat(xs);
  }

  Var slice(Var x, size_t offset, size_t len) {
    const Tensor& xv = value(x);
    if (offset + len > xv.size())
      throw std::invalid_argument(strf("slice: [%zu, %zu) out of range for %s", offset,
                                       offset + len, xv.shape_str().c_str()));
    Tensor y = Tensor::zeros({len});
    std::copy(xv.data.begin() + offset, xv.data.begin() + offset + len, y.data.begin());
    return push(std::move(y), nullptr, [x, offset, len](Tape& t, Var self) {
      const Tensor& g = t.grad(self);
      Tensor& gx = t.grad(x);
      for (size_t i = 0; i < len; ++i) gx.at(offset + i) += g.at(i);
    });
  }

  // Elementwise maximum across equally shaped inputs. The subgradient flows
  // to the first argmax per coordinate so gradients stay deterministic.
  Var max_pool(std::span<const Var> xs) {
    if (xs.empty()) throw std::invalid_argument("max_pool: empty input list");
    const Tensor& first = value(xs[0]);
    Tensor y = first;
    std::vector<size_t> amax(first.size(), 0);
    for (size_t k = 1; k < xs.size(); ++k) {
      const Tensor& xv = value(xs[k]);
      if (!xv.same_shape(first))
        throw std::invalid_argument(strf("max_pool: shape %s does not match %s",
                                         xv.shape_str().c_str(), first.shape_str().c_str()));
      for (size_t i = 0; i < y.size(); ++i) {
        if (xv.at(i) > y.at(i)) {
          y.at(i) = xv.at(i);
          amax[i] = k;
        }
      }
    }
    std::vector<Var> in(xs.begin(), xs.end());
    return push(std::move(y), nullptr, [in, amax](Tape& t, Var self) {
      const Tensor& g = t.grad(self);
      for (size_t i = 0; i < g.size(); ++i) t.grad(in[amax[i]]).at(i) += g.at(i);
    });
  }

  // Row lookup into an embedding table kept off-tape. The adjoint scatters
  // straight into the matching row of `sink`.
  Var lookup(const Tensor& table, Tensor* sink, size_t row) {
    if (table.rank() != 2 || row >= table.rows())
      throw std::invalid_argument(strf("lookup: row %zu out of range for table %s", row,
                                       table.shape_str().c_str()));
    size_t d = table.cols();
    Tensor y = Tensor::zeros({d});
    std::copy(table.data.begin() + row * d, table.data.begin() + (row + 1) * d, y.data.begin());
    return push(std::move(y), nullptr, [sink, row, d](Tape& t, Var self) {
      if (sink == nullptr) return;
      const Tensor& g = t.grad(self);
      for (size_t i = 0; i < d; ++i) sink->data[row * d + i] += g.at(i);
    });
  }

  // Inverted dropout: zero with probability 1-keep, scale survivors by
  // 1/keep, identity in eval mode. Mask is a pure function of `seed`.
  Var dropout(Var x, double keep, uint64_t seed, bool training) {
    if (!(keep > 0.0 && keep <= 1.0))
      throw std::invalid_argument(strf("dropout: keep probability %g outside (0, 1]", keep));
    if (!training || keep == 1.0) return x;
    std::mt19937_64 rng = make_rng(seed);
    const Tensor& xv = value(x);
    std::vector<double> mask(xv.size());
    for (double& m : mask) m = uniform_unit(rng) < keep ? 1.0 / keep : 0.0;
    Tensor y = xv;
    for (size_t i = 0; i < y.size(); ++i) y.at(i) *= mask[i];
    return push(std::move(y), nullptr, [x, mask](Tape& t, Var self) {
      const Tensor& g = t.grad(self);
      Tensor& gx = t.grad(x);
      for (size_t i = 0; i < g.size(); ++i) gx.at(i) += g.at(i) * mask[i];
    });
  }

  // Fused softmax + cross-entropy. Returns the probability vector by value
  // (it is not a tape node) and the scalar loss node -log p[target].
  std::pair<Tensor, Var> softmax_xent(Var logits, size_t target) {
    const Tensor& lv = value(logits);
    if (lv.rank() != 1)
      throw std::invalid_argument("softmax_xent: logits must be rank 1");
    if (target >= lv.size())
      throw std::invalid_argument(strf("softmax_xent: target %zu out of range for %zu classes",
                                       target, lv.size()));
    Tensor probs = softmax(lv);
    Tensor loss = Tensor::scalar(-std::log(probs.at(target)));
    Var out = push(std::move(loss), nullptr, [logits, probs, target](Tape& t, Var self) {
      double g = t.grad(self).at(0);
      Tensor& gl = t.grad(logits);
      for (size_t i = 0; i < probs.size(); ++i)
        gl.at(i) += g * (probs.at(i) - (i == target ? 1.0 : 0.0));
    });
    return {probs, out};
  }

  // lambda * sum of squared entries over the given weight leaves.
  Var l2_penalty(std::span<const Var> weights, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("l2_penalty: lambda must be non-negative");
    double acc = 0.0;
    for (Var w : weights) acc += value(w).sum_squares();
    std::vector<Var> in(weights.begin(), weights.end());
    return push(Tensor::scalar(lambda * acc), nullptr, [in, lambda](Tape& t, Var self) {
      double g = t.grad(self).at(0);
      for (Var w : in) t.grad(w).add_scaled(t.value(w), 2.0 * lambda * g);
    });
  }

  // Scalar sum over all coordinates.
  Var reduce_sum(Var x) {
    const Tensor& xv = value(x);
    double acc = 0.0;
    for (double v : xv.data) acc += v;
    return push(Tensor::scalar(acc), nullptr, [x](Tape& t, Var self) {
      double g = t.grad(self).at(0);
      Tensor& gx = t.grad(x);
      for (size_t i = 0; i < gx.size(); ++i) gx.at(i) += g;
    });
  }

  // Seeds d(loss) = 1 and sweeps the tape in reverse recording order.
  void backward(Var loss) {
    if (value(loss).size() != 1)
      throw std::invalid_argument("backward: loss must be a scalar");
    for (Node& n : nodes_) {
      n.grad = Tensor::zeros(n.external ? n.external->shape : n.storage.shape);
    }
    nodes_[loss.idx].grad.at(0) = 1.0;
    for (size_t i = loss.idx + 1; i-- > 0;) {
      if (nodes_[i].backward) nodes_[i].backward(*this);
    }
  }

 private:
  struct Node {
    Tensor storage;
    const Tensor* external = nullptr;
    Tensor grad;
    std::function<void(Tape&)> backward;
  };

  template <class F>
  Var push(Tensor value, const Tensor* external, F&& back) {
    Node n;
    n.storage = std::move(value);
    n.external = external;
    const Tensor& v = external ? *external : n.storage;
    if (!v.all_finite()) throw NumericError("non-finite value in forward computation");
    Var self{nodes_.size()};
    n.backward = [self, fn = std::forward<F>(back)](Tape& t) { fn(t, self); };
    nodes_.push_back(std::move(n));
    return self;
  }

  Var push(Tensor value, const Tensor* external, std::nullptr_t) {
    Node n;
    n.storage = std::move(value);
    n.external = external;
    const Tensor& v = external ? *external : n.storage;
    if (!v.all_finite()) throw NumericError("non-finite value in forward computation");
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
  }

  std::vector<Node> nodes_;
};

}  // namespace srbrcnn
