#include "nagm/tape.hpp"

#include <algorithm>
#include <cmath>

namespace nagm {

namespace {
constexpr double kCosineEps = 1e-12;
}

// Closures capture `oi`, the index the node receives at push time, and
// accumulate into grads_ of their inputs. backward() replays them in
// reverse creation order.

Var Tape::push(Tensor value, std::function<void()> back) {
  if (!value.all_finite()) {
    throw DomainError("tape produced a non-finite value");
  }
  values_.push_back(std::move(value));
  backs_.push_back(std::move(back));
  return Var{values_.size() - 1};
}

Var Tape::leaf(Tensor value) { return push(std::move(value)); }

Var Tape::add(Var a, Var b) {
  const Tensor& ta = values_[a.idx];
  const Tensor& tb = values_[b.idx];
  check_same_shape(ta, tb, "add");
  Tensor out = ta;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += tb.data[i];
  std::size_t ai = a.idx, bi = b.idx, oi = values_.size();
  return push(std::move(out), [this, ai, bi, oi]() {
    const Tensor& g = grads_[oi];
    for (std::size_t i = 0; i < g.size(); ++i) {
      grads_[ai].data[i] += g.data[i];
      grads_[bi].data[i] += g.data[i];
    }
  });
}

Var Tape::sub(Var a, Var b) {
  const Tensor& ta = values_[a.idx];
  const Tensor& tb = values_[b.idx];
  check_same_shape(ta, tb, "sub");
  Tensor out = ta;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] -= tb.data[i];
  std::size_t ai = a.idx, bi = b.idx, oi = values_.size();
  return push(std::move(out), [this, ai, bi, oi]() {
    const Tensor& g = grads_[oi];
    for (std::size_t i = 0; i < g.size(); ++i) {
      grads_[ai].data[i] += g.data[i];
      grads_[bi].data[i] -= g.data[i];
    }
  });
}

Var Tape::mul(Var a, Var b) {
  const Tensor& ta = values_[a.idx];
  const Tensor& tb = values_[b.idx];
  check_same_shape(ta, tb, "mul");
  Tensor out = ta;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= tb.data[i];
  std::size_t ai = a.idx, bi = b.idx, oi = values_.size();
  return push(std::move(out), [this, ai, bi, oi]() {
    const Tensor& g = grads_[oi];
    for (std::size_t i = 0; i < g.size(); ++i) {
      grads_[ai].data[i] += g.data[i] * values_[bi].data[i];
      grads_[bi].data[i] += g.data[i] * values_[ai].data[i];
    }
  });
}

Var Tape::scale(Var a, double k) {
  Tensor out = values_[a.idx];
  for (double& v : out.data) v *= k;
  std::size_t ai = a.idx, oi = values_.size();
  return push(std::move(out), [this, ai, oi, k]() {
    const Tensor& g = grads_[oi];
    for (std::size_t i = 0; i < g.size(); ++i)
      grads_[ai].data[i] += k * g.data[i];
  });
}

Var Tape::scale_by(Var a, Var scalar) {
  const Tensor& ts = values_[scalar.idx];
  if (ts.size() != 1) {
    throw DimensionError("scale_by: scalar operand has shape " +
                         ts.shape_str());
  }
  double k = ts.data[0];
  Tensor out = values_[a.idx];
  for (double& v : out.data) v *= k;
  std::size_t ai = a.idx, si = scalar.idx, oi = values_.size();
  return push(std::move(out), [this, ai, si, oi]() {
    const Tensor& g = grads_[oi];
    double k = values_[si].data[0];
    double acc = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      grads_[ai].data[i] += k * g.data[i];
      acc += g.data[i] * values_[ai].data[i];
    }
    grads_[si].data[0] += acc;
  });
}

Var Tape::add_const(Var a, double k) {
  Tensor out = values_[a.idx];
  for (double& v : out.data) v += k;
  std::size_t ai = a.idx, oi = values_.size();
  return push(std::move(out), [this, ai, oi]() {
    const Tensor& g = grads_[oi];
    for (std::size_t i = 0; i < g.size(); ++i) grads_[ai].data[i] += g.data[i];
  });
}

Var Tape::concat(Var a, Var b) {
  const Tensor& ta = values_[a.idx];
  const Tensor& tb = values_[b.idx];
  if (ta.rank() != 1 || tb.rank() != 1) {
    throw DimensionError("concat: expects vectors, got " + ta.shape_str() +
                         " and " + tb.shape_str());
  }
  Tensor out = Tensor::zeros({ta.size() + tb.size()});
  std::copy(ta.data.begin(), ta.data.end(), out.data.begin());
  std::copy(tb.data.begin(), tb.data.end(), out.data.begin() + ta.size());
  std::size_t ai = a.idx, bi = b.idx, na = ta.size(), oi = values_.size();
  return push(std::move(out), [this, ai, bi, na, oi]() {
    const Tensor& g = grads_[oi];
    for (std::size_t i = 0; i < na; ++i) grads_[ai].data[i] += g.data[i];
    for (std::size_t i = na; i < g.size(); ++i)
      grads_[bi].data[i - na] += g.data[i];
  });
}

Var Tape::sigmoid(Var a) {
  Tensor out = values_[a.idx];
  for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
  std::size_t ai = a.idx, oi = values_.size();
  return push(std::move(out), [this, ai, oi]() {
    const Tensor& g = grads_[oi];
    const Tensor& y = values_[oi];
    for (std::size_t i = 0; i < g.size(); ++i)
      grads_[ai].data[i] += g.data[i] * y.data[i] * (1.0 - y.data[i]);
  });
}

Var Tape::tanh(Var a) {
  Tensor out = values_[a.idx];
  for (double& v : out.data) v = std::tanh(v);
  std::size_t ai = a.idx, oi = values_.size();
  return push(std::move(out), [this, ai, oi]() {
    const Tensor& g = grads_[oi];
    const Tensor& y = values_[oi];
    for (std::size_t i = 0; i < g.size(); ++i)
      grads_[ai].data[i] += g.data[i] * (1.0 - y.data[i] * y.data[i]);
  });
}

Var Tape::relu(Var a) {
  Tensor out = values_[a.idx];
  for (double& v : out.data) v = std::max(0.0, v);
  std::size_t ai = a.idx, oi = values_.size();
  return push(std::move(out), [this, ai, oi]() {
    const Tensor& g = grads_[oi];
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (values_[ai].data[i] > 0.0) grads_[ai].data[i] += g.data[i];
    }
  });
}

Var Tape::matvec(Var w, Var x) {
  const Tensor& tw = values_[w.idx];
  const Tensor& tx = values_[x.idx];
  if (tw.rank() != 2 || tx.rank() != 1 || tw.cols() != tx.size()) {
    throw DimensionError("matvec: shape mismatch " + tw.shape_str() + " vs " +
                         tx.shape_str());
  }
  std::size_t m = tw.rows(), n = tw.cols();
  Tensor out = Tensor::zeros({m});
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    const double* row = &tw.data[i * n];
    for (std::size_t j = 0; j < n; ++j) s += row[j] * tx.data[j];
    out.data[i] = s;
  }
  std::size_t wi = w.idx, xi = x.idx, oi = values_.size();
  return push(std::move(out), [this, wi, xi, oi, m, n]() {
    const Tensor& g = grads_[oi];
    const Tensor& w_val = values_[wi];
    const Tensor& x_val = values_[xi];
    for (std::size_t i = 0; i < m; ++i) {
      double gi = g.data[i];
      if (gi == 0.0) continue;
      double* gw_row = &grads_[wi].data[i * n];
      const double* w_row = &w_val.data[i * n];
      for (std::size_t j = 0; j < n; ++j) {
        gw_row[j] += gi * x_val.data[j];
        grads_[xi].data[j] += gi * w_row[j];
      }
    }
  });
}

Var Tape::matvec_t(Var w, Var x) {
  const Tensor& tw = values_[w.idx];
  const Tensor& tx = values_[x.idx];
  if (tw.rank() != 2 || tx.rank() != 1 || tw.rows() != tx.size()) {
    throw DimensionError("matvec_t: shape mismatch " + tw.shape_str() +
                         " vs " + tx.shape_str());
  }
  std::size_t m = tw.rows(), n = tw.cols();
  Tensor out = Tensor::zeros({n});
  for (std::size_t i = 0; i < m; ++i) {
    double xv = tx.data[i];
    if (xv == 0.0) continue;
    const double* row = &tw.data[i * n];
    for (std::size_t j = 0; j < n; ++j) out.data[j] += row[j] * xv;
  }
  std::size_t wi = w.idx, xi = x.idx, oi = values_.size();
  return push(std::move(out), [this, wi, xi, oi, m, n]() {
    const Tensor& g = grads_[oi];
    const Tensor& w_val = values_[wi];
    const Tensor& x_val = values_[xi];
    for (std::size_t i = 0; i < m; ++i) {
      double acc = 0.0;
      double* gw_row = &grads_[wi].data[i * n];
      const double* w_row = &w_val.data[i * n];
      for (std::size_t j = 0; j < n; ++j) {
        gw_row[j] += x_val.data[i] * g.data[j];
        acc += w_row[j] * g.data[j];
      }
      grads_[xi].data[i] += acc;
    }
  });
}

Var Tape::affine(Var x, Var w, Var b) { return add(matvec(w, x), b); }

Var Tape::column(Var w, std::size_t j) {
  const Tensor& tw = values_[w.idx];
  if (tw.rank() != 2 || j >= tw.cols()) {
    throw DimensionError("column: index " + std::to_string(j) +
                         " out of range for " + tw.shape_str());
  }
  std::size_t m = tw.rows(), n = tw.cols();
  Tensor out = Tensor::zeros({m});
  for (std::size_t i = 0; i < m; ++i) out.data[i] = tw.data[i * n + j];
  std::size_t wi = w.idx, oi = values_.size();
  return push(std::move(out), [this, wi, oi, j, m, n]() {
    const Tensor& g = grads_[oi];
    for (std::size_t i = 0; i < m; ++i) grads_[wi].data[i * n + j] += g.data[i];
  });
}

Var Tape::dot(Var a, Var b) {
  const Tensor& ta = values_[a.idx];
  const Tensor& tb = values_[b.idx];
  check_same_shape(ta, tb, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < ta.size(); ++i) s += ta.data[i] * tb.data[i];
  std::size_t ai = a.idx, bi = b.idx, oi = values_.size();
  return push(Tensor::scalar(s), [this, ai, bi, oi]() {
    double g = grads_[oi].data[0];
    for (std::size_t i = 0; i < values_[ai].size(); ++i) {
      grads_[ai].data[i] += g * values_[bi].data[i];
      grads_[bi].data[i] += g * values_[ai].data[i];
    }
  });
}

Var Tape::softmax(Var a) {
  const Tensor& ta = values_[a.idx];
  if (ta.size() == 0) throw DomainError("softmax: empty vector");
  double mx = *std::max_element(ta.data.begin(), ta.data.end());
  Tensor out = ta;
  double sum = 0.0;
  for (double& v : out.data) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : out.data) v /= sum;
  std::size_t ai = a.idx, oi = values_.size();
  return push(std::move(out), [this, ai, oi]() {
    const Tensor& g = grads_[oi];
    const Tensor& y = values_[oi];
    double gy = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) gy += g.data[i] * y.data[i];
    for (std::size_t i = 0; i < g.size(); ++i)
      grads_[ai].data[i] += y.data[i] * (g.data[i] - gy);
  });
}

Var Tape::log_softmax_pick(Var logits, std::size_t idx) {
  const Tensor& tl = values_[logits.idx];
  if (idx >= tl.size()) {
    throw DomainError("log_softmax_pick: index out of range");
  }
  double mx = *std::max_element(tl.data.begin(), tl.data.end());
  double sum = 0.0;
  for (double v : tl.data) sum += std::exp(v - mx);
  double out = tl.data[idx] - mx - std::log(sum);
  std::size_t li = logits.idx, oi = values_.size();
  return push(Tensor::scalar(out), [this, li, oi, idx, mx, sum]() {
    double g = grads_[oi].data[0];
    const Tensor& tl = values_[li];
    for (std::size_t i = 0; i < tl.size(); ++i) {
      double p = std::exp(tl.data[i] - mx) / sum;
      grads_[li].data[i] += g * ((i == idx ? 1.0 : 0.0) - p);
    }
  });
}

Var Tape::bce_with_logit(Var logit, double label) {
  const Tensor& tl = values_[logit.idx];
  if (tl.size() != 1) {
    throw DimensionError("bce_with_logit: expects a scalar, got " +
                         tl.shape_str());
  }
  double x = tl.data[0];
  // softplus(x) - label * x, computed stably for large |x|.
  double softplus = x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  std::size_t li = logit.idx, oi = values_.size();
  return push(Tensor::scalar(softplus - label * x), [this, li, oi, label]() {
    double g = grads_[oi].data[0];
    double x = values_[li].data[0];
    double s = 1.0 / (1.0 + std::exp(-x));
    grads_[li].data[0] += g * (s - label);
  });
}

Var Tape::max_pool(const std::vector<Var>& states) {
  if (states.empty()) throw DomainError("max_pool: no unmasked positions");
  std::size_t d = values_[states[0].idx].size();
  std::vector<std::size_t> src(d, 0);
  Tensor out = values_[states[0].idx];
  for (std::size_t t = 1; t < states.size(); ++t) {
    const Tensor& s = values_[states[t].idx];
    check_same_shape(out, s, "max_pool");
    for (std::size_t k = 0; k < d; ++k) {
      if (s.data[k] > out.data[k]) {  // strict: ties keep the earliest
        out.data[k] = s.data[k];
        src[k] = t;
      }
    }
  }
  std::vector<std::size_t> idxs;
  idxs.reserve(states.size());
  for (Var v : states) idxs.push_back(v.idx);
  std::size_t oi = values_.size();
  return push(std::move(out),
              [this, oi, idxs = std::move(idxs), src = std::move(src)]() {
                const Tensor& g = grads_[oi];
                for (std::size_t k = 0; k < g.size(); ++k)
                  grads_[idxs[src[k]]].data[k] += g.data[k];
              });
}

Var Tape::max_pool_time(const std::vector<Var>& states,
                        const std::vector<bool>& mask) {
  if (states.size() != mask.size()) {
    throw DimensionError("max_pool_time: " + std::to_string(states.size()) +
                         " states vs " + std::to_string(mask.size()) +
                         " mask entries");
  }
  std::vector<Var> kept;
  for (std::size_t t = 0; t < states.size(); ++t) {
    if (mask[t]) kept.push_back(states[t]);
  }
  return max_pool(kept);
}

Var Tape::cosine(Var u, Var v) {
  const Tensor& tu = values_[u.idx];
  const Tensor& tv = values_[v.idx];
  check_same_shape(tu, tv, "cosine");
  double uu = 0.0, vv = 0.0, uv = 0.0;
  for (std::size_t i = 0; i < tu.size(); ++i) {
    uu += tu.data[i] * tu.data[i];
    vv += tv.data[i] * tv.data[i];
    uv += tu.data[i] * tv.data[i];
  }
  double nu = std::sqrt(uu), nv = std::sqrt(vv);
  if (nu <= kCosineEps && nv <= kCosineEps) {
    throw DomainError("cosine: both vectors degenerate (norm <= 1e-12)");
  }
  if (nu <= kCosineEps || nv <= kCosineEps) {
    // One side is (numerically) zero: similarity 0 with no usable direction.
    return push(Tensor::scalar(0.0), nullptr);
  }
  double c = uv / (nu * nv);
  std::size_t ui = u.idx, vi = v.idx, oi = values_.size();
  return push(Tensor::scalar(c), [this, ui, vi, oi, nu, nv, c]() {
    double g = grads_[oi].data[0];
    const Tensor& tu = values_[ui];
    const Tensor& tv = values_[vi];
    for (std::size_t i = 0; i < tu.size(); ++i) {
      grads_[ui].data[i] +=
          g * (tv.data[i] / (nu * nv) - c * tu.data[i] / (nu * nu));
      grads_[vi].data[i] +=
          g * (tu.data[i] / (nu * nv) - c * tv.data[i] / (nv * nv));
    }
  });
}

void Tape::backward(Var out) {
  if (values_[out.idx].size() != 1) {
    throw DomainError("backward: output must be a scalar");
  }
  grads_.clear();
  grads_.reserve(values_.size());
  for (const Tensor& v : values_) grads_.push_back(Tensor::zeros(v.shape));
  grads_[out.idx].data[0] = 1.0;
  for (std::size_t i = out.idx + 1; i-- > 0;) {
    if (backs_[i]) backs_[i]();
  }
}

}  // namespace nagm
