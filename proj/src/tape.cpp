#include "benh/tape.hpp"

#include <cmath>
#include <stdexcept>

#include "benh/common.hpp"
#include "benh/kernels.hpp"

namespace benh {

Tape::Id Tape::push(Node n) {
  if (backward_done_)
    throw std::logic_error("tape: recording after backward; clear() first");
  nodes_.push_back(std::move(n));
  return Id(nodes_.size() - 1);
}

Tape::Id Tape::constant(std::vector<double> v) {
  Node n;
  n.op = Op::Const;
  n.val = std::move(v);
  return push(std::move(n));
}

Tape::Id Tape::param_vec(const std::string& name, const std::vector<double>* v) {
  Node n;
  n.op = Op::ParamVec;
  n.pname = name;
  n.val = *v;
  return push(std::move(n));
}

Tape::Id Tape::param_mat(const std::string& name, const Mat* m) {
  Node n;
  n.op = Op::ParamMat;
  n.pname = name;
  n.mat = m;
  return push(std::move(n));
}

Tape::Id Tape::matvec(Id w, Id x) {
  Node& wn = at(w);
  if (wn.op != Op::ParamMat) throw std::logic_error("tape: matvec weight must be a param_mat leaf");
  const Mat* m = wn.mat;
  const std::vector<double>& xv = at(x).val;
  if (xv.size() != m->cols) throw DataError("tape: matvec dimension mismatch");
  Node n;
  n.op = Op::MatVec;
  n.ins = {w, x};
  n.val.resize(m->rows);
  kernels::matvec(m->a.data(), m->rows, m->cols, xv.data(), n.val.data());
  return push(std::move(n));
}

Tape::Id Tape::sum(const std::vector<Id>& xs) {
  if (xs.empty()) throw std::logic_error("tape: sum of zero inputs");
  Node n;
  n.op = Op::Sum;
  n.ins = xs;
  n.val = at(xs[0]).val;
  for (size_t i = 1; i < xs.size(); ++i) {
    const std::vector<double>& v = at(xs[i]).val;
    if (v.size() != n.val.size()) throw DataError("tape: sum length mismatch");
    kernels::vadd(n.val.data(), v.data(), v.size());
  }
  return push(std::move(n));
}

Tape::Id Tape::scale(Id x, double alpha) {
  Node n;
  n.op = Op::Scale;
  n.ins = {x};
  n.alpha = alpha;
  n.val = at(x).val;
  kernels::scale(n.val.data(), alpha, n.val.size());
  return push(std::move(n));
}

Tape::Id Tape::leaky_relu(Id x, double slope) {
  Node n;
  n.op = Op::LeakyRelu;
  n.ins = {x};
  n.alpha = slope;
  n.val = at(x).val;
  for (double& v : n.val)
    if (v < 0.0) v *= slope;
  return push(std::move(n));
}

Tape::Id Tape::tanh_op(Id x) {
  Node n;
  n.op = Op::Tanh;
  n.ins = {x};
  n.val = at(x).val;
  for (double& v : n.val) v = std::tanh(v);
  return push(std::move(n));
}

Tape::Id Tape::concat(const std::vector<Id>& xs) {
  Node n;
  n.op = Op::Concat;
  n.ins = xs;
  for (Id x : xs) {
    const std::vector<double>& v = at(x).val;
    n.val.insert(n.val.end(), v.begin(), v.end());
  }
  return push(std::move(n));
}

Tape::Id Tape::dot(Id a, Id b) {
  const std::vector<double>& av = at(a).val;
  const std::vector<double>& bv = at(b).val;
  if (av.size() != bv.size()) throw DataError("tape: dot length mismatch");
  Node n;
  n.op = Op::Dot;
  n.ins = {a, b};
  n.val = {kernels::dot(av.data(), bv.data(), av.size())};
  return push(std::move(n));
}

Tape::Id Tape::cosine(Id a, Id b) {
  const std::vector<double>& av = at(a).val;
  const std::vector<double>& bv = at(b).val;
  if (av.size() != bv.size()) throw DataError("tape: cosine length mismatch");
  double na = kernels::l2_norm(av.data(), av.size());
  double nb = kernels::l2_norm(bv.data(), bv.size());
  Node n;
  n.op = Op::Cosine;
  n.ins = {a, b};
  double c = 0.0;
  if (na > 0.0 && nb > 0.0) c = kernels::dot(av.data(), bv.data(), av.size()) / (na * nb);
  n.val = {c};
  return push(std::move(n));
}

Tape::Id Tape::pair_loss(Id sp, Id sn) {
  if (at(sp).val.size() != 1 || at(sn).val.size() != 1)
    throw std::logic_error("tape: pair_loss expects scalar inputs");
  double p = at(sp).val[0];
  double q = at(sn).val[0];
  Node n;
  n.op = Op::PairLoss;
  n.ins = {sp, sn};
  n.val = {0.5 * (1.0 - p) * (1.0 - p) + 0.5 * (1.0 + q) * (1.0 + q)};
  return push(std::move(n));
}

double Tape::scalar(Id id) const {
  const std::vector<double>& v = value(id);
  if (v.size() != 1) throw std::logic_error("tape: not a scalar node");
  return v[0];
}

void Tape::clear() {
  nodes_.clear();
  backward_done_ = false;
}

void Tape::backward(Id root, GradMap& grads) {
  if (nodes_.empty()) throw std::logic_error("tape: backward before any forward was recorded");
  if (backward_done_) throw std::logic_error("tape: second backward on the same forward");
  if (at(root).val.size() != 1) throw std::logic_error("tape: backward root must be scalar");
  backward_done_ = true;

  for (Node& n : nodes_) n.adj.assign(n.val.size(), 0.0);
  at(root).adj[0] = 1.0;

  for (Id i = Id(nodes_.size()) - 1; i >= 0; --i) {
    Node& n = at(i);
    switch (n.op) {
      case Op::Const:
        break;
      case Op::ParamVec: {
        std::vector<double>& g = grads[n.pname];
        if (g.empty()) g.assign(n.val.size(), 0.0);
        kernels::vadd(g.data(), n.adj.data(), n.adj.size());
        break;
      }
      case Op::ParamMat:
        break;  // handled by the consuming MatVec
      case Op::MatVec: {
        Node& wn = at(n.ins[0]);
        Node& xn = at(n.ins[1]);
        const Mat* m = wn.mat;
        // dW += adj ⊗ x
        std::vector<double>& g = grads[wn.pname];
        if (g.empty()) g.assign(m->a.size(), 0.0);
        kernels::outer_acc(g.data(), m->rows, m->cols, n.adj.data(), xn.val.data());
        // dx += W^T adj
        std::vector<double> dx(m->cols);
        kernels::matvec_t(m->a.data(), m->rows, m->cols, n.adj.data(), dx.data());
        kernels::vadd(xn.adj.data(), dx.data(), dx.size());
        break;
      }
      case Op::Sum:
        for (Id in : n.ins) kernels::vadd(at(in).adj.data(), n.adj.data(), n.adj.size());
        break;
      case Op::Scale:
        kernels::axpy(at(n.ins[0]).adj.data(), n.alpha, n.adj.data(), n.adj.size());
        break;
      case Op::LeakyRelu: {
        Node& xn = at(n.ins[0]);
        for (size_t k = 0; k < n.adj.size(); ++k)
          xn.adj[k] += n.adj[k] * (xn.val[k] > 0.0 ? 1.0 : n.alpha);
        break;
      }
      case Op::Tanh: {
        Node& xn = at(n.ins[0]);
        for (size_t k = 0; k < n.adj.size(); ++k)
          xn.adj[k] += n.adj[k] * (1.0 - n.val[k] * n.val[k]);
        break;
      }
      case Op::Concat: {
        size_t off = 0;
        for (Id in : n.ins) {
          Node& xn = at(in);
          for (size_t k = 0; k < xn.val.size(); ++k) xn.adj[k] += n.adj[off + k];
          off += xn.val.size();
        }
        break;
      }
      case Op::Dot: {
        Node& a = at(n.ins[0]);
        Node& b = at(n.ins[1]);
        kernels::axpy(a.adj.data(), n.adj[0], b.val.data(), b.val.size());
        kernels::axpy(b.adj.data(), n.adj[0], a.val.data(), a.val.size());
        break;
      }
      case Op::Cosine: {
        Node& a = at(n.ins[0]);
        Node& b = at(n.ins[1]);
        double na = kernels::l2_norm(a.val.data(), a.val.size());
        double nb = kernels::l2_norm(b.val.data(), b.val.size());
        if (na > 0.0 && nb > 0.0) {
          double c = n.val[0];
          double g = n.adj[0];
          // d/da = b/(|a||b|) - c a/|a|^2 ; symmetric for b
          kernels::axpy(a.adj.data(), g / (na * nb), b.val.data(), b.val.size());
          kernels::axpy(a.adj.data(), -g * c / (na * na), a.val.data(), a.val.size());
          kernels::axpy(b.adj.data(), g / (na * nb), a.val.data(), a.val.size());
          kernels::axpy(b.adj.data(), -g * c / (nb * nb), b.val.data(), b.val.size());
        }
        break;
      }
      case Op::PairLoss: {
        double p = at(n.ins[0]).val[0];
        double q = at(n.ins[1]).val[0];
        at(n.ins[0]).adj[0] += n.adj[0] * (p - 1.0);
        at(n.ins[1]).adj[0] += n.adj[0] * (1.0 + q);
        break;
      }
    }
  }
}

}  // namespace benh
