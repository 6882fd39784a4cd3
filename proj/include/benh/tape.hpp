#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace benh {

struct Mat {
  size_t rows = 0, cols = 0;
  std::vector<double> a;  // row-major

  Mat() = default;
  Mat(size_t r, size_t c) : rows(r), cols(c), a(r * c, 0.0) {}
  double& at(size_t r, size_t c) { return a[r * cols + c]; }
  double at(size_t r, size_t c) const { return a[r * cols + c]; }
};

using GradMap = std::map<std::string, std::vector<double>>;

// Records the forward computation as a flat list of vector-valued primitive
// ops and replays it backwards for exact reverse-mode adjoints. Parameters
// enter as named leaves; backward() accumulates their gradients into a
// GradMap keyed by leaf name. One backward pass per recorded forward.
class Tape {
 public:
  using Id = int32_t;

  Id constant(std::vector<double> v);
  Id param_vec(const std::string& name, const std::vector<double>* v);
  Id param_mat(const std::string& name, const Mat* m);

  // y = W x, W a param_mat leaf
  Id matvec(Id w, Id x);
  // elementwise sum of same-length vectors (at least one input)
  Id sum(const std::vector<Id>& xs);
  Id scale(Id x, double alpha);
  Id leaky_relu(Id x, double slope);
  Id tanh_op(Id x);
  Id concat(const std::vector<Id>& xs);
  Id dot(Id a, Id b);
  // u.v / (|u||v|), 0 when either norm is 0
  Id cosine(Id a, Id b);
  // 0.5*(1-sp)^2 + 0.5*(1+sn)^2 on scalar inputs
  Id pair_loss(Id sp, Id sn);

  const std::vector<double>& value(Id id) const { return nodes_[size_t(id)].val; }
  double scalar(Id id) const;

  // Seeds the root adjoint with 1 and accumulates parameter gradients.
  void backward(Id root, GradMap& grads);

  size_t size() const { return nodes_.size(); }
  void clear();

 private:
  enum class Op : uint8_t {
    Const, ParamVec, ParamMat, MatVec, Sum, Scale, LeakyRelu, Tanh, Concat, Dot, Cosine, PairLoss
  };

  struct Node {
    Op op;
    std::vector<Id> ins;
    double alpha = 0.0;  // Scale factor / LeakyRelu slope
    const Mat* mat = nullptr;
    std::string pname;
    std::vector<double> val;
    std::vector<double> adj;
  };

  Id push(Node n);
  Node& at(Id id) { return nodes_[size_t(id)]; }

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace benh
