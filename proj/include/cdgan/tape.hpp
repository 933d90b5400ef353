#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <unordered_map>
#include <vector>

#include "cdgan/tensor.hpp"

namespace cdgan::ad {

class Tape;

/// Index of a node on its tape.
using NodeId = int;

/// One recorded value in a computation. Backward functions accumulate into
/// parent gradients; nodes whose ancestors carry no trainable leaves are
/// skipped entirely (requires_grad stays false), which is how frozen
/// sub-networks are detached during alternating updates.
struct Node {
  Tensor value;
  Tensor grad;  // allocated on first accumulation
  bool requires_grad = false;
  std::function<void(Tape&, NodeId self)> backward_fn;  // empty for leaves/constants
};

/// Append-only reverse-mode tape. Nodes are created in forward order and
/// visited strictly in reverse during backward(), so gradient accumulation
/// order is deterministic and results are bit-reproducible.
class Tape {
 public:
  NodeId constant(Tensor v) {
    nodes_.emplace_back();
    nodes_.back().value = std::move(v);
    return static_cast<NodeId>(nodes_.size()) - 1;
  }

  /// Registers a parameter tensor as a leaf. Repeated calls with the same
  /// storage return the same node, so gradients of every use of a shared
  /// (tied) parameter accumulate into one buffer.
  NodeId leaf(const std::shared_ptr<Tensor>& param, bool requires_grad) {
    auto it = leaf_ids_.find(param.get());
    if (it != leaf_ids_.end()) return it->second;
    nodes_.emplace_back();
    nodes_.back().value = *param;
    nodes_.back().requires_grad = requires_grad;
    const NodeId id = static_cast<NodeId>(nodes_.size()) - 1;
    leaf_ids_.emplace(param.get(), id);
    leaf_params_.emplace_back(param.get(), id);
    return id;
  }

  /// Creates an op node. requires_grad is inherited from the parents.
  NodeId make(Tensor value, const std::vector<NodeId>& parents,
              std::function<void(Tape&, NodeId)> backward_fn) {
    nodes_.emplace_back();
    Node& n = nodes_.back();
    n.value = std::move(value);
    for (NodeId p : parents) {
      if (nodes_[static_cast<size_t>(p)].requires_grad) {
        n.requires_grad = true;
        break;
      }
    }
    if (n.requires_grad) n.backward_fn = std::move(backward_fn);
    return static_cast<NodeId>(nodes_.size()) - 1;
  }

  const Tensor& value(NodeId id) const { return nodes_[static_cast<size_t>(id)].value; }
  Tensor& value(NodeId id) { return nodes_[static_cast<size_t>(id)].value; }

  bool requires_grad(NodeId id) const { return nodes_[static_cast<size_t>(id)].requires_grad; }

  /// Gradient buffer of a node, allocated (zeroed) on demand.
  Tensor& grad(NodeId id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (n.grad.empty() && n.value.numel() > 0) {
      const auto& s = n.value.shape();
      n.grad = Tensor(s[0], s[1], s[2], s[3]);
    }
    return n.grad;
  }

  bool has_grad(NodeId id) const { return !nodes_[static_cast<size_t>(id)].grad.empty(); }

  /// Adds g into the gradient of `id` if that node participates in autodiff.
  void accumulate(NodeId id, const Tensor& g) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (!n.requires_grad) return;
    Tensor& dst = grad(id);
    require_same_shape(dst, g, "Tape::accumulate");
    for (int64_t i = 0; i < g.numel(); ++i) dst[i] += g[i];
  }

  /// Runs reverse-mode accumulation from a scalar root.
  void backward(NodeId root) {
    if (value(root).numel() != 1) {
      throw ShapeError("Tape::backward: root must be scalar, got " + value(root).shape_str());
    }
    grad(root)[0] += 1.0;
    for (int64_t i = root; i >= 0; --i) {
      Node& n = nodes_[static_cast<size_t>(i)];
      if (n.requires_grad && !n.grad.empty() && n.backward_fn) {
        n.backward_fn(*this, static_cast<NodeId>(i));
      }
    }
  }

  /// Gradient of a leaf parameter, or nullptr if none was accumulated.
  const Tensor* leaf_grad(const std::shared_ptr<Tensor>& param) {
    auto it = leaf_ids_.find(param.get());
    if (it == leaf_ids_.end()) return nullptr;
    const Node& n = nodes_[static_cast<size_t>(it->second)];
    return n.grad.empty() ? nullptr : &n.grad;
  }

  size_t size() const { return nodes_.size(); }

 private:
  std::deque<Node> nodes_;
  std::unordered_map<const Tensor*, NodeId> leaf_ids_;
  std::vector<std::pair<const Tensor*, NodeId>> leaf_params_;
};

}  // namespace cdgan::ad
