#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "senca/tensor.hpp"

namespace senca {

class Tape;

// Handle to a tensor recorded on a tape.
struct Value {
    int id = -1;

    bool valid() const { return id >= 0; }
};

// Sparse row mixer: out_i = sum_j weight_ij * in_j. Used for the normalized
// adjacency product in the graph transformer.
struct RowMix {
    // entries[i] = list of (source row, weight)
    std::vector<std::vector<std::pair<int, double>>> entries;
};

// Records forward operations and replays them in reverse for gradients.
// Single-threaded per instance; recorded tensors are immutable.
class Tape {
public:
    // Leaf without a gradient requirement (inputs, masks, fixed matrices).
    Value constant(Tensor v);
    // Leaf that participates in backward (trainable parameters).
    Value param(Tensor v);

    // C = A * B
    Value matmul(Value a, Value b);
    // C = A * B^T
    Value matmul_nt(Value a, Value b);

    Value add(Value a, Value b);
    Value sub(Value a, Value b);
    Value mul(Value a, Value b);
    Value scale(Value a, double s);
    // A[m x n] + bias[1 x n] broadcast over rows
    Value add_row(Value a, Value bias);

    Value elu(Value a);
    Value softmax_rows(Value a);
    Value layer_norm(Value x, Value gain, Value bias, double eps = 1e-5);

    // Inverted dropout: zero with probability p, survivors scaled by 1/(1-p).
    // Identity in eval mode and for p == 0.
    Value dropout(Value a, double p, uint64_t rng_seed, bool training);

    Value mse(Value a, Value b);  // 1x1 mean squared difference
    Value sum(Value a);           // 1x1
    Value row_sums(Value a);      // m x n -> m x 1
    Value logsumexp_rows(Value a);
    Value l2_normalize_rows(Value a);

    Value gather_rows(Value a, std::vector<int> idx);
    Value concat_rows(const std::vector<Value>& parts);
    Value concat_cols(Value a, Value b);
    // Mean of member rows per group; groups must be non-empty.
    Value mean_rows_by_group(Value a, std::vector<std::vector<int>> groups);
    Value row_mix(Value a, RowMix mix);

    // Reverse pass from a scalar loss. Visits recorded operations in strict
    // reverse order; gradients of non-participating tensors stay zero.
    void backward(Value loss);

    const Tensor& value(Value v) const { return nodes_[v.id].value; }
    // Zero tensor of the node's shape when the node did not participate.
    Tensor grad(Value v) const;

    size_t size() const { return nodes_.size(); }
    void clear();

private:
    struct Node {
        Tensor value;
        bool requires_grad = false;
        std::function<void(Tape&, const Tensor&)> backward;  // empty for leaves
    };

    Value push(Tensor value, bool requires_grad,
               std::function<void(Tape&, const Tensor&)> back);
    bool needs_grad(Value v) const { return nodes_[v.id].requires_grad; }
    Tensor& grad_buf(int id);
    void add_grad(int id, const Tensor& g);

    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;
    std::vector<char> grad_set_;
    friend struct TapeBackdoor;
};

}  // namespace senca
