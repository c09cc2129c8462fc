#pragma once

#include "qoie/numerics/tensor.hpp"

#include <cstdint>
#include <span>

namespace qoie {
class Rng;
}

namespace qoie::numerics {

// true = allowed. Rows index queries, columns index keys.
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Tensor add(const Tensor& a, const Tensor& b);
// Adds a 1×c row to every row of `a`.
Tensor add_row(const Tensor& a, const Tensor& row);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor matmul(const Tensor& a, const Tensor& b);
// a · bᵀ
Tensor matmul_transposed(const Tensor& a, const Tensor& b);
Tensor relu(const Tensor& a);
Tensor sum(const Tensor& a);

// Row-wise softmax with max subtraction. -inf entries map to exactly 0.
Tensor softmax_rows(const Tensor& a);

// Normalizes each row to zero mean and unit population variance, then applies
// gain and bias (both 1×cols).
Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);

// Embedding lookup: row i of the result is row ids[i] of `table`.
Tensor gather_rows(const Tensor& table, std::span<const int> ids);

Tensor concat_cols(std::span<const Tensor> parts);
Tensor slice_cols(const Tensor& a, Index start, Index count);

// Forbidden entries become -inf. Throws std::invalid_argument when a row has
// no allowed entry or the mask shape differs from `a`.
Tensor mask_add(const Tensor& a, const Mask& allowed);

// sum_i weights[i] * -log softmax(logits_i)[gold[i]], fused for stability.
// Rows with weight 0 are skipped; gold ids there are not checked.
Tensor cross_entropy(const Tensor& logits, std::span<const int> gold, std::span<const double> weights);

// sum_i weights[i] * -log probs(i, gold[i]) for rows that are already
// distributions.
Tensor nll_of_probabilities(const Tensor& probs, std::span<const int> gold,
                            std::span<const double> weights);

// Inverted dropout; identity when rate == 0.
Tensor dropout(const Tensor& a, double rate, Rng& rng);

}  // namespace qoie::numerics
