#pragma once

#include <optional>

#include "stablehash/types.hpp"

namespace stablehash {

/// Class-wise, label-regression and quantization losses over a batch of
/// hash activations T (L x batch). All three are plain sums over the
/// batch, so permuting samples never changes a value. Gradients are
/// returned alongside values so callers can verify them against finite
/// differences.

template <typename S>
struct ClassWiseResult {
  S value = S(0);
  MatrixX<S> grad_t;        // L x batch
  MatrixX<S> grad_centers;  // m x L
};

/// Negative log-likelihood of a Gaussian class-posterior over squared
/// Euclidean distances to the class centers:
///   -sum_i log softmax_j( -log sigma_j - d^2(T_i, c_j) / (2 sigma_j^2) )[y_i]
/// With a global sigma the -log sigma_j offsets cancel and are omitted.
template <typename S>
ClassWiseResult<S> class_wise_loss(const MatrixX<S>& t,
                                   const Eigen::VectorXi& labels,
                                   const MatrixX<S>& centers, S sigma2,
                                   const VectorX<S>* per_class_sigma2 = nullptr) {
  const Eigen::Index m = centers.rows();
  const Eigen::Index batch = t.cols();
  if (m < 1) throw InputError("class-wise loss needs at least one center");
  if (labels.size() != batch) throw InputError("labels/batch size mismatch");
  if (centers.cols() != t.rows()) throw InputError("center width != code length");
  if (sigma2 <= S(0)) throw InputError("sigma2 must be positive");
  for (Eigen::Index i = 0; i < batch; ++i) {
    if (labels[i] < 0 || labels[i] >= m) {
      throw InputError("label " + std::to_string(labels[i]) + " out of range [0," +
                       std::to_string(m) + ")");
    }
  }

  VectorX<S> alpha(m);     // 1 / (2 sigma_j^2)
  VectorX<S> offset(m);    // -log sigma_j (zero under a global sigma)
  if (per_class_sigma2) {
    if (per_class_sigma2->size() != m) {
      throw InputError("per-class sigma2 size mismatch");
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      const S s2 = (*per_class_sigma2)[j];
      if (s2 <= S(0)) throw InputError("per-class sigma2 must be positive");
      alpha[j] = S(1) / (S(2) * s2);
      offset[j] = -std::log(std::sqrt(s2));
    }
  } else {
    alpha.setConstant(S(1) / (S(2) * sigma2));
    offset.setZero();
  }

  // Squared distances d2(j, i) = ||T_i - c_j||^2 via the expansion
  // ||T||^2 + ||c||^2 - 2 c.T.
  const VectorX<S> center_norms = centers.rowwise().squaredNorm();
  const VectorX<S> t_norms = t.colwise().squaredNorm().transpose();
  MatrixX<S> logits = centers * t;  // m x batch, holds c.T for now
  for (Eigen::Index i = 0; i < batch; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const S d2 = center_norms[j] + t_norms[i] - S(2) * logits(j, i);
      logits(j, i) = offset[j] - alpha[j] * d2;
    }
  }

  ClassWiseResult<S> res;
  MatrixX<S> probs(m, batch);
  for (Eigen::Index i = 0; i < batch; ++i) {
    const S max_logit = logits.col(i).maxCoeff();
    const VectorX<S> e = (logits.col(i).array() - max_logit).exp();
    const S z = e.sum();
    probs.col(i) = e / z;
    res.value += std::log(z) + max_logit - logits(labels[i], i);
  }

  // dL/dlogits = p - onehot(y). With logits = offset - alpha*d2:
  //   dL/dT_i = -sum_j 2 alpha_j dlogits(j,i) (T_i - c_j)
  //   dL/dc_j = +sum_i 2 alpha_j dlogits(j,i) (T_i - c_j)
  MatrixX<S> dlogits = probs;
  for (Eigen::Index i = 0; i < batch; ++i) dlogits(labels[i], i) -= S(1);

  const VectorX<S> two_alpha = S(2) * alpha;
  const MatrixX<S> scaled = two_alpha.asDiagonal() * dlogits;  // m x batch
  const VectorX<S> col_sums = scaled.colwise().sum().transpose();
  const VectorX<S> row_sums = scaled.rowwise().sum();
  res.grad_t = centers.transpose() * scaled - t * col_sums.asDiagonal();
  res.grad_centers = scaled * t.transpose() - row_sums.asDiagonal() * centers;
  return res;
}

template <typename S>
struct RegressionResult {
  S value = S(0);
  MatrixX<S> grad_t;  // L x batch
  MatrixX<S> grad_w;  // m x L
};

/// sum_i || T_i - W^T y_i ||^2 with y_i one-hot, i.e. W^T y_i selects row
/// y_i of the m x L regression matrix.
template <typename S>
RegressionResult<S> regression_loss(const MatrixX<S>& t,
                                    const Eigen::VectorXi& labels,
                                    const MatrixX<S>& w) {
  const Eigen::Index batch = t.cols();
  if (labels.size() != batch) throw InputError("labels/batch size mismatch");
  if (w.cols() != t.rows()) throw InputError("regression width != code length");
  RegressionResult<S> res;
  res.grad_t.resize(t.rows(), batch);
  res.grad_w = MatrixX<S>::Zero(w.rows(), w.cols());
  for (Eigen::Index i = 0; i < batch; ++i) {
    const int y = labels[i];
    if (y < 0 || y >= w.rows()) throw InputError("label out of range");
    const VectorX<S> r = t.col(i) - w.row(y).transpose();
    res.value += r.squaredNorm();
    res.grad_t.col(i) = S(2) * r;
    res.grad_w.row(y) -= S(2) * r.transpose();
  }
  return res;
}

template <typename S>
struct QuantizationResult {
  S value = S(0);
  MatrixX<S> grad_t;  // L x batch
};

/// eta * sum_i || sgn(T_i) - T_i ||^2 with sgn(0) = +1 and the sign target
/// treated as a constant (no gradient through the binarization).
template <typename S>
QuantizationResult<S> quantization_loss(const MatrixX<S>& t, S eta) {
  if (eta <= S(0)) throw InputError("eta must be positive");
  QuantizationResult<S> res;
  const MatrixX<S> target =
      (t.array() >= S(0)).select(MatrixX<S>::Ones(t.rows(), t.cols()),
                                 -MatrixX<S>::Ones(t.rows(), t.cols()));
  const MatrixX<S> r = target - t;
  res.value = eta * r.squaredNorm();
  res.grad_t = -S(2) * eta * r;
  return res;
}

}  // namespace stablehash
