#pragma once

#include "hjreach/common.hpp"

#include <cstdint>
#include <vector>

namespace hjreach {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Dense sine-activated MLP: hidden layers h = sin(omega0 * (W h + b)),
/// linear scalar output. weights[l] is (layer_sizes[l+1] x layer_sizes[l]).
template <typename Scalar>
struct BasicNetParams {
  std::vector<int> layer_sizes;
  double omega0 = 30.0;
  std::vector<Mat<Scalar>> weights;
  std::vector<Vec<Scalar>> biases;

  int input_dim() const { return layer_sizes.front(); }
  int num_layers() const { return static_cast<int>(weights.size()); }
  std::size_t weight_count() const;
  std::size_t bias_count() const;
  std::size_t parameter_count() const { return weight_count() + bias_count(); }

  /// Zero-valued parameters with the same architecture.
  BasicNetParams zeros_like() const;
  void set_zero();
  /// this += scale * other
  void axpy(Scalar scale, const BasicNetParams& other);
  /// Flat view in checkpoint order: weights (layer order, row-major) then biases.
  std::vector<Scalar> flatten() const;
  void unflatten(const std::vector<Scalar>& flat);

  template <typename Other>
  BasicNetParams<Other> cast() const;

  void validate() const;
  bool all_finite() const;
};

using NetParams = BasicNetParams<double>;
using NetParamsF = BasicNetParams<float>;

/// Output o and its gradient with respect to the (normalized) input.
struct NetEval {
  double output = 0.0;
  Eigen::VectorXd input_grad;
};

/// Standard sine-network initialization: first layer U(-1/d, 1/d), later
/// layers U(-sqrt(6/d)/omega0, sqrt(6/d)/omega0), zero biases.
NetParams init_params(std::uint64_t seed, const std::vector<int>& layer_sizes, double omega0 = 30.0);

/// Batched evaluation engine. Holds the activations of the last forward()
/// so that backward() can differentiate losses of the form
/// sum_i Phi(o_i, do_i/dz).
///
/// Inputs are column-major (input_dim x batch). Input gradients use the same
/// layout. Tangents are propagated forward (one column per input
/// dimension and sample) and reverse-mode differentiation runs through both
/// the primal and tangent passes.
template <typename Scalar>
class SirenWorkspace {
 public:
  using Params = BasicNetParams<Scalar>;

  void forward(const Params& params, const Mat<Scalar>& inputs, bool with_input_grad);

  const Vec<Scalar>& outputs() const { return outputs_; }
  /// (input_dim x batch); valid only after forward(..., true).
  const Mat<Scalar>& input_grads() const { return input_grads_; }
  Eigen::Index batch_size() const { return outputs_.size(); }

  /// Accumulates d(sum_i Phi_i)/dtheta into `grad`, given per-sample
  /// adjoints dPhi/do (length batch) and dPhi/d(do/dz) (input_dim x batch,
  /// may be null when Phi ignores the input gradient).
  void backward(const Params& params, const Vec<Scalar>& output_adjoint, const Mat<Scalar>* input_grad_adjoint,
                Params& grad) const;

 private:
  bool with_grad_ = false;
  Mat<Scalar> inputs_;
  std::vector<Mat<Scalar>> hidden_;     // sin(omega a_l), (width x B)
  std::vector<Mat<Scalar>> cosines_;    // cos(omega a_l), (width x B)
  std::vector<Mat<Scalar>> tangents_;   // W_l D_{l-1}, (width x B*K)
  std::vector<Mat<Scalar>> dhidden_;    // omega cos(omega a_l) .* T_l, (width x B*K)
  Vec<Scalar> outputs_;
  Mat<Scalar> input_grads_;
};

/// Single-sample conveniences (double precision).
double forward(const NetParams& params, const Eigen::VectorXd& z);
NetEval forward_with_grad(const NetParams& params, const Eigen::VectorXd& z);
Eigen::VectorXd forward_batch(const NetParams& params, const Eigen::MatrixXd& inputs);

/// Gradient of sum_i Phi(o_i, do_i/dz) for the given per-sample adjoints.
/// `output_adjoints` has one entry per column of `batch`; `grad_adjoints`
/// is (input_dim x batch).
NetParams param_gradient(const NetParams& params, const Eigen::MatrixXd& batch, const Eigen::VectorXd& output_adjoints,
                         const Eigen::MatrixXd& grad_adjoints);

extern template struct BasicNetParams<double>;
extern template struct BasicNetParams<float>;
extern template class SirenWorkspace<double>;
extern template class SirenWorkspace<float>;

}  // namespace hjreach
