#include "hjreach/siren.hpp"

#include "hjreach/rng.hpp"

#include <cmath>
#include <string>

namespace hjreach {

template <typename Scalar>
std::size_t BasicNetParams<Scalar>::weight_count() const {
  std::size_t n = 0;
  for (const auto& w : weights) n += static_cast<std::size_t>(w.size());
  return n;
}

template <typename Scalar>
std::size_t BasicNetParams<Scalar>::bias_count() const {
  std::size_t n = 0;
  for (const auto& b : biases) n += static_cast<std::size_t>(b.size());
  return n;
}

template <typename Scalar>
BasicNetParams<Scalar> BasicNetParams<Scalar>::zeros_like() const {
  BasicNetParams out = *this;
  out.set_zero();
  return out;
}

template <typename Scalar>
void BasicNetParams<Scalar>::set_zero() {
  for (auto& w : weights) w.setZero();
  for (auto& b : biases) b.setZero();
}

template <typename Scalar>
void BasicNetParams<Scalar>::axpy(Scalar scale, const BasicNetParams& other) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] += scale * other.weights[l];
    biases[l] += scale * other.biases[l];
  }
}

template <typename Scalar>
std::vector<Scalar> BasicNetParams<Scalar>::flatten() const {
  std::vector<Scalar> flat;
  flat.reserve(parameter_count());
  for (const auto& w : weights) {
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) flat.push_back(w(r, c));
    }
  }
  for (const auto& b : biases) {
    for (Eigen::Index i = 0; i < b.size(); ++i) flat.push_back(b(i));
  }
  return flat;
}

template <typename Scalar>
void BasicNetParams<Scalar>::unflatten(const std::vector<Scalar>& flat) {
  if (flat.size() != parameter_count()) {
    throw ContractError("unflatten: expected " + std::to_string(parameter_count()) + " values, got " +
                        std::to_string(flat.size()));
  }
  std::size_t k = 0;
  for (auto& w : weights) {
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = flat[k++];
    }
  }
  for (auto& b : biases) {
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = flat[k++];
  }
}

template <typename Scalar>
template <typename Other>
BasicNetParams<Other> BasicNetParams<Scalar>::cast() const {
  BasicNetParams<Other> out;
  out.layer_sizes = layer_sizes;
  out.omega0 = omega0;
  for (const auto& w : weights) out.weights.push_back(w.template cast<Other>());
  for (const auto& b : biases) out.biases.push_back(b.template cast<Other>());
  return out;
}

template <typename Scalar>
void BasicNetParams<Scalar>::validate() const {
  if (layer_sizes.size() < 3) throw ContractError("network needs an input, at least one hidden layer and an output");
  if (layer_sizes.back() != 1) throw ContractError("network output width must be 1");
  if (weights.size() + 1 != layer_sizes.size() || biases.size() != weights.size()) {
    throw ContractError("network layer count does not match layer_sizes");
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != layer_sizes[l + 1] || weights[l].cols() != layer_sizes[l] ||
        biases[l].size() != layer_sizes[l + 1]) {
      throw ContractError("network layer " + std::to_string(l) + " has inconsistent shape");
    }
  }
  if (!std::isfinite(omega0)) throw ContractError("omega0 must be finite");
}

template <typename Scalar>
bool BasicNetParams<Scalar>::all_finite() const {
  for (const auto& w : weights) {
    if (!w.allFinite()) return false;
  }
  for (const auto& b : biases) {
    if (!b.allFinite()) return false;
  }
  return true;
}

template struct BasicNetParams<double>;
template struct BasicNetParams<float>;
template BasicNetParams<float> BasicNetParams<double>::cast<float>() const;
template BasicNetParams<double> BasicNetParams<float>::cast<double>() const;
template BasicNetParams<double> BasicNetParams<double>::cast<double>() const;
template BasicNetParams<float> BasicNetParams<float>::cast<float>() const;

NetParams init_params(std::uint64_t seed, const std::vector<int>& layer_sizes, double omega0) {
  if (layer_sizes.empty()) throw ContractError("init_params: empty layer list");
  for (int s : layer_sizes) {
    if (s <= 0) throw ContractError("init_params: layer sizes must be positive");
  }
  NetParams p;
  p.layer_sizes = layer_sizes;
  p.omega0 = omega0;
  Rng rng(splitmix64(seed));
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const int d_in = layer_sizes[l];
    const int d_out = layer_sizes[l + 1];
    const double bound = l == 0 ? 1.0 / d_in : std::sqrt(6.0 / d_in) / omega0;
    Eigen::MatrixXd w(d_out, d_in);
    for (int r = 0; r < d_out; ++r) {
      for (int c = 0; c < d_in; ++c) w(r, c) = rng.uniform(-bound, bound);
    }
    p.weights.push_back(std::move(w));
    p.biases.push_back(Eigen::VectorXd::Zero(d_out));
  }
  p.validate();
  return p;
}

// ---------------------------------------------------------------------------

template <typename Scalar>
void SirenWorkspace<Scalar>::forward(const Params& params, const Mat<Scalar>& inputs, bool with_input_grad) {
  if (params.num_layers() < 2) throw ContractError("siren forward: network needs at least one hidden layer");
  const int d0 = params.input_dim();
  if (inputs.rows() != d0) {
    throw ContractError("siren forward: input has " + std::to_string(inputs.rows()) + " rows, network expects " +
                        std::to_string(d0));
  }
  const Eigen::Index batch = inputs.cols();
  const int hidden_layers = params.num_layers() - 1;
  const auto omega = static_cast<Scalar>(params.omega0);
  const Eigen::Index k_dim = d0;

  with_grad_ = with_input_grad;
  inputs_ = inputs;
  hidden_.resize(hidden_layers);
  cosines_.resize(hidden_layers);
  tangents_.resize(with_input_grad ? hidden_layers : 0);
  dhidden_.resize(with_input_grad ? hidden_layers : 0);

  for (int l = 0; l < hidden_layers; ++l) {
    const Mat<Scalar>& prev = l == 0 ? inputs_ : hidden_[l - 1];
    Mat<Scalar> pre = params.weights[l] * prev;
    pre.colwise() += params.biases[l];
    pre *= omega;
    hidden_[l] = pre.array().sin().matrix();
    cosines_[l] = pre.array().cos().matrix();

    if (with_input_grad) {
      Mat<Scalar>& tangent = tangents_[l];
      if (l == 0) {
        // D_0 columns are unit vectors, so W_0 D_0 replicates W_0 per sample.
        tangent.resize(params.weights[0].rows(), batch * k_dim);
        for (Eigen::Index b = 0; b < batch; ++b) tangent.middleCols(b * k_dim, k_dim) = params.weights[0];
      } else {
        tangent.noalias() = params.weights[l] * dhidden_[l - 1];
      }
      Mat<Scalar>& dh = dhidden_[l];
      dh.resize(tangent.rows(), tangent.cols());
      for (Eigen::Index b = 0; b < batch; ++b) {
        const auto scale = (omega * cosines_[l].col(b)).eval();
        for (Eigen::Index k = 0; k < k_dim; ++k) {
          dh.col(b * k_dim + k) = scale.cwiseProduct(tangent.col(b * k_dim + k));
        }
      }
    }
  }

  const auto& w_out = params.weights.back();
  outputs_ = (w_out * hidden_.back()).transpose();
  outputs_.array() += params.biases.back()(0);

  if (with_input_grad) {
    const Mat<Scalar> flat = w_out * dhidden_.back();  // 1 x (B*K), column b*K + k
    input_grads_ = Eigen::Map<const Mat<Scalar>>(flat.data(), k_dim, batch);
  } else {
    input_grads_.resize(0, 0);
  }
}

template <typename Scalar>
void SirenWorkspace<Scalar>::backward(const Params& params, const Vec<Scalar>& output_adjoint,
                                      const Mat<Scalar>* input_grad_adjoint, Params& grad) const {
  const Eigen::Index batch = outputs_.size();
  const Eigen::Index k_dim = params.input_dim();
  if (output_adjoint.size() != batch) {
    throw ContractError("siren backward: output adjoint length " + std::to_string(output_adjoint.size()) +
                        " does not match batch " + std::to_string(batch));
  }
  const bool tangent_terms = input_grad_adjoint != nullptr;
  if (tangent_terms) {
    if (!with_grad_) throw ContractError("siren backward: input-gradient adjoints need forward(..., true)");
    if (input_grad_adjoint->rows() != k_dim || input_grad_adjoint->cols() != batch) {
      throw ContractError("siren backward: input-gradient adjoint must be input_dim x batch");
    }
  }
  const auto omega = static_cast<Scalar>(params.omega0);
  const int last = params.num_layers() - 1;

  // Output layer (linear).
  const Mat<Scalar>& h_last = hidden_.back();
  grad.weights[last].noalias() += (h_last * output_adjoint).transpose();
  grad.biases[last](0) += output_adjoint.sum();
  Mat<Scalar> h_bar = params.weights[last].transpose() * output_adjoint.transpose();
  Mat<Scalar> d_bar;
  if (tangent_terms) {
    const Eigen::Map<const Mat<Scalar>> g_flat(input_grad_adjoint->data(), 1, batch * k_dim);
    grad.weights[last].noalias() += (dhidden_.back() * g_flat.transpose()).transpose();
    d_bar.noalias() = params.weights[last].transpose() * g_flat;
  }

  for (int l = last - 1; l >= 0; --l) {
    const Mat<Scalar>& cosine = cosines_[l];
    const Mat<Scalar>& sine = hidden_[l];
    Mat<Scalar> a_bar = omega * cosine.cwiseProduct(h_bar);
    Mat<Scalar> t_bar;
    if (tangent_terms) {
      const Mat<Scalar>& tangent = tangents_[l];
      t_bar.resize(d_bar.rows(), d_bar.cols());
      Mat<Scalar> curvature = Mat<Scalar>::Zero(sine.rows(), batch);
      for (Eigen::Index b = 0; b < batch; ++b) {
        const auto scale = (omega * cosine.col(b)).eval();
        for (Eigen::Index k = 0; k < k_dim; ++k) {
          const Eigen::Index c = b * k_dim + k;
          t_bar.col(c) = scale.cwiseProduct(d_bar.col(c));
          curvature.col(b) += tangent.col(c).cwiseProduct(d_bar.col(c));
        }
      }
      a_bar -= (omega * omega) * sine.cwiseProduct(curvature);
    }

    const Mat<Scalar>& h_prev = l == 0 ? inputs_ : hidden_[l - 1];
    grad.weights[l].noalias() += a_bar * h_prev.transpose();
    grad.biases[l] += a_bar.rowwise().sum();
    if (tangent_terms) {
      if (l == 0) {
        for (Eigen::Index b = 0; b < batch; ++b) grad.weights[0] += t_bar.middleCols(b * k_dim, k_dim);
      } else {
        grad.weights[l].noalias() += t_bar * dhidden_[l - 1].transpose();
      }
    }
    if (l > 0) {
      h_bar.noalias() = params.weights[l].transpose() * a_bar;
      if (tangent_terms) d_bar.noalias() = params.weights[l].transpose() * t_bar;
    }
  }
}

template class SirenWorkspace<double>;
template class SirenWorkspace<float>;

// ---------------------------------------------------------------------------

double forward(const NetParams& params, const Eigen::VectorXd& z) {
  SirenWorkspace<double> ws;
  ws.forward(params, z, false);
  return ws.outputs()(0);
}

NetEval forward_with_grad(const NetParams& params, const Eigen::VectorXd& z) {
  SirenWorkspace<double> ws;
  ws.forward(params, z, true);
  return {ws.outputs()(0), ws.input_grads().col(0)};
}

Eigen::VectorXd forward_batch(const NetParams& params, const Eigen::MatrixXd& inputs) {
  SirenWorkspace<double> ws;
  ws.forward(params, inputs, false);
  return ws.outputs();
}

NetParams param_gradient(const NetParams& params, const Eigen::MatrixXd& batch, const Eigen::VectorXd& output_adjoints,
                         const Eigen::MatrixXd& grad_adjoints) {
  if (output_adjoints.size() != batch.cols() || grad_adjoints.cols() != batch.cols() ||
      grad_adjoints.rows() != params.input_dim()) {
    throw ContractError("param_gradient: adjoint shapes do not match the batch");
  }
  SirenWorkspace<double> ws;
  ws.forward(params, batch, true);
  NetParams grad = params.zeros_like();
  ws.backward(params, output_adjoints, &grad_adjoints, grad);
  return grad;
}

}  // namespace hjreach
