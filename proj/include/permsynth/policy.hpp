// Copyright 2026 The permsynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "permsynth/lattice.hpp"
#include "permsynth/permenv.hpp"
#include "permsynth/random.hpp"

namespace permsynth {

// Version of the observation layout below. Stored in model containers.
inline constexpr std::uint32_t kEncodingVersion = 1;

// Flat parameter / gradient storage with a fixed 64-byte alignment.
template <typename Scalar>
using ParamBuffer = std::vector<Scalar, Eigen::aligned_allocator<Scalar>>;

// Network geometry. Input width and action count follow from the lattice.
struct NetShape {
  int rows = 0;
  int cols = 0;
  std::vector<int> hidden = {512, 512, 512};

  int num_nodes() const { return rows * cols; }
  int num_actions() const { return rows * (cols - 1) + (rows - 1) * cols; }
  // [one-hot permutation N*N | node mask N | edge mask E]
  int observation_size() const {
    return num_nodes() * num_nodes() + num_nodes() + num_actions();
  }
  // sum over dense layers of in*out + out, including both heads.
  std::size_t parameter_count() const;
  void validate() const;

  friend bool operator==(const NetShape&, const NetShape&) = default;
};

// Writes the observation for (perm, mask) into `out`, which must have
// shape.observation_size() entries.
template <typename Scalar>
void encode_observation(const Permutation& perm, const TopologyMask& mask,
                        std::span<Scalar> out);

std::vector<float> encode(const Permutation& perm, const TopologyMask& mask);

// Three tanh hidden layers shared by a policy head (one logit per lattice
// edge) and a scalar value head. Parameters live in one flat buffer in
// declared order: hidden layers, policy head, value head; each layer is its
// weight matrix (out x in, row-major) followed by its bias.
template <typename Scalar>
class BasicPolicyNet {
 public:
  using Matrix =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  // Forward-pass cache, reusable across calls to avoid reallocation.
  struct Workspace {
    std::vector<Matrix> hidden;  // post-activation output of each trunk layer
    Matrix logits;               // batch x actions
    Vector values;               // batch
  };

  // All parameters zero.
  explicit BasicPolicyNet(NetShape shape);
  // Uniform fan-in initialisation; policy head scaled by 0.01.
  static BasicPolicyNet initialized(NetShape shape, std::uint64_t seed);

  const NetShape& shape() const { return shape_; }
  std::size_t parameter_count() const { return params_.size(); }
  std::span<const Scalar> parameters() const { return params_; }
  std::span<Scalar> parameters() { return params_; }
  std::uint64_t seed() const { return seed_; }
  void set_seed(std::uint64_t seed) { seed_ = seed; }

  // Rows of `obs` are observations.
  void forward(const Matrix& obs, Workspace& ws) const;

  // Adds dLoss/dparams into `grad` given the upstream gradients of a loss
  // with respect to the logits and values produced by forward(obs, ws).
  void backward(const Matrix& obs, const Workspace& ws, const Matrix& dlogits,
                const Vector& dvalues, std::span<Scalar> grad) const;

  struct Output {
    std::vector<Scalar> logits;
    Scalar value{};
  };
  Output forward(std::span<const Scalar> obs) const;

  template <typename Other>
  BasicPolicyNet<Other> cast() const {
    BasicPolicyNet<Other> out(shape_);
    auto dst = out.parameters();
    for (std::size_t i = 0; i < params_.size(); ++i) {
      dst[i] = static_cast<Other>(params_[i]);
    }
    out.set_seed(seed_);
    return out;
  }

  friend bool operator==(const BasicPolicyNet& x, const BasicPolicyNet& y) {
    return x.shape_ == y.shape_ && x.params_ == y.params_;
  }

  struct Layer {
    std::size_t weight_offset;
    std::size_t bias_offset;
    int in;
    int out;
  };
  // Trunk layers, then the policy head, then the value head.
  const std::vector<Layer>& layers() const { return layers_; }

 private:
  using ConstMap = Eigen::Map<const Matrix>;
  using ConstVecMap = Eigen::Map<const Eigen::Matrix<Scalar, 1, Eigen::Dynamic>>;
  ConstMap weight(const Layer& l) const {
    return ConstMap(params_.data() + l.weight_offset, l.out, l.in);
  }
  ConstVecMap bias(const Layer& l) const {
    return ConstVecMap(params_.data() + l.bias_offset, l.out);
  }

  NetShape shape_;
  // Fixed alignment keeps Eigen's vectorized reductions on parameter slices
  // in the same order from run to run.
  ParamBuffer<Scalar> params_;
  std::vector<Layer> layers_;
  std::uint64_t seed_ = 0;
};

using PolicyNet = BasicPolicyNet<float>;

// Softmax restricted to active edges. Inactive edges get probability 0.
struct MaskedDistribution {
  std::vector<double> probs;
};

template <typename Scalar>
MaskedDistribution masked_distribution(std::span<const Scalar> logits,
                                       std::span<const std::uint8_t> edge_flags);

template <typename Scalar>
MaskedDistribution masked_distribution(std::span<const Scalar> logits,
                                       const TopologyMask& mask) {
  return masked_distribution(logits, mask.edge_flags());
}

enum class InferenceMode { Greedy, Sampling };

std::string to_string(InferenceMode mode);
InferenceMode parse_inference_mode(const std::string& text);

// Greedy picks the most probable edge (lowest index on ties); sampling draws
// from the distribution. Never returns a zero-probability edge.
int choose_action(const MaskedDistribution& dist, InferenceMode mode, Rng& rng);

int act(const PolicyNet& net, const Permutation& perm, const TopologyMask& mask,
        InferenceMode mode, Rng& rng);

// Throws InvalidArgument unless perm/mask live on the net's lattice.
void check_compatible(const NetShape& shape, const TopologyMask& mask);

}  // namespace permsynth
