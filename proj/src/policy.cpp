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

#include "permsynth/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "permsynth/errors.hpp"

namespace permsynth {

std::size_t NetShape::parameter_count() const {
  std::size_t total = 0;
  int in = observation_size();
  for (int width : hidden) {
    total += static_cast<std::size_t>(in) * width + width;
    in = width;
  }
  total += static_cast<std::size_t>(in) * num_actions() + num_actions();
  total += static_cast<std::size_t>(in) + 1;
  return total;
}

void NetShape::validate() const {
  if (rows < 1 || cols < 1 || rows * cols < 2) {
    throw InvalidArgument("network lattice must have at least 2 nodes");
  }
  if (hidden.empty()) throw InvalidArgument("network needs a hidden layer");
  for (int w : hidden) {
    if (w < 1) throw InvalidArgument("hidden widths must be positive");
  }
}

template <typename Scalar>
void encode_observation(const Permutation& perm, const TopologyMask& mask,
                        std::span<Scalar> out) {
  const Lattice& lat = mask.lattice();
  const int n = lat.num_nodes();
  const int e = lat.num_edges();
  if (perm.size() != n) {
    throw InvalidArgument("permutation size " + std::to_string(perm.size()) +
                          " does not match lattice with " + std::to_string(n) +
                          " nodes");
  }
  if (static_cast<int>(out.size()) != n * n + n + e) {
    throw InvalidArgument("observation buffer has wrong size");
  }
  std::fill(out.begin(), out.end(), Scalar(0));
  for (NodeId v = 0; v < n; ++v) out[v * n + perm[v]] = Scalar(1);
  Scalar* nodes = out.data() + n * n;
  for (NodeId v = 0; v < n; ++v) nodes[v] = mask.node_active(v) ? 1 : 0;
  Scalar* edges = nodes + n;
  for (int k = 0; k < e; ++k) edges[k] = mask.edge_active(k) ? 1 : 0;
}

template void encode_observation<float>(const Permutation&, const TopologyMask&,
                                        std::span<float>);
template void encode_observation<double>(const Permutation&,
                                         const TopologyMask&,
                                         std::span<double>);

std::vector<float> encode(const Permutation& perm, const TopologyMask& mask) {
  const Lattice& lat = mask.lattice();
  std::vector<float> out(lat.num_nodes() * lat.num_nodes() + lat.num_nodes() +
                         lat.num_edges());
  encode_observation<float>(perm, mask, out);
  return out;
}

template <typename Scalar>
BasicPolicyNet<Scalar>::BasicPolicyNet(NetShape shape)
    : shape_(std::move(shape)) {
  shape_.validate();
  std::size_t offset = 0;
  auto add = [&](int in, int out) {
    Layer l{offset, offset + static_cast<std::size_t>(in) * out, in, out};
    offset = l.bias_offset + out;
    layers_.push_back(l);
  };
  int in = shape_.observation_size();
  for (int width : shape_.hidden) {
    add(in, width);
    in = width;
  }
  add(in, shape_.num_actions());
  add(in, 1);
  params_.assign(offset, Scalar(0));
}

template <typename Scalar>
BasicPolicyNet<Scalar> BasicPolicyNet<Scalar>::initialized(NetShape shape,
                                                           std::uint64_t seed) {
  BasicPolicyNet net(std::move(shape));
  net.seed_ = seed;
  Rng rng(seed);
  const std::size_t policy_head = net.layers_.size() - 2;
  for (std::size_t i = 0; i < net.layers_.size(); ++i) {
    const Layer& l = net.layers_[i];
    double bound = std::sqrt(3.0 / l.in);
    if (i == policy_head) bound *= 0.01;
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t k = 0; k < static_cast<std::size_t>(l.in) * l.out; ++k) {
      net.params_[l.weight_offset + k] = static_cast<Scalar>(dist(rng));
    }
  }
  return net;
}

template <typename Scalar>
void BasicPolicyNet<Scalar>::forward(const Matrix& obs, Workspace& ws) const {
  if (obs.cols() != shape_.observation_size()) {
    throw InvalidArgument("observation width " + std::to_string(obs.cols()) +
                          " does not match network input " +
                          std::to_string(shape_.observation_size()));
  }
  const std::size_t depth = shape_.hidden.size();
  ws.hidden.resize(depth);
  const Matrix* input = &obs;
  for (std::size_t i = 0; i < depth; ++i) {
    const Layer& l = layers_[i];
    Matrix& h = ws.hidden[i];
    h.noalias() = *input * weight(l).transpose();
    h.rowwise() += bias(l);
    h = h.array().tanh();
    input = &h;
  }
  const Layer& pl = layers_[depth];
  const Layer& vl = layers_[depth + 1];
  ws.logits.noalias() = *input * weight(pl).transpose();
  ws.logits.rowwise() += bias(pl);
  ws.values.noalias() = *input * weight(vl).row(0).transpose();
  ws.values.array() += params_[vl.bias_offset];
}

template <typename Scalar>
void BasicPolicyNet<Scalar>::backward(const Matrix& obs, const Workspace& ws,
                                      const Matrix& dlogits,
                                      const Vector& dvalues,
                                      std::span<Scalar> grad) const {
  if (grad.size() != params_.size()) {
    throw InvalidArgument("gradient buffer has wrong size");
  }
  using MutMap = Eigen::Map<Matrix>;
  using MutVecMap = Eigen::Map<Eigen::Matrix<Scalar, 1, Eigen::Dynamic>>;
  auto gw = [&](const Layer& l) {
    return MutMap(grad.data() + l.weight_offset, l.out, l.in);
  };
  auto gb = [&](const Layer& l) {
    return MutVecMap(grad.data() + l.bias_offset, l.out);
  };

  const std::size_t depth = shape_.hidden.size();
  const Layer& pl = layers_[depth];
  const Layer& vl = layers_[depth + 1];
  const Matrix& top = ws.hidden[depth - 1];

  gw(pl).noalias() += dlogits.transpose() * top;
  gb(pl) += dlogits.colwise().sum();
  gw(vl).row(0).noalias() += dvalues.transpose() * top;
  grad[vl.bias_offset] += dvalues.sum();

  Matrix dh = dlogits * weight(pl);
  dh.noalias() += dvalues * weight(vl).row(0);
  Matrix dz;
  for (std::size_t i = depth; i-- > 0;) {
    const Layer& l = layers_[i];
    const Matrix& h = ws.hidden[i];
    dz = dh.array() * (Scalar(1) - h.array().square());
    const Matrix& input = i == 0 ? obs : ws.hidden[i - 1];
    gw(l).noalias() += dz.transpose() * input;
    gb(l) += dz.colwise().sum();
    if (i > 0) dh.noalias() = dz * weight(l);
  }
}

template <typename Scalar>
typename BasicPolicyNet<Scalar>::Output BasicPolicyNet<Scalar>::forward(
    std::span<const Scalar> obs) const {
  Matrix x(1, static_cast<Eigen::Index>(obs.size()));
  std::copy(obs.begin(), obs.end(), x.data());
  Workspace ws;
  forward(x, ws);
  Output out;
  out.logits.assign(ws.logits.data(), ws.logits.data() + ws.logits.cols());
  out.value = ws.values(0);
  return out;
}

template class BasicPolicyNet<float>;
template class BasicPolicyNet<double>;

template <typename Scalar>
MaskedDistribution masked_distribution(std::span<const Scalar> logits,
                                       std::span<const std::uint8_t> flags) {
  if (logits.size() != flags.size()) {
    throw InvalidArgument("logit count does not match edge count");
  }
  double top = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t e = 0; e < logits.size(); ++e) {
    if (!flags[e]) continue;
    any = true;
    top = std::max(top, static_cast<double>(logits[e]));
  }
  if (!any) throw NoValidAction("no active edge to choose from");
  MaskedDistribution dist;
  dist.probs.assign(logits.size(), 0.0);
  double total = 0.0;
  for (std::size_t e = 0; e < logits.size(); ++e) {
    if (!flags[e]) continue;
    dist.probs[e] = std::exp(static_cast<double>(logits[e]) - top);
    total += dist.probs[e];
  }
  for (double& p : dist.probs) p /= total;
  return dist;
}

template MaskedDistribution masked_distribution<float>(
    std::span<const float>, std::span<const std::uint8_t>);
template MaskedDistribution masked_distribution<double>(
    std::span<const double>, std::span<const std::uint8_t>);

std::string to_string(InferenceMode mode) {
  return mode == InferenceMode::Greedy ? "greedy" : "sampling";
}

InferenceMode parse_inference_mode(const std::string& text) {
  if (text == "greedy") return InferenceMode::Greedy;
  if (text == "sampling") return InferenceMode::Sampling;
  throw InvalidArgument("unknown inference mode '" + text +
                        "' (expected greedy or sampling)");
}

int choose_action(const MaskedDistribution& dist, InferenceMode mode,
                  Rng& rng) {
  const int n = static_cast<int>(dist.probs.size());
  int best = -1;
  if (mode == InferenceMode::Greedy) {
    for (int e = 0; e < n; ++e) {
      if (dist.probs[e] > 0.0 && (best < 0 || dist.probs[e] > dist.probs[best])) {
        best = e;
      }
    }
  } else {
    const double u = uniform_real(rng);
    double cum = 0.0;
    for (int e = 0; e < n; ++e) {
      if (dist.probs[e] <= 0.0) continue;
      best = e;
      cum += dist.probs[e];
      if (u < cum) break;
    }
  }
  if (best < 0) throw NoValidAction("distribution has no support");
  return best;
}

void check_compatible(const NetShape& shape, const TopologyMask& mask) {
  if (mask.lattice().rows() != shape.rows ||
      mask.lattice().cols() != shape.cols) {
    throw InvalidArgument(
        "topology lattice " + std::to_string(mask.lattice().rows()) + "x" +
        std::to_string(mask.lattice().cols()) + " does not match model " +
        std::to_string(shape.rows) + "x" + std::to_string(shape.cols));
  }
}

int act(const PolicyNet& net, const Permutation& perm, const TopologyMask& mask,
        InferenceMode mode, Rng& rng) {
  check_compatible(net.shape(), mask);
  const std::vector<float> obs = encode(perm, mask);
  const auto out = net.forward(std::span<const float>(obs));
  if (mode == InferenceMode::Greedy) {
    // argmax of the logits equals argmax of the masked softmax
    int best = -1;
    for (int e : mask.active_edges()) {
      if (best < 0 || out.logits[e] > out.logits[best]) best = e;
    }
    if (best < 0) throw NoValidAction("no active edge to choose from");
    return best;
  }
  return choose_action(
      masked_distribution(std::span<const float>(out.logits), mask), mode, rng);
}

}  // namespace permsynth
