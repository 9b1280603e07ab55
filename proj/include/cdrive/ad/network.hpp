#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "cdrive/ad/params.hpp"
#include "cdrive/ad/tape.hpp"

namespace cdrive::ad {

enum class Activation { identity, relu, tanh };

struct Dense {
  int in = 0;
  int out = 0;
  Activation act = Activation::identity;
};

/// Gated recurrent cell (reset/update/new gates, PyTorch layout). Consumes
/// the sequence input and emits the final hidden state. Must come first.
struct Gru {
  int in = 0;
  int hidden = 0;
};

/// Prepends the auxiliary input: [aux, current].
struct Concat {
  int aux_dim = 0;
};

struct SoftmaxGroup {
  int start = 0;
  int count = 0;
};

struct SigmoidGroup {
  int start = 0;
  int count = 0;
};

using Layer = std::variant<Dense, Gru, Concat, SoftmaxGroup, SigmoidGroup>;

struct NetworkSpec {
  std::string name;  // parameter prefix
  std::vector<Layer> layers;

  bool takes_sequence() const;
  int input_dim() const;
  int output_dim() const;
  /// Throws std::invalid_argument when adjacent widths disagree.
  void validate() const;
};

/// Rows are batch entries. `sequence` feeds a leading Gru layer (one matrix
/// per step, batch x in); otherwise `single` is the input. `aux` has either
/// one row (broadcast) or one row per batch entry.
struct NetworkInput {
  Matrix single;
  std::vector<Matrix> sequence;
  Matrix aux;
};

/// Adds the spec's arrays to `params`, uniform in +-1/sqrt(fan_in). With
/// `zero_last` the final dense layer starts at zero.
void init_params(const NetworkSpec& spec, ParamSet& params, std::uint64_t seed, bool zero_last = false);

/// Records the forward pass on `tape`.
Var forward(Tape& tape, const NetworkSpec& spec, const ParamSet& params, const NetworkInput& input);
Var forward(Tape& tape, const NetworkSpec& spec, const ParamSet& params, Var single, Var aux = {});
/// Sequence network whose auxiliary input is itself a recorded value.
Var forward(Tape& tape, const NetworkSpec& spec, const ParamSet& params, const std::vector<Matrix>& sequence, Var aux);

Matrix evaluate(const NetworkSpec& spec, const ParamSet& params, const NetworkInput& input);
inline Matrix evaluate(const NetworkSpec& spec, const ParamSet& params, const Matrix& single) {
  return evaluate(spec, params, NetworkInput{single, {}, {}});
}

/// Maps the network output to a scalar loss.
using LossHead = std::function<Var(Var output)>;

/// Gradients of the loss with respect to trainable arrays of the spec.
/// Throws std::invalid_argument when the head is not scalar.
Gradients gradients(const NetworkSpec& spec, const ParamSet& params, const NetworkInput& input,
                    const LossHead& head);

}  // namespace cdrive::ad
