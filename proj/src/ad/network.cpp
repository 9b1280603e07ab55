#include "cdrive/ad/network.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace cdrive::ad {

namespace {

std::string key(const NetworkSpec& spec, std::size_t i, const char* what) {
  return spec.name + "." + std::to_string(i) + "." + what;
}

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

}  // namespace

bool NetworkSpec::takes_sequence() const {
  return !layers.empty() && std::holds_alternative<Gru>(layers.front());
}

int NetworkSpec::input_dim() const {
  if (layers.empty()) throw std::invalid_argument("network '" + name + "' has no layers");
  return std::visit(overloaded{[](const Dense& d) { return d.in; }, [](const Gru& g) { return g.in; },
                               [](const Concat&) { return -1; }, [](const SoftmaxGroup&) { return -1; },
                               [](const SigmoidGroup&) { return -1; }},
                    layers.front());
}

void NetworkSpec::validate() const {
  if (layers.empty()) throw std::invalid_argument("network '" + name + "' has no layers");
  int width = input_dim();
  if (width <= 0) throw std::invalid_argument("network '" + name + "' must start with a dense or recurrent layer");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    const std::string where = "network '" + name + "' layer " + std::to_string(i);
    if (const auto* d = std::get_if<Dense>(&l)) {
      if (d->in != width || d->out <= 0) throw std::invalid_argument(where + ": width mismatch");
      width = d->out;
    } else if (const auto* g = std::get_if<Gru>(&l)) {
      if (i != 0) throw std::invalid_argument(where + ": recurrent layer must be first");
      if (g->hidden <= 0) throw std::invalid_argument(where + ": bad hidden size");
      width = g->hidden;
    } else if (const auto* c = std::get_if<Concat>(&l)) {
      if (c->aux_dim <= 0) throw std::invalid_argument(where + ": bad aux width");
      width += c->aux_dim;
    } else {
      const auto [start, count] = std::visit(
          overloaded{[](const SoftmaxGroup& s) { return std::pair{s.start, s.count}; },
                     [](const SigmoidGroup& s) { return std::pair{s.start, s.count}; },
                     [](const auto&) { return std::pair{0, 0}; }},
          l);
      if (start < 0 || count <= 0 || start + count > width) throw std::invalid_argument(where + ": group out of range");
    }
  }
}

int NetworkSpec::output_dim() const {
  validate();
  int width = input_dim();
  for (const auto& l : layers) {
    if (const auto* d = std::get_if<Dense>(&l)) width = d->out;
    else if (const auto* g = std::get_if<Gru>(&l)) width = g->hidden;
    else if (const auto* c = std::get_if<Concat>(&l)) width += c->aux_dim;
  }
  return width;
}

void init_params(const NetworkSpec& spec, ParamSet& params, std::uint64_t seed, bool zero_last) {
  spec.validate();
  std::mt19937_64 rng(seed);
  auto uniform = [&](int rows, int cols, double bound) {
    std::uniform_real_distribution<double> u(-bound, bound);
    Matrix m(rows, cols);
    // column-major fill; the order is part of the seed contract
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = u(rng);
    return m;
  };
  std::size_t last_dense = spec.layers.size();
  for (std::size_t i = 0; i < spec.layers.size(); ++i)
    if (std::holds_alternative<Dense>(spec.layers[i])) last_dense = i;

  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    if (const auto* d = std::get_if<Dense>(&l)) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(d->in));
      if (zero_last && i == last_dense) {
        params.add(key(spec, i, "W"), Matrix::Zero(d->in, d->out));
        params.add(key(spec, i, "b"), Matrix::Zero(1, d->out));
      } else {
        params.add(key(spec, i, "W"), uniform(d->in, d->out, bound));
        params.add(key(spec, i, "b"), uniform(1, d->out, bound));
      }
    } else if (const auto* g = std::get_if<Gru>(&l)) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(g->hidden));
      params.add(key(spec, i, "Wx"), uniform(g->in, 3 * g->hidden, bound));
      params.add(key(spec, i, "Wh"), uniform(g->hidden, 3 * g->hidden, bound));
      params.add(key(spec, i, "bx"), uniform(1, 3 * g->hidden, bound));
      params.add(key(spec, i, "bh"), uniform(1, 3 * g->hidden, bound));
    }
  }
}

namespace {

Var apply_activation(Var x, Activation a) {
  switch (a) {
    case Activation::relu: return relu(x);
    case Activation::tanh: return tanh(x);
    case Activation::identity: break;
  }
  return x;
}

Var run_gru(Tape& t, const NetworkSpec& spec, std::size_t i, const Gru& g, const ParamSet& params,
            const std::vector<Matrix>& seq) {
  if (seq.empty()) throw std::invalid_argument("network '" + spec.name + "': empty sequence");
  const Eigen::Index batch = seq.front().rows();
  const Var wx = t.param(params, key(spec, i, "Wx"));
  const Var wh = t.param(params, key(spec, i, "Wh"));
  const Var bx = t.param(params, key(spec, i, "bx"));
  const Var bh = t.param(params, key(spec, i, "bh"));
  const int hd = g.hidden;
  Var h = t.constant(Matrix::Zero(batch, hd));
  for (const auto& step : seq) {
    if (step.cols() != g.in || step.rows() != batch)
      throw std::invalid_argument("network '" + spec.name + "': sequence step has wrong shape");
    const Var x = t.constant(step);
    const Var gx = add_row(matmul(x, wx), bx);
    const Var gh = add_row(matmul(h, wh), bh);
    const Var r = sigmoid(add(slice_cols(gx, 0, hd), slice_cols(gh, 0, hd)));
    const Var z = sigmoid(add(slice_cols(gx, hd, hd), slice_cols(gh, hd, hd)));
    const Var n = tanh(add(slice_cols(gx, 2 * hd, hd), mul(r, slice_cols(gh, 2 * hd, hd))));
    h = add(mul(one_minus(z), n), mul(z, h));
  }
  return h;
}

Var run_layers(Tape& t, const NetworkSpec& spec, const ParamSet& params, Var cur, Var aux, std::size_t from) {
  for (std::size_t i = from; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    if (const auto* d = std::get_if<Dense>(&l)) {
      if (cur.cols() != d->in) throw std::invalid_argument("network '" + spec.name + "': input width mismatch");
      cur = apply_activation(add_row(matmul(cur, t.param(params, key(spec, i, "W"))),
                                     t.param(params, key(spec, i, "b"))),
                             d->act);
    } else if (const auto* c = std::get_if<Concat>(&l)) {
      if (aux.tape == nullptr || aux.cols() != c->aux_dim)
        throw std::invalid_argument("network '" + spec.name + "': auxiliary input width mismatch");
      Var a = aux;
      if (a.rows() == 1 && cur.rows() != 1) a = repeat_rows(a, cur.rows());
      if (a.rows() != cur.rows()) throw std::invalid_argument("network '" + spec.name + "': auxiliary batch mismatch");
      cur = concat_cols({a, cur});
    } else if (const auto* s = std::get_if<SoftmaxGroup>(&l)) {
      cur = softmax_cols(cur, s->start, s->count);
    } else if (const auto* s = std::get_if<SigmoidGroup>(&l)) {
      cur = sigmoid_cols(cur, s->start, s->count);
    } else {
      throw std::invalid_argument("network '" + spec.name + "': recurrent layer must be first");
    }
  }
  return cur;
}

}  // namespace

Var forward(Tape& tape, const NetworkSpec& spec, const ParamSet& params, const NetworkInput& input) {
  spec.validate();
  Var aux;
  if (input.aux.size() > 0) aux = tape.constant(input.aux);
  if (spec.takes_sequence()) {
    const Var h = run_gru(tape, spec, 0, std::get<Gru>(spec.layers[0]), params, input.sequence);
    return run_layers(tape, spec, params, h, aux, 1);
  }
  if (input.single.cols() != spec.input_dim())
    throw std::invalid_argument("network '" + spec.name + "': input dimension mismatch");
  return run_layers(tape, spec, params, tape.constant(input.single), aux, 0);
}

Var forward(Tape& tape, const NetworkSpec& spec, const ParamSet& params, Var single, Var aux) {
  spec.validate();
  if (spec.takes_sequence()) throw std::invalid_argument("network '" + spec.name + "' needs a sequence input");
  if (single.cols() != spec.input_dim())
    throw std::invalid_argument("network '" + spec.name + "': input dimension mismatch");
  return run_layers(tape, spec, params, single, aux, 0);
}

Var forward(Tape& tape, const NetworkSpec& spec, const ParamSet& params, const std::vector<Matrix>& sequence,
            Var aux) {
  spec.validate();
  if (!spec.takes_sequence()) throw std::invalid_argument("network '" + spec.name + "' takes no sequence");
  const Var h = run_gru(tape, spec, 0, std::get<Gru>(spec.layers[0]), params, sequence);
  return run_layers(tape, spec, params, h, aux, 1);
}

Matrix evaluate(const NetworkSpec& spec, const ParamSet& params, const NetworkInput& input) {
  Tape t;
  return forward(t, spec, params, input).value();
}

Gradients gradients(const NetworkSpec& spec, const ParamSet& params, const NetworkInput& input,
                    const LossHead& head) {
  Tape t;
  const Var out = forward(t, spec, params, input);
  const Var loss = head(out);
  t.backward(loss);
  Gradients g = t.param_gradients();
  // arrays the spec owns but the loss never touched still report zeros
  const std::string prefix = spec.name + ".";
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& e = params.entry(i);
    if (e.trainable && e.name.rfind(prefix, 0) == 0 && !g.count(e.name))
      g.emplace(e.name, Matrix::Zero(e.value.rows(), e.value.cols()));
  }
  return g;
}

}  // namespace cdrive::ad
