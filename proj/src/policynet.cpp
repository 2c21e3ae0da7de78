#include "evolal/policynet.hpp"

#include "evolal/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace evolal {

namespace {

std::vector<int> layer_sizes(int input_dim, int action_count, const std::vector<int>& hidden) {
  if (input_dim <= 0 || action_count <= 0) throw ParameterError("network dimensions must be positive");
  std::vector<int> sizes{input_dim};
  for (int h : hidden) {
    if (h <= 0) throw ParameterError("hidden layer sizes must be positive");
    sizes.push_back(h);
  }
  sizes.push_back(action_count);
  return sizes;
}

void check_input(const PolicyNet& net, Eigen::Index cols) {
  if (net.layers.empty()) throw ModelStateError("network has no layers");
  if (cols != net.input_dim())
    throw ShapeError("input dimension " + std::to_string(cols) + " does not match network input " +
                     std::to_string(net.input_dim()));
}

}  // namespace

PolicyNet PolicyNet::create(int input_dim, int action_count, const std::vector<int>& hidden, uint64_t seed) {
  const auto sizes = layer_sizes(input_dim, action_count, hidden);
  std::mt19937_64 rng(seed);
  PolicyNet net;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    std::normal_distribution<double> n(0.0, std::sqrt(2.0 / sizes[l]));
    Layer layer{Matrix(sizes[l + 1], sizes[l]), Vector::Zero(sizes[l + 1])};
    for (Eigen::Index j = 0; j < layer.weight.cols(); ++j)
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) layer.weight(i, j) = n(rng);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

PolicyNet PolicyNet::zeros(int input_dim, int action_count, const std::vector<int>& hidden) {
  const auto sizes = layer_sizes(input_dim, action_count, hidden);
  PolicyNet net;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l)
    net.layers.push_back(Layer{Matrix::Zero(sizes[l + 1], sizes[l]), Vector::Zero(sizes[l + 1])});
  return net;
}

std::vector<int> PolicyNet::hidden_sizes() const {
  std::vector<int> h;
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) h.push_back(static_cast<int>(layers[l].weight.rows()));
  return h;
}

std::size_t PolicyNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

Vector PolicyNet::logits(const Vector& x) const {
  check_input(*this, x.size());
  Vector a = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Vector z = layers[l].weight * a + layers[l].bias;
    if (l + 1 < layers.size()) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

Matrix PolicyNet::logits(const Matrix& x) const { return forward(*this, x).acts.back(); }

Vector PolicyNet::flatten() const {
  Vector p(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index o = 0;
  for (const auto& l : layers) {
    p.segment(o, l.weight.size()) = l.weight.reshaped();
    o += l.weight.size();
    p.segment(o, l.bias.size()) = l.bias;
    o += l.bias.size();
  }
  return p;
}

void PolicyNet::unflatten(const Vector& p) {
  if (p.size() != static_cast<Eigen::Index>(parameter_count())) throw ShapeError("parameter vector length mismatch");
  Eigen::Index o = 0;
  for (auto& l : layers) {
    l.weight.reshaped() = p.segment(o, l.weight.size());
    o += l.weight.size();
    l.bias = p.segment(o, l.bias.size());
    o += l.bias.size();
  }
}

bool PolicyNet::finite() const {
  for (const auto& l : layers)
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  return true;
}

Gradients Gradients::zeros_like(const PolicyNet& net) {
  Gradients g;
  for (const auto& l : net.layers)
    g.layers.push_back(Layer{Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
  return g;
}

void Gradients::add(const Gradients& other, double scale) {
  if (other.layers.size() != layers.size()) throw ShapeError("gradient structures differ");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].weight += scale * other.layers[l].weight;
    layers[l].bias += scale * other.layers[l].bias;
  }
}

Vector Gradients::flatten() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  Vector p(static_cast<Eigen::Index>(n));
  Eigen::Index o = 0;
  for (const auto& l : layers) {
    p.segment(o, l.weight.size()) = l.weight.reshaped();
    o += l.weight.size();
    p.segment(o, l.bias.size()) = l.bias;
    o += l.bias.size();
  }
  return p;
}

ForwardPass forward(const PolicyNet& net, const Matrix& x) {
  check_input(net, x.cols());
  ForwardPass pass;
  pass.acts.reserve(net.layers.size() + 1);
  pass.acts.push_back(x);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    Matrix z = pass.acts.back() * net.layers[l].weight.transpose();
    z.rowwise() += net.layers[l].bias.transpose();
    if (l + 1 < net.layers.size()) z = z.cwiseMax(0.0);
    pass.acts.push_back(std::move(z));
  }
  return pass;
}

void backward(const PolicyNet& net, const ForwardPass& pass, const Matrix& dlogits, Gradients* grads,
              Matrix* dinput) {
  Matrix delta = dlogits;
  for (std::size_t k = net.layers.size(); k-- > 0;) {
    const Matrix& in = pass.acts[k];
    if (grads) {
      grads->layers[k].weight.noalias() += delta.transpose() * in;
      grads->layers[k].bias += delta.colwise().sum().transpose();
    }
    if (k == 0 && !dinput) break;
    Matrix back = delta * net.layers[k].weight;
    if (k > 0) back = back.cwiseProduct((in.array() > 0.0).cast<double>().matrix());
    delta = std::move(back);
  }
  if (dinput) *dinput = std::move(delta);
}

double logsumexp(const Vector& v) {
  const double m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}

Vector softmax(const Vector& v) {
  // Vectorized exp is not exact at -inf; masked entries must be exactly 0.
  const double ninf = -std::numeric_limits<double>::infinity();
  Vector e = (v.array() == ninf).select(0.0, (v.array() - v.maxCoeff()).exp());
  return e / e.sum();
}

Matrix softmax_rows(const Matrix& z) {
  Matrix p(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) p.row(i) = softmax(z.row(i).transpose()).transpose();
  return p;
}

Vector policy_probs(const PolicyNet& net, const Vector& x) { return softmax(net.logits(x)); }

double state_energy(const PolicyNet& net, const Vector& x) { return -logsumexp(net.logits(x)); }

Matrix energy_input_gradient(const PolicyNet& net, const Matrix& x) {
  const auto pass = forward(net, x);
  Matrix dinput;
  backward(net, pass, -softmax_rows(pass.acts.back()), nullptr, &dinput);
  return dinput;
}

Matrix stack_states(std::span<const Sample> samples) {
  if (samples.empty()) return Matrix();
  Matrix x(static_cast<Eigen::Index>(samples.size()), samples.front().state.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].state.size() != x.cols()) throw ShapeError("samples have ragged state dimensions");
    x.row(static_cast<Eigen::Index>(i)) = samples[i].state.transpose();
  }
  return x;
}

double data_loss(const PolicyNet& net, std::span<const Sample> samples, DataLoss kind, Gradients* grads,
                 double scale) {
  if (samples.empty()) return 0.0;
  const auto pass = forward(net, stack_states(samples));
  const Matrix& z = pass.acts.back();
  const Matrix p = softmax_rows(z);
  const auto A = z.cols();
  Matrix dz = Matrix::Zero(z.rows(), A);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    if (s.action < 0 || s.action >= A) throw IndexError("sample action outside the network's action range");
    const double w = s.weight * scale;
    if (kind == DataLoss::kCrossEntropy) {
      loss += w * (logsumexp(z.row(i).transpose()) - z(i, s.action));
      dz.row(i) = w * p.row(i);
      dz(i, s.action) -= w;
    } else {
      Vector r = p.row(i).transpose();
      r[s.action] -= 1.0;
      loss += w * r.squaredNorm();
      const double inner = r.dot(p.row(i).transpose());
      for (Eigen::Index k = 0; k < A; ++k) dz(i, k) = w * 2.0 * p(i, k) * (r[k] - inner);
    }
  }
  if (grads) backward(net, pass, dz, grads);
  return loss;
}

double energy_loss(const PolicyNet& net, const Matrix& pos, std::span<const double> weights, const Matrix& neg,
                   double alpha, double reg, Gradients* grads) {
  if (static_cast<Eigen::Index>(weights.size()) != pos.rows()) throw ShapeError("weights must align with positives");
  double loss = 0.0;
  const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (pos.rows() > 0 && wsum > 0.0) {
    const auto pass = forward(net, pos);
    const Matrix& z = pass.acts.back();
    const Matrix p = softmax_rows(z);
    Matrix dz(z.rows(), z.cols());
    double mean_e = 0.0, mean_e2 = 0.0;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      const double w = weights[static_cast<std::size_t>(i)] / wsum;
      const double e = -logsumexp(z.row(i).transpose());
      mean_e += w * e;
      mean_e2 += w * e * e;
      // dL/dE times dE/dz = -p.
      dz.row(i) = -(alpha * w + reg * w * e) * p.row(i);
    }
    loss += alpha * mean_e + reg * 0.5 * mean_e2;
    if (grads) backward(net, pass, dz, grads);
  }
  if (neg.rows() > 0) {
    const auto pass = forward(net, neg);
    const Matrix& z = pass.acts.back();
    const Matrix p = softmax_rows(z);
    Matrix dz(z.rows(), z.cols());
    const double inv = 1.0 / static_cast<double>(z.rows());
    double mean_e = 0.0, mean_e2 = 0.0;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      const double e = -logsumexp(z.row(i).transpose());
      mean_e += inv * e;
      mean_e2 += inv * e * e;
      dz.row(i) = -(-alpha * inv + reg * inv * e) * p.row(i);
    }
    loss += -alpha * mean_e + reg * 0.5 * mean_e2;
    if (grads) backward(net, pass, dz, grads);
  }
  return loss;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (epochs < 1) throw ConfigError("epochs must be positive");
  if (batch_size < 1) throw ConfigError("batch size must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be nonnegative");
  for (int h : hidden)
    if (h < 1) throw ConfigError("hidden layer sizes must be positive");
}

Adam::Adam(const PolicyNet& net, double lr, double wd, double b1, double b2, double eps)
    : lr_(lr), wd_(wd), b1_(b1), b2_(b2), eps_(eps) {
  const auto n = static_cast<Eigen::Index>(net.parameter_count());
  m_ = Vector::Zero(n);
  v_ = Vector::Zero(n);
}

void Adam::step(PolicyNet& net, const Gradients& grads) {
  const Vector g = grads.flatten();
  if (g.size() != m_.size()) throw ShapeError("gradient length does not match optimizer state");
  ++t_;
  m_ = b1_ * m_ + (1.0 - b1_) * g;
  v_ = b2_ * v_ + (1.0 - b2_) * g.cwiseProduct(g);
  const double c1 = 1.0 - std::pow(b1_, t_);
  const double c2 = 1.0 - std::pow(b2_, t_);
  Vector p = net.flatten();
  const Vector mhat = m_ / c1;
  const Vector vhat = v_ / c2;
  p.array() -= lr_ * (mhat.array() / (vhat.array().sqrt() + eps_) + wd_ * p.array());
  net.unflatten(p);
}

FitResult fit_supervised(std::span<const Sample> samples, int action_count, const TrainConfig& cfg, DataLoss kind,
                         const PolicyNet* warm_start, int epochs, const BatchHook& hook) {
  cfg.validate();
  if (samples.empty()) throw DegenerateInputError("no training samples");
  double wsum = 0.0;
  for (const auto& s : samples) {
    if (!(s.weight >= 0.0) || !std::isfinite(s.weight)) throw ParameterError("sample weights must be finite and nonnegative");
    wsum += s.weight;
  }
  if (!(wsum > 0.0)) throw DegenerateInputError("all sample weights are zero");

  const int dim = static_cast<int>(samples.front().state.size());
  FitResult out;
  if (warm_start) {
    if (warm_start->input_dim() != dim || warm_start->action_count() != action_count)
      throw ShapeError("warm-start network does not match the data");
    out.net = *warm_start;
  } else {
    out.net = PolicyNet::create(dim, action_count, cfg.hidden, derive_seed(cfg.seed, 1));
  }
  const int n_epochs = epochs > 0 ? epochs : cfg.epochs;
  std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, 2));
  Adam adam(out.net, cfg.learning_rate, cfg.weight_decay);

  const std::size_t n = samples.size();
  const std::size_t b = std::min<std::size_t>(n, static_cast<std::size_t>(cfg.batch_size));
  std::vector<std::size_t> order(n);
  std::vector<Sample> batch;
  batch.reserve(b);
  for (int epoch = 0; epoch < n_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < n; start += b) {
      const std::size_t stop = std::min(n, start + b);
      std::span<const std::size_t> idx(order.data() + start, stop - start);
      batch.clear();
      for (auto i : idx) batch.push_back(samples[i]);
      Gradients g = Gradients::zeros_like(out.net);
      const double scale = static_cast<double>(n) / static_cast<double>(idx.size());
      double loss = data_loss(out.net, batch, kind, &g, scale);
      if (hook) loss += hook(out.net, idx, g);
      adam.step(out.net, g);
      epoch_loss += loss;
      ++batches;
    }
    out.loss_trace.push_back(epoch_loss / batches);
    if (!out.net.finite()) throw ConvergenceError("network parameters became non-finite", epoch_loss, 0.0);
  }
  return out;
}

double grad_check(const PolicyNet& net, const LossFn& loss, int probes, double h, uint64_t seed) {
  Gradients g = Gradients::zeros_like(net);
  loss(net, &g);
  const Vector analytic = g.flatten();
  const Vector base = net.flatten();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, base.size() - 1);
  PolicyNet probe = net;
  double worst = 0.0;
  for (int k = 0; k < probes; ++k) {
    const auto i = pick(rng);
    Vector p = base;
    p[i] = base[i] + h;
    probe.unflatten(p);
    const double up = loss(probe, nullptr);
    p[i] = base[i] - h;
    probe.unflatten(p);
    const double down = loss(probe, nullptr);
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max(std::abs(analytic[i]) + std::abs(numeric), 1e-5);
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace evolal
